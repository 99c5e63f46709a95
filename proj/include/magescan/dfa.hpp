#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "magescan/behavior.hpp"

namespace magescan {

// Behavior -> positive integer risk weight. File format: JSON object
// {behavior: weight}.
class WeightTable {
 public:
  explicit WeightTable(std::map<std::string, int> weights);
  static WeightTable from_json_file(const std::filesystem::path& path);

  // Throws MissingWeightError when the behavior has no entry.
  int weight_of(const std::string& behavior) const;
  // Sum of the member behaviors' weights.
  int step_weight(const BehaviorStep& step) const;
  const std::map<std::string, int>& weights() const { return weights_; }

 private:
  std::map<std::string, int> weights_;
};

struct Pattern {
  std::string name;
  std::vector<BehaviorStep> steps;
};

// Curated library of malicious behavior patterns. File format:
// JSON {"patterns": [{"name": ..., "steps": [[behavior, ...], ...]}]}.
struct PatternLibrary {
  std::vector<Pattern> patterns;

  static PatternLibrary from_json_file(const std::filesystem::path& path);
  static PatternLibrary from_json(const std::string& json_text);
};

enum class DfaLabel { kBenign = 0, kPartiallyMalign = 1, kMalign = 2 };

const char* dfa_label_name(DfaLabel label);  // "BENIGN" / "PARTIALLY MALIGN" / "MALIGN"

struct Thresholds {
  double tau_partial = 30.0;
  double tau_malign = 100.0;
};

// Malign when pct >= tau_malign, PartiallyMalign when tau_partial <= pct <
// tau_malign, Benign otherwise. Throws InvalidThresholdsError unless
// 0 <= tau_partial <= tau_malign <= 100.
DfaLabel classify(double match_pct, const Thresholds& thresholds);

struct MatchedSymbol {
  BehaviorStep symbol;  // the pattern-side transition symbol
  int weight = 0;
};

struct DfaResult {
  DfaLabel label = DfaLabel::kBenign;
  double match_pct = 0.0;  // 100 * matched_weight / total_weight, 0 when total is 0
  std::string nearest_final_state;  // "q<id>", empty when the DFA has no finals
  std::string nearest_pattern;
  std::vector<MatchedSymbol> matched;
  int matched_weight = 0;
  int total_weight = 0;
};

// Trie-merged weighted automaton over behavior-step symbols. Patterns
// sharing a prefix share states; each final state stores the pattern name
// and the total weight along its unique path from the start state.
class BehaviorDfa {
 public:
  struct Transition {
    BehaviorStep symbol;
    int weight = 0;
    int target = 0;
  };
  struct FinalState {
    std::string pattern;
    int total_weight = 0;
  };

  // Throws MissingWeightError / DuplicatePatternNameError /
  // InvalidArgumentError (empty pattern).
  static BehaviorDfa build(const PatternLibrary& library,
                           const WeightTable& weights);

  std::size_t state_count() const { return transitions_.size(); }
  const std::vector<Transition>& transitions_from(int state) const {
    return transitions_[static_cast<std::size_t>(state)];
  }
  const std::map<int, FinalState>& final_states() const { return finals_; }

  // Maximum-weight ordered subsequence alignment of each root-to-final path
  // against `seq` (a path symbol matches a step when it is a subset of the
  // step's behavior set). Reports the path with the highest match
  // percentage; ties prefer higher matched weight, then the
  // lexicographically smaller pattern name.
  DfaResult match(const BehaviorSequence& seq,
                  const Thresholds& thresholds = {}) const;

 private:
  struct PathEntry {
    int final_state = 0;
    std::string pattern;
    std::vector<MatchedSymbol> symbols;  // root-to-final transition symbols
    int total_weight = 0;
  };

  std::vector<std::vector<Transition>> transitions_;
  std::map<int, FinalState> finals_;
  std::vector<PathEntry> paths_;  // sorted by pattern name
};

inline DfaResult match_sequence(const BehaviorDfa& dfa,
                                const BehaviorSequence& seq,
                                const Thresholds& thresholds = {}) {
  return dfa.match(seq, thresholds);
}

// Plain-text match report:
//   -> Classification: MALIGN (100.00%)
//   -> Nearest Final State: q5
//   -> Matched Symbols and Weights:
//      - Set Callback (Weight: 3)
//   -> Total Matched Weight: 16
//   -> Match Percentage Calculation:
//   (16 / 16) * 100 = 100.00%
std::string render_dfa_report(const DfaResult& result);

}  // namespace magescan
