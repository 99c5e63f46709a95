#include "magescan/dfa.hpp"

#include <algorithm>

#include <json.hpp>

#include "magescan/util.hpp"

namespace magescan {

WeightTable::WeightTable(std::map<std::string, int> weights)
    : weights_(std::move(weights)) {
  for (const auto& [behavior, w] : weights_) {
    if (w < 1) {
      throw InvalidArgumentError("weight for \"" + behavior +
                                 "\" must be >= 1, got " + std::to_string(w));
    }
  }
}

WeightTable WeightTable::from_json_file(const std::filesystem::path& path) {
  nlohmann::json j = nlohmann::json::parse(read_file(path));
  if (!j.is_object()) {
    throw ConfigError("weight table must be a JSON object: " + path.string());
  }
  std::map<std::string, int> weights;
  for (auto it = j.begin(); it != j.end(); ++it) {
    weights[it.key()] = it.value().get<int>();
  }
  return WeightTable(std::move(weights));
}

int WeightTable::weight_of(const std::string& behavior) const {
  auto it = weights_.find(behavior);
  if (it == weights_.end()) {
    throw MissingWeightError("no weight for behavior \"" + behavior + "\"");
  }
  return it->second;
}

int WeightTable::step_weight(const BehaviorStep& step) const {
  int total = 0;
  for (const auto& b : step.behaviors) total += weight_of(b);
  return total;
}

PatternLibrary PatternLibrary::from_json(const std::string& json_text) {
  nlohmann::json j = nlohmann::json::parse(json_text);
  PatternLibrary lib;
  for (const auto& p : j.at("patterns")) {
    Pattern pattern;
    pattern.name = p.at("name").get<std::string>();
    for (const auto& step : p.at("steps")) {
      pattern.steps.emplace_back(step.get<std::vector<std::string>>());
    }
    lib.patterns.push_back(std::move(pattern));
  }
  return lib;
}

PatternLibrary PatternLibrary::from_json_file(
    const std::filesystem::path& path) {
  return from_json(read_file(path));
}

const char* dfa_label_name(DfaLabel label) {
  switch (label) {
    case DfaLabel::kBenign:
      return "BENIGN";
    case DfaLabel::kPartiallyMalign:
      return "PARTIALLY MALIGN";
    case DfaLabel::kMalign:
      return "MALIGN";
  }
  return "BENIGN";
}

DfaLabel classify(double match_pct, const Thresholds& t) {
  if (!(0.0 <= t.tau_partial && t.tau_partial <= t.tau_malign &&
        t.tau_malign <= 100.0)) {
    throw InvalidThresholdsError(
        "thresholds must satisfy 0 <= tau_partial <= tau_malign <= 100");
  }
  if (match_pct >= t.tau_malign) return DfaLabel::kMalign;
  if (match_pct >= t.tau_partial) return DfaLabel::kPartiallyMalign;
  return DfaLabel::kBenign;
}

BehaviorDfa BehaviorDfa::build(const PatternLibrary& library,
                               const WeightTable& weights) {
  BehaviorDfa dfa;
  dfa.transitions_.emplace_back();  // start state 0

  std::vector<std::string> seen_names;
  for (const Pattern& pattern : library.patterns) {
    if (pattern.steps.empty()) {
      throw InvalidArgumentError("pattern \"" + pattern.name + "\" is empty");
    }
    if (std::find(seen_names.begin(), seen_names.end(), pattern.name) !=
        seen_names.end()) {
      throw DuplicatePatternNameError("duplicate pattern name \"" +
                                      pattern.name + "\"");
    }
    seen_names.push_back(pattern.name);

    int state = 0;
    int path_weight = 0;
    PathEntry path;
    path.pattern = pattern.name;
    for (const BehaviorStep& step : pattern.steps) {
      int w = weights.step_weight(step);
      auto& outgoing = dfa.transitions_[static_cast<std::size_t>(state)];
      auto it = std::find_if(
          outgoing.begin(), outgoing.end(),
          [&](const Transition& t) { return t.symbol == step; });
      if (it == outgoing.end()) {
        int next = static_cast<int>(dfa.transitions_.size());
        outgoing.push_back({step, w, next});
        dfa.transitions_.emplace_back();
        state = next;
      } else {
        state = it->target;
      }
      path_weight += w;
      path.symbols.push_back({step, w});
    }
    if (dfa.finals_.count(state)) {
      // Two identical step sequences under different names collapse to one
      // final state; keep it a hard error instead of silently dropping one.
      throw DuplicatePatternNameError(
          "pattern \"" + pattern.name + "\" duplicates the steps of \"" +
          dfa.finals_.at(state).pattern + "\"");
    }
    dfa.finals_[state] = {pattern.name, path_weight};
    path.final_state = state;
    path.total_weight = path_weight;
    dfa.paths_.push_back(std::move(path));
  }
  std::sort(dfa.paths_.begin(), dfa.paths_.end(),
            [](const PathEntry& a, const PathEntry& b) {
              return a.pattern < b.pattern;
            });
  return dfa;
}

namespace {

// Max-weight alignment of path symbols against the observed sequence:
// an increasing injective partial map from path positions to sequence
// positions; a mapped pair requires symbol \subseteq step; its value is the
// sum of mapped symbol weights. Standard weighted-LCS DP with backtracking.
struct Alignment {
  int weight = 0;
  std::vector<std::size_t> matched_positions;  // indices into the path
};

Alignment align(const std::vector<MatchedSymbol>& path,
                const BehaviorSequence& seq) {
  const std::size_t m = path.size();
  const std::size_t n = seq.size();
  std::vector<std::vector<int>> dp(m + 1, std::vector<int>(n + 1, 0));
  for (std::size_t i = 1; i <= m; ++i) {
    for (std::size_t j = 1; j <= n; ++j) {
      int best = std::max(dp[i - 1][j], dp[i][j - 1]);
      if (path[i - 1].symbol.subset_of(seq[j - 1])) {
        best = std::max(best, dp[i - 1][j - 1] + path[i - 1].weight);
      }
      dp[i][j] = best;
    }
  }
  Alignment out;
  out.weight = dp[m][n];
  // Deterministic backtrack: prefer the diagonal (match), then skipping a
  // sequence step, then skipping a path symbol.
  std::size_t i = m, j = n;
  while (i > 0 && j > 0) {
    if (path[i - 1].symbol.subset_of(seq[j - 1]) &&
        dp[i][j] == dp[i - 1][j - 1] + path[i - 1].weight) {
      out.matched_positions.push_back(i - 1);
      --i;
      --j;
    } else if (dp[i][j] == dp[i][j - 1]) {
      --j;
    } else {
      --i;
    }
  }
  std::reverse(out.matched_positions.begin(), out.matched_positions.end());
  return out;
}

}  // namespace

DfaResult BehaviorDfa::match(const BehaviorSequence& seq,
                             const Thresholds& thresholds) const {
  DfaResult best;
  best.label = classify(0.0, thresholds);  // validates thresholds up front
  bool have_best = false;
  for (const PathEntry& path : paths_) {
    Alignment a = align(path.symbols, seq);
    double pct = path.total_weight > 0
                     ? 100.0 * a.weight / path.total_weight
                     : 0.0;
    bool better = false;
    if (!have_best) {
      better = true;
    } else if (pct != best.match_pct) {
      better = pct > best.match_pct;
    } else if (a.weight != best.matched_weight) {
      better = a.weight > best.matched_weight;
    }  // equal pct and weight: paths_ is name-sorted, first wins
    if (better) {
      have_best = true;
      best.match_pct = pct;
      best.matched_weight = a.weight;
      best.total_weight = path.total_weight;
      best.nearest_pattern = path.pattern;
      best.nearest_final_state = "q" + std::to_string(path.final_state);
      best.matched.clear();
      for (std::size_t pos : a.matched_positions) {
        best.matched.push_back(path.symbols[pos]);
      }
    }
  }
  best.label = classify(best.match_pct, thresholds);
  return best;
}

std::string render_dfa_report(const DfaResult& result) {
  std::string out;
  out += "-> Classification: ";
  out += dfa_label_name(result.label);
  out += " (" + fmt_fixed(result.match_pct, 2) + "%)\n";
  out += "-> Nearest Final State: ";
  out += result.nearest_final_state.empty() ? "none"
                                            : result.nearest_final_state;
  out += "\n";
  out += "-> Matched Symbols and Weights:\n";
  for (const MatchedSymbol& s : result.matched) {
    out += "   - " + s.symbol.joined() + " (Weight: " +
           std::to_string(s.weight) + ")\n";
  }
  out += "-> Total Matched Weight: " + std::to_string(result.matched_weight) +
         "\n";
  out += "-> Match Percentage Calculation: \n";
  out += "(" + std::to_string(result.matched_weight) + " / " +
         std::to_string(result.total_weight) + ") * 100 = " +
         fmt_fixed(result.match_pct, 2) + "%\n";
  return out;
}

}  // namespace magescan
