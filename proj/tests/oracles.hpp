#pragma once

// Test-only oracles, deliberately independent of the library's algorithms:
// exhaustive enumeration instead of dynamic programming, direct counting
// instead of the metrics code.

#include <algorithm>
#include <string>
#include <vector>

#include "magescan/classifiers.hpp"
#include "magescan/dfa.hpp"

namespace oracle {

// Maximum-weight ordered alignment by enumerating every subset of pattern
// positions and every increasing placement of that subset in the sequence.
inline int max_alignment_weight(const std::vector<magescan::BehaviorStep>& steps,
                                const std::vector<int>& weights,
                                const magescan::BehaviorSequence& seq) {
  const std::size_t m = steps.size();
  int best = 0;

  std::vector<std::size_t> chosen;
  // Recursively place pattern position `pi` (already decided whether each
  // earlier one is in the subset) at sequence positions > `last`.
  struct Rec {
    const std::vector<magescan::BehaviorStep>& steps;
    const std::vector<int>& weights;
    const magescan::BehaviorSequence& seq;
    int best = 0;

    void place(std::size_t pi, std::size_t next_seq, int acc) {
      best = std::max(best, acc);
      if (pi >= steps.size()) return;
      // skip pattern position pi entirely
      place(pi + 1, next_seq, acc);
      // or match it at any later sequence position
      for (std::size_t sj = next_seq; sj < seq.size(); ++sj) {
        if (steps[pi].subset_of(seq[sj])) {
          place(pi + 1, sj + 1, acc + weights[pi]);
        }
      }
    }
  } rec{steps, weights, seq};
  rec.place(0, 0, 0);
  best = rec.best;
  (void)m;
  (void)chosen;
  return best;
}

struct BestPattern {
  std::string name;
  int matched = 0;
  int total = 0;
  double pct = 0.0;
};

// Replicates the reporting comparator (pct, then matched weight, then name)
// on top of the enumeration oracle.
inline BestPattern best_pattern(const magescan::PatternLibrary& library,
                                const magescan::WeightTable& weights,
                                const magescan::BehaviorSequence& seq) {
  BestPattern best;
  bool have = false;
  std::vector<const magescan::Pattern*> ordered;
  for (const auto& p : library.patterns) ordered.push_back(&p);
  std::sort(ordered.begin(), ordered.end(),
            [](const auto* a, const auto* b) { return a->name < b->name; });
  for (const auto* pattern : ordered) {
    std::vector<int> w;
    int total = 0;
    for (const auto& step : pattern->steps) {
      w.push_back(weights.step_weight(step));
      total += w.back();
    }
    int matched = max_alignment_weight(pattern->steps, w, seq);
    double pct = total > 0 ? 100.0 * matched / total : 0.0;
    bool better = !have || pct > best.pct ||
                  (pct == best.pct && matched > best.matched);
    if (better) {
      best = {pattern->name, matched, total, pct};
      have = true;
    }
  }
  return best;
}

struct Confusion {
  int tp = 0, fp = 0, tn = 0, fn = 0;
};

inline Confusion count_confusion(const std::vector<magescan::Label>& y_true,
                                 const std::vector<magescan::Label>& y_pred) {
  Confusion c;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    bool t = y_true[i] == magescan::Label::kMalicious;
    bool p = y_pred[i] == magescan::Label::kMalicious;
    if (t && p) ++c.tp;
    if (!t && p) ++c.fp;
    if (t && !p) ++c.fn;
    if (!t && !p) ++c.tn;
  }
  return c;
}

}  // namespace oracle
