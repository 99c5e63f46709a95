#pragma once

// Shared fixtures for the unit and acceptance suites.

#include <random>

#include "magescan/dfa.hpp"

namespace fixtures {

// The five-step skimming pattern with per-step weights 3, 3, 4, 1, 5
// (total 16) used by the report-format checks.
inline magescan::WeightTable skim_weights() {
  return magescan::WeightTable({
      {"Set Callback", 3},
      {"Add Event Handler", 3},
      {"Access Input", 2},
      {"Access DOM Element Attribute", 2},
      {"Create DOM Element", 1},
      {"Send Data", 3},
      {"Update DOM Element", 2},
  });
}

inline magescan::PatternLibrary skim_library() {
  magescan::PatternLibrary lib;
  magescan::Pattern p;
  p.name = "form-skim-exfil";
  p.steps = {
      magescan::BehaviorStep{"Set Callback"},
      magescan::BehaviorStep{"Add Event Handler"},
      magescan::BehaviorStep{"Access Input", "Access DOM Element Attribute"},
      magescan::BehaviorStep{"Create DOM Element"},
      magescan::BehaviorStep{"Send Data", "Update DOM Element"},
  };
  lib.patterns.push_back(p);
  return lib;
}

inline magescan::BehaviorSequence skim_sequence() {
  return {
      magescan::BehaviorStep{"Set Callback"},
      magescan::BehaviorStep{"Add Event Handler"},
      magescan::BehaviorStep{"Access Input", "Access DOM Element Attribute"},
      magescan::BehaviorStep{"Create DOM Element"},
      magescan::BehaviorStep{"Send Data", "Update DOM Element"},
  };
}

// Random small DFA instances for the oracle-equivalence suites.
struct RandomInstance {
  magescan::PatternLibrary library;
  magescan::WeightTable weights;
  magescan::BehaviorSequence seq;
};

inline RandomInstance random_instance(std::mt19937_64& rng) {
  static const std::vector<std::string> alphabet = {"A", "B", "C", "D", "E"};
  std::uniform_int_distribution<int> weight_dist(1, 3);
  std::map<std::string, int> weights;
  for (const auto& b : alphabet) weights[b] = weight_dist(rng);

  auto random_step = [&](int max_set) {
    std::uniform_int_distribution<int> set_size(1, max_set);
    std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
    std::vector<std::string> names;
    int k = set_size(rng);
    for (int i = 0; i < k; ++i) names.push_back(alphabet[pick(rng)]);
    return magescan::BehaviorStep(names);
  };

  RandomInstance inst{magescan::PatternLibrary{},
                      magescan::WeightTable{weights},
                      {}};
  std::uniform_int_distribution<int> n_patterns(1, 3);
  std::uniform_int_distribution<int> pattern_len(1, 4);
  int np = n_patterns(rng);
  for (int p = 0; p < np; ++p) {
    magescan::Pattern pattern;
    pattern.name = "p" + std::to_string(p);
    int len = pattern_len(rng);
    for (int s = 0; s < len; ++s) pattern.steps.push_back(random_step(2));
    // identical step lists under two names are rejected by the builder;
    // nudge until unique
    bool duplicate = true;
    while (duplicate) {
      duplicate = false;
      for (const auto& other : inst.library.patterns) {
        if (other.steps == pattern.steps) {
          pattern.steps.push_back(random_step(2));
          duplicate = true;
          break;
        }
      }
    }
    inst.library.patterns.push_back(std::move(pattern));
  }
  std::uniform_int_distribution<int> seq_len(0, 8);
  int len = seq_len(rng);
  for (int s = 0; s < len; ++s) inst.seq.push_back(random_step(3));
  return inst;
}

}  // namespace fixtures
