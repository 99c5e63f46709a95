#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "magescan/classifiers.hpp"
#include "magescan/features.hpp"

namespace magescan {

struct SweepRow {
  std::size_t k = 0;
  // family -> best mean CV F1 under the default grid at this k
  std::map<ml::Family, double> best_f1;

  double mean_f1() const;
};

struct SweepTable {
  std::vector<SweepRow> rows;  // one per requested size, input order
};

// For each size k: project the dataset onto the top-k features by
// `importance` (ties toward the lower index) and run the stratified 5-fold
// grid-search CV per family, recording each family's best mean F1.
SweepTable sweep_selection_sizes(const Dataset& dataset,
                                 const std::vector<double>& importance,
                                 const std::vector<std::size_t>& sizes,
                                 const std::vector<ml::Family>& families,
                                 std::size_t folds, std::uint64_t seed);

// The k whose row mean F1 is maximal; ties prefer the smaller k.
std::size_t choose_k(const SweepTable& table);

}  // namespace magescan
