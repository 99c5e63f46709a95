#include "magescan/sweep.hpp"

#include "magescan/util.hpp"

namespace magescan {

double SweepRow::mean_f1() const {
  if (best_f1.empty()) return 0.0;
  double total = 0.0;
  for (const auto& [family, f1] : best_f1) {
    (void)family;
    total += f1;
  }
  return total / static_cast<double>(best_f1.size());
}

SweepTable sweep_selection_sizes(const Dataset& dataset,
                                 const std::vector<double>& importance,
                                 const std::vector<std::size_t>& sizes,
                                 const std::vector<ml::Family>& families,
                                 std::size_t folds, std::uint64_t seed) {
  if (importance.size() != dataset.dimension()) {
    throw SchemaMismatchError("importance has " +
                              std::to_string(importance.size()) +
                              " entries, dataset has " +
                              std::to_string(dataset.dimension()) +
                              " features");
  }
  SweepTable table;
  for (std::size_t k : sizes) {
    SweepRow row;
    row.k = k;
    SelectionMask mask = SelectionMask::top_k(importance, k);
    Dataset reduced = apply_selection(dataset, mask);
    for (ml::Family family : families) {
      ml::CvReport report =
          ml::grid_search(family, ml::default_grid(family), reduced, folds,
                          derive_seed(seed, "sweep", k));
      row.best_f1[family] = report.best().mean_f1;
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

std::size_t choose_k(const SweepTable& table) {
  if (table.rows.empty()) {
    throw InvalidArgumentError("empty sweep table");
  }
  std::size_t best_k = table.rows.front().k;
  double best_mean = table.rows.front().mean_f1();
  for (const SweepRow& row : table.rows) {
    double mean = row.mean_f1();
    if (mean > best_mean || (mean == best_mean && row.k < best_k)) {
      best_mean = mean;
      best_k = row.k;
    }
  }
  return best_k;
}

}  // namespace magescan
