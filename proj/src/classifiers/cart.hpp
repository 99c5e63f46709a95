#pragma once

// Internal CART engine shared by the tree families. Binary splits on numeric
// features; Gini impurity for classification, variance for regression.
// Deterministic: split ties prefer the lower feature index, then the lower
// threshold.

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include <json.hpp>

#include "magescan/dataset.hpp"

namespace magescan::ml::detail {

struct CartNode {
  int feature = -1;        // -1 = leaf
  double threshold = 0.0;  // go left when x[feature] <= threshold
  int left = -1;
  int right = -1;
  double value = 0.0;      // leaf payload (class-1 fraction or mean target)
};

struct CartOptions {
  int max_depth = 0;               // 0 = unlimited
  std::size_t min_samples_split = 2;
  int mtry = 0;                    // features tried per split; 0 = all
  bool regression = false;         // variance splits + mean leaves
};

class CartTree {
 public:
  // `targets` are 0/1 class indicators (classification) or residuals
  // (regression). `rows` selects the training subset (with repetition
  // allowed, for bagging). When opts.mtry > 0 the candidate features of each
  // split are drawn from `rng`.
  void fit(const Matrix& x, std::span<const double> targets,
           std::span<const std::size_t> rows, const CartOptions& opts,
           std::mt19937_64& rng);

  double predict(std::span<const double> x) const;
  // Leaf row indices of the fitted sample, for boosting leaf updates.
  const std::vector<std::vector<std::size_t>>& leaf_rows() const {
    return leaf_rows_;
  }
  // Rewrites the payload of the leaf containing each row (boosting).
  void set_leaf_value(std::size_t leaf_index, double value);
  const std::vector<CartNode>& nodes() const { return nodes_; }
  int leaf_index_of(std::span<const double> x) const;

  // Per-feature total weighted impurity decrease of this tree, accumulated
  // into `out` (length = feature count).
  void accumulate_importance(std::vector<double>& out) const;

  nlohmann::json to_json() const;
  static CartTree from_json(const nlohmann::json& j);

 private:
  struct SplitResult {
    int feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
  };
  int build(const Matrix& x, std::span<const double> targets,
            std::vector<std::size_t>& rows, std::size_t begin, std::size_t end,
            int depth, const CartOptions& opts, std::mt19937_64& rng);
  SplitResult best_split(const Matrix& x, std::span<const double> targets,
                         std::span<const std::size_t> rows,
                         const CartOptions& opts, std::mt19937_64& rng) const;

  std::vector<CartNode> nodes_;
  std::vector<std::vector<std::size_t>> leaf_rows_;
  std::vector<int> leaf_node_;  // leaf index -> node index
  // parallel to nodes_: weighted impurity decrease of each internal node
  std::vector<double> node_gain_;
  std::size_t fitted_rows_ = 0;
};

}  // namespace magescan::ml::detail
