#include "cart.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace magescan::ml::detail {

namespace {

// Gini impurity of a {0,1} target multiset given (count, sum).
inline double gini(double n, double pos) {
  if (n <= 0.0) return 0.0;
  double p = pos / n;
  return 2.0 * p * (1.0 - p);
}

// Variance * n is what the split score needs; keep it in sum/sumsq form.
inline double sse(double n, double sum, double sumsq) {
  if (n <= 0.0) return 0.0;
  return sumsq - sum * sum / n;
}

constexpr double kMinGain = 1e-12;

}  // namespace

void CartTree::fit(const Matrix& x, std::span<const double> targets,
                   std::span<const std::size_t> rows, const CartOptions& opts,
                   std::mt19937_64& rng) {
  nodes_.clear();
  leaf_rows_.clear();
  leaf_node_.clear();
  node_gain_.clear();
  fitted_rows_ = rows.size();
  std::vector<std::size_t> work(rows.begin(), rows.end());
  build(x, targets, work, 0, work.size(), 0, opts, rng);
}

CartTree::SplitResult CartTree::best_split(const Matrix& x,
                                           std::span<const double> targets,
                                           std::span<const std::size_t> rows,
                                           const CartOptions& opts,
                                           std::mt19937_64& rng) const {
  const std::size_t n = rows.size();
  const std::size_t dim = x.cols();

  std::vector<std::size_t> features;
  if (opts.mtry > 0 && static_cast<std::size_t>(opts.mtry) < dim) {
    // Partial Fisher-Yates draw of mtry distinct feature indices.
    std::vector<std::size_t> pool(dim);
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    for (int k = 0; k < opts.mtry; ++k) {
      std::uniform_int_distribution<std::size_t> pick(k, dim - 1);
      std::swap(pool[static_cast<std::size_t>(k)], pool[pick(rng)]);
    }
    features.assign(pool.begin(), pool.begin() + opts.mtry);
    std::sort(features.begin(), features.end());
  } else {
    features.resize(dim);
    std::iota(features.begin(), features.end(), std::size_t{0});
  }

  double total_sum = 0.0, total_sumsq = 0.0;
  for (std::size_t r : rows) {
    double t = targets[r];
    total_sum += t;
    total_sumsq += t * t;
  }
  const double dn = static_cast<double>(n);
  const double parent_impurity = opts.regression
                                     ? sse(dn, total_sum, total_sumsq) / dn
                                     : gini(dn, total_sum);

  SplitResult best;
  std::vector<std::pair<double, double>> order(n);  // (feature value, target)
  for (std::size_t f : features) {
    for (std::size_t i = 0; i < n; ++i) {
      order[i] = {x.at(rows[i], f), targets[rows[i]]};
    }
    std::sort(order.begin(), order.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    if (order.front().first == order.back().first) continue;

    double left_sum = 0.0, left_sumsq = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      double t = order[i].second;
      left_sum += t;
      left_sumsq += t * t;
      if (order[i].first == order[i + 1].first) continue;
      double nl = static_cast<double>(i + 1);
      double nr = dn - nl;
      double child_impurity;
      if (opts.regression) {
        child_impurity = (sse(nl, left_sum, left_sumsq) +
                          sse(nr, total_sum - left_sum,
                              total_sumsq - left_sumsq)) /
                         dn;
      } else {
        child_impurity = (nl * gini(nl, left_sum) +
                          nr * gini(nr, total_sum - left_sum)) /
                         dn;
      }
      double gain = parent_impurity - child_impurity;
      // Features and thresholds are visited in ascending order, so replacing
      // only on a strict improvement keeps the lowest (feature, threshold).
      if (gain > best.gain + kMinGain) {
        best.feature = static_cast<int>(f);
        best.threshold = order[i].first +
                         (order[i + 1].first - order[i].first) / 2.0;
        best.gain = gain;
      }
    }
  }
  return best;
}

int CartTree::build(const Matrix& x, std::span<const double> targets,
                    std::vector<std::size_t>& rows, std::size_t begin,
                    std::size_t end, int depth, const CartOptions& opts,
                    std::mt19937_64& rng) {
  const std::size_t n = end - begin;
  double sum = 0.0;
  for (std::size_t i = begin; i < end; ++i) sum += targets[rows[i]];
  const double mean = n > 0 ? sum / static_cast<double>(n) : 0.0;

  bool pure = true;
  for (std::size_t i = begin; i < end && pure; ++i) {
    pure = targets[rows[i]] == targets[rows[begin]];
  }

  int node_index = static_cast<int>(nodes_.size());
  nodes_.push_back({});
  node_gain_.push_back(0.0);

  bool depth_ok = opts.max_depth == 0 || depth < opts.max_depth;
  SplitResult split;
  if (!pure && depth_ok && n >= opts.min_samples_split) {
    split = best_split(x, targets,
                       std::span<const std::size_t>(rows.data() + begin, n),
                       opts, rng);
  }

  if (split.feature < 0 || split.gain <= kMinGain) {
    CartNode& leaf = nodes_[static_cast<std::size_t>(node_index)];
    leaf.value = mean;
    leaf_node_.push_back(node_index);
    leaf_rows_.emplace_back(rows.begin() + static_cast<std::ptrdiff_t>(begin),
                            rows.begin() + static_cast<std::ptrdiff_t>(end));
    return node_index;
  }

  auto mid_it = std::stable_partition(
      rows.begin() + static_cast<std::ptrdiff_t>(begin),
      rows.begin() + static_cast<std::ptrdiff_t>(end),
      [&](std::size_t r) { return x.at(r, split.feature) <= split.threshold; });
  std::size_t mid = static_cast<std::size_t>(mid_it - rows.begin());

  node_gain_[static_cast<std::size_t>(node_index)] =
      split.gain * static_cast<double>(n) / static_cast<double>(fitted_rows_);
  {
    CartNode& node = nodes_[static_cast<std::size_t>(node_index)];
    node.feature = split.feature;
    node.threshold = split.threshold;
  }
  int left = build(x, targets, rows, begin, mid, depth + 1, opts, rng);
  nodes_[static_cast<std::size_t>(node_index)].left = left;
  int right = build(x, targets, rows, mid, end, depth + 1, opts, rng);
  nodes_[static_cast<std::size_t>(node_index)].right = right;
  return node_index;
}

double CartTree::predict(std::span<const double> x) const {
  int i = 0;
  while (nodes_[static_cast<std::size_t>(i)].feature >= 0) {
    const CartNode& n = nodes_[static_cast<std::size_t>(i)];
    i = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left
                                                              : n.right;
  }
  return nodes_[static_cast<std::size_t>(i)].value;
}

int CartTree::leaf_index_of(std::span<const double> x) const {
  int i = 0;
  while (nodes_[static_cast<std::size_t>(i)].feature >= 0) {
    const CartNode& n = nodes_[static_cast<std::size_t>(i)];
    i = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left
                                                              : n.right;
  }
  for (std::size_t k = 0; k < leaf_node_.size(); ++k) {
    if (leaf_node_[k] == i) return static_cast<int>(k);
  }
  return -1;
}

void CartTree::set_leaf_value(std::size_t leaf_index, double value) {
  nodes_[static_cast<std::size_t>(leaf_node_[leaf_index])].value = value;
}

void CartTree::accumulate_importance(std::vector<double>& out) const {
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].feature >= 0) {
      out[static_cast<std::size_t>(nodes_[i].feature)] += node_gain_[i];
    }
  }
}

nlohmann::json CartTree::to_json() const {
  nlohmann::json features = nlohmann::json::array();
  nlohmann::json thresholds = nlohmann::json::array();
  nlohmann::json lefts = nlohmann::json::array();
  nlohmann::json rights = nlohmann::json::array();
  nlohmann::json values = nlohmann::json::array();
  for (const CartNode& n : nodes_) {
    features.push_back(n.feature);
    thresholds.push_back(n.threshold);
    lefts.push_back(n.left);
    rights.push_back(n.right);
    values.push_back(n.value);
  }
  return {{"feature", features},
          {"threshold", thresholds},
          {"left", lefts},
          {"right", rights},
          {"value", values}};
}

CartTree CartTree::from_json(const nlohmann::json& j) {
  CartTree t;
  const auto& features = j.at("feature");
  for (std::size_t i = 0; i < features.size(); ++i) {
    CartNode n;
    n.feature = j.at("feature")[i].get<int>();
    n.threshold = j.at("threshold")[i].get<double>();
    n.left = j.at("left")[i].get<int>();
    n.right = j.at("right")[i].get<int>();
    n.value = j.at("value")[i].get<double>();
    t.nodes_.push_back(n);
  }
  t.node_gain_.assign(t.nodes_.size(), 0.0);
  return t;
}

}  // namespace magescan::ml::detail
