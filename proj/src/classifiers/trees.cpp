#include <algorithm>
#include <cmath>
#include <numeric>

#include "cart.hpp"
#include "magescan/models.hpp"
#include "magescan/util.hpp"

namespace magescan::ml {

namespace {

std::vector<double> label_targets(const Dataset& data) {
  std::vector<double> t(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    t[i] = data.y[i] == Label::kMalicious ? 1.0 : 0.0;
  }
  return t;
}

void require_two_classes(const Dataset& data, Family family) {
  if (data.size() == 0) throw DegenerateDataError("empty training set");
  std::size_t pos = data.count_label(Label::kMalicious);
  if (pos == 0 || pos == data.size()) {
    throw DegenerateDataError(std::string("training data for ") +
                              family_name(family) +
                              " contains a single class");
  }
}

std::vector<std::size_t> all_rows(std::size_t n) {
  std::vector<std::size_t> rows(n);
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return rows;
}

inline double sigmoid(double s) {
  if (s >= 0.0) {
    double z = std::exp(-s);
    return 1.0 / (1.0 + z);
  }
  double z = std::exp(s);
  return z / (1.0 + z);
}

}  // namespace

// ---- decision tree ----------------------------------------------------------

DecisionTreeModel::DecisionTreeModel() = default;
DecisionTreeModel::~DecisionTreeModel() = default;

std::unique_ptr<DecisionTreeModel> DecisionTreeModel::fit(
    const ModelSpec& spec, const Dataset& data) {
  require_two_classes(data, Family::kDecisionTree);
  auto m = std::make_unique<DecisionTreeModel>();
  m->init_base(spec, data.schema_id, data.dimension());
  detail::CartOptions opts;
  opts.max_depth = spec.hyper.get_int("max_depth", 0);
  m->tree_ = std::make_unique<detail::CartTree>();
  std::mt19937_64 rng(spec.seed);
  auto targets = label_targets(data);
  auto rows = all_rows(data.size());
  m->tree_->fit(data.x, targets, rows, opts, rng);
  return m;
}

double DecisionTreeModel::predict_proba(std::span<const double> x) const {
  check_dimension(x);
  return tree_->predict(x);
}

double DecisionTreeModel::decision_score(std::span<const double> x) const {
  return 2.0 * predict_proba(x) - 1.0;
}

nlohmann::json DecisionTreeModel::to_json() const {
  nlohmann::json j;
  base_json(j);
  j["params"] = {{"tree", tree_->to_json()}};
  return j;
}

std::unique_ptr<DecisionTreeModel> DecisionTreeModel::from_json(
    const nlohmann::json& j) {
  auto m = std::make_unique<DecisionTreeModel>();
  m->base_from_json(j);
  m->tree_ = std::make_unique<detail::CartTree>(
      detail::CartTree::from_json(j.at("params").at("tree")));
  return m;
}

// ---- random forest ----------------------------------------------------------

RandomForestModel::RandomForestModel() = default;
RandomForestModel::~RandomForestModel() = default;

std::unique_ptr<RandomForestModel> RandomForestModel::fit(
    const ModelSpec& spec, const Dataset& data) {
  require_two_classes(data, Family::kRandomForest);
  auto m = std::make_unique<RandomForestModel>();
  m->init_base(spec, data.schema_id, data.dimension());
  m->feature_count_ = data.dimension();

  const int n_trees = spec.hyper.get_int("trees", 100);
  detail::CartOptions opts;
  opts.max_depth = spec.hyper.get_int("max_depth", 0);
  opts.mtry = spec.hyper.get_int("max_features", 0);
  if (opts.mtry == 0) {
    opts.mtry = std::max(
        1, static_cast<int>(std::sqrt(static_cast<double>(data.dimension()))));
  }

  auto targets = label_targets(data);
  const std::size_t n = data.size();
  for (int t = 0; t < n_trees; ++t) {
    std::mt19937_64 rng(derive_seed(spec.seed, "rf-tree",
                                    static_cast<std::uint64_t>(t)));
    std::vector<std::size_t> rows(n);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    for (std::size_t i = 0; i < n; ++i) rows[i] = pick(rng);
    detail::CartTree tree;
    tree.fit(data.x, targets, rows, opts, rng);
    m->trees_.push_back(std::move(tree));
  }
  return m;
}

double RandomForestModel::predict_proba(std::span<const double> x) const {
  check_dimension(x);
  std::size_t votes = 0;
  for (const auto& tree : trees_) {
    votes += tree.predict(x) >= 0.5 ? 1 : 0;
  }
  return static_cast<double>(votes) / static_cast<double>(trees_.size());
}

double RandomForestModel::decision_score(std::span<const double> x) const {
  return 2.0 * predict_proba(x) - 1.0;
}

std::vector<double> RandomForestModel::importance() const {
  std::vector<double> imp(feature_count_, 0.0);
  for (const auto& tree : trees_) tree.accumulate_importance(imp);
  double total = std::accumulate(imp.begin(), imp.end(), 0.0);
  if (total <= 0.0) {
    std::fill(imp.begin(), imp.end(), 1.0 / static_cast<double>(imp.size()));
    return imp;
  }
  for (double& v : imp) v /= total;
  return imp;
}

nlohmann::json RandomForestModel::to_json() const {
  nlohmann::json j;
  base_json(j);
  nlohmann::json trees = nlohmann::json::array();
  for (const auto& tree : trees_) trees.push_back(tree.to_json());
  j["params"] = {{"trees", trees},
                 {"feature_count", feature_count_}};
  return j;
}

std::unique_ptr<RandomForestModel> RandomForestModel::from_json(
    const nlohmann::json& j) {
  auto m = std::make_unique<RandomForestModel>();
  m->base_from_json(j);
  const auto& p = j.at("params");
  for (const auto& tree : p.at("trees")) {
    m->trees_.push_back(detail::CartTree::from_json(tree));
  }
  m->feature_count_ = p.at("feature_count").get<std::size_t>();
  return m;
}

// ---- adaboost (SAMME, depth-1 stumps) ----------------------------------------

std::unique_ptr<AdaBoostModel> AdaBoostModel::fit(const ModelSpec& spec,
                                                  const Dataset& data) {
  require_two_classes(data, Family::kAdaBoost);
  auto m = std::make_unique<AdaBoostModel>();
  m->init_base(spec, data.schema_id, data.dimension());

  const int rounds = spec.hyper.get_int("rounds", 50);
  const std::size_t n = data.size();
  const std::size_t d = data.dimension();
  std::vector<double> w(n, 1.0 / static_cast<double>(n));
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = data.y[i] == Label::kMalicious ? 1 : 0;
  }

  // Per-feature presorted row order, reused every round.
  std::vector<std::vector<std::size_t>> order(d);
  for (std::size_t f = 0; f < d; ++f) {
    order[f] = all_rows(n);
    std::stable_sort(order[f].begin(), order[f].end(),
                     [&](std::size_t a, std::size_t b) {
                       return data.x.at(a, f) < data.x.at(b, f);
                     });
  }

  for (int round = 0; round < rounds; ++round) {
    // Best weighted-error stump over all features and cut points.
    Stump best;
    double best_err = 1.0;
    double total_pos = 0.0;  // weight of label-1 samples
    for (std::size_t i = 0; i < n; ++i) {
      if (y[i] == 1) total_pos += w[i];
    }
    for (std::size_t f = 0; f < d; ++f) {
      const auto& ord = order[f];
      // err(left=1) for the empty left side: all right side predicted 1
      // means misclassifying every 0-label.
      double left_pos = 0.0, left_neg = 0.0;
      double total_neg = 1.0 - total_pos;
      for (std::size_t i = 0; i + 1 < n; ++i) {
        std::size_t r = ord[i];
        if (y[r] == 1) {
          left_pos += w[r];
        } else {
          left_neg += w[r];
        }
        double v0 = data.x.at(r, f);
        double v1 = data.x.at(ord[i + 1], f);
        if (v0 == v1) continue;
        double threshold = v0 + (v1 - v0) / 2.0;
        // left <= threshold predicted L, right predicted R
        // (L,R) = (0,1): errors = left_pos + (right negs) = left_pos +
        // (total_neg - left_neg)
        double err01 = left_pos + (total_neg - left_neg);
        // (L,R) = (1,0): complementary
        double err10 = 1.0 - err01;
        if (err01 < best_err) {
          best_err = err01;
          best = {static_cast<int>(f), threshold, 0, 1, 0.0};
        }
        if (err10 < best_err) {
          best_err = err10;
          best = {static_cast<int>(f), threshold, 1, 0, 0.0};
        }
      }
    }
    if (best_err >= 0.5) break;  // no better-than-chance stump left
    double err = std::max(best_err, 1e-10);
    best.alpha = std::log((1.0 - err) / err);
    m->stumps_.push_back(best);
    // Reweight and renormalize.
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      int pred = data.x.at(i, static_cast<std::size_t>(best.feature)) <=
                         best.threshold
                     ? best.left_label
                     : best.right_label;
      if (pred != y[i]) w[i] *= std::exp(best.alpha);
      total += w[i];
    }
    for (double& wi : w) wi /= total;
    if (best_err <= 1e-10) break;  // perfect stump, margin saturated
  }
  if (m->stumps_.empty()) {
    throw NonConvergenceError("AdaBoost found no better-than-chance stump");
  }
  return m;
}

double AdaBoostModel::decision_score(std::span<const double> x) const {
  check_dimension(x);
  double margin = 0.0, total = 0.0;
  for (const Stump& s : stumps_) {
    int pred = x[static_cast<std::size_t>(s.feature)] <= s.threshold
                   ? s.left_label
                   : s.right_label;
    margin += s.alpha * (pred == 1 ? 1.0 : -1.0);
    total += s.alpha;
  }
  return total > 0.0 ? margin / total : 0.0;
}

double AdaBoostModel::predict_proba(std::span<const double> x) const {
  return (decision_score(x) + 1.0) / 2.0;
}

nlohmann::json AdaBoostModel::to_json() const {
  nlohmann::json j;
  base_json(j);
  nlohmann::json stumps = nlohmann::json::array();
  for (const Stump& s : stumps_) {
    stumps.push_back({{"feature", s.feature},
                      {"threshold", s.threshold},
                      {"left_label", s.left_label},
                      {"right_label", s.right_label},
                      {"alpha", s.alpha}});
  }
  j["params"] = {{"stumps", stumps}};
  return j;
}

std::unique_ptr<AdaBoostModel> AdaBoostModel::from_json(
    const nlohmann::json& j) {
  auto m = std::make_unique<AdaBoostModel>();
  m->base_from_json(j);
  for (const auto& s : j.at("params").at("stumps")) {
    m->stumps_.push_back({s.at("feature").get<int>(),
                          s.at("threshold").get<double>(),
                          s.at("left_label").get<int>(),
                          s.at("right_label").get<int>(),
                          s.at("alpha").get<double>()});
  }
  return m;
}

// ---- gradient boosting (logistic loss) ---------------------------------------

GradientBoostingModel::GradientBoostingModel() = default;
GradientBoostingModel::~GradientBoostingModel() = default;

std::unique_ptr<GradientBoostingModel> GradientBoostingModel::fit(
    const ModelSpec& spec, const Dataset& data) {
  require_two_classes(data, Family::kGradientBoosting);
  auto m = std::make_unique<GradientBoostingModel>();
  m->init_base(spec, data.schema_id, data.dimension());

  const int rounds = spec.hyper.get_int("rounds", 100);
  m->rate_ = spec.hyper.get("rate", 0.1);
  detail::CartOptions opts;
  opts.max_depth = spec.hyper.get_int("max_depth", 3);
  opts.regression = true;

  const std::size_t n = data.size();
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = data.y[i] == Label::kMalicious ? 1.0 : 0.0;
  }
  double pos = std::accumulate(y.begin(), y.end(), 0.0);
  double prior = std::clamp(pos / static_cast<double>(n), 1e-6, 1.0 - 1e-6);
  m->f0_ = std::log(prior / (1.0 - prior));

  std::vector<double> f(n, m->f0_);
  std::vector<double> residual(n);
  std::mt19937_64 rng(spec.seed);
  auto rows = all_rows(n);
  for (int round = 0; round < rounds; ++round) {
    for (std::size_t i = 0; i < n; ++i) {
      residual[i] = y[i] - sigmoid(f[i]);
    }
    detail::CartTree tree;
    tree.fit(data.x, residual, rows, opts, rng);
    // Newton leaf step on the logistic loss: sum r / sum p(1-p).
    const auto& leaves = tree.leaf_rows();
    for (std::size_t leaf = 0; leaf < leaves.size(); ++leaf) {
      double num = 0.0, den = 0.0;
      for (std::size_t r : leaves[leaf]) {
        double p = sigmoid(f[r]);
        num += y[r] - p;
        den += p * (1.0 - p);
      }
      tree.set_leaf_value(leaf, num / std::max(den, 1e-12));
    }
    for (std::size_t i = 0; i < n; ++i) {
      f[i] += m->rate_ * tree.predict(data.x.row(i));
    }
    m->trees_.push_back(std::move(tree));
    if (!std::isfinite(f[0])) {
      throw NonConvergenceError("GB diverged at round " +
                                std::to_string(round));
    }
  }
  return m;
}

double GradientBoostingModel::decision_score(std::span<const double> x) const {
  check_dimension(x);
  double f = f0_;
  for (const auto& tree : trees_) f += rate_ * tree.predict(x);
  return f;
}

double GradientBoostingModel::predict_proba(std::span<const double> x) const {
  return sigmoid(decision_score(x));
}

nlohmann::json GradientBoostingModel::to_json() const {
  nlohmann::json j;
  base_json(j);
  nlohmann::json trees = nlohmann::json::array();
  for (const auto& tree : trees_) trees.push_back(tree.to_json());
  j["params"] = {{"f0", f0_}, {"rate", rate_}, {"trees", trees}};
  return j;
}

std::unique_ptr<GradientBoostingModel> GradientBoostingModel::from_json(
    const nlohmann::json& j) {
  auto m = std::make_unique<GradientBoostingModel>();
  m->base_from_json(j);
  const auto& p = j.at("params");
  m->f0_ = p.at("f0").get<double>();
  m->rate_ = p.at("rate").get<double>();
  for (const auto& tree : p.at("trees")) {
    m->trees_.push_back(detail::CartTree::from_json(tree));
  }
  return m;
}

}  // namespace magescan::ml
