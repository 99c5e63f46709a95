#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "magescan/kernels.hpp"
#include "magescan/models.hpp"
#include "magescan/util.hpp"

namespace magescan::ml {

namespace {

void require_two_classes(const Dataset& data, Family family) {
  if (data.size() == 0) throw DegenerateDataError("empty training set");
  std::size_t pos = data.count_label(Label::kMalicious);
  if (pos == 0 || pos == data.size()) {
    throw DegenerateDataError(std::string("training data for ") +
                              family_name(family) +
                              " contains a single class");
  }
}

constexpr double kScoreSaturation = 1e9;

}  // namespace

// ---- gaussian naive bayes -----------------------------------------------------

std::unique_ptr<NaiveBayesModel> NaiveBayesModel::fit(const ModelSpec& spec,
                                                      const Dataset& data) {
  require_two_classes(data, Family::kNaiveBayes);
  auto m = std::make_unique<NaiveBayesModel>();
  m->init_base(spec, data.schema_id, data.dimension());

  const std::size_t n = data.size(), d = data.dimension();
  const double smoothing = spec.hyper.get("var_smoothing", 1e-9);
  std::size_t count[2] = {0, 0};
  for (int cls = 0; cls < 2; ++cls) {
    m->mean_[cls].assign(d, 0.0);
    m->var_[cls].assign(d, 0.0);
  }
  for (std::size_t i = 0; i < n; ++i) {
    int cls = data.y[i] == Label::kMalicious ? 1 : 0;
    ++count[cls];
    auto row = data.x.row(i);
    for (std::size_t c = 0; c < d; ++c) m->mean_[cls][c] += row[c];
  }
  for (int cls = 0; cls < 2; ++cls) {
    for (std::size_t c = 0; c < d; ++c) {
      m->mean_[cls][c] /= static_cast<double>(count[cls]);
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    int cls = data.y[i] == Label::kMalicious ? 1 : 0;
    auto row = data.x.row(i);
    for (std::size_t c = 0; c < d; ++c) {
      double delta = row[c] - m->mean_[cls][c];
      m->var_[cls][c] += delta * delta;
    }
  }
  // Smooth with a fraction of the largest overall feature variance so
  // constant features stay usable.
  double max_var = 0.0;
  for (std::size_t c = 0; c < d; ++c) {
    double total_mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) total_mean += data.x.at(i, c);
    total_mean /= static_cast<double>(n);
    double v = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double delta = data.x.at(i, c) - total_mean;
      v += delta * delta;
    }
    max_var = std::max(max_var, v / static_cast<double>(n));
  }
  double epsilon = smoothing * std::max(max_var, 1e-12);
  for (int cls = 0; cls < 2; ++cls) {
    for (std::size_t c = 0; c < d; ++c) {
      m->var_[cls][c] =
          m->var_[cls][c] / static_cast<double>(count[cls]) + epsilon;
    }
    m->log_prior_[cls] = std::log(static_cast<double>(count[cls]) /
                                  static_cast<double>(n));
  }
  return m;
}

double NaiveBayesModel::class_log_likelihood(std::span<const double> x,
                                             int cls) const {
  double ll = log_prior_[cls];
  for (std::size_t c = 0; c < dimension_; ++c) {
    double var = var_[cls][c];
    double delta = x[c] - mean_[cls][c];
    ll += -0.5 * std::log(2.0 * M_PI * var) - delta * delta / (2.0 * var);
  }
  return ll;
}

double NaiveBayesModel::decision_score(std::span<const double> x) const {
  check_dimension(x);
  return class_log_likelihood(x, 1) - class_log_likelihood(x, 0);
}

double NaiveBayesModel::predict_proba(std::span<const double> x) const {
  double s = decision_score(x);
  if (s >= 0.0) {
    return 1.0 / (1.0 + std::exp(-s));
  }
  double z = std::exp(s);
  return z / (1.0 + z);
}

nlohmann::json NaiveBayesModel::to_json() const {
  nlohmann::json j;
  base_json(j);
  j["params"] = {{"log_prior", {log_prior_[0], log_prior_[1]}},
                 {"mean_benign", mean_[0]},
                 {"mean_malicious", mean_[1]},
                 {"var_benign", var_[0]},
                 {"var_malicious", var_[1]}};
  return j;
}

std::unique_ptr<NaiveBayesModel> NaiveBayesModel::from_json(
    const nlohmann::json& j) {
  auto m = std::make_unique<NaiveBayesModel>();
  m->base_from_json(j);
  const auto& p = j.at("params");
  m->log_prior_[0] = p.at("log_prior")[0].get<double>();
  m->log_prior_[1] = p.at("log_prior")[1].get<double>();
  m->mean_[0] = p.at("mean_benign").get<std::vector<double>>();
  m->mean_[1] = p.at("mean_malicious").get<std::vector<double>>();
  m->var_[0] = p.at("var_benign").get<std::vector<double>>();
  m->var_[1] = p.at("var_malicious").get<std::vector<double>>();
  return m;
}

// ---- k-nearest neighbors --------------------------------------------------------

std::unique_ptr<KnnModel> KnnModel::fit(const ModelSpec& spec,
                                        const Dataset& data) {
  require_two_classes(data, Family::kKnn);
  auto m = std::make_unique<KnnModel>();
  m->init_base(spec, data.schema_id, data.dimension());
  m->k_ = std::min<int>(spec.hyper.get_int("k", 3),
                        static_cast<int>(data.size()));
  m->train_x_ = data.x;
  m->train_y_.resize(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    m->train_y_[i] = data.y[i] == Label::kMalicious ? 1 : 0;
  }
  return m;
}

double KnnModel::vote_fraction(std::span<const double> x) const {
  const std::size_t n = train_x_.rows();
  std::vector<std::pair<double, std::size_t>> dist(n);
  for (std::size_t i = 0; i < n; ++i) {
    dist[i] = {kern::squared_distance(x, train_x_.row(i)), i};
  }
  std::size_t k = static_cast<std::size_t>(k_);
  std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k),
                    dist.end());  // pair order breaks distance ties by index
  std::size_t votes = 0;
  for (std::size_t i = 0; i < k; ++i) {
    votes += static_cast<std::size_t>(train_y_[dist[i].second]);
  }
  return static_cast<double>(votes) / static_cast<double>(k);
}

double KnnModel::predict_proba(std::span<const double> x) const {
  check_dimension(x);
  return vote_fraction(x);
}

double KnnModel::decision_score(std::span<const double> x) const {
  return 2.0 * predict_proba(x) - 1.0;
}

nlohmann::json KnnModel::to_json() const {
  nlohmann::json j;
  base_json(j);
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t r = 0; r < train_x_.rows(); ++r) {
    auto row = train_x_.row(r);
    rows.push_back(std::vector<double>(row.begin(), row.end()));
  }
  j["params"] = {{"k", k_}, {"train_x", rows}, {"train_y", train_y_}};
  return j;
}

std::unique_ptr<KnnModel> KnnModel::from_json(const nlohmann::json& j) {
  auto m = std::make_unique<KnnModel>();
  m->base_from_json(j);
  const auto& p = j.at("params");
  m->k_ = p.at("k").get<int>();
  for (const auto& row : p.at("train_x")) {
    m->train_x_.push_row(row.get<std::vector<double>>());
  }
  m->train_y_ = p.at("train_y").get<std::vector<int>>();
  return m;
}

// ---- k-means --------------------------------------------------------------------

std::unique_ptr<KMeansModel> KMeansModel::fit(const ModelSpec& spec,
                                              const Dataset& data) {
  if (data.size() == 0) throw DegenerateDataError("empty training set");
  auto m = std::make_unique<KMeansModel>();
  m->init_base(spec, data.schema_id, data.dimension());

  const std::size_t n = data.size(), d = data.dimension();
  const std::size_t k =
      std::min<std::size_t>(static_cast<std::size_t>(spec.hyper.get_int("k", 2)), n);
  const int max_iters = spec.hyper.get_int("max_iters", 100);
  std::mt19937_64 rng(spec.seed);

  // k-means++ seeding
  Matrix centroids(k, d);
  std::vector<double> min_dist(n, 0.0);
  {
    std::uniform_int_distribution<std::size_t> first(0, n - 1);
    auto row = data.x.row(first(rng));
    std::copy(row.begin(), row.end(), centroids.row(0).begin());
  }
  for (std::size_t c = 1; c < k; ++c) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double best = kern::squared_distance(data.x.row(i), centroids.row(0));
      for (std::size_t cc = 1; cc < c; ++cc) {
        best = std::min(best, kern::squared_distance(data.x.row(i),
                                                     centroids.row(cc)));
      }
      min_dist[i] = best;
      total += best;
    }
    std::size_t chosen = 0;
    if (total > 0.0) {
      std::uniform_real_distribution<double> u(0.0, total);
      double target = u(rng);
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        acc += min_dist[i];
        if (acc >= target) {
          chosen = i;
          break;
        }
      }
    }
    auto row = data.x.row(chosen);
    std::copy(row.begin(), row.end(), centroids.row(c).begin());
  }

  // Lloyd iterations
  std::vector<std::size_t> assign(n, 0), prev(n, n);
  for (int iter = 0; iter < max_iters && assign != prev; ++iter) {
    prev = assign;
    for (std::size_t i = 0; i < n; ++i) {
      double best = kern::squared_distance(data.x.row(i), centroids.row(0));
      std::size_t best_c = 0;
      for (std::size_t c = 1; c < k; ++c) {
        double dist = kern::squared_distance(data.x.row(i), centroids.row(c));
        if (dist < best) {
          best = dist;
          best_c = c;
        }
      }
      assign[i] = best_c;
    }
    Matrix sums(k, d);
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      auto row = data.x.row(i);
      auto dst = sums.row(assign[i]);
      for (std::size_t c2 = 0; c2 < d; ++c2) dst[c2] += row[c2];
      ++counts[assign[i]];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;  // empty cluster keeps its old centroid
      auto dst = centroids.row(c);
      for (std::size_t c2 = 0; c2 < d; ++c2) {
        dst[c2] = sums.at(c, c2) / static_cast<double>(counts[c]);
      }
    }
  }

  // Clusters inherit the majority training label; ties and empty clusters
  // default to benign.
  m->centroids_ = centroids;
  m->centroid_label_.assign(k, 0);
  std::vector<std::size_t> pos(k, 0), tot(k, 0);
  for (std::size_t i = 0; i < n; ++i) {
    ++tot[assign[i]];
    if (data.y[i] == Label::kMalicious) ++pos[assign[i]];
  }
  for (std::size_t c = 0; c < k; ++c) {
    m->centroid_label_[c] = (tot[c] > 0 && 2 * pos[c] > tot[c]) ? 1 : 0;
  }
  return m;
}

double KMeansModel::decision_score(std::span<const double> x) const {
  check_dimension(x);
  double near_benign = -1.0, near_malicious = -1.0;
  for (std::size_t c = 0; c < centroids_.rows(); ++c) {
    double dist = std::sqrt(kern::squared_distance(x, centroids_.row(c)));
    double& slot = centroid_label_[c] == 1 ? near_malicious : near_benign;
    if (slot < 0.0 || dist < slot) slot = dist;
  }
  if (near_malicious < 0.0) return -kScoreSaturation;
  if (near_benign < 0.0) return kScoreSaturation;
  return near_benign - near_malicious;
}

nlohmann::json KMeansModel::to_json() const {
  nlohmann::json j;
  base_json(j);
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t r = 0; r < centroids_.rows(); ++r) {
    auto row = centroids_.row(r);
    rows.push_back(std::vector<double>(row.begin(), row.end()));
  }
  j["params"] = {{"centroids", rows}, {"labels", centroid_label_}};
  return j;
}

std::unique_ptr<KMeansModel> KMeansModel::from_json(const nlohmann::json& j) {
  auto m = std::make_unique<KMeansModel>();
  m->base_from_json(j);
  const auto& p = j.at("params");
  for (const auto& row : p.at("centroids")) {
    m->centroids_.push_row(row.get<std::vector<double>>());
  }
  m->centroid_label_ = p.at("labels").get<std::vector<int>>();
  return m;
}

}  // namespace magescan::ml
