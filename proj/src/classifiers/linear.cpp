#include <algorithm>
#include <cmath>

#include "magescan/kernels.hpp"
#include "magescan/models.hpp"

namespace magescan::ml {

namespace {

inline double sigmoid(double s) {
  if (s >= 0.0) {
    double z = std::exp(-s);
    return 1.0 / (1.0 + z);
  }
  double z = std::exp(s);
  return z / (1.0 + z);
}

void require_two_classes(const Dataset& data, Family family) {
  if (data.size() == 0) {
    throw DegenerateDataError("empty training set");
  }
  std::size_t pos = data.count_label(Label::kMalicious);
  if (pos == 0 || pos == data.size()) {
    throw DegenerateDataError(std::string("training data for ") +
                              family_name(family) +
                              " contains a single class");
  }
}

Matrix standardized(const Matrix& x, const Scaler& s) {
  Matrix out(x.rows(), x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto row = x.row(r);
    auto dst = out.row(r);
    for (std::size_t c = 0; c < x.cols(); ++c) {
      dst[c] = (row[c] - s.mean[c]) / s.std_dev[c];
    }
  }
  return out;
}

}  // namespace

Scaler Scaler::identity(std::size_t dim) {
  Scaler s;
  s.mean.assign(dim, 0.0);
  s.std_dev.assign(dim, 1.0);
  return s;
}

Scaler Scaler::fit(const Matrix& x) {
  Scaler s;
  const std::size_t n = x.rows(), d = x.cols();
  s.mean.assign(d, 0.0);
  s.std_dev.assign(d, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    auto row = x.row(r);
    for (std::size_t c = 0; c < d; ++c) s.mean[c] += row[c];
  }
  for (std::size_t c = 0; c < d; ++c) s.mean[c] /= static_cast<double>(n);
  for (std::size_t r = 0; r < n; ++r) {
    auto row = x.row(r);
    for (std::size_t c = 0; c < d; ++c) {
      double dlt = row[c] - s.mean[c];
      s.std_dev[c] += dlt * dlt;
    }
  }
  for (std::size_t c = 0; c < d; ++c) {
    s.std_dev[c] = std::sqrt(s.std_dev[c] / static_cast<double>(n));
    if (s.std_dev[c] <= 0.0) s.std_dev[c] = 1.0;
  }
  return s;
}

std::vector<double> Scaler::apply(std::span<const double> x) const {
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    out[i] = (x[i] - mean[i]) / std_dev[i];
  }
  return out;
}

// ---- logistic regression ----------------------------------------------------

std::unique_ptr<LogisticRegressionModel>
LogisticRegressionModel::from_parameters(std::vector<double> weights,
                                         double bias) {
  auto m = std::make_unique<LogisticRegressionModel>();
  ModelSpec spec;
  spec.family = Family::kLogisticRegression;
  m->init_base(spec, "", weights.size());
  m->scaler_ = Scaler::identity(weights.size());
  m->weights_ = std::move(weights);
  m->bias_ = bias;
  return m;
}

std::unique_ptr<LogisticRegressionModel> LogisticRegressionModel::fit(
    const ModelSpec& spec, const Dataset& data) {
  require_two_classes(data, Family::kLogisticRegression);
  const double rate = spec.hyper.get("rate", 0.1);
  const double l2 = spec.hyper.get("l2", 0.0);
  const int epochs = spec.hyper.get_int("epochs", 500);
  const bool standardize = spec.hyper.get("standardize", 1.0) != 0.0;

  auto m = std::make_unique<LogisticRegressionModel>();
  m->init_base(spec, data.schema_id, data.dimension());
  m->scaler_ = standardize ? Scaler::fit(data.x)
                           : Scaler::identity(data.dimension());
  Matrix xs = standardized(data.x, m->scaler_);

  const std::size_t n = data.size(), d = data.dimension();
  std::vector<double>& w = m->weights_;
  w.assign(d, 0.0);
  double b = 0.0;
  std::vector<double> grad(d);
  for (int epoch = 0; epoch < epochs; ++epoch) {
    std::fill(grad.begin(), grad.end(), 0.0);
    double grad_b = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      auto row = xs.row(i);
      double p = sigmoid(kern::dot(row, w) + b);
      double err = p - (data.y[i] == Label::kMalicious ? 1.0 : 0.0);
      kern::axpy(err, row, grad);
      grad_b += err;
    }
    double inv_n = 1.0 / static_cast<double>(n);
    kern::scale(inv_n, grad);
    if (l2 > 0.0) kern::axpy(l2, w, grad);
    kern::axpy(-rate, grad, w);
    b -= rate * grad_b * inv_n;
    if (!std::isfinite(b) || !std::isfinite(kern::sum(w))) {
      throw NonConvergenceError("LR diverged at epoch " +
                                std::to_string(epoch));
    }
  }
  m->bias_ = b;
  return m;
}

double LogisticRegressionModel::decision_score(
    std::span<const double> x) const {
  check_dimension(x);
  std::vector<double> xs = scaler_.apply(x);
  return kern::dot(xs, weights_) + bias_;
}

double LogisticRegressionModel::predict_proba(std::span<const double> x) const {
  return sigmoid(decision_score(x));
}

std::vector<double> LogisticRegressionModel::input_gradient(
    std::span<const double> x, Label y) const {
  // d/dx of the logistic loss: (sigma(s) - y) * dscore/dx.
  double err = sigmoid(decision_score(x)) -
               (y == Label::kMalicious ? 1.0 : 0.0);
  std::vector<double> grad(dimension_);
  for (std::size_t i = 0; i < dimension_; ++i) {
    grad[i] = err * weights_[i] / scaler_.std_dev[i];
  }
  return grad;
}

nlohmann::json LogisticRegressionModel::to_json() const {
  nlohmann::json j;
  base_json(j);
  j["params"] = {{"weights", weights_},
                 {"bias", bias_},
                 {"scaler_mean", scaler_.mean},
                 {"scaler_std", scaler_.std_dev}};
  return j;
}

std::unique_ptr<LogisticRegressionModel> LogisticRegressionModel::from_json(
    const nlohmann::json& j) {
  auto m = std::make_unique<LogisticRegressionModel>();
  m->base_from_json(j);
  const auto& p = j.at("params");
  m->weights_ = p.at("weights").get<std::vector<double>>();
  m->bias_ = p.at("bias").get<double>();
  m->scaler_.mean = p.at("scaler_mean").get<std::vector<double>>();
  m->scaler_.std_dev = p.at("scaler_std").get<std::vector<double>>();
  return m;
}

// ---- support vector machine -------------------------------------------------

std::unique_ptr<SvmModel> SvmModel::from_linear_parameters(
    std::vector<double> weights, double bias) {
  auto m = std::make_unique<SvmModel>();
  ModelSpec spec;
  spec.family = Family::kSvm;
  m->init_base(spec, "", weights.size());
  m->scaler_ = Scaler::identity(weights.size());
  m->rbf_ = false;
  m->weights_ = std::move(weights);
  m->bias_ = bias;
  return m;
}

std::unique_ptr<SvmModel> SvmModel::fit(const ModelSpec& spec,
                                        const Dataset& data) {
  require_two_classes(data, Family::kSvm);
  const double c = spec.hyper.get("c", 1.0);
  const bool rbf = spec.hyper.get("kernel", 0.0) != 0.0;
  const double gamma = spec.hyper.get("gamma", 0.1);
  const int epochs = spec.hyper.get_int("epochs", 150);
  const bool standardize = spec.hyper.get("standardize", 1.0) != 0.0;
  const double lambda = 1.0 / c;

  auto m = std::make_unique<SvmModel>();
  m->init_base(spec, data.schema_id, data.dimension());
  m->scaler_ = standardize ? Scaler::fit(data.x)
                           : Scaler::identity(data.dimension());
  m->rbf_ = rbf;
  m->gamma_ = gamma;
  Matrix xs = standardized(data.x, m->scaler_);

  const std::size_t n = data.size();
  std::vector<double> ypm(n);
  for (std::size_t i = 0; i < n; ++i) {
    ypm[i] = data.y[i] == Label::kMalicious ? 1.0 : -1.0;
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  double b = 0.0;

  if (!rbf) {
    std::vector<double>& w = m->weights_;
    w.assign(data.dimension(), 0.0);
    for (int t = 1; t <= epochs; ++t) {
      double eta = 1.0 / (lambda * static_cast<double>(t + 1));
      std::vector<double> push(data.dimension(), 0.0);
      double push_b = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        auto row = xs.row(i);
        double margin = ypm[i] * (kern::dot(row, w) + b);
        if (margin < 1.0) {
          kern::axpy(ypm[i], row, push);
          push_b += ypm[i];
        }
      }
      kern::scale(1.0 - eta * lambda, w);
      kern::axpy(eta * inv_n, push, w);
      b += eta * inv_n * push_b;
      if (!std::isfinite(b) || !std::isfinite(kern::sum(w))) {
        throw NonConvergenceError("SVM diverged at epoch " +
                                  std::to_string(t));
      }
    }
  } else {
    // Cache the kernel matrix once; the batch subgradient step then only
    // touches beta.
    Matrix k(n, n);
    for (std::size_t i = 0; i < n; ++i) {
      k.at(i, i) = 1.0;
      for (std::size_t j = i + 1; j < n; ++j) {
        double v = std::exp(-gamma * kern::squared_distance(xs.row(i),
                                                            xs.row(j)));
        k.at(i, j) = v;
        k.at(j, i) = v;
      }
    }
    std::vector<double> beta(n, 0.0);
    for (int t = 1; t <= epochs; ++t) {
      double eta = 1.0 / (lambda * static_cast<double>(t + 1));
      std::vector<double> active_push(n, 0.0);
      double push_b = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        double f = kern::dot(k.row(i), beta) + b;
        if (ypm[i] * f < 1.0) {
          active_push[i] = ypm[i];
          push_b += ypm[i];
        }
      }
      kern::scale(1.0 - eta * lambda, beta);
      kern::axpy(eta * inv_n, active_push, beta);
      b += eta * inv_n * push_b;
      if (!std::isfinite(b) || !std::isfinite(kern::sum(beta))) {
        throw NonConvergenceError("SVM diverged at epoch " +
                                  std::to_string(t));
      }
    }
    // Keep the expansion sparse where possible.
    for (std::size_t i = 0; i < n; ++i) {
      if (std::abs(beta[i]) > 1e-12) {
        m->support_.push_row(xs.row(i));
        m->beta_.push_back(beta[i]);
      }
    }
  }
  m->bias_ = b;
  return m;
}

double SvmModel::decision_score(std::span<const double> x) const {
  check_dimension(x);
  std::vector<double> xs = scaler_.apply(x);
  if (!rbf_) return kern::dot(xs, weights_) + bias_;
  double f = bias_;
  for (std::size_t j = 0; j < beta_.size(); ++j) {
    f += beta_[j] * std::exp(-gamma_ * kern::squared_distance(
                                           std::span<const double>(xs),
                                           support_.row(j)));
  }
  return f;
}

std::vector<double> SvmModel::input_gradient(std::span<const double> x,
                                             Label y) const {
  check_dimension(x);
  double ypm = y == Label::kMalicious ? 1.0 : -1.0;
  std::vector<double> grad(dimension_, 0.0);
  double score = decision_score(x);
  if (1.0 - ypm * score <= 0.0) return grad;  // hinge inactive
  std::vector<double> xs = scaler_.apply(x);
  if (!rbf_) {
    for (std::size_t i = 0; i < dimension_; ++i) {
      grad[i] = -ypm * weights_[i] / scaler_.std_dev[i];
    }
    return grad;
  }
  // d/dx' of sum_j beta_j exp(-gamma |x'-s_j|^2) = sum_j beta_j K_j *
  // (-2 gamma)(x' - s_j); loss gradient adds the -ypm factor.
  for (std::size_t j = 0; j < beta_.size(); ++j) {
    auto s = support_.row(j);
    double kval = std::exp(-gamma_ * kern::squared_distance(
                                         std::span<const double>(xs), s));
    double coef = -ypm * beta_[j] * kval * (-2.0 * gamma_);
    for (std::size_t i = 0; i < dimension_; ++i) {
      grad[i] += coef * (xs[i] - s[i]);
    }
  }
  for (std::size_t i = 0; i < dimension_; ++i) {
    grad[i] /= scaler_.std_dev[i];
  }
  return grad;
}

nlohmann::json SvmModel::to_json() const {
  nlohmann::json j;
  base_json(j);
  nlohmann::json support = nlohmann::json::array();
  for (std::size_t r = 0; r < support_.rows(); ++r) {
    auto row = support_.row(r);
    support.push_back(std::vector<double>(row.begin(), row.end()));
  }
  j["params"] = {{"rbf", rbf_},
                 {"weights", weights_},
                 {"support", support},
                 {"beta", beta_},
                 {"gamma", gamma_},
                 {"bias", bias_},
                 {"scaler_mean", scaler_.mean},
                 {"scaler_std", scaler_.std_dev}};
  return j;
}

std::unique_ptr<SvmModel> SvmModel::from_json(const nlohmann::json& j) {
  auto m = std::make_unique<SvmModel>();
  m->base_from_json(j);
  const auto& p = j.at("params");
  m->rbf_ = p.at("rbf").get<bool>();
  m->weights_ = p.at("weights").get<std::vector<double>>();
  for (const auto& row : p.at("support")) {
    m->support_.push_row(row.get<std::vector<double>>());
  }
  m->beta_ = p.at("beta").get<std::vector<double>>();
  m->gamma_ = p.at("gamma").get<double>();
  m->bias_ = p.at("bias").get<double>();
  m->scaler_.mean = p.at("scaler_mean").get<std::vector<double>>();
  m->scaler_.std_dev = p.at("scaler_std").get<std::vector<double>>();
  return m;
}

}  // namespace magescan::ml
