#pragma once

// Concrete model classes. Most callers only need train() / Model from
// classifiers.hpp; these are public so tests and the attack fixtures can
// build models directly from parameters.

#include <memory>
#include <vector>

#include "magescan/classifiers.hpp"

namespace magescan::ml {

namespace detail {
class CartTree;
}

// Per-feature affine input scaler fitted on training data ((x - mean) /
// std, zero stds mapped to 1). LR and SVM standardize internally; models
// built from explicit parameters use the identity scaler.
struct Scaler {
  std::vector<double> mean;
  std::vector<double> std_dev;

  static Scaler identity(std::size_t dim);
  static Scaler fit(const Matrix& x);
  std::vector<double> apply(std::span<const double> x) const;
};

class LogisticRegressionModel final : public Model {
 public:
  // Identity-scaled model with fixed parameters (fixtures, tests).
  static std::unique_ptr<LogisticRegressionModel> from_parameters(
      std::vector<double> weights, double bias);
  static std::unique_ptr<LogisticRegressionModel> fit(const ModelSpec& spec,
                                                      const Dataset& data);

  double decision_score(std::span<const double> x) const override;  // w.x'+b
  double predict_proba(std::span<const double> x) const override;
  std::vector<double> input_gradient(std::span<const double> x,
                                     Label y) const override;
  nlohmann::json to_json() const override;
  static std::unique_ptr<LogisticRegressionModel> from_json(
      const nlohmann::json& j);

  const std::vector<double>& weights() const { return weights_; }
  double bias() const { return bias_; }

 private:
  std::vector<double> weights_;
  double bias_ = 0.0;
  Scaler scaler_;
};

class SvmModel final : public Model {
 public:
  static std::unique_ptr<SvmModel> from_linear_parameters(
      std::vector<double> weights, double bias);
  static std::unique_ptr<SvmModel> fit(const ModelSpec& spec,
                                       const Dataset& data);

  double decision_score(std::span<const double> x) const override;
  std::vector<double> input_gradient(std::span<const double> x,
                                     Label y) const override;
  nlohmann::json to_json() const override;
  static std::unique_ptr<SvmModel> from_json(const nlohmann::json& j);

  bool is_rbf() const { return rbf_; }

 private:
  bool rbf_ = false;
  // linear
  std::vector<double> weights_;
  // rbf: score = sum_j beta_j exp(-gamma |x' - s_j|^2) + bias
  Matrix support_;
  std::vector<double> beta_;
  double gamma_ = 0.1;
  double bias_ = 0.0;
  Scaler scaler_;
};

class DecisionTreeModel final : public Model {
 public:
  static std::unique_ptr<DecisionTreeModel> fit(const ModelSpec& spec,
                                                const Dataset& data);
  double decision_score(std::span<const double> x) const override;  // 2p - 1
  double predict_proba(std::span<const double> x) const override;
  nlohmann::json to_json() const override;
  static std::unique_ptr<DecisionTreeModel> from_json(const nlohmann::json& j);
  ~DecisionTreeModel() override;
  DecisionTreeModel();

 private:
  std::unique_ptr<detail::CartTree> tree_;
};

class RandomForestModel final : public Model {
 public:
  static std::unique_ptr<RandomForestModel> fit(const ModelSpec& spec,
                                                const Dataset& data);
  double decision_score(std::span<const double> x) const override;
  // Fraction of trees voting malicious.
  double predict_proba(std::span<const double> x) const override;
  nlohmann::json to_json() const override;
  static std::unique_ptr<RandomForestModel> from_json(const nlohmann::json& j);
  ~RandomForestModel() override;
  RandomForestModel();

  // Mean impurity decrease per feature, normalized to sum 1.
  std::vector<double> importance() const;

 private:
  std::vector<detail::CartTree> trees_;
  std::size_t feature_count_ = 0;
};

class AdaBoostModel final : public Model {
 public:
  static std::unique_ptr<AdaBoostModel> fit(const ModelSpec& spec,
                                            const Dataset& data);
  // Normalized margin in [-1, 1].
  double decision_score(std::span<const double> x) const override;
  double predict_proba(std::span<const double> x) const override;
  nlohmann::json to_json() const override;
  static std::unique_ptr<AdaBoostModel> from_json(const nlohmann::json& j);

 private:
  struct Stump {
    int feature = 0;
    double threshold = 0.0;
    int left_label = 0;   // prediction when x[feature] <= threshold
    int right_label = 1;
    double alpha = 0.0;
  };
  std::vector<Stump> stumps_;
};

class GradientBoostingModel final : public Model {
 public:
  static std::unique_ptr<GradientBoostingModel> fit(const ModelSpec& spec,
                                                    const Dataset& data);
  double decision_score(std::span<const double> x) const override;  // log-odds
  double predict_proba(std::span<const double> x) const override;
  nlohmann::json to_json() const override;
  static std::unique_ptr<GradientBoostingModel> from_json(
      const nlohmann::json& j);
  ~GradientBoostingModel() override;
  GradientBoostingModel();

 private:
  double f0_ = 0.0;
  double rate_ = 0.1;
  std::vector<detail::CartTree> trees_;
};

class NaiveBayesModel final : public Model {
 public:
  static std::unique_ptr<NaiveBayesModel> fit(const ModelSpec& spec,
                                              const Dataset& data);
  // log P(malicious|x) - log P(benign|x)
  double decision_score(std::span<const double> x) const override;
  double predict_proba(std::span<const double> x) const override;
  nlohmann::json to_json() const override;
  static std::unique_ptr<NaiveBayesModel> from_json(const nlohmann::json& j);

 private:
  double log_prior_[2] = {0.0, 0.0};
  std::vector<double> mean_[2];
  std::vector<double> var_[2];
  double class_log_likelihood(std::span<const double> x, int cls) const;
};

class KnnModel final : public Model {
 public:
  static std::unique_ptr<KnnModel> fit(const ModelSpec& spec,
                                       const Dataset& data);
  double decision_score(std::span<const double> x) const override;  // 2p - 1
  double predict_proba(std::span<const double> x) const override;
  nlohmann::json to_json() const override;
  static std::unique_ptr<KnnModel> from_json(const nlohmann::json& j);

 private:
  Matrix train_x_;
  std::vector<int> train_y_;
  int k_ = 3;
  double vote_fraction(std::span<const double> x) const;
};

class KMeansModel final : public Model {
 public:
  static std::unique_ptr<KMeansModel> fit(const ModelSpec& spec,
                                          const Dataset& data);
  // Distance margin: d(nearest benign centroid) - d(nearest malicious
  // centroid); saturates at +/-1e9 when one side has no centroid.
  double decision_score(std::span<const double> x) const override;
  nlohmann::json to_json() const override;
  static std::unique_ptr<KMeansModel> from_json(const nlohmann::json& j);

 private:
  Matrix centroids_;
  std::vector<int> centroid_label_;
};

}  // namespace magescan::ml
