#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "magescan/dataset.hpp"

namespace magescan::ml {

using magescan::Dataset;
using magescan::Label;

enum class Family {
  kDecisionTree,
  kRandomForest,
  kAdaBoost,
  kGradientBoosting,
  kLogisticRegression,
  kSvm,
  kNaiveBayes,
  kKnn,
  kKMeans,
};

const char* family_name(Family f);          // "DT", "RF", ...
Family family_from_name(const std::string& name);
std::vector<Family> all_families();

// Flat name -> value hyperparameter map. Every family documents its keys in
// default_grid(); unknown keys are rejected at train time.
struct Hyperparams {
  std::map<std::string, double> values;

  double get(const std::string& name, double fallback) const {
    auto it = values.find(name);
    return it == values.end() ? fallback : it->second;
  }
  int get_int(const std::string& name, int fallback) const {
    return static_cast<int>(get(name, fallback));
  }
};

struct ModelSpec {
  Family family = Family::kLogisticRegression;
  Hyperparams hyper;
  std::uint64_t seed = 0;
};

// A fitted classifier. predict() is 1 iff decision_score() >= 0 for every
// family, so score and label never disagree.
class Model {
 public:
  virtual ~Model() = default;

  const ModelSpec& spec() const { return spec_; }
  Family family() const { return spec_.family; }
  const std::string& schema_id() const { return schema_id_; }
  double train_time_s() const { return train_time_s_; }

  Label predict(std::span<const double> x) const {
    return decision_score(x) >= 0.0 ? Label::kMalicious : Label::kBenign;
  }
  virtual double decision_score(std::span<const double> x) const = 0;
  // Probability of the malicious class. Throws ProbabilityUndefinedError for
  // SVM and KMeans.
  virtual double predict_proba(std::span<const double> x) const;
  // Gradient of the training loss at (x, y) w.r.t. the input. Defined for
  // LR and SVM only; others throw GradientUndefinedError.
  virtual std::vector<double> input_gradient(std::span<const double> x,
                                             Label y) const;

  virtual nlohmann::json to_json() const = 0;

  void set_train_time(double seconds) { train_time_s_ = seconds; }

 protected:
  void init_base(const ModelSpec& spec, std::string schema_id,
                 std::size_t dimension) {
    spec_ = spec;
    schema_id_ = std::move(schema_id);
    dimension_ = dimension;
  }
  void check_dimension(std::span<const double> x) const;
  void base_json(nlohmann::json& j) const;
  void base_from_json(const nlohmann::json& j);

  ModelSpec spec_;
  std::string schema_id_;
  std::size_t dimension_ = 0;
  double train_time_s_ = 0.0;
};

using ModelPtr = std::unique_ptr<Model>;

// Fits a model. Deterministic given (spec, data, spec.seed). Supervised
// families require both classes present (DegenerateDataError).
ModelPtr train(const ModelSpec& spec, const Dataset& data);

ModelPtr model_from_json(const nlohmann::json& j);
ModelPtr model_from_json_file(const std::string& path);

// ---- evaluation -----------------------------------------------------------

struct Metrics {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double train_time_s = 0.0;
  double pred_time_s = 0.0;
};

// Confusion-matrix metrics with Malicious as the positive class; zero
// denominators yield 0 by convention.
Metrics compute_metrics(std::span<const Label> y_true,
                        std::span<const Label> y_pred,
                        double train_time_s = 0.0, double pred_time_s = 0.0);

// ---- cross-validation -----------------------------------------------------

// Ordered hyperparameter grid; combinations are enumerated with the first
// axis slowest so "first in grid order" is well defined.
struct GridSpec {
  std::vector<std::pair<std::string, std::vector<double>>> axes;

  std::vector<Hyperparams> combinations() const;
};

struct CvEntry {
  ModelSpec spec;
  double mean_f1 = 0.0;
  double std_f1 = 0.0;
};

struct CvReport {
  std::vector<CvEntry> entries;  // grid order
  std::size_t best_index = 0;

  const CvEntry& best() const { return entries[best_index]; }
};

// Stratified fold ids (0..folds-1) per sample; per-fold class counts differ
// by at most one. Throws InsufficientClassSamplesError when a class has
// fewer than `folds` samples.
std::vector<std::size_t> stratified_folds(std::span<const Label> y,
                                          std::size_t folds,
                                          std::uint64_t seed);

// 5-fold stratified CV over every grid combination, optimizing mean F1.
// Ties keep the earliest combination.
CvReport grid_search(Family family, const GridSpec& grid, const Dataset& data,
                     std::size_t folds = 5, std::uint64_t seed = 0);

// Default desk-scale grids per family.
GridSpec default_grid(Family family);

// ---- random forest extras -------------------------------------------------

// Mean Gini impurity decrease per feature, normalized to sum 1 (uniform when
// the forest never split). Throws WrongFamilyError unless the model is RF.
std::vector<double> gini_importance(const Model& model);

}  // namespace magescan::ml
