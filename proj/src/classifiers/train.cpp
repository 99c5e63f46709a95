#include <algorithm>
#include <chrono>
#include <cmath>
#include <set>

#include "magescan/classifiers.hpp"
#include "magescan/models.hpp"
#include "magescan/util.hpp"

namespace magescan::ml {

namespace {

struct FamilyInfo {
  Family family;
  const char* name;
  std::set<std::string> hyper_keys;
};

const FamilyInfo kFamilies[] = {
    {Family::kDecisionTree, "DT", {"max_depth"}},
    {Family::kRandomForest, "RF", {"trees", "max_depth", "max_features"}},
    {Family::kAdaBoost, "AdaBoost", {"rounds"}},
    {Family::kGradientBoosting, "GB", {"rounds", "rate", "max_depth"}},
    {Family::kLogisticRegression,
     "LR",
     {"rate", "l2", "epochs", "standardize"}},
    {Family::kSvm, "SVM", {"c", "kernel", "gamma", "epochs", "standardize"}},
    {Family::kNaiveBayes, "NB", {"var_smoothing"}},
    {Family::kKnn, "KNN", {"k"}},
    {Family::kKMeans, "KMeans", {"k", "max_iters"}},
};

const FamilyInfo& info_of(Family f) {
  for (const auto& info : kFamilies) {
    if (info.family == f) return info;
  }
  throw InvalidArgumentError("unknown model family");
}

}  // namespace

const char* family_name(Family f) { return info_of(f).name; }

Family family_from_name(const std::string& name) {
  for (const auto& info : kFamilies) {
    if (name == info.name) return info.family;
  }
  throw InvalidArgumentError("unknown model family \"" + name + "\"");
}

std::vector<Family> all_families() {
  std::vector<Family> out;
  for (const auto& info : kFamilies) out.push_back(info.family);
  return out;
}

void Model::check_dimension(std::span<const double> x) const {
  if (x.size() != dimension_) {
    throw SchemaMismatchError("input has " + std::to_string(x.size()) +
                              " features, model expects " +
                              std::to_string(dimension_));
  }
}

double Model::predict_proba(std::span<const double>) const {
  throw ProbabilityUndefinedError(
      std::string("probability is undefined for ") + family_name(family()));
}

std::vector<double> Model::input_gradient(std::span<const double>,
                                          Label) const {
  throw GradientUndefinedError(std::string("input gradient is undefined for ") +
                               family_name(family()));
}

void Model::base_json(nlohmann::json& j) const {
  j["version"] = 1;
  j["family"] = family_name(spec_.family);
  j["hyperparameters"] = spec_.hyper.values;
  j["seed"] = spec_.seed;
  j["schema_id"] = schema_id_;
  j["dimension"] = dimension_;
  j["train_time_s"] = train_time_s_;
}

void Model::base_from_json(const nlohmann::json& j) {
  spec_.family = family_from_name(j.at("family").get<std::string>());
  spec_.hyper.values =
      j.at("hyperparameters").get<std::map<std::string, double>>();
  spec_.seed = j.at("seed").get<std::uint64_t>();
  schema_id_ = j.at("schema_id").get<std::string>();
  dimension_ = j.at("dimension").get<std::size_t>();
  train_time_s_ = j.at("train_time_s").get<double>();
}

ModelPtr train(const ModelSpec& spec, const Dataset& data) {
  const FamilyInfo& info = info_of(spec.family);
  for (const auto& [key, value] : spec.hyper.values) {
    (void)value;
    if (!info.hyper_keys.count(key)) {
      throw InvalidArgumentError(std::string("hyperparameter \"") + key +
                                 "\" is not valid for " + info.name);
    }
  }
  auto start = std::chrono::steady_clock::now();
  ModelPtr model;
  switch (spec.family) {
    case Family::kDecisionTree:
      model = DecisionTreeModel::fit(spec, data);
      break;
    case Family::kRandomForest:
      model = RandomForestModel::fit(spec, data);
      break;
    case Family::kAdaBoost:
      model = AdaBoostModel::fit(spec, data);
      break;
    case Family::kGradientBoosting:
      model = GradientBoostingModel::fit(spec, data);
      break;
    case Family::kLogisticRegression:
      model = LogisticRegressionModel::fit(spec, data);
      break;
    case Family::kSvm:
      model = SvmModel::fit(spec, data);
      break;
    case Family::kNaiveBayes:
      model = NaiveBayesModel::fit(spec, data);
      break;
    case Family::kKnn:
      model = KnnModel::fit(spec, data);
      break;
    case Family::kKMeans:
      model = KMeansModel::fit(spec, data);
      break;
  }
  auto end = std::chrono::steady_clock::now();
  model->set_train_time(std::chrono::duration<double>(end - start).count());
  return model;
}

ModelPtr model_from_json(const nlohmann::json& j) {
  Family family = family_from_name(j.at("family").get<std::string>());
  switch (family) {
    case Family::kDecisionTree:
      return DecisionTreeModel::from_json(j);
    case Family::kRandomForest:
      return RandomForestModel::from_json(j);
    case Family::kAdaBoost:
      return AdaBoostModel::from_json(j);
    case Family::kGradientBoosting:
      return GradientBoostingModel::from_json(j);
    case Family::kLogisticRegression:
      return LogisticRegressionModel::from_json(j);
    case Family::kSvm:
      return SvmModel::from_json(j);
    case Family::kNaiveBayes:
      return NaiveBayesModel::from_json(j);
    case Family::kKnn:
      return KnnModel::from_json(j);
    case Family::kKMeans:
      return KMeansModel::from_json(j);
  }
  throw InvalidArgumentError("unknown model family in JSON");
}

ModelPtr model_from_json_file(const std::string& path) {
  return model_from_json(nlohmann::json::parse(read_file(path)));
}

Metrics compute_metrics(std::span<const Label> y_true,
                        std::span<const Label> y_pred, double train_time_s,
                        double pred_time_s) {
  if (y_true.size() != y_pred.size()) {
    throw LengthMismatchError("y_true has " + std::to_string(y_true.size()) +
                              " labels, y_pred has " +
                              std::to_string(y_pred.size()));
  }
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    bool truth = y_true[i] == Label::kMalicious;
    bool pred = y_pred[i] == Label::kMalicious;
    if (truth && pred) ++tp;
    else if (!truth && pred) ++fp;
    else if (truth && !pred) ++fn;
    else ++tn;
  }
  Metrics m;
  m.train_time_s = train_time_s;
  m.pred_time_s = pred_time_s;
  std::size_t total = y_true.size();
  m.accuracy = total > 0 ? static_cast<double>(tp + tn) /
                               static_cast<double>(total)
                         : 0.0;
  m.precision = (tp + fp) > 0 ? static_cast<double>(tp) /
                                    static_cast<double>(tp + fp)
                              : 0.0;
  m.recall = (tp + fn) > 0 ? static_cast<double>(tp) /
                                 static_cast<double>(tp + fn)
                           : 0.0;
  m.f1 = (m.precision + m.recall) > 0.0
             ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
             : 0.0;
  return m;
}

std::vector<Hyperparams> GridSpec::combinations() const {
  std::vector<Hyperparams> combos{Hyperparams{}};
  for (const auto& [name, options] : axes) {
    std::vector<Hyperparams> next;
    next.reserve(combos.size() * options.size());
    for (const auto& combo : combos) {  // first axis varies slowest
      for (double value : options) {
        Hyperparams h = combo;
        h.values[name] = value;
        next.push_back(std::move(h));
      }
    }
    combos = std::move(next);
  }
  return combos;
}

std::vector<std::size_t> stratified_folds(std::span<const Label> y,
                                          std::size_t folds,
                                          std::uint64_t seed) {
  if (folds < 2) throw InvalidArgumentError("folds must be >= 2");
  std::vector<std::size_t> by_class[2];
  for (std::size_t i = 0; i < y.size(); ++i) {
    by_class[y[i] == Label::kMalicious ? 1 : 0].push_back(i);
  }
  for (int cls = 0; cls < 2; ++cls) {
    if (by_class[cls].size() < folds) {
      throw InsufficientClassSamplesError(
          "class " + std::to_string(cls) + " has " +
          std::to_string(by_class[cls].size()) + " samples, needs >= " +
          std::to_string(folds));
    }
  }
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> fold_of(y.size(), 0);
  for (int cls = 0; cls < 2; ++cls) {
    std::shuffle(by_class[cls].begin(), by_class[cls].end(), rng);
    for (std::size_t i = 0; i < by_class[cls].size(); ++i) {
      fold_of[by_class[cls][i]] = i % folds;
    }
  }
  return fold_of;
}

CvReport grid_search(Family family, const GridSpec& grid, const Dataset& data,
                     std::size_t folds, std::uint64_t seed) {
  auto combos = grid.combinations();
  if (combos.empty()) throw InvalidArgumentError("empty hyperparameter grid");
  auto fold_of = stratified_folds(data.y, folds, derive_seed(seed, "folds"));

  std::vector<std::vector<std::size_t>> train_rows(folds), test_rows(folds);
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (std::size_t f = 0; f < folds; ++f) {
      (fold_of[i] == f ? test_rows[f] : train_rows[f]).push_back(i);
    }
  }
  std::vector<Dataset> train_sets, test_sets;
  for (std::size_t f = 0; f < folds; ++f) {
    train_sets.push_back(data.subset(train_rows[f]));
    test_sets.push_back(data.subset(test_rows[f]));
  }

  CvReport report;
  for (std::size_t c = 0; c < combos.size(); ++c) {
    ModelSpec spec;
    spec.family = family;
    spec.hyper = combos[c];
    spec.seed = derive_seed(seed, "combo", c);
    std::vector<double> scores;
    scores.reserve(folds);
    for (std::size_t f = 0; f < folds; ++f) {
      ModelPtr model = train(spec, train_sets[f]);
      const Dataset& test_set = test_sets[f];
      std::vector<Label> pred(test_set.size());
      for (std::size_t i = 0; i < test_set.size(); ++i) {
        pred[i] = model->predict(test_set.x.row(i));
      }
      scores.push_back(compute_metrics(test_set.y, pred).f1);
    }
    double mean = 0.0;
    for (double s : scores) mean += s;
    mean /= static_cast<double>(scores.size());
    double var = 0.0;
    for (double s : scores) var += (s - mean) * (s - mean);
    var /= static_cast<double>(scores.size());
    report.entries.push_back({spec, mean, std::sqrt(var)});
    if (mean > report.entries[report.best_index].mean_f1) {
      report.best_index = report.entries.size() - 1;
    }
  }
  return report;
}

GridSpec default_grid(Family family) {
  switch (family) {
    case Family::kDecisionTree:
      return {{{"max_depth", {3, 5, 10, 0}}}};
    case Family::kRandomForest:
      return {{{"trees", {50, 100}}, {"max_depth", {5, 10, 0}}}};
    case Family::kAdaBoost:
      return {{{"rounds", {50, 100}}}};
    case Family::kGradientBoosting:
      return {{{"rounds", {50, 100}}, {"rate", {0.1, 0.3}}}};
    case Family::kLogisticRegression:
      return {{{"rate", {0.01, 0.1}}, {"l2", {0.0, 1e-3, 1e-2}}}};
    case Family::kSvm:
      return {{{"kernel", {0, 1}}, {"c", {0.1, 1, 10}}, {"gamma", {0.1, 1}}}};
    case Family::kNaiveBayes:
      return {};
    case Family::kKnn:
      return {{{"k", {3, 5, 7}}}};
    case Family::kKMeans:
      return {{{"k", {2, 4, 8}}}};
  }
  return {};
}

std::vector<double> gini_importance(const Model& model) {
  const auto* rf = dynamic_cast<const RandomForestModel*>(&model);
  if (!rf) {
    throw WrongFamilyError(std::string("gini importance requires RF, got ") +
                           family_name(model.family()));
  }
  return rf->importance();
}

}  // namespace magescan::ml
