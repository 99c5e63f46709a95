#include <doctest.h>

#include <cmath>
#include <random>

#include "magescan/classifiers.hpp"
#include "magescan/models.hpp"
#include "magescan/util.hpp"
#include "oracles.hpp"

using namespace magescan;
using namespace magescan::ml;

namespace {

Dataset make_dataset(const std::vector<std::vector<double>>& rows,
                     const std::vector<int>& labels) {
  Dataset d;
  d.schema_id = "test";
  for (const auto& row : rows) d.x.push_row(row);
  for (int l : labels) {
    d.y.push_back(l ? Label::kMalicious : Label::kBenign);
  }
  return d;
}

// Two Gaussian blobs, label 1 centered at +2, label 0 at -2.
Dataset blobs(std::size_t n, std::size_t dim, std::uint64_t seed,
              double separation = 2.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  Dataset d;
  d.schema_id = "blobs";
  for (std::size_t i = 0; i < n; ++i) {
    int label = i % 2;
    std::vector<double> row(dim);
    for (auto& v : row) {
      v = noise(rng) + (label ? separation : -separation);
    }
    d.x.push_row(row);
    d.y.push_back(label ? Label::kMalicious : Label::kBenign);
  }
  return d;
}

ModelSpec spec_of(Family family, std::map<std::string, double> hyper = {},
                  std::uint64_t seed = 7) {
  ModelSpec s;
  s.family = family;
  s.hyper.values = std::move(hyper);
  s.seed = seed;
  return s;
}

}  // namespace

TEST_CASE("supervised families reject single-class data") {
  Dataset d = make_dataset({{0.0}, {1.0}}, {0, 0});
  for (Family f : all_families()) {
    if (f == Family::kKMeans) continue;
    CHECK_THROWS_AS(train(spec_of(f), d), DegenerateDataError);
  }
  CHECK_NOTHROW(train(spec_of(Family::kKMeans, {{"k", 2}}), d));
}

TEST_CASE("unknown hyperparameters are rejected") {
  Dataset d = make_dataset({{0.0}, {1.0}}, {0, 1});
  CHECK_THROWS_AS(train(spec_of(Family::kKnn, {{"gamma", 1.0}}), d),
                  InvalidArgumentError);
}

TEST_CASE("LR separates a 2-point set with a monotone score") {
  Dataset d = make_dataset({{0.0}, {1.0}}, {0, 1});
  auto m = train(spec_of(Family::kLogisticRegression,
                         {{"rate", 0.5}, {"epochs", 500}, {"standardize", 0}}),
                 d);
  double s0 = m->decision_score(std::vector<double>{0.0});
  double s1 = m->decision_score(std::vector<double>{0.5});
  double s2 = m->decision_score(std::vector<double>{1.0});
  CHECK(s0 < s1);
  CHECK(s1 < s2);
  CHECK(m->predict(std::vector<double>{0.0}) == Label::kBenign);
  CHECK(m->predict(std::vector<double>{1.0}) == Label::kMalicious);
}

TEST_CASE("LR from explicit parameters is exactly w.x + b") {
  auto m = LogisticRegressionModel::from_parameters({1.0, -1.0}, 0.25);
  CHECK(m->decision_score(std::vector<double>{2.0, 3.0}) ==
        doctest::Approx(2.0 - 3.0 + 0.25).epsilon(1e-15));
  CHECK(m->predict_proba(std::vector<double>{0.0, 0.0}) ==
        doctest::Approx(1.0 / (1.0 + std::exp(-0.25))));
}

TEST_CASE("LR input gradient matches the closed form") {
  auto m = LogisticRegressionModel::from_parameters({1.0, -1.0}, 0.0);
  auto g = m->input_gradient(std::vector<double>{0.0, 0.0}, Label::kBenign);
  CHECK(g[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(g[1] == doctest::Approx(-0.5).epsilon(1e-12));
}

TEST_CASE("tree families have no input gradient") {
  Dataset d = blobs(40, 2, 3);
  auto m = train(spec_of(Family::kDecisionTree), d);
  CHECK_THROWS_AS(m->input_gradient(d.x.row(0), d.y[0]),
                  GradientUndefinedError);
}

TEST_CASE("probability is undefined for SVM and KMeans") {
  Dataset d = blobs(40, 2, 4);
  auto svm = train(spec_of(Family::kSvm, {{"c", 1.0}}), d);
  CHECK_THROWS_AS(svm->predict_proba(d.x.row(0)), ProbabilityUndefinedError);
  auto km = train(spec_of(Family::kKMeans, {{"k", 2}}), d);
  CHECK_THROWS_AS(km->predict_proba(d.x.row(0)), ProbabilityUndefinedError);
}

TEST_CASE("gradient checks: analytic vs central finite differences") {
  Dataset d = blobs(60, 4, 5);
  std::mt19937_64 rng(17);
  std::normal_distribution<double> dist(0.0, 1.5);

  auto check_fd = [&](const Model& m, int points) {
    for (int p = 0; p < points; ++p) {
      std::vector<double> x(4);
      for (auto& v : x) v = dist(rng);
      Label y = rng() % 2 ? Label::kMalicious : Label::kBenign;
      auto analytic = m.input_gradient(x, y);

      // numeric gradient of the same loss the model reports
      auto loss = [&](std::span<const double> q) {
        double s = m.decision_score(q);
        double yv = y == Label::kMalicious ? 1.0 : 0.0;
        if (m.family() == Family::kLogisticRegression) {
          // logistic loss: log(1+e^s) - y*s
          return std::log1p(std::exp(-std::abs(s))) + std::max(s, 0.0) -
                 yv * s;
        }
        double ypm = 2.0 * yv - 1.0;
        return std::max(0.0, 1.0 - ypm * s);  // hinge
      };
      const double h = 1e-6;
      double norm_a = 0.0, norm_d = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) {
        auto xp = x, xm = x;
        xp[i] += h;
        xm[i] -= h;
        double fd = (loss(xp) - loss(xm)) / (2.0 * h);
        norm_a += analytic[i] * analytic[i];
        norm_d += (analytic[i] - fd) * (analytic[i] - fd);
      }
      double rel = std::sqrt(norm_d) /
                   std::max(std::sqrt(norm_a), 1e-8);
      CHECK(rel < 1e-4);
    }
  };

  auto lr = train(spec_of(Family::kLogisticRegression, {{"rate", 0.1}}), d);
  check_fd(*lr, 30);
  auto svm_rbf = train(
      spec_of(Family::kSvm, {{"c", 1.0}, {"kernel", 1}, {"gamma", 0.3}}), d);
  check_fd(*svm_rbf, 30);
}

TEST_CASE("hinge-inactive points have a zero gradient") {
  auto m = SvmModel::from_linear_parameters({2.0}, 0.0);
  // y=+1 at x=5: margin = 10 >= 1, inactive
  auto g = m->input_gradient(std::vector<double>{5.0}, Label::kMalicious);
  CHECK(g[0] == 0.0);
}

TEST_CASE("NB equidistant point with equal priors gives probability one half") {
  Dataset d = make_dataset({{0.0}, {0.2}, {-0.2}, {1.0}, {1.2}, {0.8}},
                           {0, 0, 0, 1, 1, 1});
  auto m = train(spec_of(Family::kNaiveBayes), d);
  CHECK(m->predict_proba(std::vector<double>{0.5}) ==
        doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("KNN with k=1 memorizes distinct training points") {
  Dataset d = blobs(30, 3, 9);
  auto m = train(spec_of(Family::kKnn, {{"k", 1}}), d);
  for (std::size_t i = 0; i < d.size(); ++i) {
    CHECK(m->predict(d.x.row(i)) == d.y[i]);
  }
}

TEST_CASE("KMeans on separated blobs recovers the labels by majority vote") {
  Dataset d = blobs(60, 2, 10, 4.0);
  auto m = train(spec_of(Family::kKMeans, {{"k", 2}}), d);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    correct += m->predict(d.x.row(i)) == d.y[i];
  }
  CHECK(correct == d.size());
}

TEST_CASE("forest probability is the tree vote fraction") {
  // Hand-assembled forest: two stumps vote malicious for x>0.5, one always
  // votes benign.
  nlohmann::json stump_pos = {
      {"feature", {0, -1, -1}},  {"threshold", {0.5, 0.0, 0.0}},
      {"left", {1, -1, -1}},     {"right", {2, -1, -1}},
      {"value", {0.0, 0.0, 1.0}}};
  nlohmann::json stump_neg = {
      {"feature", {-1}}, {"threshold", {0.0}}, {"left", {-1}},
      {"right", {-1}},   {"value", {0.0}}};
  nlohmann::json j = {
      {"version", 1},
      {"family", "RF"},
      {"hyperparameters", nlohmann::json::object()},
      {"seed", 0},
      {"schema_id", "t"},
      {"dimension", 1},
      {"train_time_s", 0.0},
      {"params",
       {{"trees", {stump_pos, stump_pos, stump_neg}}, {"feature_count", 1}}}};
  auto m = model_from_json(j);
  CHECK(m->predict_proba(std::vector<double>{1.0}) ==
        doctest::Approx(2.0 / 3.0));
  CHECK(m->predict(std::vector<double>{1.0}) == Label::kMalicious);
  CHECK(m->predict_proba(std::vector<double>{0.0}) == doctest::Approx(0.0));
}

TEST_CASE("every family fits the blob data and beats chance") {
  Dataset train_set = blobs(120, 4, 21);
  Dataset test_set = blobs(60, 4, 22);
  for (Family f : all_families()) {
    std::map<std::string, double> hyper;
    if (f == Family::kKnn) hyper["k"] = 3;
    if (f == Family::kKMeans) hyper["k"] = 2;
    auto m = train(spec_of(f, hyper), train_set);
    std::vector<Label> pred;
    for (std::size_t i = 0; i < test_set.size(); ++i) {
      pred.push_back(m->predict(test_set.x.row(i)));
    }
    Metrics metrics = compute_metrics(test_set.y, pred);
    CAPTURE(family_name(f));
    CHECK(metrics.accuracy > 0.8);
  }
}

TEST_CASE("training is deterministic given the seed") {
  Dataset d = blobs(80, 3, 33);
  for (Family f : {Family::kRandomForest, Family::kKMeans,
                   Family::kGradientBoosting, Family::kSvm}) {
    std::map<std::string, double> hyper;
    if (f == Family::kKMeans) hyper["k"] = 4;
    auto a = train(spec_of(f, hyper, 99), d);
    auto b = train(spec_of(f, hyper, 99), d);
    // identical fitted parameters; only the measured wall time may differ
    auto ja = a->to_json();
    auto jb = b->to_json();
    ja.erase("train_time_s");
    jb.erase("train_time_s");
    CHECK(ja == jb);
  }
}

TEST_CASE("models round-trip through JSON with identical predictions") {
  Dataset d = blobs(60, 3, 44);
  std::mt19937_64 rng(55);
  std::normal_distribution<double> dist(0.0, 2.0);
  for (Family f : all_families()) {
    std::map<std::string, double> hyper;
    if (f == Family::kKnn) hyper["k"] = 3;
    if (f == Family::kKMeans) hyper["k"] = 2;
    if (f == Family::kSvm) hyper["kernel"] = 1;
    auto m = train(spec_of(f, hyper), d);
    auto restored = model_from_json(m->to_json());
    for (int p = 0; p < 20; ++p) {
      std::vector<double> x(3);
      for (auto& v : x) v = dist(rng);
      CAPTURE(family_name(f));
      CHECK(m->decision_score(x) == restored->decision_score(x));
    }
  }
}

TEST_CASE("metrics: perfect, degenerate, and fixed fixtures") {
  std::vector<Label> truth(10, Label::kMalicious);
  Metrics perfect = compute_metrics(truth, truth);
  CHECK(perfect.accuracy == 1.0);
  CHECK(perfect.f1 == 1.0);

  // all-negative predictor on 1347 samples with 63 positives
  std::vector<Label> y(1347, Label::kBenign);
  for (int i = 0; i < 63; ++i) y[static_cast<std::size_t>(i * 21)] = Label::kMalicious;
  std::vector<Label> pred(1347, Label::kBenign);
  Metrics m = compute_metrics(y, pred);
  CHECK(m.accuracy == doctest::Approx(0.9532).epsilon(1e-4));
  CHECK(m.precision == 0.0);
  CHECK(m.recall == 0.0);
  CHECK(m.f1 == 0.0);

  // TP=59, FP=4, FN=4
  std::vector<Label> t2, p2;
  for (int i = 0; i < 59; ++i) { t2.push_back(Label::kMalicious); p2.push_back(Label::kMalicious); }
  for (int i = 0; i < 4; ++i) { t2.push_back(Label::kBenign); p2.push_back(Label::kMalicious); }
  for (int i = 0; i < 4; ++i) { t2.push_back(Label::kMalicious); p2.push_back(Label::kBenign); }
  for (int i = 0; i < 100; ++i) { t2.push_back(Label::kBenign); p2.push_back(Label::kBenign); }
  Metrics m2 = compute_metrics(t2, p2);
  CHECK(m2.precision == doctest::Approx(59.0 / 63.0));
  CHECK(m2.recall == doctest::Approx(59.0 / 63.0));
  CHECK(m2.f1 == doctest::Approx(59.0 / 63.0));

  CHECK_THROWS_AS(compute_metrics(truth, std::vector<Label>(3)),
                  LengthMismatchError);
}

TEST_CASE("metrics equal brute-force confusion arithmetic on random cases") {
  std::mt19937_64 rng(60);
  for (int it = 0; it < 1000; ++it) {
    std::size_t n = 1 + rng() % 50;
    std::vector<Label> t(n), p(n);
    for (std::size_t i = 0; i < n; ++i) {
      t[i] = rng() % 2 ? Label::kMalicious : Label::kBenign;
      p[i] = rng() % 2 ? Label::kMalicious : Label::kBenign;
    }
    Metrics m = compute_metrics(t, p);
    oracle::Confusion c = oracle::count_confusion(t, p);
    double acc = static_cast<double>(c.tp + c.tn) / static_cast<double>(n);
    double prec = c.tp + c.fp ? static_cast<double>(c.tp) / (c.tp + c.fp) : 0.0;
    double rec = c.tp + c.fn ? static_cast<double>(c.tp) / (c.tp + c.fn) : 0.0;
    double f1 = prec + rec > 0 ? 2 * prec * rec / (prec + rec) : 0.0;
    CHECK(m.accuracy == doctest::Approx(acc).epsilon(1e-12));
    CHECK(m.precision == doctest::Approx(prec).epsilon(1e-12));
    CHECK(m.recall == doctest::Approx(rec).epsilon(1e-12));
    CHECK(m.f1 == doctest::Approx(f1).epsilon(1e-12));
  }
}

TEST_CASE("grid combinations preserve declared order") {
  GridSpec grid{{{"a", {1, 2}}, {"b", {10, 20}}}};
  auto combos = grid.combinations();
  REQUIRE(combos.size() == 4);
  CHECK(combos[0].values.at("a") == 1);
  CHECK(combos[0].values.at("b") == 10);
  CHECK(combos[1].values.at("b") == 20);
  CHECK(combos[2].values.at("a") == 2);
}

TEST_CASE("stratified folds balance positives within one sample") {
  std::vector<Label> y(100, Label::kBenign);
  for (int i = 0; i < 10; ++i) y[static_cast<std::size_t>(i * 10)] = Label::kMalicious;
  auto folds = stratified_folds(y, 5, 77);
  std::vector<int> pos(5, 0), tot(5, 0);
  for (std::size_t i = 0; i < y.size(); ++i) {
    ++tot[folds[i]];
    if (y[i] == Label::kMalicious) ++pos[folds[i]];
  }
  for (int f = 0; f < 5; ++f) {
    CHECK(pos[f] == 2);
    CHECK(tot[f] == 20);
  }
  CHECK_THROWS_AS(stratified_folds(std::vector<Label>(3, Label::kBenign), 5, 0),
                  InsufficientClassSamplesError);
}

TEST_CASE("grid search picks the working combination over the degenerate one") {
  Dataset d = blobs(60, 2, 70);
  GridSpec grid{{{"rate", {0.0, 0.2}}, {"epochs", {200}}}};
  CvReport report =
      grid_search(Family::kLogisticRegression, grid, d, 5, 123);
  REQUIRE(report.entries.size() == 2);
  CHECK(report.best().spec.hyper.values.at("rate") == 0.2);
  CHECK(report.best().mean_f1 > report.entries[0].mean_f1);

  GridSpec single{{{"rate", {0.2}}}};
  CvReport one = grid_search(Family::kLogisticRegression, single, d, 5, 123);
  CHECK(one.best_index == 0);
}

TEST_CASE("grid search recomputes: best mean equals manual fold mean") {
  Dataset d = blobs(50, 2, 71);
  GridSpec grid{{{"max_depth", {2}}}};
  CvReport report = grid_search(Family::kDecisionTree, grid, d, 5, 321);
  // manual recomputation with the same fold assignment and seeds
  auto folds = stratified_folds(d.y, 5, derive_seed(321, "folds"));
  double total = 0.0;
  for (std::size_t f = 0; f < 5; ++f) {
    std::vector<std::size_t> tr, te;
    for (std::size_t i = 0; i < d.size(); ++i) {
      (folds[i] == f ? te : tr).push_back(i);
    }
    Dataset train_set = d.subset(tr), test_set = d.subset(te);
    ModelSpec spec;
    spec.family = Family::kDecisionTree;
    spec.hyper.values = {{"max_depth", 2}};
    spec.seed = derive_seed(321, "combo", 0);
    auto m = train(spec, train_set);
    std::vector<Label> pred;
    for (std::size_t i = 0; i < test_set.size(); ++i) {
      pred.push_back(m->predict(test_set.x.row(i)));
    }
    total += compute_metrics(test_set.y, pred).f1;
  }
  CHECK(report.best().mean_f1 == doctest::Approx(total / 5.0).epsilon(1e-12));
}

TEST_CASE("gini importance concentrates on the informative feature") {
  std::mt19937_64 rng(81);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Dataset d;
  d.schema_id = "imp";
  for (int i = 0; i < 200; ++i) {
    double signal = u(rng);
    d.x.push_row(std::vector<double>{signal, u(rng), u(rng)});
    d.y.push_back(signal > 0.5 ? Label::kMalicious : Label::kBenign);
  }
  auto rf = train(
      spec_of(Family::kRandomForest, {{"trees", 30}, {"max_features", 3}}), d);
  auto importance = gini_importance(*rf);
  REQUIRE(importance.size() == 3);
  double sum = importance[0] + importance[1] + importance[2];
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(importance[0] > 0.9);

  auto dt = train(spec_of(Family::kDecisionTree), d);
  CHECK_THROWS_AS(gini_importance(*dt), WrongFamilyError);
}

TEST_CASE("duplicated informative features share the importance mass") {
  std::mt19937_64 rng(82);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Dataset single, dup;
  single.schema_id = dup.schema_id = "imp";
  for (int i = 0; i < 300; ++i) {
    double signal = u(rng);
    double noise = u(rng);
    single.x.push_row(std::vector<double>{signal, noise});
    dup.x.push_row(std::vector<double>{signal, signal, noise});
    Label label = signal > 0.5 ? Label::kMalicious : Label::kBenign;
    single.y.push_back(label);
    dup.y.push_back(label);
  }
  auto imp_single = gini_importance(
      *train(spec_of(Family::kRandomForest, {{"trees", 40}}), single));
  auto imp_dup = gini_importance(
      *train(spec_of(Family::kRandomForest, {{"trees", 40}}), dup));
  CHECK(imp_dup[0] + imp_dup[1] ==
        doctest::Approx(imp_single[0]).epsilon(0.1));
}
