#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "magescan/classifiers.hpp"
#include "magescan/features.hpp"

namespace magescan::adv {

using ml::Model;
using ml::ModelPtr;
using ml::ModelSpec;

enum class AttackKind { kFgsm, kPgd, kBoundary, kHopSkipJump, kA2pm };

const char* attack_name(AttackKind kind);
AttackKind attack_from_name(const std::string& name);

struct AttackSpec {
  AttackKind kind = AttackKind::kFgsm;
  double epsilon = 0.1;  // L-inf budget in feature-scaled units
  double alpha = 0.02;   // PGD step
  int iters = 40;
  std::uint64_t seed = 0;
};

// Gradient attacks need input gradients (LR, SVM); KMeans is only attacked
// by A2PM; everything else accepts the decision-based attacks.
bool attack_applicable(AttackKind kind, ml::Family family);

// Keeps perturbed vectors inside the feature domain: positions clamp to
// [0,1] unless the original carries the -1 absence sentinel (then frozen),
// prevalence and the automaton feature clamp to [0,1], counts clamp to >= 0,
// and binary features are frozen.
class FeatureValidity {
 public:
  static FeatureValidity unconstrained(std::size_t dim);
  static FeatureValidity for_schema(const FeatureSchema& schema);

  void clamp(std::span<double> x_adv, std::span<const double> x_orig) const;
  std::size_t dimension() const { return rules_.size(); }

 private:
  struct Rule {
    double lo = -1e308;
    double hi = 1e308;
    bool frozen = false;
    bool sentinel_frozen = false;  // frozen when the original is -1.0
  };
  std::vector<Rule> rules_;
};

// Per-feature [lo, hi] box for the random draws of the decision-based
// attacks, fitted from the data under attack.
struct FeatureBounds {
  std::vector<double> lo;
  std::vector<double> hi;

  static FeatureBounds from(const Dataset& data);
};

// x + eps * sign(grad loss), clamped valid. eps = 0 returns x unchanged.
std::vector<double> fgsm(const Model& model, std::span<const double> x,
                         Label y, double eps, const FeatureValidity& validity);

// Iterated gradient ascent with per-step projection onto the L-inf ball of
// radius eps around x. pgd(iters=1, alpha=eps) equals fgsm.
std::vector<double> pgd(const Model& model, std::span<const double> x, Label y,
                        double eps, double alpha, int iters,
                        const FeatureValidity& validity);

// Bisection between a correctly classified point and an adversarial point;
// returns the adversarial-side endpoint once the gap closes. Exposed for
// direct testing; hop_skip_jump uses it internally.
std::vector<double> bisect_to_boundary(const Model& model,
                                       std::span<const double> x_clean,
                                       std::span<const double> x_adv, Label y,
                                       int steps);

// Decision-based attacks. Both initialize from random in-bounds draws
// (up to 1000; throws InitFailureError when none misclassifies) and return
// the closest misclassified point found.
std::vector<double> boundary_attack(const Model& model,
                                    std::span<const double> x, Label y,
                                    int iters, std::uint64_t seed,
                                    const FeatureBounds& bounds);
std::vector<double> hop_skip_jump(const Model& model,
                                  std::span<const double> x, Label y,
                                  int iters, std::uint64_t seed,
                                  const FeatureBounds& bounds);

// Per-class validity envelope for A2PM: per-feature observed intervals plus
// categorical groups (binary features; per-behavior presence structure when
// a schema is given).
class A2pmPatterns {
 public:
  static A2pmPatterns fit(const Dataset& data,
                          const FeatureSchema* schema = nullptr);

  bool within_envelope(std::span<const double> x, Label cls) const;
  std::size_t dimension() const;

 private:
  friend std::optional<std::vector<double>> a2pm(const Model&,
                                                 std::span<const double>,
                                                 Label, const A2pmPatterns&,
                                                 int, std::uint64_t);
  struct Interval {
    double lo = 0.0, hi = 0.0;
    bool seen = false;
  };
  struct BehaviorGroup {
    static constexpr std::size_t kUnset = static_cast<std::size_t>(-1);
    std::size_t first_idx = kUnset;
    std::size_t last_idx = kUnset;
    std::size_t prev_idx = kUnset;
    // per class: observed presence modes and present-mode intervals
    bool absent_seen[2] = {false, false};
    bool present_seen[2] = {false, false};
    Interval first[2], last[2], prev[2];
  };
  struct BinaryGroup {
    std::size_t idx;
    bool value_seen[2][2] = {{false, false}, {false, false}};  // [class][value]
  };

  std::vector<Interval> intervals_[2];  // per class, per feature
  std::vector<bool> grouped_;           // feature handled by a group
  std::vector<BehaviorGroup> behavior_groups_;
  std::vector<BinaryGroup> binary_groups_;
};

// Perturbs x inside its own class envelope until the prediction flips;
// nullopt when no flip is found within iters.
std::optional<std::vector<double>> a2pm(const Model& model,
                                        std::span<const double> x, Label y,
                                        const A2pmPatterns& patterns,
                                        int iters, std::uint64_t seed);

struct AdversarialSample {
  std::vector<double> original;
  std::vector<double> adversarial;
  Label y = Label::kBenign;
  bool success = false;  // prediction flipped
};
using AdversarialSet = std::vector<AdversarialSample>;

// Everything an attack needs besides the model and the sample, fitted from
// a reference dataset (training set for augmentation, test set bounds for
// evaluation).
struct AttackContext {
  FeatureValidity validity;
  FeatureBounds bounds;
  std::optional<A2pmPatterns> patterns;

  static AttackContext fit(const Dataset& reference,
                           const FeatureSchema* schema = nullptr);
};

// Runs one attack over every row. Decision-based init failures and A2PM
// misses keep the original vector with success = false.
AdversarialSet generate_adversarial(const Model& model, const Dataset& data,
                                    const AttackSpec& attack,
                                    const AttackContext& ctx);

// Fit, augment with adversarial samples from every configured attack
// (labels keep their original values), refit once.
ModelPtr adversarial_training(const ModelSpec& spec, const Dataset& data,
                              const std::vector<AttackSpec>& attacks,
                              const FeatureSchema* schema = nullptr);

// Perturbs every test row (failures keep the original) and scores the
// predictions against the true labels.
ml::Metrics evaluate_under_attack(const Model& model, const Dataset& test,
                                  const AttackSpec& attack,
                                  const AttackContext& ctx);

}  // namespace magescan::adv
