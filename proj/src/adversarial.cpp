#include "magescan/adversarial.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>

#include "magescan/kernels.hpp"
#include "magescan/util.hpp"

namespace magescan::adv {

namespace {

constexpr int kInitDraws = 1000;

double l2(std::span<const double> a, std::span<const double> b) {
  return std::sqrt(kern::squared_distance(a, b));
}

std::vector<double> random_point(const FeatureBounds& bounds,
                                 std::mt19937_64& rng) {
  std::vector<double> x(bounds.lo.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (bounds.lo[i] == bounds.hi[i]) {
      x[i] = bounds.lo[i];
    } else {
      std::uniform_real_distribution<double> u(bounds.lo[i], bounds.hi[i]);
      x[i] = u(rng);
    }
  }
  return x;
}

void clamp_bounds(std::vector<double>& x, const FeatureBounds& bounds) {
  kern::clamp_box(x, bounds.lo, bounds.hi);
}

std::vector<double> find_adversarial_seed(const Model& model,
                                          const FeatureBounds& bounds, Label y,
                                          std::mt19937_64& rng) {
  for (int i = 0; i < kInitDraws; ++i) {
    std::vector<double> z = random_point(bounds, rng);
    if (model.predict(z) != y) return z;
  }
  throw InitFailureError("no misclassified init point found in " +
                         std::to_string(kInitDraws) + " draws");
}

}  // namespace

const char* attack_name(AttackKind kind) {
  switch (kind) {
    case AttackKind::kFgsm:
      return "FGSM";
    case AttackKind::kPgd:
      return "PGD";
    case AttackKind::kBoundary:
      return "Boundary Attack";
    case AttackKind::kHopSkipJump:
      return "HopSkipJump";
    case AttackKind::kA2pm:
      return "A2PM";
  }
  return "FGSM";
}

AttackKind attack_from_name(const std::string& name) {
  for (AttackKind kind :
       {AttackKind::kFgsm, AttackKind::kPgd, AttackKind::kBoundary,
        AttackKind::kHopSkipJump, AttackKind::kA2pm}) {
    if (name == attack_name(kind)) return kind;
  }
  throw InvalidArgumentError("unknown attack \"" + name + "\"");
}

bool attack_applicable(AttackKind kind, ml::Family family) {
  switch (kind) {
    case AttackKind::kFgsm:
    case AttackKind::kPgd:
      return family == ml::Family::kLogisticRegression ||
             family == ml::Family::kSvm;
    case AttackKind::kBoundary:
    case AttackKind::kHopSkipJump:
      return family != ml::Family::kKMeans;
    case AttackKind::kA2pm:
      return true;
  }
  return false;
}

// ---- feature validity -------------------------------------------------------

FeatureValidity FeatureValidity::unconstrained(std::size_t dim) {
  FeatureValidity v;
  v.rules_.resize(dim);
  return v;
}

FeatureValidity FeatureValidity::for_schema(const FeatureSchema& schema) {
  FeatureValidity v;
  v.rules_.resize(schema.dimension());
  for (std::size_t i = 0; i < schema.dimension(); ++i) {
    Rule& r = v.rules_[i];
    switch (schema.kind(i)) {
      case FeatureKind::kFirstPosition:
      case FeatureKind::kLastPosition:
        r.lo = 0.0;
        r.hi = 1.0;
        r.sentinel_frozen = true;
        break;
      case FeatureKind::kPrevalence:
      case FeatureKind::kAutomaton:
        r.lo = 0.0;
        r.hi = 1.0;
        break;
      case FeatureKind::kSeqLength:
      case FeatureKind::kAvgClicks:
        r.lo = 0.0;
        break;
      case FeatureKind::kInline:
        r.frozen = true;
        break;
    }
  }
  return v;
}

void FeatureValidity::clamp(std::span<double> x_adv,
                            std::span<const double> x_orig) const {
  for (std::size_t i = 0; i < rules_.size(); ++i) {
    const Rule& r = rules_[i];
    if (r.frozen || (r.sentinel_frozen && x_orig[i] == -1.0)) {
      x_adv[i] = x_orig[i];
      continue;
    }
    x_adv[i] = std::min(std::max(x_adv[i], r.lo), r.hi);
  }
}

FeatureBounds FeatureBounds::from(const Dataset& data) {
  if (data.size() == 0) {
    throw InvalidArgumentError("cannot fit bounds on an empty dataset");
  }
  FeatureBounds b;
  b.lo.assign(data.dimension(), 0.0);
  b.hi.assign(data.dimension(), 0.0);
  for (std::size_t c = 0; c < data.dimension(); ++c) {
    b.lo[c] = b.hi[c] = data.x.at(0, c);
  }
  for (std::size_t r = 1; r < data.size(); ++r) {
    auto row = data.x.row(r);
    for (std::size_t c = 0; c < data.dimension(); ++c) {
      b.lo[c] = std::min(b.lo[c], row[c]);
      b.hi[c] = std::max(b.hi[c], row[c]);
    }
  }
  return b;
}

// ---- gradient attacks -------------------------------------------------------

std::vector<double> fgsm(const Model& model, std::span<const double> x,
                         Label y, double eps, const FeatureValidity& validity) {
  std::vector<double> grad = model.input_gradient(x, y);
  std::vector<double> adv(x.begin(), x.end());
  for (std::size_t i = 0; i < adv.size(); ++i) {
    double s = grad[i] > 0.0 ? 1.0 : (grad[i] < 0.0 ? -1.0 : 0.0);
    adv[i] += eps * s;
  }
  validity.clamp(adv, x);
  return adv;
}

std::vector<double> pgd(const Model& model, std::span<const double> x, Label y,
                        double eps, double alpha, int iters,
                        const FeatureValidity& validity) {
  std::vector<double> adv(x.begin(), x.end());
  for (int it = 0; it < iters; ++it) {
    std::vector<double> grad = model.input_gradient(adv, y);
    for (std::size_t i = 0; i < adv.size(); ++i) {
      double s = grad[i] > 0.0 ? 1.0 : (grad[i] < 0.0 ? -1.0 : 0.0);
      adv[i] += alpha * s;
      // L-inf projection onto the eps-ball around x
      adv[i] = std::min(std::max(adv[i], x[i] - eps), x[i] + eps);
    }
    validity.clamp(adv, x);
  }
  return adv;
}

// ---- decision-based attacks -------------------------------------------------

std::vector<double> bisect_to_boundary(const Model& model,
                                       std::span<const double> x_clean,
                                       std::span<const double> x_adv, Label y,
                                       int steps) {
  std::vector<double> lo(x_clean.begin(), x_clean.end());  // predicted y
  std::vector<double> hi(x_adv.begin(), x_adv.end());      // predicted != y
  std::vector<double> mid(lo.size());
  for (int s = 0; s < steps; ++s) {
    for (std::size_t i = 0; i < mid.size(); ++i) {
      mid[i] = lo[i] + (hi[i] - lo[i]) / 2.0;
    }
    if (model.predict(mid) != y) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

std::vector<double> boundary_attack(const Model& model,
                                    std::span<const double> x, Label y,
                                    int iters, std::uint64_t seed,
                                    const FeatureBounds& bounds) {
  if (model.predict(x) != y) return {x.begin(), x.end()};
  std::mt19937_64 rng(seed);
  std::vector<double> best = find_adversarial_seed(model, bounds, y, rng);
  double best_dist = l2(best, x);

  std::normal_distribution<double> gauss(0.0, 1.0);
  double sigma = 0.1;
  double contraction = 0.1;
  for (int it = 0; it < iters; ++it) {
    std::vector<double> direction(best.size());
    for (std::size_t i = 0; i < best.size(); ++i) {
      direction[i] = x[i] - best[i];
    }
    double dist = std::sqrt(kern::dot(direction, direction));
    if (dist <= 1e-12) break;

    // Orthogonal wiggle along the sphere around x, then a contraction step
    // toward x; accept only closer misclassified proposals.
    std::vector<double> eta(best.size());
    for (double& v : eta) v = gauss(rng);
    double proj = kern::dot(eta, direction) / (dist * dist);
    kern::axpy(-proj, direction, eta);
    double eta_norm = std::sqrt(kern::dot(eta, eta));
    std::vector<double> candidate = best;
    if (eta_norm > 1e-12) {
      kern::axpy(sigma * dist / eta_norm, eta, candidate);
    }
    for (std::size_t i = 0; i < candidate.size(); ++i) {
      candidate[i] += contraction * (x[i] - candidate[i]);
    }
    clamp_bounds(candidate, bounds);

    double cand_dist = l2(candidate, x);
    if (cand_dist < best_dist && model.predict(candidate) != y) {
      best = std::move(candidate);
      best_dist = cand_dist;
      contraction = std::min(0.5, contraction * 1.2);
      sigma = std::min(0.5, sigma * 1.1);
    } else {
      contraction = std::max(1e-4, contraction * 0.7);
      sigma = std::max(1e-4, sigma * 0.9);
    }
  }
  return best;
}

std::vector<double> hop_skip_jump(const Model& model,
                                  std::span<const double> x, Label y,
                                  int iters, std::uint64_t seed,
                                  const FeatureBounds& bounds) {
  if (model.predict(x) != y) return {x.begin(), x.end()};
  std::mt19937_64 rng(seed);
  std::vector<double> current = find_adversarial_seed(model, bounds, y, rng);
  std::vector<double> best = current;
  double best_dist = l2(best, x);

  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int t = 1; t <= iters; ++t) {
    // Project onto the boundary between the clean point and the current
    // adversarial point.
    std::vector<double> zb = bisect_to_boundary(model, x, current, y, 25);
    double zb_dist = l2(zb, x);
    if (zb_dist < best_dist) {
      best = zb;
      best_dist = zb_dist;
    }

    // Monte-Carlo gradient-direction estimate from decision flips of small
    // perturbations around the boundary point.
    int n_draws = std::min(60, 20 + 10 * t);
    double delta = std::max(1e-6, 0.01 * zb_dist);
    std::vector<std::vector<double>> draws;
    std::vector<double> phi;
    double phi_mean = 0.0;
    for (int b = 0; b < n_draws; ++b) {
      std::vector<double> u(zb.size());
      for (double& v : u) v = gauss(rng);
      double norm = std::sqrt(kern::dot(u, u));
      if (norm <= 1e-12) continue;
      kern::scale(1.0 / norm, u);
      std::vector<double> probe = zb;
      kern::axpy(delta, u, probe);
      double indicator = model.predict(probe) != y ? 1.0 : -1.0;
      draws.push_back(std::move(u));
      phi.push_back(indicator);
      phi_mean += indicator;
    }
    if (draws.empty()) continue;
    phi_mean /= static_cast<double>(draws.size());
    std::vector<double> grad(zb.size(), 0.0);
    for (std::size_t b = 0; b < draws.size(); ++b) {
      kern::axpy(phi[b] - phi_mean, draws[b], grad);
    }
    double grad_norm = std::sqrt(kern::dot(grad, grad));
    if (grad_norm <= 1e-12) {
      current = zb;
      continue;
    }
    kern::scale(1.0 / grad_norm, grad);

    // Geometric step-size search along the estimated adversarial direction.
    double xi = zb_dist / std::sqrt(static_cast<double>(t));
    std::vector<double> stepped;
    bool found = false;
    for (int attempt = 0; attempt < 12 && xi > 1e-9; ++attempt) {
      stepped = zb;
      kern::axpy(xi, grad, stepped);
      clamp_bounds(stepped, bounds);
      if (model.predict(stepped) != y) {
        found = true;
        break;
      }
      xi /= 2.0;
    }
    if (found) {
      current = std::move(stepped);
      double dist = l2(current, x);
      if (dist < best_dist) {
        best = current;
        best_dist = dist;
      }
    } else {
      current = zb;
    }
  }
  return best;
}

// ---- A2PM ---------------------------------------------------------------------

A2pmPatterns A2pmPatterns::fit(const Dataset& data,
                               const FeatureSchema* schema) {
  if (data.size() == 0) {
    throw InvalidArgumentError("cannot fit A2PM patterns on an empty dataset");
  }
  A2pmPatterns p;
  const std::size_t d = data.dimension();
  p.intervals_[0].resize(d);
  p.intervals_[1].resize(d);
  p.grouped_.assign(d, false);
  for (std::size_t r = 0; r < data.size(); ++r) {
    int cls = data.y[r] == Label::kMalicious ? 1 : 0;
    auto row = data.x.row(r);
    for (std::size_t c = 0; c < d; ++c) {
      Interval& iv = p.intervals_[cls][c];
      if (!iv.seen) {
        iv.lo = iv.hi = row[c];
        iv.seen = true;
      } else {
        iv.lo = std::min(iv.lo, row[c]);
        iv.hi = std::max(iv.hi, row[c]);
      }
    }
  }
  // A class absent from the data keeps empty intervals; perturbations of
  // that class then have no freedom at all.
  for (int cls = 0; cls < 2; ++cls) {
    for (std::size_t c = 0; c < d; ++c) {
      if (!p.intervals_[cls][c].seen) {
        p.intervals_[cls][c].lo = p.intervals_[cls][c].hi = 0.0;
      }
    }
  }

  if (!schema) return p;

  // Binary groups (Inline) and per-behavior presence groups.
  std::map<int, BehaviorGroup> by_behavior;
  for (std::size_t c = 0; c < schema->dimension(); ++c) {
    switch (schema->kind(c)) {
      case FeatureKind::kInline: {
        BinaryGroup g;
        g.idx = c;
        for (std::size_t r = 0; r < data.size(); ++r) {
          int cls = data.y[r] == Label::kMalicious ? 1 : 0;
          int value = data.x.at(r, c) != 0.0 ? 1 : 0;
          g.value_seen[cls][value] = true;
        }
        p.grouped_[c] = true;
        p.binary_groups_.push_back(g);
        break;
      }
      case FeatureKind::kFirstPosition:
        by_behavior[schema->behavior_index(c)].first_idx = c;
        break;
      case FeatureKind::kLastPosition:
        by_behavior[schema->behavior_index(c)].last_idx = c;
        break;
      case FeatureKind::kPrevalence:
        by_behavior[schema->behavior_index(c)].prev_idx = c;
        break;
      default:
        break;
    }
  }
  // A behavior group needs all three columns; selection may have dropped
  // some, in which case the surviving columns stay plain numeric features.
  for (auto& [behavior, group] : by_behavior) {
    (void)behavior;
    if (group.first_idx == BehaviorGroup::kUnset ||
        group.last_idx == BehaviorGroup::kUnset ||
        group.prev_idx == BehaviorGroup::kUnset) {
      continue;
    }
    for (std::size_t r = 0; r < data.size(); ++r) {
      int cls = data.y[r] == Label::kMalicious ? 1 : 0;
      double first = data.x.at(r, group.first_idx);
      if (first == -1.0) {
        group.absent_seen[cls] = true;
        continue;
      }
      group.present_seen[cls] = true;
      auto update = [](Interval& iv, double v) {
        if (!iv.seen) {
          iv.lo = iv.hi = v;
          iv.seen = true;
        } else {
          iv.lo = std::min(iv.lo, v);
          iv.hi = std::max(iv.hi, v);
        }
      };
      update(group.first[cls], first);
      update(group.last[cls], data.x.at(r, group.last_idx));
      update(group.prev[cls], data.x.at(r, group.prev_idx));
    }
    p.grouped_[group.first_idx] = true;
    p.grouped_[group.last_idx] = true;
    p.grouped_[group.prev_idx] = true;
    p.behavior_groups_.push_back(group);
  }
  return p;
}

std::size_t A2pmPatterns::dimension() const { return grouped_.size(); }

bool A2pmPatterns::within_envelope(std::span<const double> x,
                                   Label label) const {
  const int cls = label == Label::kMalicious ? 1 : 0;
  constexpr double kTol = 1e-9;
  for (std::size_t c = 0; c < grouped_.size(); ++c) {
    if (grouped_[c]) continue;
    const Interval& iv = intervals_[cls][c];
    if (x[c] < iv.lo - kTol || x[c] > iv.hi + kTol) return false;
  }
  for (const BinaryGroup& g : binary_groups_) {
    int value = x[g.idx] != 0.0 ? 1 : 0;
    if (x[g.idx] != 0.0 && x[g.idx] != 1.0) return false;
    if (!g.value_seen[cls][value]) return false;
  }
  for (const BehaviorGroup& g : behavior_groups_) {
    if (x[g.first_idx] == -1.0) {
      if (!g.absent_seen[cls]) return false;
      if (x[g.last_idx] != -1.0) return false;
      if (std::abs(x[g.prev_idx]) > kTol) return false;
    } else {
      if (!g.present_seen[cls]) return false;
      auto inside = [&](const Interval& iv, double v) {
        return v >= iv.lo - kTol && v <= iv.hi + kTol;
      };
      if (!inside(g.first[cls], x[g.first_idx])) return false;
      if (!inside(g.last[cls], x[g.last_idx])) return false;
      if (!inside(g.prev[cls], x[g.prev_idx])) return false;
    }
  }
  return true;
}

std::optional<std::vector<double>> a2pm(const Model& model,
                                        std::span<const double> x, Label y,
                                        const A2pmPatterns& patterns,
                                        int iters, std::uint64_t seed) {
  const int cls = y == Label::kMalicious ? 1 : 0;
  std::vector<double> current(x.begin(), x.end());
  if (model.predict(current) != y) return current;

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<std::size_t> numeric;
  for (std::size_t c = 0; c < patterns.grouped_.size(); ++c) {
    if (!patterns.grouped_[c]) numeric.push_back(c);
  }

  // Step scale escalates while the prediction refuses to flip; at 1.0 a
  // move lands exactly on its random in-envelope target.
  double scale = 0.3;
  for (int it = 0; it < iters; ++it) {
    bool moved_any = false;
    for (std::size_t c : numeric) {
      if (unit(rng) > 0.5) continue;
      const auto& iv = patterns.intervals_[cls][c];
      if (iv.hi <= iv.lo) continue;
      double target = iv.lo + unit(rng) * (iv.hi - iv.lo);
      current[c] += scale * (target - current[c]);
      current[c] = std::min(std::max(current[c], iv.lo), iv.hi);
      moved_any = true;
    }
    // Occasionally swap a categorical group to another observed combination.
    if (unit(rng) < 0.3) {
      std::size_t total = patterns.binary_groups_.size() +
                          patterns.behavior_groups_.size();
      if (total > 0) {
        std::uniform_int_distribution<std::size_t> pick(0, total - 1);
        std::size_t g = pick(rng);
        if (g < patterns.binary_groups_.size()) {
          const auto& group = patterns.binary_groups_[g];
          int value = current[group.idx] != 0.0 ? 1 : 0;
          int other = 1 - value;
          if (group.value_seen[cls][other]) {
            current[group.idx] = static_cast<double>(other);
            moved_any = true;
          }
        } else {
          const auto& group =
              patterns.behavior_groups_[g - patterns.binary_groups_.size()];
          bool present = current[group.first_idx] != -1.0;
          if (present && group.absent_seen[cls]) {
            current[group.first_idx] = -1.0;
            current[group.last_idx] = -1.0;
            current[group.prev_idx] = 0.0;
            moved_any = true;
          } else if (!present && group.present_seen[cls]) {
            auto draw = [&](const A2pmPatterns::Interval& iv) {
              return iv.hi > iv.lo ? iv.lo + unit(rng) * (iv.hi - iv.lo)
                                   : iv.lo;
            };
            double first = draw(group.first[cls]);
            double last = draw(group.last[cls]);
            if (last < first) std::swap(last, first);
            current[group.first_idx] = first;
            current[group.last_idx] = std::max(last, first);
            current[group.prev_idx] = draw(group.prev[cls]);
            moved_any = true;
          }
        }
      }
    }
    if (moved_any && model.predict(current) != y) return current;
    scale = std::min(1.0, scale * 1.25);
  }
  return std::nullopt;
}

// ---- orchestration ------------------------------------------------------------

AttackContext AttackContext::fit(const Dataset& reference,
                                 const FeatureSchema* schema) {
  AttackContext ctx;
  ctx.validity = schema ? FeatureValidity::for_schema(*schema)
                        : FeatureValidity::unconstrained(reference.dimension());
  ctx.bounds = FeatureBounds::from(reference);
  ctx.patterns = A2pmPatterns::fit(reference, schema);
  return ctx;
}

AdversarialSet generate_adversarial(const Model& model, const Dataset& data,
                                    const AttackSpec& attack,
                                    const AttackContext& ctx) {
  if (!attack_applicable(attack.kind, model.family())) {
    throw AttackNotApplicableError(std::string(attack_name(attack.kind)) +
                                   " is not applicable to " +
                                   family_name(model.family()));
  }
  AdversarialSet out;
  out.reserve(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    auto row = data.x.row(i);
    AdversarialSample sample;
    sample.original.assign(row.begin(), row.end());
    sample.y = data.y[i];
    std::uint64_t sample_seed = derive_seed(attack.seed, "sample", i);
    switch (attack.kind) {
      case AttackKind::kFgsm:
        sample.adversarial =
            fgsm(model, row, data.y[i], attack.epsilon, ctx.validity);
        break;
      case AttackKind::kPgd:
        sample.adversarial = pgd(model, row, data.y[i], attack.epsilon,
                                 attack.alpha, attack.iters, ctx.validity);
        break;
      case AttackKind::kBoundary:
        try {
          sample.adversarial = boundary_attack(model, row, data.y[i],
                                               attack.iters, sample_seed,
                                               ctx.bounds);
        } catch (const InitFailureError&) {
          sample.adversarial = sample.original;
        }
        break;
      case AttackKind::kHopSkipJump:
        try {
          sample.adversarial = hop_skip_jump(model, row, data.y[i],
                                             attack.iters, sample_seed,
                                             ctx.bounds);
        } catch (const InitFailureError&) {
          sample.adversarial = sample.original;
        }
        break;
      case AttackKind::kA2pm: {
        auto result = a2pm(model, row, data.y[i], *ctx.patterns, attack.iters,
                           sample_seed);
        sample.adversarial = result ? *result : sample.original;
        break;
      }
    }
    sample.success = model.predict(sample.adversarial) != data.y[i];
    out.push_back(std::move(sample));
  }
  return out;
}

ModelPtr adversarial_training(const ModelSpec& spec, const Dataset& data,
                              const std::vector<AttackSpec>& attacks,
                              const FeatureSchema* schema) {
  ModelPtr provisional = ml::train(spec, data);
  if (attacks.empty()) return provisional;

  AttackContext ctx = AttackContext::fit(data, schema);
  Dataset augmented = data;
  for (const AttackSpec& attack : attacks) {
    AdversarialSet samples =
        generate_adversarial(*provisional, data, attack, ctx);
    for (const AdversarialSample& s : samples) {
      bool keep = attack.kind == AttackKind::kFgsm ||
                  attack.kind == AttackKind::kPgd
                      ? true      // gradient attacks always yield a sample
                      : s.success;  // search attacks only on success
      if (keep) {
        augmented.x.push_row(s.adversarial);
        augmented.y.push_back(s.y);
      }
    }
  }
  return ml::train(spec, augmented);
}

ml::Metrics evaluate_under_attack(const Model& model, const Dataset& test,
                                  const AttackSpec& attack,
                                  const AttackContext& ctx) {
  AdversarialSet samples = generate_adversarial(model, test, attack, ctx);
  auto start = std::chrono::steady_clock::now();
  std::vector<Label> pred(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    pred[i] = model.predict(samples[i].adversarial);
  }
  auto end = std::chrono::steady_clock::now();
  return ml::compute_metrics(test.y, pred, model.train_time_s(),
                             std::chrono::duration<double>(end - start).count());
}

}  // namespace magescan::adv
