#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "magescan/classifiers.hpp"
#include "magescan/dfa.hpp"

namespace magescan::expl {

using ml::Model;

struct Contribution {
  std::string name;
  double phi = 0.0;
  double value = 0.0;
};

struct Attribution {
  double base_value = 0.0;  // expected score over the background point
  std::vector<Contribution> contributions;
  double final_score = 0.0;
  std::optional<double> final_probability;
};

// Exact Shapley values of the decision score over feature coalitions;
// absent features are replaced by background column means. Limited to
// <= 14 features (full 2^n enumeration). Feature names label the output.
Attribution shapley_exact(const Model& model, std::span<const double> x,
                          const Dataset& background,
                          const std::vector<std::string>& names);

// Permutation-sampling estimator against the same background baseline.
// Deterministic given seed; n_samples >= 100. Any residual between
// base + sum(phi) and the final score is redistributed proportionally to
// |phi| so efficiency holds.
Attribution shapley_sampled(const Model& model, std::span<const double> x,
                            const Dataset& background, std::size_t n_samples,
                            std::uint64_t seed,
                            const std::vector<std::string>& names);

// Plain-text attribution report:
//   Base prediction (expected value): -4.0197
//   Feature contributions:
//   - Automaton Classification: decreased the prediction by 0.8394 (value: 1.0)
//   Final prediction: 0.9966 (probability of being malicious)
std::string render_shap_report(const Attribution& attribution);

// Schema names carry no spaces; the report spellings do. Maps
// "AutomatonClassification" -> "Automaton Classification" and "Inline" ->
// "inline"; other names pass through.
std::string display_feature_name(const std::string& schema_name);

struct Verdict {
  Label label = Label::kBenign;
  std::optional<double> probability;
  double score = 0.0;
};

struct ExplanationBundle {
  Attribution attribution;  // contributions sorted by |phi| descending
  DfaResult dfa;
  Verdict verdict;
};

ExplanationBundle build_bundle(Attribution attribution, DfaResult dfa_result,
                               Verdict verdict);

struct LlmEndpointConfig {
  std::string base_url;  // scheme://host[:port]
  std::string path = "/v1/chat/completions";
  std::string model;
  double timeout_s = 10.0;
  std::string token_env = "MAGESCAN_LLM_TOKEN";
};

// Three-paragraph narrative. Without a config (or on any transport/HTTP
// error, which is logged to stderr) a deterministic template is used;
// malicious verdicts end with a recommendation for human review.
std::string narrate(const ExplanationBundle& bundle,
                    const std::optional<LlmEndpointConfig>& config = {});

// Combined machine-readable artifact.
nlohmann::json bundle_json(const ExplanationBundle& bundle,
                           const std::string& narrative);

}  // namespace magescan::expl
