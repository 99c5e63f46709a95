#include "magescan/explanation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <iostream>
#include <random>

#include <httplib.h>

#include "magescan/util.hpp"

namespace magescan::expl {

namespace {

std::vector<double> background_means(const Dataset& background,
                                     std::size_t dim) {
  if (background.size() == 0) {
    throw InvalidArgumentError("background dataset is empty");
  }
  if (background.dimension() != dim) {
    throw SchemaMismatchError("background dimension " +
                              std::to_string(background.dimension()) +
                              " does not match input dimension " +
                              std::to_string(dim));
  }
  std::vector<double> m(dim, 0.0);
  for (std::size_t r = 0; r < background.size(); ++r) {
    auto row = background.x.row(r);
    for (std::size_t c = 0; c < dim; ++c) m[c] += row[c];
  }
  for (double& v : m) v /= static_cast<double>(background.size());
  return m;
}

double score_of(const Model& model, std::span<const double> x) {
  return model.decision_score(x);
}

std::optional<double> probability_of(const Model& model,
                                     std::span<const double> x) {
  try {
    return model.predict_proba(x);
  } catch (const ProbabilityUndefinedError&) {
    return std::nullopt;
  }
}

void check_names(const std::vector<std::string>& names, std::size_t dim) {
  if (names.size() != dim) {
    throw SchemaMismatchError("got " + std::to_string(names.size()) +
                              " feature names for dimension " +
                              std::to_string(dim));
  }
}

std::string fmt_feature_value(const std::string& name, double v) {
  if (name == "inline" || name == "Inline") {
    return v != 0.0 ? "True" : "False";
  }
  if (v == std::floor(v) && std::abs(v) < 1e15) {
    return fmt_fixed(v, 1);
  }
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

}  // namespace

Attribution shapley_exact(const Model& model, std::span<const double> x,
                          const Dataset& background,
                          const std::vector<std::string>& names) {
  const std::size_t n = x.size();
  if (n > 14) {
    throw TooManyFeaturesError(
        "exact Shapley enumerates 2^n coalitions; got n = " +
        std::to_string(n) + " (max 14)");
  }
  check_names(names, n);
  std::vector<double> means = background_means(background, n);

  const std::size_t total = std::size_t{1} << n;
  std::vector<double> value(total);
  std::vector<double> z(n);
  for (std::size_t mask = 0; mask < total; ++mask) {
    for (std::size_t i = 0; i < n; ++i) {
      z[i] = (mask >> i) & 1 ? x[i] : means[i];
    }
    value[mask] = score_of(model, z);
  }

  // w(s) = s! (n-1-s)! / n!, exact in double for n <= 14.
  std::vector<double> fact(n + 1, 1.0);
  for (std::size_t i = 1; i <= n; ++i) {
    fact[i] = fact[i - 1] * static_cast<double>(i);
  }
  std::vector<double> coalition_weight(n);
  for (std::size_t s = 0; s < n; ++s) {
    coalition_weight[s] = fact[s] * fact[n - 1 - s] / fact[n];
  }

  Attribution out;
  out.base_value = value[0];
  out.final_score = value[total - 1];
  out.final_probability = probability_of(model, x);
  out.contributions.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.contributions[i] = {names[i], 0.0, x[i]};
  }
  for (std::size_t mask = 0; mask < total; ++mask) {
    std::size_t size = static_cast<std::size_t>(__builtin_popcountll(mask));
    for (std::size_t i = 0; i < n; ++i) {
      if ((mask >> i) & 1) continue;
      out.contributions[i].phi +=
          coalition_weight[size] *
          (value[mask | (std::size_t{1} << i)] - value[mask]);
    }
  }
  return out;
}

Attribution shapley_sampled(const Model& model, std::span<const double> x,
                            const Dataset& background, std::size_t n_samples,
                            std::uint64_t seed,
                            const std::vector<std::string>& names) {
  if (n_samples < 100) {
    throw InvalidArgumentError("n_samples must be >= 100, got " +
                               std::to_string(n_samples));
  }
  const std::size_t n = x.size();
  check_names(names, n);
  std::vector<double> means = background_means(background, n);
  const double base = score_of(model, means);
  const double final_score = score_of(model, x);

  std::vector<double> phi(n, 0.0);
  std::vector<std::size_t> perm(n);
  std::vector<double> z(n);
  std::mt19937_64 rng(seed);
  for (std::size_t s = 0; s < n_samples; ++s) {
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    std::shuffle(perm.begin(), perm.end(), rng);
    std::copy(means.begin(), means.end(), z.begin());
    double prev = base;
    for (std::size_t pos = 0; pos < n; ++pos) {
      std::size_t i = perm[pos];
      z[i] = x[i];
      // The final step reaches x exactly; reuse its precomputed score.
      double next = pos + 1 == n ? final_score : score_of(model, z);
      phi[i] += next - prev;
      prev = next;
    }
  }
  for (double& v : phi) v /= static_cast<double>(n_samples);

  // Telescoping keeps the residual near zero; distribute what float error
  // remains so efficiency holds exactly.
  double residual = (final_score - base);
  for (double v : phi) residual -= v;
  double total_abs = 0.0;
  for (double v : phi) total_abs += std::abs(v);
  if (total_abs > 0.0) {
    for (double& v : phi) v += residual * std::abs(v) / total_abs;
  } else if (n > 0) {
    for (double& v : phi) v += residual / static_cast<double>(n);
  }

  Attribution out;
  out.base_value = base;
  out.final_score = final_score;
  out.final_probability = probability_of(model, x);
  out.contributions.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.contributions[i] = {names[i], phi[i], x[i]};
  }
  return out;
}

std::string display_feature_name(const std::string& schema_name) {
  if (schema_name == "AutomatonClassification") return "Automaton Classification";
  if (schema_name == "Inline") return "inline";
  return schema_name;
}

std::string render_shap_report(const Attribution& attribution) {
  std::vector<const Contribution*> order;
  order.reserve(attribution.contributions.size());
  for (const auto& c : attribution.contributions) order.push_back(&c);
  std::stable_sort(order.begin(), order.end(),
                   [](const Contribution* a, const Contribution* b) {
                     return std::abs(a->phi) > std::abs(b->phi);
                   });
  std::string out;
  out += "Base prediction (expected value): " +
         fmt_fixed(attribution.base_value, 4) + "\n";
  out += "Feature contributions:\n";
  for (const Contribution* c : order) {
    out += "- " + c->name + ": " +
           (c->phi > 0.0 ? "increased" : "decreased") +
           " the prediction by " + fmt_fixed(std::abs(c->phi), 4) +
           " (value: " + fmt_feature_value(c->name, c->value) + ")\n";
  }
  if (attribution.final_probability) {
    out += "Final prediction: " +
           fmt_fixed(*attribution.final_probability, 4) +
           " (probability of being malicious)\n";
  } else {
    out += "Final prediction: " + fmt_fixed(attribution.final_score, 4) +
           " (decision score)\n";
  }
  return out;
}

ExplanationBundle build_bundle(Attribution attribution, DfaResult dfa_result,
                               Verdict verdict) {
  ExplanationBundle bundle;
  bundle.attribution = std::move(attribution);
  std::stable_sort(bundle.attribution.contributions.begin(),
                   bundle.attribution.contributions.end(),
                   [](const Contribution& a, const Contribution& b) {
                     return std::abs(a.phi) > std::abs(b.phi);
                   });
  bundle.dfa = std::move(dfa_result);
  bundle.verdict = verdict;
  return bundle;
}

namespace {

std::string template_narrative(const ExplanationBundle& bundle) {
  const bool malicious = bundle.verdict.label == Label::kMalicious;
  std::string p1 = "This script is classified as ";
  p1 += malicious ? "malicious" : "benign";
  if (bundle.verdict.probability) {
    double pct = *bundle.verdict.probability * 100.0;
    if (malicious) {
      p1 += " with a high risk of approximately " + fmt_fixed(pct, 2) + "%.";
    } else {
      p1 += " with an estimated malicious probability of approximately " +
            fmt_fixed(pct, 2) + "%.";
    }
  } else {
    p1 += " with a decision score of " + fmt_fixed(bundle.verdict.score, 4) +
          ".";
  }

  std::string p2;
  if (bundle.dfa.matched.empty()) {
    p2 = "The behavior automaton found no match to known malicious patterns "
         "(" + fmt_fixed(bundle.dfa.match_pct, 2) + "%), labeling the "
         "sequence " + std::string(dfa_label_name(bundle.dfa.label)) + ".";
  } else {
    std::vector<std::string> behaviors;
    for (const MatchedSymbol& s : bundle.dfa.matched) {
      for (const std::string& b : s.symbol.behaviors) {
        if (std::find(behaviors.begin(), behaviors.end(), b) ==
            behaviors.end()) {
          behaviors.push_back(b);
        }
      }
    }
    if (behaviors.size() > 6) behaviors.resize(6);
    std::string joined;
    for (std::size_t i = 0; i < behaviors.size(); ++i) {
      if (i) joined += i + 1 == behaviors.size() ? ", and " : ", ";
      joined += behaviors[i];
    }
    p2 = "The behavior automaton labeled the sequence " +
         std::string(dfa_label_name(bundle.dfa.label)) + " with a " +
         fmt_fixed(bundle.dfa.match_pct, 2) +
         "% match to known malicious patterns, driven by behaviors such as " +
         joined + ".";
  }

  std::string p3;
  const auto& contributions = bundle.attribution.contributions;
  if (contributions.empty()) {
    p3 = "The machine learning model reported no feature contributions.";
  } else {
    std::string joined;
    std::size_t shown = std::min<std::size_t>(3, contributions.size());
    for (std::size_t i = 0; i < shown; ++i) {
      if (i) joined += i + 1 == shown ? ", and " : ", ";
      joined += contributions[i].name;
      joined += contributions[i].phi > 0.0 ? " (risk-increasing)"
                                           : " (risk-decreasing)";
    }
    p3 = "The machine learning model's strongest signals were " + joined + ".";
  }
  if (malicious) {
    p3 += " Overall, the script appears likely to be harmful, and human "
          "review is recommended to confirm its capabilities and mitigate "
          "potential threats.";
  } else {
    p3 += " No escalation is suggested based on the current evidence.";
  }
  return p1 + "\n\n" + p2 + "\n\n" + p3 + "\n";
}

std::string bundle_prompt(const ExplanationBundle& bundle) {
  std::string prompt =
      "Summarize the following script analysis for a security analyst in "
      "three short paragraphs (verdict, behavioral evidence, key model "
      "signals and recommendation):\n\n";
  prompt += "Model verdict: ";
  prompt += bundle.verdict.label == Label::kMalicious ? "Malicious" : "Benign";
  if (bundle.verdict.probability) {
    prompt += " (probability " + fmt_fixed(*bundle.verdict.probability, 4) +
              ")";
  }
  prompt += "\n\nAutomaton analysis:\n" + render_dfa_report(bundle.dfa);
  prompt += "\nFeature attribution:\n" +
            render_shap_report(bundle.attribution);
  return prompt;
}

std::optional<std::string> llm_narrative(const ExplanationBundle& bundle,
                                         const LlmEndpointConfig& config) {
  try {
    httplib::Client client(config.base_url);
    int seconds = static_cast<int>(config.timeout_s);
    int micros = static_cast<int>((config.timeout_s - seconds) * 1e6);
    client.set_connection_timeout(seconds, micros);
    client.set_read_timeout(seconds, micros);
    client.set_write_timeout(seconds, micros);

    httplib::Headers headers;
    if (const char* token = std::getenv(config.token_env.c_str());
        token && *token) {
      headers.emplace("Authorization", std::string("Bearer ") + token);
    }
    nlohmann::json body = {
        {"model", config.model},
        {"messages",
         {{{"role", "system"},
           {"content",
            "You write concise plain-language explanations of script "
            "classification results."}},
          {{"role", "user"}, {"content", bundle_prompt(bundle)}}}}};
    auto res = client.Post(config.path, headers, body.dump(),
                           "application/json");
    if (!res || res->status != 200) {
      std::cerr << "warning: narrative endpoint "
                << (res ? "returned status " + std::to_string(res->status)
                        : "was unreachable")
                << "; using template narrative\n";
      return std::nullopt;
    }
    nlohmann::json reply = nlohmann::json::parse(res->body);
    std::string content =
        reply.at("choices").at(0).at("message").at("content")
            .get<std::string>();
    if (content.empty()) return std::nullopt;
    return content;
  } catch (const std::exception& e) {
    std::cerr << "warning: narrative endpoint failed (" << e.what()
              << "); using template narrative\n";
    return std::nullopt;
  }
}

}  // namespace

std::string narrate(const ExplanationBundle& bundle,
                    const std::optional<LlmEndpointConfig>& config) {
  if (config && !config->base_url.empty()) {
    if (auto text = llm_narrative(bundle, *config)) return *text;
  }
  return template_narrative(bundle);
}

nlohmann::json bundle_json(const ExplanationBundle& bundle,
                           const std::string& narrative) {
  nlohmann::ordered_json matched = nlohmann::ordered_json::array();
  for (const MatchedSymbol& s : bundle.dfa.matched) {
    matched.push_back({{"symbol", s.symbol.behaviors}, {"weight", s.weight}});
  }
  nlohmann::ordered_json contributions = nlohmann::ordered_json::array();
  for (const Contribution& c : bundle.attribution.contributions) {
    contributions.push_back(
        {{"name", c.name}, {"phi", c.phi}, {"value", c.value}});
  }
  nlohmann::ordered_json j;
  j["verdict"] =
      bundle.verdict.label == Label::kMalicious ? "Malicious" : "Benign";
  if (bundle.verdict.probability) {
    j["probability"] = *bundle.verdict.probability;
  } else {
    j["probability"] = nullptr;
  }
  j["score"] = bundle.verdict.score;
  j["automaton"] = {{"label", dfa_label_name(bundle.dfa.label)},
                    {"match_pct", bundle.dfa.match_pct},
                    {"nearest_final_state", bundle.dfa.nearest_final_state},
                    {"pattern", bundle.dfa.nearest_pattern},
                    {"matched", matched},
                    {"matched_weight", bundle.dfa.matched_weight},
                    {"total_weight", bundle.dfa.total_weight}};
  j["contributions"] = contributions;
  j["narrative"] = narrative;
  return j;
}

}  // namespace magescan::expl
