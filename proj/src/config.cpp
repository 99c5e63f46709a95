#include "magescan/config.hpp"

#include <algorithm>
#include <sstream>

#include "magescan/toml.hpp"
#include "magescan/util.hpp"

namespace magescan {

namespace {

std::filesystem::path resolve(const std::filesystem::path& base,
                              const std::string& value) {
  std::filesystem::path p(value);
  if (p.is_absolute()) return p.lexically_normal();
  return (base / p).lexically_normal();
}

std::vector<ml::Family> parse_families(const std::vector<std::string>& names) {
  std::vector<ml::Family> out;
  for (const auto& name : names) out.push_back(ml::family_from_name(name));
  return out;
}

std::vector<adv::AttackKind> parse_attacks(
    const std::vector<std::string>& names) {
  std::vector<adv::AttackKind> out;
  for (const auto& name : names) out.push_back(adv::attack_from_name(name));
  return out;
}

void require_file(const std::filesystem::path& path, const char* what) {
  if (!std::filesystem::is_regular_file(path)) {
    throw ConfigError(std::string(what) + " file does not exist: " +
                      path.string());
  }
}

}  // namespace

RunConfig RunConfig::load(const std::filesystem::path& config_path) {
  return load(config_path, Overrides{});
}

RunConfig RunConfig::load(const std::filesystem::path& config_path,
                          const Overrides& overrides) {
  require_file(config_path, "config");
  toml::Table t = toml::parse_file(config_path);
  const std::filesystem::path base =
      std::filesystem::absolute(config_path).parent_path();

  RunConfig cfg;
  if (overrides.seed) {
    cfg.seed = *overrides.seed;
  } else {
    if (!toml::contains(t, "seed")) {
      throw ConfigError("config must set a seed (or pass --seed)");
    }
    cfg.seed = static_cast<std::uint64_t>(toml::get_int(t, "seed"));
  }
  cfg.out_dir = overrides.out_dir
                    ? std::filesystem::absolute(*overrides.out_dir)
                          .lexically_normal()
                    : resolve(base, toml::get_string_or(t, "out_dir", "out"));
  cfg.quiet = overrides.quiet;

  cfg.paths.alphabet = resolve(base, toml::get_string(t, "paths.alphabet"));
  cfg.paths.action_map =
      resolve(base, toml::get_string(t, "paths.action_map"));
  cfg.paths.pattern_library =
      resolve(base, toml::get_string(t, "paths.pattern_library"));
  cfg.paths.weights = resolve(base, toml::get_string(t, "paths.weights"));
  require_file(cfg.paths.alphabet, "alphabet");
  require_file(cfg.paths.action_map, "action map");
  require_file(cfg.paths.pattern_library, "pattern library");
  require_file(cfg.paths.weights, "weight table");

  // Default corpus artifacts live under the output directory.
  if (toml::contains(t, "paths.corpus")) {
    cfg.paths.corpus = resolve(base, toml::get_string(t, "paths.corpus"));
  } else {
    cfg.paths.corpus = cfg.out_dir / "corpus.jsonl";
  }
  if (toml::contains(t, "paths.labels")) {
    cfg.paths.labels = resolve(base, toml::get_string(t, "paths.labels"));
  } else {
    cfg.paths.labels = cfg.out_dir / "labels.csv";
  }

  cfg.dfa_thresholds.tau_partial =
      toml::get_float_or(t, "dfa.tau_partial", 30.0);
  cfg.dfa_thresholds.tau_malign =
      toml::get_float_or(t, "dfa.tau_malign", 100.0);
  cfg.dfa_reports = static_cast<std::size_t>(
      toml::get_int_or(t, "dfa.reports", 3));

  cfg.corpus.n = static_cast<std::size_t>(toml::get_int_or(t, "corpus.n", 2000));
  cfg.corpus.malicious_fraction =
      toml::get_float_or(t, "corpus.malicious_fraction", 0.047);
  cfg.corpus.length_min =
      static_cast<std::size_t>(toml::get_int_or(t, "corpus.length_min", 4));
  cfg.corpus.length_max =
      static_cast<std::size_t>(toml::get_int_or(t, "corpus.length_max", 30));
  cfg.corpus.insert_noise = toml::get_float_or(t, "corpus.insert_noise", 0.3);
  cfg.corpus.drop_noise = toml::get_float_or(t, "corpus.drop_noise", 0.0);
  cfg.corpus.benign_inline_prob =
      toml::get_float_or(t, "corpus.benign_inline_prob", 0.7);
  cfg.corpus.malicious_inline_prob =
      toml::get_float_or(t, "corpus.malicious_inline_prob", 0.2);
  cfg.corpus.benign_clicks_mean =
      toml::get_float_or(t, "corpus.benign_clicks_mean", 3.0);
  cfg.corpus.malicious_clicks_mean =
      toml::get_float_or(t, "corpus.malicious_clicks_mean", 1.0);

  if (toml::contains(t, "features.sweep_sizes")) {
    cfg.features.sweep_sizes.clear();
    for (std::int64_t v : toml::get_int_array_or(t, "features.sweep_sizes", {})) {
      cfg.features.sweep_sizes.push_back(static_cast<std::size_t>(v));
    }
  }
  cfg.features.sweep_families = parse_families(
      toml::get_string_array_or(t, "features.sweep_families", {}));
  cfg.features.select_k = static_cast<std::size_t>(
      toml::get_int_or(t, "features.select_k", 0));
  cfg.features.folds =
      static_cast<std::size_t>(toml::get_int_or(t, "features.folds", 5));

  cfg.train.test_fraction =
      toml::get_float_or(t, "train.test_fraction", 0.33);
  cfg.train.families =
      parse_families(toml::get_string_array_or(t, "train.families", {}));
  cfg.train.folds =
      static_cast<std::size_t>(toml::get_int_or(t, "train.folds", 5));

  cfg.attack.epsilon = toml::get_float_or(t, "attack.epsilon", 0.1);
  cfg.attack.alpha = toml::get_float_or(t, "attack.alpha", 0.02);
  cfg.attack.pgd_iters =
      static_cast<int>(toml::get_int_or(t, "attack.pgd_iters", 40));
  cfg.attack.boundary_iters =
      static_cast<int>(toml::get_int_or(t, "attack.boundary_iters", 40));
  cfg.attack.hsj_iters =
      static_cast<int>(toml::get_int_or(t, "attack.hsj_iters", 8));
  cfg.attack.a2pm_iters =
      static_cast<int>(toml::get_int_or(t, "attack.a2pm_iters", 30));
  cfg.attack.eval_attacks =
      parse_attacks(toml::get_string_array_or(t, "attack.eval_attacks", {}));
  cfg.attack.augment_attacks = parse_attacks(
      toml::get_string_array_or(t, "attack.augment_attacks", {"FGSM"}));

  cfg.explain.n_scripts = static_cast<std::size_t>(
      toml::get_int_or(t, "explain.n_scripts", 4));
  cfg.explain.shap_samples = static_cast<std::size_t>(
      toml::get_int_or(t, "explain.shap_samples", 1000));
  cfg.explain.background = static_cast<std::size_t>(
      toml::get_int_or(t, "explain.background", 100));
  cfg.explain.model_family =
      toml::get_string_or(t, "explain.model", "best");

  cfg.llm.enabled = toml::get_bool_or(t, "llm.enabled", false);
  cfg.llm.endpoint.base_url = toml::get_string_or(t, "llm.base_url", "");
  cfg.llm.endpoint.path =
      toml::get_string_or(t, "llm.path", "/v1/chat/completions");
  cfg.llm.endpoint.model = toml::get_string_or(t, "llm.model", "");
  cfg.llm.endpoint.timeout_s = toml::get_float_or(t, "llm.timeout_s", 10.0);
  cfg.llm.endpoint.token_env =
      toml::get_string_or(t, "llm.token_env", "MAGESCAN_LLM_TOKEN");

  if (cfg.explain.model_family != "best") {
    ml::family_from_name(cfg.explain.model_family);  // validates
  }
  return cfg;
}

std::string RunConfig::canonical() const {
  std::ostringstream out;
  out << "seed=" << seed << '\n';
  out << "out_dir=" << out_dir.string() << '\n';
  out << "paths.alphabet=" << paths.alphabet.string() << '\n';
  out << "paths.action_map=" << paths.action_map.string() << '\n';
  out << "paths.pattern_library=" << paths.pattern_library.string() << '\n';
  out << "paths.weights=" << paths.weights.string() << '\n';
  out << "paths.corpus=" << paths.corpus.string() << '\n';
  out << "paths.labels=" << paths.labels.string() << '\n';
  out << "dfa.tau_partial=" << fmt_exact(dfa_thresholds.tau_partial) << '\n';
  out << "dfa.tau_malign=" << fmt_exact(dfa_thresholds.tau_malign) << '\n';
  out << "dfa.reports=" << dfa_reports << '\n';
  out << "corpus.n=" << corpus.n << '\n';
  out << "corpus.malicious_fraction=" << fmt_exact(corpus.malicious_fraction)
      << '\n';
  out << "corpus.length_min=" << corpus.length_min << '\n';
  out << "corpus.length_max=" << corpus.length_max << '\n';
  out << "corpus.insert_noise=" << fmt_exact(corpus.insert_noise) << '\n';
  out << "corpus.drop_noise=" << fmt_exact(corpus.drop_noise) << '\n';
  out << "corpus.benign_inline_prob=" << fmt_exact(corpus.benign_inline_prob)
      << '\n';
  out << "corpus.malicious_inline_prob="
      << fmt_exact(corpus.malicious_inline_prob) << '\n';
  out << "corpus.benign_clicks_mean=" << fmt_exact(corpus.benign_clicks_mean)
      << '\n';
  out << "corpus.malicious_clicks_mean="
      << fmt_exact(corpus.malicious_clicks_mean) << '\n';
  out << "features.sweep_sizes=";
  for (std::size_t k : features.sweep_sizes) out << k << ',';
  out << '\n';
  out << "features.sweep_families=";
  for (ml::Family f : features.sweep_families) out << ml::family_name(f) << ',';
  out << '\n';
  out << "features.select_k=" << features.select_k << '\n';
  out << "features.folds=" << features.folds << '\n';
  out << "train.test_fraction=" << fmt_exact(train.test_fraction) << '\n';
  out << "train.families=";
  for (ml::Family f : train.families) out << ml::family_name(f) << ',';
  out << '\n';
  out << "train.folds=" << train.folds << '\n';
  out << "attack.epsilon=" << fmt_exact(attack.epsilon) << '\n';
  out << "attack.alpha=" << fmt_exact(attack.alpha) << '\n';
  out << "attack.pgd_iters=" << attack.pgd_iters << '\n';
  out << "attack.boundary_iters=" << attack.boundary_iters << '\n';
  out << "attack.hsj_iters=" << attack.hsj_iters << '\n';
  out << "attack.a2pm_iters=" << attack.a2pm_iters << '\n';
  out << "attack.eval_attacks=";
  for (adv::AttackKind k : attack.eval_attacks) out << adv::attack_name(k) << ';';
  out << '\n';
  out << "attack.augment_attacks=";
  for (adv::AttackKind k : attack.augment_attacks) {
    out << adv::attack_name(k) << ';';
  }
  out << '\n';
  out << "explain.n_scripts=" << explain.n_scripts << '\n';
  out << "explain.shap_samples=" << explain.shap_samples << '\n';
  out << "explain.background=" << explain.background << '\n';
  out << "explain.model=" << explain.model_family << '\n';
  out << "llm.enabled=" << (llm.enabled ? 1 : 0) << '\n';
  out << "llm.base_url=" << llm.endpoint.base_url << '\n';
  out << "llm.path=" << llm.endpoint.path << '\n';
  out << "llm.model=" << llm.endpoint.model << '\n';
  return out.str();
}

std::string RunConfig::config_hash() const {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a(canonical())));
  return buf;
}

}  // namespace magescan
