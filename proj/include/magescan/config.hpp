#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "magescan/adversarial.hpp"
#include "magescan/classifiers.hpp"
#include "magescan/corpus.hpp"
#include "magescan/dfa.hpp"
#include "magescan/explanation.hpp"

namespace magescan {

// Resolved run configuration (TOML file + command-line overrides). Paths are
// absolute after load; every referenced input file must exist.
struct RunConfig {
  std::uint64_t seed = 0;
  std::filesystem::path out_dir;
  bool quiet = false;

  struct Paths {
    std::filesystem::path alphabet;
    std::filesystem::path action_map;
    std::filesystem::path pattern_library;
    std::filesystem::path weights;
    std::filesystem::path corpus;  // JSONL; written by gen, read by ingest
    std::filesystem::path labels;  // labels CSV
  } paths;

  Thresholds dfa_thresholds;
  std::size_t dfa_reports = 3;  // per-script report files to write

  struct Corpus {
    std::size_t n = 2000;
    double malicious_fraction = 0.047;
    std::size_t length_min = 4;
    std::size_t length_max = 30;
    double insert_noise = 0.3;
    double drop_noise = 0.0;
    double benign_inline_prob = 0.7;
    double malicious_inline_prob = 0.2;
    double benign_clicks_mean = 3.0;
    double malicious_clicks_mean = 1.0;
  } corpus;

  struct Features {
    std::vector<std::size_t> sweep_sizes = {20, 30, 40, 50,
                                            60, 70, 80, 90, 100};
    std::vector<ml::Family> sweep_families;  // empty = all nine
    std::size_t select_k = 0;                // 0 = argmax of the sweep
    std::size_t folds = 5;
  } features;

  struct Train {
    double test_fraction = 0.33;
    std::vector<ml::Family> families;  // empty = all nine
    std::size_t folds = 5;
  } train;

  struct Attack {
    double epsilon = 0.1;
    double alpha = 0.02;
    int pgd_iters = 40;
    int boundary_iters = 40;
    int hsj_iters = 8;
    int a2pm_iters = 30;
    std::vector<adv::AttackKind> eval_attacks;     // empty = all five
    std::vector<adv::AttackKind> augment_attacks;  // adversarial training
  } attack;

  struct Explain {
    std::size_t n_scripts = 4;
    std::size_t shap_samples = 1000;
    std::size_t background = 100;
    std::string model_family = "best";  // family name or "best" (CV F1)
  } explain;

  struct Llm {
    bool enabled = false;
    expl::LlmEndpointConfig endpoint;
  } llm;

  struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::filesystem::path> out_dir;
    bool quiet = false;
  };

  static RunConfig load(const std::filesystem::path& config_path);
  static RunConfig load(const std::filesystem::path& config_path,
                        const Overrides& overrides);

  // Stable canonical serialization of every resolved field; its FNV-1a hash
  // is the config hash recorded in the run manifest.
  std::string canonical() const;
  std::string config_hash() const;
};

}  // namespace magescan
