// magescan: behavior-log skimmer detection pipeline.
//
// Subcommands: gen, ingest, dfa, features, train, attack, explain, pipeline.
// All settings come from a TOML config; --seed and --out override the file.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "magescan/config.hpp"
#include "magescan/pipeline.hpp"

namespace {

std::string one_line(std::string text) {
  for (char& c : text) {
    if (c == '\n' || c == '\r' || c == '\t') c = ' ';
  }
  return text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"magescan: detection, robustness, and explanation pipeline "
               "for client-side script behavior logs"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_override;
  std::int64_t seed_override = -1;
  bool quiet = false;
  app.add_option("--config", config_path, "TOML run configuration")
      ->required();
  app.add_option("--seed", seed_override, "override the config seed");
  app.add_option("--out", out_override, "override the output directory");
  app.add_flag("--quiet", quiet, "suppress progress output");

  struct Sub {
    const char* name;
    const char* help;
    void (*fn)(const magescan::RunConfig&);
  };
  const Sub subs[] = {
      {"gen", "generate a synthetic labeled corpus", magescan::run_gen},
      {"ingest", "parse the corpus and derive script records",
       magescan::run_ingest},
      {"dfa", "build the weighted automaton and match every record",
       magescan::run_dfa},
      {"features", "extract features, sweep selection sizes, select",
       magescan::run_features},
      {"train", "grid-search, fit, and evaluate every model family",
       magescan::run_train},
      {"attack", "adversarial training and per-attack evaluation",
       magescan::run_attack},
      {"explain", "attribution, automaton reports, and narratives",
       magescan::run_explain},
      {"pipeline", "run every stage in order", magescan::run_pipeline},
  };
  const Sub* selected = nullptr;
  for (const Sub& sub : subs) {
    CLI::App* cmd = app.add_subcommand(sub.name, sub.help);
    cmd->fallthrough();  // --config etc. may follow the subcommand
    cmd->callback([&selected, &sub] { selected = &sub; });
  }

  CLI11_PARSE(app, argc, argv);

  try {
    magescan::RunConfig::Overrides overrides;
    if (seed_override >= 0) {
      overrides.seed = static_cast<std::uint64_t>(seed_override);
    }
    if (!out_override.empty()) overrides.out_dir = out_override;
    overrides.quiet = quiet;
    magescan::RunConfig cfg =
        magescan::RunConfig::load(config_path, overrides);
    magescan::OutputDirLock lock(cfg.out_dir);
    selected->fn(cfg);
    return 0;
  } catch (const magescan::Error& e) {
    std::cerr << "error code=" << e.code() << " detail=\""
              << one_line(e.what()) << "\"\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error code=Internal detail=\"" << one_line(e.what())
              << "\"\n";
    return 1;
  }
}
