#include <doctest.h>

#include <filesystem>

#include "magescan/config.hpp"
#include "magescan/pipeline.hpp"
#include "magescan/util.hpp"

// Desk-scale run of every stage through the file-driven entry points; the
// acceptance binary covers the full-size corpus.

using namespace magescan;
namespace fs = std::filesystem;

namespace {

fs::path make_workspace() {
  fs::path dir = fs::temp_directory_path() / "magescan_pipeline_test";
  fs::remove_all(dir);
  fs::create_directories(dir);

  write_file(dir / "alphabet.json",
             R"(["Set Callback","Add Event Handler","Access Input",)"
             R"("Access DOM Element Attribute","Create DOM Element",)"
             R"("Send Data","Update DOM Element","Log Message",)"
             R"("Scroll Page","Load Image"])");
  write_file(dir / "map.json", R"({
    "set_cb": ["Set Callback"],
    "add_handler": ["Add Event Handler"],
    "read_input": ["Access Input"],
    "read_attr": ["Access DOM Element Attribute"],
    "create_el": ["Create DOM Element"],
    "post": ["Send Data"],
    "update_el": ["Update DOM Element"],
    "log": ["Log Message"],
    "scroll": ["Scroll Page"],
    "load_image": ["Load Image"],
    "read_fields": ["Access Input", "Access DOM Element Attribute"],
    "exfil_update": ["Send Data", "Update DOM Element"]
  })");
  write_file(dir / "patterns.json", R"({"patterns": [
    {"name": "skim", "steps": [["Set Callback"], ["Add Event Handler"],
      ["Access Input", "Access DOM Element Attribute"],
      ["Create DOM Element"], ["Send Data", "Update DOM Element"]]},
    {"name": "quick-exfil", "steps": [["Access Input"], ["Send Data"]]}
  ]})");
  write_file(dir / "weights.json", R"({
    "Set Callback": 3, "Add Event Handler": 3, "Access Input": 2,
    "Access DOM Element Attribute": 2, "Create DOM Element": 1,
    "Send Data": 3, "Update DOM Element": 2, "Log Message": 1,
    "Scroll Page": 1, "Load Image": 1
  })");
  write_file(dir / "run.toml", R"(
seed = 11
out_dir = "out"

[paths]
alphabet = "alphabet.json"
action_map = "map.json"
pattern_library = "patterns.json"
weights = "weights.json"

[corpus]
n = 120
malicious_fraction = 0.15
length_min = 3
length_max = 10

[features]
sweep_sizes = [8, 16]
sweep_families = ["DT", "NB"]
folds = 4

[train]
test_fraction = 0.3
families = ["DT", "LR", "NB", "KNN"]
folds = 4

[attack]
boundary_iters = 10
hsj_iters = 2
a2pm_iters = 10
eval_attacks = ["FGSM", "Boundary Attack", "A2PM"]
augment_attacks = ["FGSM"]

[explain]
n_scripts = 2
shap_samples = 150
background = 40
)");
  return dir;
}

}  // namespace

TEST_CASE("all stages run end to end at desk scale") {
  fs::path dir = make_workspace();
  RunConfig::Overrides ov;
  ov.quiet = true;
  RunConfig cfg = RunConfig::load(dir / "run.toml", ov);

  run_pipeline(cfg);

  const fs::path out = cfg.out_dir;
  for (const char* artifact :
       {"corpus.jsonl", "labels.csv", "records.jsonl", "dfa_results.csv",
        "features.csv", "importance.csv", "sweep.csv", "selection.json",
        "features_selected.csv", "split.json", "cv_summary.csv",
        "train_metrics.csv", "train_metrics.txt", "robustness.csv",
        "manifest.json"}) {
    CAPTURE(artifact);
    CHECK(fs::exists(out / artifact));
  }
  CHECK(fs::exists(out / "models" / "DT.json"));
  CHECK(fs::exists(out / "models_robust" / "LR.json"));

  // selection respects the configured sweep sizes
  auto sel = nlohmann::json::parse(read_file(out / "selection.json"));
  std::size_t k = sel.at("k").get<std::size_t>();
  CHECK((k == 8 || k == 16));
  CHECK(sel.at("indices").size() == k);

  // the features matrix has 3*10+4 columns plus id and label
  auto header = csv_parse(read_file(out / "features.csv")).front();
  CHECK(header.size() == 34 + 2);

  // robustness rows respect the applicability matrix: FGSM only for LR
  auto rows = csv_parse(read_file(out / "robustness.csv"));
  bool fgsm_dt = false, fgsm_lr = false;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i][1] == "FGSM") {
      if (rows[i][0] == "DT") fgsm_dt = true;
      if (rows[i][0] == "LR") fgsm_lr = true;
    }
  }
  CHECK(fgsm_lr);
  CHECK_FALSE(fgsm_dt);

  // explanations exist and carry narratives
  std::size_t bundles = 0;
  for (const auto& entry : fs::directory_iterator(out / "explanations")) {
    if (entry.path().extension() != ".json") continue;
    ++bundles;
    auto j = nlohmann::json::parse(read_file(entry.path()));
    CHECK(!j.at("narrative").get<std::string>().empty());
  }
  CHECK(bundles == 2);

  // manifest lists every stage with its derived seed
  auto manifest = nlohmann::json::parse(read_file(out / "manifest.json"));
  CHECK(manifest.at("config_hash") == cfg.config_hash());
  for (const char* stage : {"gen", "ingest", "dfa", "features", "train",
                            "attack", "explain"}) {
    CAPTURE(stage);
    CHECK(manifest.at("stages").contains(stage));
    CHECK(manifest.at("stages").at(stage).at("seed").get<std::uint64_t>() ==
          derive_seed(cfg.seed, stage));
  }

  // re-running one stage overwrites its artifacts identically
  auto before = fnv1a(read_file(out / "dfa_results.csv"));
  run_dfa(cfg);
  CHECK(fnv1a(read_file(out / "dfa_results.csv")) == before);
}

TEST_CASE("the output directory lock is exclusive") {
  fs::path dir = fs::temp_directory_path() / "magescan_lock_test";
  fs::remove_all(dir);
  {
    OutputDirLock lock(dir);
    CHECK(fs::exists(dir / ".lock"));
    CHECK_THROWS_AS(OutputDirLock{dir}, IoError);
  }
  CHECK_FALSE(fs::exists(dir / ".lock"));  // released on destruction
  OutputDirLock again(dir);                // and can be taken again
}
