#include "magescan/pipeline.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "magescan/corpus.hpp"
#include "magescan/features.hpp"
#include "magescan/ingestion.hpp"
#include "magescan/kernels.hpp"
#include "magescan/sweep.hpp"
#include "magescan/util.hpp"

namespace magescan {

namespace {

// ---- artifact paths ---------------------------------------------------------

struct Artifacts {
  std::filesystem::path records_jsonl;
  std::filesystem::path ingest_errors;
  std::filesystem::path dfa_csv;
  std::filesystem::path dfa_report_dir;
  std::filesystem::path features_csv;
  std::filesystem::path schema_json;
  std::filesystem::path importance_csv;
  std::filesystem::path sweep_csv;
  std::filesystem::path selection_json;
  std::filesystem::path selected_csv;
  std::filesystem::path split_json;
  std::filesystem::path models_dir;
  std::filesystem::path cv_results_csv;
  std::filesystem::path cv_summary_csv;
  std::filesystem::path metrics_csv;
  std::filesystem::path metrics_txt;
  std::filesystem::path timings_txt;
  std::filesystem::path robust_models_dir;
  std::filesystem::path robustness_csv;
  std::filesystem::path robustness_txt;
  std::filesystem::path explain_dir;
  std::filesystem::path manifest;

  explicit Artifacts(const RunConfig& cfg) {
    const auto& out = cfg.out_dir;
    records_jsonl = out / "records.jsonl";
    ingest_errors = out / "ingest_errors.txt";
    dfa_csv = out / "dfa_results.csv";
    dfa_report_dir = out / "reports" / "dfa";
    features_csv = out / "features.csv";
    schema_json = out / "features_schema.json";
    importance_csv = out / "importance.csv";
    sweep_csv = out / "sweep.csv";
    selection_json = out / "selection.json";
    selected_csv = out / "features_selected.csv";
    split_json = out / "split.json";
    models_dir = out / "models";
    cv_results_csv = out / "cv_results.csv";
    cv_summary_csv = out / "cv_summary.csv";
    metrics_csv = out / "train_metrics.csv";
    metrics_txt = out / "train_metrics.txt";
    timings_txt = out / "timings.txt";
    robust_models_dir = out / "models_robust";
    robustness_csv = out / "robustness.csv";
    robustness_txt = out / "robustness.txt";
    explain_dir = out / "explanations";
    manifest = out / "manifest.json";
  }
};

void log_line(const RunConfig& cfg, const std::string& message) {
  if (!cfg.quiet) std::cout << message << '\n';
}

std::string rel_to_out(const RunConfig& cfg,
                       const std::filesystem::path& path) {
  return path.lexically_relative(cfg.out_dir).generic_string();
}

void update_manifest(const RunConfig& cfg, const std::string& stage,
                     const std::vector<std::filesystem::path>& artifacts) {
  Artifacts a(cfg);
  nlohmann::json manifest;
  if (std::filesystem::exists(a.manifest)) {
    manifest = nlohmann::json::parse(read_file(a.manifest));
  }
  manifest["config_hash"] = cfg.config_hash();
  manifest["seed"] = cfg.seed;
  nlohmann::json entry;
  entry["seed"] = derive_seed(cfg.seed, stage);
  std::vector<std::string> names;
  for (const auto& p : artifacts) names.push_back(rel_to_out(cfg, p));
  std::sort(names.begin(), names.end());
  entry["artifacts"] = names;
  manifest["stages"][stage] = entry;
  write_file(a.manifest, manifest.dump(2) + "\n");
}

// ---- shared loading ---------------------------------------------------------

struct CoreInputs {
  Alphabet alphabet;
  ActionBehaviorMap action_map;
  PatternLibrary library;
  WeightTable weights;
};

CoreInputs load_core(const RunConfig& cfg) {
  Alphabet alphabet = Alphabet::from_json_file(cfg.paths.alphabet);
  ActionBehaviorMap map =
      ActionBehaviorMap::from_json_file(cfg.paths.action_map, alphabet);
  return CoreInputs{std::move(alphabet), std::move(map),
                    PatternLibrary::from_json_file(cfg.paths.pattern_library),
                    WeightTable::from_json_file(cfg.paths.weights)};
}

std::vector<ScriptRecord> load_records(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open records file: " + path.string());
  std::vector<ScriptRecord> records;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    records.push_back(record_from_json(line));
  }
  return records;
}

struct LabeledFeatures {
  Dataset data;
  std::vector<std::string> ids;
  std::vector<std::string> names;
};

void write_features_csv(const std::filesystem::path& path,
                        const LabeledFeatures& features) {
  std::string out;
  std::vector<std::string> header{"script_id"};
  header.insert(header.end(), features.names.begin(), features.names.end());
  header.push_back("label");
  out += csv_row(header);
  for (std::size_t r = 0; r < features.data.size(); ++r) {
    std::vector<std::string> row{features.ids[r]};
    for (double v : features.data.x.row(r)) row.push_back(fmt_exact(v));
    row.push_back(features.data.y[r] == Label::kMalicious ? "1" : "0");
    out += csv_row(row);
  }
  write_file(path, out);
}

LabeledFeatures read_features_csv(const std::filesystem::path& path,
                                  const std::string& schema_id) {
  auto rows = csv_parse(read_file(path));
  if (rows.empty()) throw IoError("empty features file: " + path.string());
  LabeledFeatures out;
  const auto& header = rows.front();
  if (header.size() < 3 || header.front() != "script_id" ||
      header.back() != "label") {
    throw IoError("malformed features header in " + path.string());
  }
  out.names.assign(header.begin() + 1, header.end() - 1);
  out.data.schema_id = schema_id;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() != header.size()) {
      throw IoError("malformed features row in " + path.string());
    }
    out.ids.push_back(row.front());
    std::vector<double> values(row.size() - 2);
    for (std::size_t c = 1; c + 1 < row.size(); ++c) {
      values[c - 1] = std::strtod(row[c].c_str(), nullptr);
    }
    out.data.x.push_row(values);
    out.data.y.push_back(row.back() == "1" ? Label::kMalicious
                                           : Label::kBenign);
  }
  return out;
}

std::string metric_cell(double v) { return fmt_fixed(v, 4); }

// Stratified train/test split by script index, seeded.
void split_indices(std::span<const Label> y, double test_fraction,
                   std::uint64_t seed, std::vector<std::size_t>& train,
                   std::vector<std::size_t>& test) {
  std::vector<std::size_t> by_class[2];
  for (std::size_t i = 0; i < y.size(); ++i) {
    by_class[y[i] == Label::kMalicious ? 1 : 0].push_back(i);
  }
  auto rng = make_rng(seed);
  for (int cls = 0; cls < 2; ++cls) {
    std::shuffle(by_class[cls].begin(), by_class[cls].end(), rng);
    std::size_t n_test = static_cast<std::size_t>(
        std::llround(static_cast<double>(by_class[cls].size()) *
                     test_fraction));
    for (std::size_t i = 0; i < by_class[cls].size(); ++i) {
      (i < n_test ? test : train).push_back(by_class[cls][i]);
    }
  }
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
}

std::vector<ml::Family> families_or_all(const std::vector<ml::Family>& list) {
  return list.empty() ? ml::all_families() : list;
}

std::vector<adv::AttackKind> attacks_or_all(
    const std::vector<adv::AttackKind>& list) {
  if (!list.empty()) return list;
  return {adv::AttackKind::kHopSkipJump, adv::AttackKind::kBoundary,
          adv::AttackKind::kFgsm, adv::AttackKind::kPgd,
          adv::AttackKind::kA2pm};
}

adv::AttackSpec make_attack_spec(const RunConfig& cfg, adv::AttackKind kind,
                                 std::uint64_t seed) {
  adv::AttackSpec spec;
  spec.kind = kind;
  spec.epsilon = cfg.attack.epsilon;
  spec.alpha = cfg.attack.alpha;
  spec.seed = seed;
  switch (kind) {
    case adv::AttackKind::kFgsm:
      spec.iters = 1;
      break;
    case adv::AttackKind::kPgd:
      spec.iters = cfg.attack.pgd_iters;
      break;
    case adv::AttackKind::kBoundary:
      spec.iters = cfg.attack.boundary_iters;
      break;
    case adv::AttackKind::kHopSkipJump:
      spec.iters = cfg.attack.hsj_iters;
      break;
    case adv::AttackKind::kA2pm:
      spec.iters = cfg.attack.a2pm_iters;
      break;
  }
  return spec;
}

// Rebuilds the DFA results for a record set (cheap relative to re-parsing
// the CSV and keeps full double precision).
std::vector<DfaResult> match_all(const BehaviorDfa& dfa,
                                 const std::vector<ScriptRecord>& records,
                                 const Thresholds& thresholds) {
  std::vector<DfaResult> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(dfa.match(r.sequence, thresholds));
  return out;
}

FeatureSchema selected_schema(const RunConfig& cfg, const Alphabet& alphabet) {
  Artifacts a(cfg);
  FeatureSchema full = FeatureSchema::for_alphabet(alphabet);
  nlohmann::json sel = nlohmann::json::parse(read_file(a.selection_json));
  std::vector<std::size_t> indices =
      sel.at("indices").get<std::vector<std::size_t>>();
  return full.select(indices);
}

}  // namespace

// ---- lock ---------------------------------------------------------------------

OutputDirLock::OutputDirLock(const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  lock_path_ = out_dir / ".lock";
  int fd = ::open(lock_path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
  if (fd < 0) {
    throw IoError("output directory is locked by another process: " +
                  lock_path_.string());
  }
  ::close(fd);
  held_ = true;
}

OutputDirLock::~OutputDirLock() {
  if (held_) {
    std::error_code ec;
    std::filesystem::remove(lock_path_, ec);
  }
}

// ---- gen ------------------------------------------------------------------------

void run_gen(const RunConfig& cfg) {
  CoreInputs core = load_core(cfg);
  GenConfig gen;
  gen.n = cfg.corpus.n;
  gen.malicious_fraction = cfg.corpus.malicious_fraction;
  gen.length_min = cfg.corpus.length_min;
  gen.length_max = cfg.corpus.length_max;
  gen.default_noise.insert = cfg.corpus.insert_noise;
  gen.default_noise.drop = cfg.corpus.drop_noise;
  gen.benign_inline_prob = cfg.corpus.benign_inline_prob;
  gen.malicious_inline_prob = cfg.corpus.malicious_inline_prob;
  gen.benign_clicks_mean = cfg.corpus.benign_clicks_mean;
  gen.malicious_clicks_mean = cfg.corpus.malicious_clicks_mean;
  gen.seed = derive_seed(cfg.seed, "gen");

  GeneratedCorpus corpus =
      generate(gen, core.library, core.alphabet, core.action_map);
  {
    std::ostringstream out;
    write_corpus_jsonl(corpus.events, out);
    write_file(cfg.paths.corpus, out.str());
  }
  {
    std::ostringstream out;
    write_labels_csv(corpus.records, out);
    write_file(cfg.paths.labels, out.str());
  }
  update_manifest(cfg, "gen", {cfg.paths.corpus, cfg.paths.labels});
  log_line(cfg, "gen: " + std::to_string(corpus.records.size()) +
                    " scripts, " + std::to_string(corpus.events.size()) +
                    " events -> " + cfg.paths.corpus.string());
}

// ---- ingest -----------------------------------------------------------------------

void run_ingest(const RunConfig& cfg) {
  CoreInputs core = load_core(cfg);
  Artifacts a(cfg);
  std::ifstream in(cfg.paths.corpus);
  if (!in) throw IoError("cannot open corpus: " + cfg.paths.corpus.string());
  ParseResult parsed = parse_log_stream(in);
  std::vector<std::filesystem::path> artifacts{a.records_jsonl};
  if (!parsed.errors.empty()) {
    std::string report;
    for (const auto& e : parsed.errors) {
      report += std::to_string(e.line_no) + "\t" + e.cause + "\n";
    }
    write_file(a.ingest_errors, report);
    artifacts.push_back(a.ingest_errors);
  }

  std::vector<ScriptRecord> records =
      derive_records(parsed.events, core.action_map);
  for (const auto& r : records) validate_record(r, core.alphabet);

  // Attach labels when the sidecar exists (synthetic corpora ship one).
  if (std::filesystem::exists(cfg.paths.labels)) {
    auto rows = csv_parse(read_file(cfg.paths.labels));
    std::map<std::string, Label> labels;
    for (std::size_t i = 1; i < rows.size(); ++i) {
      if (rows[i].size() != 2) continue;
      labels[rows[i][0]] =
          rows[i][1] == "1" ? Label::kMalicious : Label::kBenign;
    }
    for (auto& r : records) {
      auto it = labels.find(r.script_id);
      if (it != labels.end()) r.label = it->second;
    }
  }

  std::string out;
  for (const auto& r : records) out += record_to_json(r) + "\n";
  write_file(a.records_jsonl, out);
  update_manifest(cfg, "ingest", artifacts);
  log_line(cfg, "ingest: " + std::to_string(records.size()) + " records (" +
                    std::to_string(parsed.errors.size()) +
                    " malformed lines) -> " + a.records_jsonl.string());
}

// ---- dfa --------------------------------------------------------------------------

void run_dfa(const RunConfig& cfg) {
  CoreInputs core = load_core(cfg);
  Artifacts a(cfg);
  std::vector<ScriptRecord> records = load_records(a.records_jsonl);
  BehaviorDfa dfa = BehaviorDfa::build(core.library, core.weights);
  std::vector<DfaResult> results = match_all(dfa, records, cfg.dfa_thresholds);

  std::string csv = csv_row({"script_id", "dfa_label", "match_pct",
                             "matched_weight", "total_weight",
                             "nearest_final_state", "pattern"});
  for (std::size_t i = 0; i < records.size(); ++i) {
    const DfaResult& r = results[i];
    csv += csv_row({records[i].script_id, dfa_label_name(r.label),
                    fmt_fixed(r.match_pct, 2), std::to_string(r.matched_weight),
                    std::to_string(r.total_weight), r.nearest_final_state,
                    r.nearest_pattern});
  }
  write_file(a.dfa_csv, csv);

  // Per-script report files for the strongest matches.
  std::vector<std::size_t> order(records.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) {
                     return results[x].match_pct > results[y].match_pct;
                   });
  std::vector<std::filesystem::path> artifacts{a.dfa_csv};
  for (std::size_t i = 0; i < std::min(cfg.dfa_reports, order.size()); ++i) {
    const std::size_t idx = order[i];
    auto path = a.dfa_report_dir / (records[idx].script_id + ".txt");
    write_file(path, render_dfa_report(results[idx]));
    artifacts.push_back(path);
  }
  update_manifest(cfg, "dfa", artifacts);
  log_line(cfg, "dfa: " + std::to_string(dfa.state_count()) + " states, " +
                    std::to_string(records.size()) + " sequences matched -> " +
                    a.dfa_csv.string());
}

// ---- features ---------------------------------------------------------------------

void run_features(const RunConfig& cfg) {
  CoreInputs core = load_core(cfg);
  Artifacts a(cfg);
  std::vector<ScriptRecord> records = load_records(a.records_jsonl);
  BehaviorDfa dfa = BehaviorDfa::build(core.library, core.weights);
  std::vector<DfaResult> results = match_all(dfa, records, cfg.dfa_thresholds);

  FeatureSchema schema = FeatureSchema::for_alphabet(core.alphabet);
  LabeledFeatures features;
  features.names = schema.names();
  features.data.schema_id = schema.schema_id();
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!records[i].label) {
      throw InvalidArgumentError("record " + records[i].script_id +
                                 " has no label; training needs labels");
    }
    features.ids.push_back(records[i].script_id);
    features.data.x.push_row(extract(records[i], results[i], schema));
    features.data.y.push_back(*records[i].label);
  }
  write_features_csv(a.features_csv, features);
  {
    nlohmann::json sidecar;
    sidecar["schema_id"] = schema.schema_id();
    sidecar["names"] = schema.names();
    sidecar["mask"] = nullptr;
    write_file(a.schema_json, sidecar.dump(2) + "\n");
  }

  // Feature importance from an RF fitted on the complete dataset.
  ml::ModelSpec rf_spec;
  rf_spec.family = ml::Family::kRandomForest;
  rf_spec.hyper.values = {{"trees", 100}, {"max_depth", 0}};
  rf_spec.seed = derive_seed(cfg.seed, "importance");
  ml::ModelPtr rf = ml::train(rf_spec, features.data);
  std::vector<double> importance = ml::gini_importance(*rf);
  {
    std::string csv = csv_row({"feature", "importance"});
    for (std::size_t i = 0; i < importance.size(); ++i) {
      csv += csv_row({schema.names()[i], fmt_exact(importance[i])});
    }
    write_file(a.importance_csv, csv);
  }

  // Selection-size sweep (full CV per size per family).
  std::vector<ml::Family> families = families_or_all(cfg.features.sweep_families);
  SweepTable sweep =
      sweep_selection_sizes(features.data, importance, cfg.features.sweep_sizes,
                            families, cfg.features.folds,
                            derive_seed(cfg.seed, "sweep"));
  {
    std::vector<std::string> header{"k"};
    for (ml::Family f : families) header.push_back(ml::family_name(f));
    header.push_back("mean");
    std::string csv = csv_row(header);
    for (const SweepRow& row : sweep.rows) {
      std::vector<std::string> cells{std::to_string(row.k)};
      for (ml::Family f : families) {
        cells.push_back(metric_cell(row.best_f1.at(f)));
      }
      cells.push_back(metric_cell(row.mean_f1()));
      csv += csv_row(cells);
    }
    write_file(a.sweep_csv, csv);
  }

  std::size_t k = cfg.features.select_k != 0 ? cfg.features.select_k
                                             : choose_k(sweep);
  SelectionMask mask = SelectionMask::top_k(importance, k);
  Dataset selected = apply_selection(features.data, mask);
  FeatureSchema sel_schema = schema.select(mask.indices);
  {
    nlohmann::json sel;
    sel["k"] = k;
    sel["parent_schema_id"] = schema.schema_id();
    sel["schema_id"] = sel_schema.schema_id();
    sel["indices"] = mask.indices;
    sel["names"] = sel_schema.names();
    write_file(a.selection_json, sel.dump(2) + "\n");
  }
  LabeledFeatures reduced;
  reduced.data = selected;
  reduced.ids = features.ids;
  reduced.names = sel_schema.names();
  write_features_csv(a.selected_csv, reduced);

  update_manifest(cfg, "features",
                  {a.features_csv, a.schema_json, a.importance_csv,
                   a.sweep_csv, a.selection_json, a.selected_csv});
  log_line(cfg, "features: " + std::to_string(features.data.size()) + " x " +
                    std::to_string(schema.dimension()) + ", selected k=" +
                    std::to_string(k) + " -> " + a.selected_csv.string());
}

// ---- train ------------------------------------------------------------------------

void run_train(const RunConfig& cfg) {
  CoreInputs core = load_core(cfg);
  Artifacts a(cfg);
  FeatureSchema sel_schema = selected_schema(cfg, core.alphabet);
  LabeledFeatures features =
      read_features_csv(a.selected_csv, sel_schema.schema_id());

  std::vector<std::size_t> train_idx, test_idx;
  split_indices(features.data.y, cfg.train.test_fraction,
                derive_seed(cfg.seed, "split"), train_idx, test_idx);
  Dataset train_set = features.data.subset(train_idx);
  Dataset test_set = features.data.subset(test_idx);
  {
    nlohmann::json split;
    std::vector<std::string> train_ids, test_ids;
    for (std::size_t i : train_idx) train_ids.push_back(features.ids[i]);
    for (std::size_t i : test_idx) test_ids.push_back(features.ids[i]);
    split["train"] = train_ids;
    split["test"] = test_ids;
    write_file(a.split_json, split.dump(2) + "\n");
  }

  std::vector<ml::Family> families = families_or_all(cfg.train.families);
  std::string cv_csv = csv_row({"model", "params", "mean_f1", "std_f1"});
  std::string summary_csv = csv_row({"model", "best_params", "cv_f1"});
  std::string metrics_csv =
      csv_row({"Model", "Acc.", "Prec.", "Rec.", "F1"});
  std::string timings = "Model  Train. Time  Pred. Time\n";
  std::vector<std::vector<std::string>> table_rows;
  std::vector<std::filesystem::path> artifacts{
      a.split_json, a.cv_results_csv, a.cv_summary_csv, a.metrics_csv,
      a.metrics_txt, a.timings_txt};

  auto params_string = [](const ml::Hyperparams& hyper) {
    std::string out;
    for (const auto& [key, value] : hyper.values) {
      if (!out.empty()) out += ';';
      char buf[64];
      std::snprintf(buf, sizeof(buf), "%s=%g", key.c_str(), value);
      out += buf;
    }
    return out;
  };

  for (ml::Family family : families) {
    ml::CvReport report = ml::grid_search(
        family, ml::default_grid(family), train_set, cfg.train.folds,
        derive_seed(cfg.seed, std::string("cv-") + ml::family_name(family)));
    for (const ml::CvEntry& entry : report.entries) {
      cv_csv += csv_row({ml::family_name(family), params_string(entry.spec.hyper),
                         metric_cell(entry.mean_f1), metric_cell(entry.std_f1)});
    }
    const ml::CvEntry& best = report.best();
    summary_csv += csv_row({ml::family_name(family),
                            params_string(best.spec.hyper),
                            metric_cell(best.mean_f1)});

    ml::ModelPtr model = ml::train(best.spec, train_set);
    auto started = std::chrono::steady_clock::now();
    std::vector<Label> pred(test_set.size());
    for (std::size_t i = 0; i < test_set.size(); ++i) {
      pred[i] = model->predict(test_set.x.row(i));
    }
    double pred_time =
        std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                      started)
            .count();
    ml::Metrics metrics =
        ml::compute_metrics(test_set.y, pred, model->train_time_s(), pred_time);

    metrics_csv += csv_row({ml::family_name(family), metric_cell(metrics.accuracy),
                            metric_cell(metrics.precision),
                            metric_cell(metrics.recall), metric_cell(metrics.f1)});
    table_rows.push_back({ml::family_name(family), metric_cell(metrics.accuracy),
                          metric_cell(metrics.precision),
                          metric_cell(metrics.recall), metric_cell(metrics.f1),
                          metric_cell(metrics.train_time_s),
                          metric_cell(metrics.pred_time_s)});
    timings += std::string(ml::family_name(family)) + "  " +
               metric_cell(metrics.train_time_s) + "  " +
               metric_cell(metrics.pred_time_s) + "\n";

    auto model_path =
        a.models_dir / (std::string(ml::family_name(family)) + ".json");
    write_file(model_path, model->to_json().dump(2) + "\n");
    artifacts.push_back(model_path);
  }

  write_file(a.cv_results_csv, cv_csv);
  write_file(a.cv_summary_csv, summary_csv);
  write_file(a.metrics_csv, metrics_csv);
  write_file(a.metrics_txt,
             text_table({"Model", "Acc.", "Prec.", "Rec.", "F1",
                         "Train. Time", "Pred. Time"},
                        table_rows));
  write_file(a.timings_txt, timings);
  update_manifest(cfg, "train", artifacts);
  log_line(cfg, "train: " + std::to_string(families.size()) +
                    " families on " + std::to_string(train_set.size()) +
                    " train / " + std::to_string(test_set.size()) +
                    " test -> " + a.metrics_csv.string());
}

// ---- attack -----------------------------------------------------------------------

void run_attack(const RunConfig& cfg) {
  CoreInputs core = load_core(cfg);
  Artifacts a(cfg);
  FeatureSchema sel_schema = selected_schema(cfg, core.alphabet);
  LabeledFeatures features =
      read_features_csv(a.selected_csv, sel_schema.schema_id());

  nlohmann::json split = nlohmann::json::parse(read_file(a.split_json));
  std::map<std::string, std::size_t> row_of;
  for (std::size_t i = 0; i < features.ids.size(); ++i) {
    row_of[features.ids[i]] = i;
  }
  auto subset_of_ids = [&](const nlohmann::json& ids) {
    std::vector<std::size_t> rows;
    for (const auto& id : ids) rows.push_back(row_of.at(id.get<std::string>()));
    return features.data.subset(rows);
  };
  Dataset train_set = subset_of_ids(split.at("train"));
  Dataset test_set = subset_of_ids(split.at("test"));

  adv::AttackContext ctx = adv::AttackContext::fit(train_set, &sel_schema);

  std::vector<ml::Family> families = families_or_all(cfg.train.families);
  std::vector<adv::AttackKind> eval_attacks =
      attacks_or_all(cfg.attack.eval_attacks);

  std::string csv = csv_row({"Model", "Attack", "Acc.", "Prec.", "Rec.", "F1"});
  std::vector<std::vector<std::string>> table_rows;
  std::vector<std::filesystem::path> artifacts{a.robustness_csv,
                                               a.robustness_txt};
  for (ml::Family family : families) {
    auto model_path =
        a.models_dir / (std::string(ml::family_name(family)) + ".json");
    ml::ModelPtr plain = ml::model_from_json_file(model_path.string());
    ml::ModelSpec spec = plain->spec();

    std::vector<adv::AttackSpec> augment;
    for (adv::AttackKind kind : cfg.attack.augment_attacks) {
      if (adv::attack_applicable(kind, family)) {
        augment.push_back(make_attack_spec(
            cfg, kind,
            derive_seed(cfg.seed, std::string("augment-") +
                                      ml::family_name(family))));
      }
    }
    ml::ModelPtr robust =
        adv::adversarial_training(spec, train_set, augment, &sel_schema);
    auto robust_path = a.robust_models_dir /
                       (std::string(ml::family_name(family)) + ".json");
    write_file(robust_path, robust->to_json().dump(2) + "\n");
    artifacts.push_back(robust_path);

    for (adv::AttackKind kind : eval_attacks) {
      if (!adv::attack_applicable(kind, family)) continue;
      adv::AttackSpec attack = make_attack_spec(
          cfg, kind,
          derive_seed(cfg.seed, std::string("attack-") +
                                    ml::family_name(family) + "-" +
                                    adv::attack_name(kind)));
      ml::Metrics metrics =
          adv::evaluate_under_attack(*robust, test_set, attack, ctx);
      csv += csv_row({ml::family_name(family), adv::attack_name(kind),
                      metric_cell(metrics.accuracy),
                      metric_cell(metrics.precision),
                      metric_cell(metrics.recall), metric_cell(metrics.f1)});
      table_rows.push_back({ml::family_name(family), adv::attack_name(kind),
                            metric_cell(metrics.accuracy),
                            metric_cell(metrics.precision),
                            metric_cell(metrics.recall),
                            metric_cell(metrics.f1)});
      log_line(cfg, std::string("attack: ") + ml::family_name(family) +
                        " under " + adv::attack_name(kind) + ": F1 " +
                        metric_cell(metrics.f1));
    }
  }
  write_file(a.robustness_csv, csv);
  write_file(a.robustness_txt,
             text_table({"Model", "Attack", "Acc.", "Prec.", "Rec.", "F1"},
                        table_rows));
  update_manifest(cfg, "attack", artifacts);
  log_line(cfg, "attack: robustness table -> " + a.robustness_csv.string());
}

// ---- explain ----------------------------------------------------------------------

void run_explain(const RunConfig& cfg) {
  CoreInputs core = load_core(cfg);
  Artifacts a(cfg);
  FeatureSchema sel_schema = selected_schema(cfg, core.alphabet);
  LabeledFeatures features =
      read_features_csv(a.selected_csv, sel_schema.schema_id());
  std::vector<ScriptRecord> records = load_records(a.records_jsonl);
  BehaviorDfa dfa = BehaviorDfa::build(core.library, core.weights);

  // Model choice: explicit family or the best CV performer.
  std::string family_name = cfg.explain.model_family;
  if (family_name == "best") {
    auto rows = csv_parse(read_file(a.cv_summary_csv));
    double best = -1.0;
    for (std::size_t i = 1; i < rows.size(); ++i) {
      double f1 = std::strtod(rows[i][2].c_str(), nullptr);
      if (f1 > best) {
        best = f1;
        family_name = rows[i][0];
      }
    }
  }
  ml::ModelPtr model = ml::model_from_json_file(
      (a.models_dir / (family_name + ".json")).string());

  nlohmann::json split = nlohmann::json::parse(read_file(a.split_json));
  std::map<std::string, std::size_t> row_of;
  for (std::size_t i = 0; i < features.ids.size(); ++i) {
    row_of[features.ids[i]] = i;
  }
  std::map<std::string, std::size_t> record_of;
  for (std::size_t i = 0; i < records.size(); ++i) {
    record_of[records[i].script_id] = i;
  }

  // Background: seeded sample of the training split.
  std::vector<std::size_t> train_rows;
  for (const auto& id : split.at("train")) {
    train_rows.push_back(row_of.at(id.get<std::string>()));
  }
  {
    auto rng = make_rng(derive_seed(cfg.seed, "background"));
    std::shuffle(train_rows.begin(), train_rows.end(), rng);
  }
  if (train_rows.size() > cfg.explain.background) {
    train_rows.resize(cfg.explain.background);
  }
  std::sort(train_rows.begin(), train_rows.end());
  Dataset background = features.data.subset(train_rows);

  // Scripts to explain: strongest and weakest scores on the test split.
  std::vector<std::pair<double, std::string>> scored;
  for (const auto& id : split.at("test")) {
    std::string sid = id.get<std::string>();
    scored.emplace_back(
        model->decision_score(features.data.x.row(row_of.at(sid))), sid);
  }
  std::sort(scored.begin(), scored.end(), [](const auto& x, const auto& y) {
    return x.first != y.first ? x.first > y.first : x.second < y.second;
  });
  std::vector<std::string> chosen;
  std::size_t n = std::min<std::size_t>(cfg.explain.n_scripts, scored.size());
  std::size_t top = n - n / 2;
  for (std::size_t i = 0; i < top; ++i) chosen.push_back(scored[i].second);
  for (std::size_t i = 0; i < n / 2; ++i) {
    chosen.push_back(scored[scored.size() - 1 - i].second);
  }

  std::vector<std::string> display_names;
  for (const std::string& name : sel_schema.names()) {
    display_names.push_back(expl::display_feature_name(name));
  }

  std::optional<expl::LlmEndpointConfig> llm;
  if (cfg.llm.enabled) llm = cfg.llm.endpoint;

  std::vector<std::filesystem::path> artifacts;
  for (const std::string& sid : chosen) {
    std::size_t row = row_of.at(sid);
    const ScriptRecord& record = records.at(record_of.at(sid));
    DfaResult dfa_result = dfa.match(record.sequence, cfg.dfa_thresholds);

    expl::Attribution attribution = expl::shapley_sampled(
        *model, features.data.x.row(row), background, cfg.explain.shap_samples,
        derive_seed(cfg.seed, "shap-" + sid), display_names);

    expl::Verdict verdict;
    verdict.label = model->predict(features.data.x.row(row));
    verdict.score = attribution.final_score;
    verdict.probability = attribution.final_probability;

    expl::ExplanationBundle bundle = expl::build_bundle(
        std::move(attribution), std::move(dfa_result), verdict);
    std::string narrative = expl::narrate(bundle, llm);

    auto shap_path = a.explain_dir / (sid + ".shap.txt");
    auto dfa_path = a.explain_dir / (sid + ".dfa.txt");
    auto json_path = a.explain_dir / (sid + ".json");
    write_file(shap_path, expl::render_shap_report(bundle.attribution));
    write_file(dfa_path, render_dfa_report(bundle.dfa));
    write_file(json_path, expl::bundle_json(bundle, narrative).dump(2) + "\n");
    artifacts.push_back(shap_path);
    artifacts.push_back(dfa_path);
    artifacts.push_back(json_path);
    log_line(cfg, "explain: " + sid + " (" + family_name + ") -> " +
                      json_path.string());
  }
  update_manifest(cfg, "explain", artifacts);
}

void run_pipeline(const RunConfig& cfg) {
  run_gen(cfg);
  run_ingest(cfg);
  run_dfa(cfg);
  run_features(cfg);
  run_train(cfg);
  run_attack(cfg);
  run_explain(cfg);
}

}  // namespace magescan
