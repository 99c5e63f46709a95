#include <doctest.h>

#include <sstream>

#include "fixtures.hpp"
#include "magescan/corpus.hpp"

using namespace magescan;

namespace {

Alphabet alphabet() {
  return Alphabet({"Set Callback", "Add Event Handler", "Access Input",
                   "Access DOM Element Attribute", "Create DOM Element",
                   "Send Data", "Update DOM Element", "Log Message",
                   "Scroll Page"});
}

ActionBehaviorMap action_map() {
  return ActionBehaviorMap(
      {
          {"set_cb", {"Set Callback"}},
          {"add_handler", {"Add Event Handler"}},
          {"read_input", {"Access Input"}},
          {"read_attr", {"Access DOM Element Attribute"}},
          {"create_el", {"Create DOM Element"}},
          {"post", {"Send Data"}},
          {"update_el", {"Update DOM Element"}},
          {"log", {"Log Message"}},
          {"scroll", {"Scroll Page"}},
          {"read_fields", {"Access Input", "Access DOM Element Attribute"}},
          {"exfil_update", {"Send Data", "Update DOM Element"}},
      },
      alphabet());
}

GenConfig base_config() {
  GenConfig cfg;
  cfg.n = 200;
  cfg.malicious_fraction = 0.1;
  cfg.length_min = 3;
  cfg.length_max = 12;
  cfg.seed = 11;
  return cfg;
}

}  // namespace

TEST_CASE("positive count is exactly round(n * fraction)") {
  GenConfig cfg = base_config();
  cfg.n = 1000;
  cfg.malicious_fraction = 0.047;
  GeneratedCorpus corpus =
      generate(cfg, fixtures::skim_library(), alphabet(), action_map());
  std::size_t positives = 0;
  for (const auto& r : corpus.records) {
    positives += r.label == Label::kMalicious;
  }
  CHECK(positives == 47);
  CHECK(corpus.records.size() == 1000);
}

TEST_CASE("n = 0 gives an empty corpus") {
  GenConfig cfg = base_config();
  cfg.n = 0;
  GeneratedCorpus corpus =
      generate(cfg, fixtures::skim_library(), alphabet(), action_map());
  CHECK(corpus.records.empty());
  CHECK(corpus.events.empty());
}

TEST_CASE("empty library is rejected when malicious records are requested") {
  GenConfig cfg = base_config();
  CHECK_THROWS_AS(generate(cfg, PatternLibrary{}, alphabet(), action_map()),
                  EmptyLibraryError);
  cfg.malicious_fraction = 0.0;
  CHECK_NOTHROW(generate(cfg, PatternLibrary{}, alphabet(), action_map()));
}

TEST_CASE("with zero drop noise every malicious record matches at 100 percent") {
  GenConfig cfg = base_config();
  cfg.default_noise.drop = 0.0;
  cfg.default_noise.insert = 0.5;
  GeneratedCorpus corpus =
      generate(cfg, fixtures::skim_library(), alphabet(), action_map());
  BehaviorDfa dfa = BehaviorDfa::build(fixtures::skim_library(),
                                       fixtures::skim_weights());
  for (const auto& r : corpus.records) {
    if (r.label != Label::kMalicious) continue;
    DfaResult result = dfa.match(r.sequence);
    CHECK(result.match_pct == doctest::Approx(100.0));
  }
}

TEST_CASE("identical seeds give bitwise-identical corpora") {
  GenConfig cfg = base_config();
  GeneratedCorpus a =
      generate(cfg, fixtures::skim_library(), alphabet(), action_map());
  GeneratedCorpus b =
      generate(cfg, fixtures::skim_library(), alphabet(), action_map());
  REQUIRE(a.records.size() == b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    CHECK(a.records[i] == b.records[i]);
  }
  std::ostringstream ja, jb;
  write_corpus_jsonl(a.events, ja);
  write_corpus_jsonl(b.events, jb);
  CHECK(ja.str() == jb.str());

  cfg.seed = 12;
  GeneratedCorpus c =
      generate(cfg, fixtures::skim_library(), alphabet(), action_map());
  bool any_diff = false;
  for (std::size_t i = 0; i < a.records.size() && !any_diff; ++i) {
    any_diff = !(a.records[i] == c.records[i]);
  }
  CHECK(any_diff);
}

TEST_CASE("emitted events ingest back into the generated records") {
  GenConfig cfg = base_config();
  cfg.n = 60;
  GeneratedCorpus corpus =
      generate(cfg, fixtures::skim_library(), alphabet(), action_map());
  std::ostringstream jsonl;
  write_corpus_jsonl(corpus.events, jsonl);
  ParseResult parsed = parse_log_stream(jsonl.str());
  CHECK(parsed.errors.empty());
  auto derived = derive_records(parsed.events, action_map());
  REQUIRE(derived.size() == corpus.records.size());
  for (std::size_t i = 0; i < derived.size(); ++i) {
    // derived records carry no label; compare the rest
    ScriptRecord expect = corpus.records[i];
    expect.label.reset();
    CHECK(derived[i] == expect);
  }
}

TEST_CASE("labels csv lists every script") {
  GenConfig cfg = base_config();
  cfg.n = 10;
  GeneratedCorpus corpus =
      generate(cfg, fixtures::skim_library(), alphabet(), action_map());
  std::ostringstream out;
  write_labels_csv(corpus.records, out);
  std::string text = out.str();
  CHECK(text.rfind("script_id,label\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 11);
}

TEST_CASE("a pattern step without a representing action is a config error") {
  PatternLibrary lib;
  lib.patterns.push_back(
      {"odd", {BehaviorStep{"Set Callback", "Scroll Page"}}});
  GenConfig cfg = base_config();
  CHECK_THROWS_AS(generate(cfg, lib, alphabet(), action_map()), ConfigError);
}
