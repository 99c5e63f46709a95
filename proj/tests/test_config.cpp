#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "magescan/config.hpp"
#include "magescan/toml.hpp"
#include "magescan/util.hpp"

using namespace magescan;

TEST_CASE("toml subset: tables, scalars, arrays, comments") {
  std::string text = R"(# top comment
seed = 42
name = "hello \"quoted\" world"
ratio = 0.25
flag = true

[section]
items = [1, 2, 3]   # trailing comment
words = ["a", "b"]
nested.key = -7

[other.deep]
value = 1e-3
)";
  toml::Table t = toml::parse(text);
  CHECK(toml::get_int(t, "seed") == 42);
  CHECK(toml::get_string(t, "name") == "hello \"quoted\" world");
  CHECK(toml::get_float(t, "ratio") == 0.25);
  CHECK(toml::get_bool_or(t, "flag", false));
  CHECK(toml::get_int_array_or(t, "section.items", {}) ==
        std::vector<std::int64_t>{1, 2, 3});
  CHECK(toml::get_string_array_or(t, "section.words", {}) ==
        std::vector<std::string>{"a", "b"});
  CHECK(toml::get_int(t, "section.nested.key") == -7);
  CHECK(toml::get_float(t, "other.deep.value") == doctest::Approx(1e-3));
  // integer promotes to float, but not the reverse
  CHECK(toml::get_float_or(t, "seed", 0.0) == 42.0);
  CHECK_THROWS_AS(toml::get_int(t, "ratio"), ConfigError);
  CHECK_THROWS_AS(toml::get_string(t, "missing"), ConfigError);
  CHECK(toml::get_string_or(t, "missing", "dflt") == "dflt");
}

TEST_CASE("toml subset rejects what it does not support") {
  CHECK_THROWS_AS(toml::parse("a = 1\na = 2\n"), ConfigError);
  CHECK_THROWS_AS(toml::parse("[[table]]\n"), ConfigError);
  CHECK_THROWS_AS(toml::parse("a = [1, \"x\"]\n"), ConfigError);
  CHECK_THROWS_AS(toml::parse("a = 2024-01-01\n"), ConfigError);
  CHECK_THROWS_AS(toml::parse("a =\n"), ConfigError);
  CHECK_THROWS_AS(toml::parse("a 1\n"), ConfigError);
  try {
    toml::parse("ok = 1\nbroken = [1,\n");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
}

namespace {

std::filesystem::path write_temp_config(bool with_seed = true,
                                        bool valid_paths = true) {
  auto dir = std::filesystem::temp_directory_path() / "magescan_cfg_test";
  std::filesystem::create_directories(dir);
  auto file = [&](const char* name, const std::string& content) {
    write_file(dir / name, content);
    return std::string(name);
  };
  file("alphabet.json", R"(["Send Data","Log Message"])");
  file("map.json", R"({"post":["Send Data"],"log":["Log Message"]})");
  file("patterns.json", R"({"patterns":[{"name":"p","steps":[["Send Data"]]}]})");
  file("weights.json", R"({"Send Data":3,"Log Message":1})");

  std::string cfg;
  if (with_seed) cfg += "seed = 7\n";
  cfg += "out_dir = \"outdir\"\n[paths]\n";
  cfg += "alphabet = \"alphabet.json\"\n";
  cfg += "action_map = \"map.json\"\n";
  cfg += valid_paths ? "pattern_library = \"patterns.json\"\n"
                     : "pattern_library = \"missing.json\"\n";
  cfg += "weights = \"weights.json\"\n";
  write_file(dir / "run.toml", cfg);
  return dir / "run.toml";
}

}  // namespace

TEST_CASE("run config loads, resolves paths, and validates existence") {
  auto path = write_temp_config();
  RunConfig cfg = RunConfig::load(path);
  CHECK(cfg.seed == 7);
  CHECK(cfg.out_dir.filename() == "outdir");
  CHECK(cfg.paths.alphabet.is_absolute());
  CHECK(std::filesystem::exists(cfg.paths.alphabet));
  CHECK(cfg.paths.corpus == cfg.out_dir / "corpus.jsonl");
  CHECK(cfg.features.sweep_sizes.size() == 9);

  RunConfig::Overrides ov;
  ov.seed = 99;
  ov.out_dir = "/tmp/elsewhere";
  RunConfig cfg2 = RunConfig::load(path, ov);
  CHECK(cfg2.seed == 99);
  CHECK(cfg2.out_dir == "/tmp/elsewhere");
}

TEST_CASE("missing seed and missing files are config errors") {
  auto no_seed = write_temp_config(false);
  CHECK_THROWS_AS(RunConfig::load(no_seed), ConfigError);
  RunConfig::Overrides ov;
  ov.seed = 3;
  CHECK_NOTHROW(RunConfig::load(no_seed, ov));

  auto bad_path = write_temp_config(true, false);
  try {
    RunConfig::load(bad_path);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("missing.json") != std::string::npos);
  }
}

TEST_CASE("config hash is stable and sensitive") {
  auto path = write_temp_config();
  RunConfig a = RunConfig::load(path);
  RunConfig b = RunConfig::load(path);
  CHECK(a.config_hash() == b.config_hash());
  RunConfig::Overrides ov;
  ov.seed = 1234;
  RunConfig c = RunConfig::load(path, ov);
  CHECK(a.config_hash() != c.config_hash());
}

TEST_CASE("text table aligns columns") {
  std::string table = text_table({"Model", "F1"}, {{"DT", "0.9000"},
                                                   {"AdaBoost", "0.8654"}});
  CHECK(table.find("Model") == 0);
  CHECK(table.find("AdaBoost") != std::string::npos);
  // each line has the same width for the first column
  CHECK(table.find("DT      ") != std::string::npos);
}

TEST_CASE("csv escaping round-trips") {
  std::vector<std::string> fields{"plain", "with,comma", "with\"quote",
                                  "multi\nline"};
  std::string row = csv_row(fields);
  auto parsed = csv_parse(row);
  REQUIRE(parsed.size() == 1);
  CHECK(parsed[0] == fields);
}
