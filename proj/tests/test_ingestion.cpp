#include <doctest.h>

#include <algorithm>
#include <random>
#include <sstream>

#include "magescan/ingestion.hpp"

using namespace magescan;

namespace {

Alphabet alphabet() {
  return Alphabet({"Set Callback", "Send Data", "Access Input",
                   "Access DOM Element Attribute", "Log Message"});
}

ActionBehaviorMap action_map() {
  return ActionBehaviorMap(
      {
          {"set_cb", {"Set Callback"}},
          {"post", {"Send Data"}},
          {"read_fields", {"Access Input", "Access DOM Element Attribute"}},
          {"log", {"Log Message"}},
      },
      alphabet());
}

std::string event_line(const std::string& script, std::int64_t ts,
                       const std::string& action, int clicks = 2,
                       bool is_inline = true) {
  std::ostringstream out;
  out << R"({"script_id":")" << script
      << R"(","session_id":"sess1","page":"/pay","ts":)" << ts
      << R"(,"action":")" << action << R"(","clicks_before":)" << clicks
      << R"(,"inline":)" << (is_inline ? "true" : "false") << "}";
  return out.str();
}

}  // namespace

TEST_CASE("parse_log_stream keeps valid lines in order") {
  std::string text = event_line("a", 1, "set_cb") + "\n" +
                     event_line("a", 2, "post") + "\n" +
                     event_line("b", 3, "log") + "\n";
  ParseResult r = parse_log_stream(text);
  REQUIRE(r.events.size() == 3);
  CHECK(r.errors.empty());
  CHECK(r.events[0].action == "set_cb");
  CHECK(r.events[2].script_id == "b");
}

TEST_CASE("parse_log_stream on empty input") {
  ParseResult r = parse_log_stream(std::string{});
  CHECK(r.events.empty());
  CHECK(r.errors.empty());
}

TEST_CASE("malformed lines are reported, not dropped silently") {
  std::string valid = event_line("a", 1, "set_cb");
  std::string truncated = valid.substr(0, valid.size() / 2);
  std::string text = valid + "\n" + truncated + "\n" +
                     event_line("a", 2, "post") + "\n";
  ParseResult r = parse_log_stream(text);
  CHECK(r.events.size() == 2);
  REQUIRE(r.errors.size() == 1);
  CHECK(r.errors[0].line_no == 2);
}

TEST_CASE("unknown keys and bad types are malformed") {
  std::string extra =
      R"({"script_id":"a","session_id":"s","page":"p","ts":1,"action":"x","clicks_before":0,"inline":true,"bogus":1})";
  std::string bad_ts =
      R"({"script_id":"a","session_id":"s","page":"p","ts":-5,"action":"x","clicks_before":0,"inline":true})";
  std::string ok = event_line("a", 1, "set_cb");
  ParseResult r =
      parse_log_stream(extra + "\n" + bad_ts + "\n" + ok + "\n" + ok + "\n");
  CHECK(r.events.size() == 2);
  CHECK(r.errors.size() == 2);
}

TEST_CASE("hard failure when most lines are malformed") {
  std::string text = "garbage\n{broken\n" + event_line("a", 1, "set_cb") + "\n";
  CHECK_THROWS_AS(parse_log_stream(text), ParseError);
}

TEST_CASE("derive_records maps actions and keeps temporal order") {
  std::string text = event_line("a", 10, "set_cb") + "\n" +
                     event_line("a", 20, "read_fields") + "\n";
  auto events = parse_log_stream(text).events;
  auto records = derive_records(events, action_map());
  REQUIRE(records.size() == 1);
  const ScriptRecord& r = records[0];
  REQUIRE(r.sequence.size() == 2);
  CHECK(r.sequence[0] == BehaviorStep{"Set Callback"});
  CHECK(r.sequence[1] ==
        BehaviorStep({"Access Input", "Access DOM Element Attribute"}));
  CHECK(r.clicks_before == doctest::Approx(2.0));
  CHECK(r.inline_origin);
}

TEST_CASE("two interleaved scripts split into time-ordered records") {
  std::string text = event_line("b", 40, "post", 4) + "\n" +
                     event_line("a", 10, "set_cb", 1) + "\n" +
                     event_line("b", 20, "set_cb", 2) + "\n" +
                     event_line("a", 30, "post", 3) + "\n";
  auto records = derive_records(parse_log_stream(text).events, action_map());
  REQUIRE(records.size() == 2);
  CHECK(records[0].script_id == "a");
  CHECK(records[0].sequence[0] == BehaviorStep{"Set Callback"});
  CHECK(records[0].sequence[1] == BehaviorStep{"Send Data"});
  CHECK(records[0].clicks_before == doctest::Approx(2.0));
  CHECK(records[1].script_id == "b");
  CHECK(records[1].sequence[0] == BehaviorStep{"Set Callback"});
  CHECK(records[1].sequence[1] == BehaviorStep{"Send Data"});
  CHECK(records[1].clicks_before == doctest::Approx(3.0));
}

TEST_CASE("unmapped actions and inline conflicts are hard errors") {
  auto events = parse_log_stream(event_line("a", 1, "unknown_op")).events;
  CHECK_THROWS_AS(derive_records(events, action_map()), UnmappedActionError);

  std::string conflict = event_line("a", 1, "set_cb", 1, true) + "\n" +
                         event_line("a", 2, "post", 1, false) + "\n";
  CHECK_THROWS_AS(
      derive_records(parse_log_stream(conflict).events, action_map()),
      InconsistentInlineFlagError);
}

TEST_CASE("line permutation with distinct timestamps is invisible") {
  std::vector<std::string> lines;
  for (int i = 0; i < 12; ++i) {
    lines.push_back(event_line(i % 3 == 0 ? "a" : "b", 100 + i * 7,
                               i % 2 ? "post" : "set_cb", i % 5));
  }
  auto join = [](const std::vector<std::string>& ls) {
    std::string out;
    for (const auto& l : ls) out += l + "\n";
    return out;
  };
  auto baseline = derive_records(parse_log_stream(join(lines)).events,
                                 action_map());
  std::mt19937_64 rng(3);
  for (int rep = 0; rep < 10; ++rep) {
    std::shuffle(lines.begin(), lines.end(), rng);
    auto shuffled = derive_records(parse_log_stream(join(lines)).events,
                                   action_map());
    CHECK(shuffled == baseline);
  }
}

TEST_CASE("record count equals distinct script ids") {
  std::string text;
  for (int i = 0; i < 20; ++i) {
    text += event_line("s" + std::to_string(i % 7), i, "log") + "\n";
  }
  auto records = derive_records(parse_log_stream(text).events, action_map());
  CHECK(records.size() == 7);
}
