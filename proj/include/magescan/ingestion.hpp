#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "magescan/behavior.hpp"

namespace magescan {

// One execution-log line. JSONL keys are exactly: script_id, session_id,
// page, ts, action, clicks_before, inline.
struct RawEvent {
  std::string script_id;
  std::string session_id;
  std::string page;
  std::int64_t ts = 0;  // milliseconds, >= 0
  std::string action;
  std::int64_t clicks_before = 0;
  bool inline_origin = false;
};

struct MalformedLine {
  std::size_t line_no = 0;  // 1-based
  std::string cause;
};

struct ParseResult {
  std::vector<RawEvent> events;  // file order
  std::vector<MalformedLine> errors;
};

// action -> non-empty list of alphabet behaviors. File format:
// JSON object {action: [behavior, ...]}.
class ActionBehaviorMap {
 public:
  explicit ActionBehaviorMap(std::map<std::string, std::vector<std::string>> entries,
                             const Alphabet& alphabet);
  static ActionBehaviorMap from_json_file(const std::filesystem::path& path,
                                          const Alphabet& alphabet);

  // nullptr when the action is unmapped.
  const std::vector<std::string>* find(const std::string& action) const;
  const std::map<std::string, std::vector<std::string>>& entries() const {
    return entries_;
  }

 private:
  std::map<std::string, std::vector<std::string>> entries_;
};

// Parses newline-delimited JSON events. Malformed lines are collected, not
// dropped silently; throws ParseError when more than half of the non-blank
// lines are malformed.
ParseResult parse_log_stream(std::istream& input);
ParseResult parse_log_stream(const std::string& text);

// Groups events into one ScriptRecord per script_id (records ordered by id).
// Steps are ordered by (ts, input order); an event mapping to several
// behaviors forms one step carrying that set. clicks_before is the mean of
// the event values; inline/session/page come from the first event.
std::vector<ScriptRecord> derive_records(const std::vector<RawEvent>& events,
                                         const ActionBehaviorMap& map);

}  // namespace magescan
