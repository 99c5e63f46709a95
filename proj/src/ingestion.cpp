#include "magescan/ingestion.hpp"

#include <algorithm>
#include <istream>
#include <sstream>

#include <json.hpp>

#include "magescan/util.hpp"

namespace magescan {

namespace {

const char* const kEventKeys[] = {"script_id", "session_id",   "page", "ts",
                                  "action",    "clicks_before", "inline"};

RawEvent event_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw std::runtime_error("event is not a JSON object");
  for (const char* key : kEventKeys) {
    if (!j.contains(key)) {
      throw std::runtime_error(std::string("missing key: ") + key);
    }
  }
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = std::any_of(std::begin(kEventKeys), std::end(kEventKeys),
                             [&](const char* k) { return it.key() == k; });
    if (!known) throw std::runtime_error("unexpected key: " + it.key());
  }
  RawEvent e;
  e.script_id = j.at("script_id").get<std::string>();
  e.session_id = j.at("session_id").get<std::string>();
  e.page = j.at("page").get<std::string>();
  if (!j.at("ts").is_number_integer())
    throw std::runtime_error("ts must be an integer");
  e.ts = j.at("ts").get<std::int64_t>();
  if (e.ts < 0) throw std::runtime_error("ts must be >= 0");
  e.action = j.at("action").get<std::string>();
  if (!j.at("clicks_before").is_number_integer())
    throw std::runtime_error("clicks_before must be an integer");
  e.clicks_before = j.at("clicks_before").get<std::int64_t>();
  if (e.clicks_before < 0)
    throw std::runtime_error("clicks_before must be >= 0");
  if (!j.at("inline").is_boolean())
    throw std::runtime_error("inline must be a boolean");
  e.inline_origin = j.at("inline").get<bool>();
  return e;
}

}  // namespace

ActionBehaviorMap::ActionBehaviorMap(
    std::map<std::string, std::vector<std::string>> entries,
    const Alphabet& alphabet)
    : entries_(std::move(entries)) {
  for (const auto& [action, behaviors] : entries_) {
    if (behaviors.empty()) {
      throw ConfigError("action \"" + action + "\" maps to no behaviors");
    }
    for (const auto& b : behaviors) {
      if (!alphabet.contains(b)) {
        throw ConfigError("action \"" + action +
                          "\" maps to unknown behavior \"" + b + "\"");
      }
    }
  }
}

ActionBehaviorMap ActionBehaviorMap::from_json_file(
    const std::filesystem::path& path, const Alphabet& alphabet) {
  nlohmann::json j = nlohmann::json::parse(read_file(path));
  if (!j.is_object()) {
    throw ConfigError("action map must be a JSON object: " + path.string());
  }
  std::map<std::string, std::vector<std::string>> entries;
  for (auto it = j.begin(); it != j.end(); ++it) {
    entries[it.key()] = it.value().get<std::vector<std::string>>();
  }
  return ActionBehaviorMap(std::move(entries), alphabet);
}

const std::vector<std::string>* ActionBehaviorMap::find(
    const std::string& action) const {
  auto it = entries_.find(action);
  return it == entries_.end() ? nullptr : &it->second;
}

ParseResult parse_log_stream(std::istream& input) {
  ParseResult result;
  std::string line;
  std::size_t line_no = 0;
  std::size_t considered = 0;
  while (std::getline(input, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;  // blank
    ++considered;
    try {
      result.events.push_back(
          event_from_json(nlohmann::json::parse(line)));
    } catch (const std::exception& e) {
      result.errors.push_back({line_no, e.what()});
    }
  }
  if (considered > 0 && result.errors.size() * 2 > considered) {
    throw ParseError("more than half of the input lines are malformed (" +
                     std::to_string(result.errors.size()) + "/" +
                     std::to_string(considered) + ")");
  }
  return result;
}

ParseResult parse_log_stream(const std::string& text) {
  std::istringstream in(text);
  return parse_log_stream(in);
}

std::vector<ScriptRecord> derive_records(const std::vector<RawEvent>& events,
                                         const ActionBehaviorMap& map) {
  struct Item {
    std::int64_t ts;
    std::size_t order;  // input order, breaks ts ties
    const RawEvent* event;
  };
  std::map<std::string, std::vector<Item>> by_script;
  for (std::size_t i = 0; i < events.size(); ++i) {
    by_script[events[i].script_id].push_back({events[i].ts, i, &events[i]});
  }

  std::vector<ScriptRecord> records;
  records.reserve(by_script.size());
  for (auto& [script_id, items] : by_script) {
    std::sort(items.begin(), items.end(), [](const Item& a, const Item& b) {
      return a.ts != b.ts ? a.ts < b.ts : a.order < b.order;
    });
    ScriptRecord r;
    r.script_id = script_id;
    r.session_id = items.front().event->session_id;
    r.page = items.front().event->page;
    r.inline_origin = items.front().event->inline_origin;
    double clicks_total = 0.0;
    for (const Item& item : items) {
      const RawEvent& e = *item.event;
      if (e.inline_origin != r.inline_origin) {
        throw InconsistentInlineFlagError("script " + script_id +
                                          " has conflicting inline flags");
      }
      const std::vector<std::string>* behaviors = map.find(e.action);
      if (!behaviors) {
        throw UnmappedActionError("action \"" + e.action +
                                  "\" is not in the action map");
      }
      r.sequence.emplace_back(*behaviors);
      clicks_total += static_cast<double>(e.clicks_before);
    }
    r.clicks_before = clicks_total / static_cast<double>(items.size());
    records.push_back(std::move(r));
  }
  return records;
}

}  // namespace magescan
