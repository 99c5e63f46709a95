#include "magescan/behavior.hpp"

#include <algorithm>
#include <numeric>

#include <json.hpp>

#include "magescan/util.hpp"

namespace magescan {

Alphabet::Alphabet(std::vector<std::string> names) : names_(std::move(names)) {
  if (names_.empty()) {
    throw InvalidArgumentError("alphabet must not be empty");
  }
  sorted_.resize(names_.size());
  std::iota(sorted_.begin(), sorted_.end(), std::size_t{0});
  std::sort(sorted_.begin(), sorted_.end(),
            [&](std::size_t a, std::size_t b) { return names_[a] < names_[b]; });
  for (std::size_t i = 0; i + 1 < sorted_.size(); ++i) {
    if (names_[sorted_[i]] == names_[sorted_[i + 1]]) {
      throw InvalidArgumentError("duplicate behavior in alphabet: " +
                                 names_[sorted_[i]]);
    }
  }
  for (const auto& n : names_) {
    if (n.empty()) throw InvalidArgumentError("empty behavior name in alphabet");
  }
}

Alphabet Alphabet::from_json(const std::string& json_text) {
  nlohmann::json j = nlohmann::json::parse(json_text);
  if (!j.is_array()) throw ConfigError("alphabet file must be a JSON array");
  std::vector<std::string> names;
  for (const auto& item : j) {
    if (!item.is_string()) {
      throw ConfigError("alphabet entries must be strings");
    }
    names.push_back(item.get<std::string>());
  }
  return Alphabet(std::move(names));
}

Alphabet Alphabet::from_json_file(const std::filesystem::path& path) {
  return from_json(read_file(path));
}

int Alphabet::index_of(const std::string& name) const {
  auto it = std::lower_bound(
      sorted_.begin(), sorted_.end(), name,
      [&](std::size_t idx, const std::string& n) { return names_[idx] < n; });
  if (it == sorted_.end() || names_[*it] != name) return -1;
  return static_cast<int>(*it);
}

bool Alphabet::contains(const std::string& name) const {
  return index_of(name) >= 0;
}

BehaviorStep::BehaviorStep(std::vector<std::string> names)
    : behaviors(std::move(names)) {
  std::sort(behaviors.begin(), behaviors.end());
  behaviors.erase(std::unique(behaviors.begin(), behaviors.end()),
                  behaviors.end());
}

bool BehaviorStep::contains(const std::string& name) const {
  return std::binary_search(behaviors.begin(), behaviors.end(), name);
}

bool BehaviorStep::subset_of(const BehaviorStep& other) const {
  return std::includes(other.behaviors.begin(), other.behaviors.end(),
                       behaviors.begin(), behaviors.end());
}

std::string BehaviorStep::joined() const {
  std::string out;
  for (std::size_t i = 0; i < behaviors.size(); ++i) {
    if (i) out += ", ";
    out += behaviors[i];
  }
  return out;
}

const ScriptRecord& validate_record(const ScriptRecord& record,
                                    const Alphabet& alphabet) {
  for (std::size_t pos = 0; pos < record.sequence.size(); ++pos) {
    const BehaviorStep& step = record.sequence[pos];
    if (step.empty()) {
      throw EmptyStepError("empty behavior step at position " +
                           std::to_string(pos) + " in script " +
                           record.script_id);
    }
    for (const auto& b : step.behaviors) {
      if (!alphabet.contains(b)) {
        throw UnknownBehaviorError("unknown behavior \"" + b +
                                   "\" at position " + std::to_string(pos) +
                                   " in script " + record.script_id);
      }
    }
  }
  if (record.clicks_before < 0.0) {
    throw InvalidArgumentError("clicks_before must be >= 0 in script " +
                               record.script_id);
  }
  return record;
}

std::string record_to_json(const ScriptRecord& record) {
  nlohmann::ordered_json j;
  j["script_id"] = record.script_id;
  j["session_id"] = record.session_id;
  j["page"] = record.page;
  nlohmann::ordered_json steps = nlohmann::ordered_json::array();
  for (const auto& step : record.sequence) steps.push_back(step.behaviors);
  j["sequence"] = std::move(steps);
  j["clicks_before"] = record.clicks_before;
  j["inline"] = record.inline_origin;
  if (record.label) j["label"] = static_cast<int>(*record.label);
  return j.dump();
}

ScriptRecord record_from_json(const std::string& json_text) {
  nlohmann::json j = nlohmann::json::parse(json_text);
  ScriptRecord r;
  r.script_id = j.at("script_id").get<std::string>();
  r.session_id = j.at("session_id").get<std::string>();
  r.page = j.at("page").get<std::string>();
  for (const auto& step : j.at("sequence")) {
    r.sequence.emplace_back(step.get<std::vector<std::string>>());
  }
  r.clicks_before = j.at("clicks_before").get<double>();
  r.inline_origin = j.at("inline").get<bool>();
  if (j.contains("label")) {
    int v = j.at("label").get<int>();
    if (v != 0 && v != 1) throw InvalidArgumentError("label must be 0 or 1");
    r.label = static_cast<Label>(v);
  }
  return r;
}

}  // namespace magescan
