#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "magescan/errors.hpp"

namespace magescan {

enum class Label : int { kBenign = 0, kMalicious = 1 };

// Ordered behavior vocabulary. The order defines the feature-schema order,
// so it is part of the persisted contract (JSON array of names).
class Alphabet {
 public:
  explicit Alphabet(std::vector<std::string> names);
  static Alphabet from_json(const std::string& json_text);
  static Alphabet from_json_file(const std::filesystem::path& path);

  bool contains(const std::string& name) const;
  // -1 when absent.
  int index_of(const std::string& name) const;
  const std::vector<std::string>& names() const { return names_; }
  std::size_t size() const { return names_.size(); }

 private:
  std::vector<std::string> names_;
  std::vector<std::size_t> sorted_;  // indices into names_, sorted by name
};

// One sequence position: the set of behaviors observed at the same step.
// Stored sorted and duplicate-free so steps compare and hash predictably.
struct BehaviorStep {
  std::vector<std::string> behaviors;

  BehaviorStep() = default;
  explicit BehaviorStep(std::vector<std::string> names);
  BehaviorStep(std::initializer_list<std::string> names)
      : BehaviorStep(std::vector<std::string>(names)) {}

  bool empty() const { return behaviors.empty(); }
  bool contains(const std::string& name) const;
  // True when every behavior of this step occurs in `other`.
  bool subset_of(const BehaviorStep& other) const;
  // "Access Input, Access DOM Element Attribute"
  std::string joined() const;

  auto operator<=>(const BehaviorStep&) const = default;
};

using BehaviorSequence = std::vector<BehaviorStep>;

struct ScriptRecord {
  std::string script_id;
  std::string session_id;
  std::string page;
  BehaviorSequence sequence;
  double clicks_before = 0.0;
  bool inline_origin = false;  // true = embedded in page, false = injected
  std::optional<Label> label;

  bool operator==(const ScriptRecord&) const = default;
};

// Returns `record` unchanged when every behavior belongs to `alphabet`, no
// step is empty, and clicks_before >= 0. Throws UnknownBehaviorError or
// EmptyStepError otherwise (message names the offending position).
const ScriptRecord& validate_record(const ScriptRecord& record,
                                    const Alphabet& alphabet);

// JSONL-friendly serialization (one object per record).
std::string record_to_json(const ScriptRecord& record);
ScriptRecord record_from_json(const std::string& json_text);

}  // namespace magescan
