#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "magescan/behavior.hpp"
#include "magescan/dataset.hpp"
#include "magescan/dfa.hpp"

namespace magescan {

enum class FeatureKind {
  kFirstPosition,   // [0,1] or -1.0 when the behavior is absent
  kLastPosition,    // same range as kFirstPosition
  kPrevalence,      // [0,1]
  kSeqLength,       // >= 0
  kAvgClicks,       // >= 0
  kInline,          // {0,1}
  kAutomaton,       // match percentage / 100, in [0,1]
};

// Fixed feature ordering: for each alphabet behavior b (alphabet order)
// First_b, Last_b, Prev_b; then SeqLength, AvgClicks, Inline,
// AutomatonClassification. Dimension = 3*|alphabet| + 4.
class FeatureSchema {
 public:
  static FeatureSchema for_alphabet(const Alphabet& alphabet);

  std::size_t dimension() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }
  const std::string& schema_id() const { return schema_id_; }
  FeatureKind kind(std::size_t index) const { return kinds_[index]; }
  // Index of the behavior backing a per-behavior feature, -1 for globals.
  int behavior_index(std::size_t index) const { return behavior_[index]; }

  // Schema of the retained columns; schema_id is derived from the parent id
  // and the mask so provenance is traceable.
  FeatureSchema select(const std::vector<std::size_t>& indices) const;

 private:
  FeatureSchema() = default;
  std::vector<std::string> names_;
  std::vector<FeatureKind> kinds_;
  std::vector<int> behavior_;
  std::string schema_id_;
};

// Retained column indices, strictly increasing.
struct SelectionMask {
  std::vector<std::size_t> indices;

  std::size_t k() const { return indices.size(); }
  // Top-k by importance, ties broken toward the lower index.
  static SelectionMask top_k(const std::vector<double>& importance,
                             std::size_t k);
};

// Builds the feature vector of one script. The record must be valid against
// the schema's alphabet; the DfaResult supplies the automaton feature.
std::vector<double> extract(const ScriptRecord& record,
                            const DfaResult& dfa_result,
                            const FeatureSchema& schema);

// Projects every vector onto the retained indices. Labels are untouched;
// the result carries a derived schema_id.
Dataset apply_selection(const Dataset& dataset, const SelectionMask& mask);

// Derived schema_id for a masked dataset (kept in sync with
// FeatureSchema::select for datasets whose schema object is not at hand).
std::string masked_schema_id(const std::string& parent_id,
                             const SelectionMask& mask);

}  // namespace magescan
