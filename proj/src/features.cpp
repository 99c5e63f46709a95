#include "magescan/features.hpp"

#include <algorithm>
#include <numeric>

#include "magescan/util.hpp"

namespace magescan {

namespace {

std::string schema_hash(const std::vector<std::string>& names) {
  std::uint64_t h = fnv1a("feature-schema-v1");
  for (const auto& n : names) {
    h = fnv1a(n, h);
    h = fnv1a("\x1f", h);
  }
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace

FeatureSchema FeatureSchema::for_alphabet(const Alphabet& alphabet) {
  FeatureSchema s;
  for (std::size_t b = 0; b < alphabet.size(); ++b) {
    const std::string& name = alphabet.names()[b];
    s.names_.push_back("First_" + name);
    s.kinds_.push_back(FeatureKind::kFirstPosition);
    s.behavior_.push_back(static_cast<int>(b));
    s.names_.push_back("Last_" + name);
    s.kinds_.push_back(FeatureKind::kLastPosition);
    s.behavior_.push_back(static_cast<int>(b));
    s.names_.push_back("Prev_" + name);
    s.kinds_.push_back(FeatureKind::kPrevalence);
    s.behavior_.push_back(static_cast<int>(b));
  }
  s.names_.push_back("SeqLength");
  s.kinds_.push_back(FeatureKind::kSeqLength);
  s.behavior_.push_back(-1);
  s.names_.push_back("AvgClicks");
  s.kinds_.push_back(FeatureKind::kAvgClicks);
  s.behavior_.push_back(-1);
  s.names_.push_back("Inline");
  s.kinds_.push_back(FeatureKind::kInline);
  s.behavior_.push_back(-1);
  s.names_.push_back("AutomatonClassification");
  s.kinds_.push_back(FeatureKind::kAutomaton);
  s.behavior_.push_back(-1);
  s.schema_id_ = schema_hash(s.names_);
  return s;
}

FeatureSchema FeatureSchema::select(
    const std::vector<std::size_t>& indices) const {
  FeatureSchema s;
  for (std::size_t idx : indices) {
    if (idx >= names_.size()) {
      throw SchemaMismatchError("selection index " + std::to_string(idx) +
                                " out of range for dimension " +
                                std::to_string(names_.size()));
    }
    s.names_.push_back(names_[idx]);
    s.kinds_.push_back(kinds_[idx]);
    s.behavior_.push_back(behavior_[idx]);
  }
  SelectionMask mask{indices};
  s.schema_id_ = masked_schema_id(schema_id_, mask);
  return s;
}

SelectionMask SelectionMask::top_k(const std::vector<double>& importance,
                                   std::size_t k) {
  if (k > importance.size()) {
    throw InvalidArgumentError("k = " + std::to_string(k) +
                               " exceeds feature count " +
                               std::to_string(importance.size()));
  }
  std::vector<std::size_t> order(importance.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) {
                     return importance[a] > importance[b];
                   });
  order.resize(k);
  std::sort(order.begin(), order.end());
  return SelectionMask{std::move(order)};
}

std::vector<double> extract(const ScriptRecord& record,
                            const DfaResult& dfa_result,
                            const FeatureSchema& schema) {
  const std::size_t length = record.sequence.size();
  std::vector<double> out(schema.dimension(), 0.0);

  for (std::size_t i = 0; i < schema.dimension(); ++i) {
    switch (schema.kind(i)) {
      case FeatureKind::kSeqLength:
        out[i] = static_cast<double>(length);
        break;
      case FeatureKind::kAvgClicks:
        out[i] = record.clicks_before;
        break;
      case FeatureKind::kInline:
        out[i] = record.inline_origin ? 1.0 : 0.0;
        break;
      case FeatureKind::kAutomaton:
        out[i] = dfa_result.match_pct / 100.0;
        break;
      default:
        break;  // per-behavior features handled below
    }
  }

  // One pass over the sequence accumulating first/last/count per behavior
  // index of the schema's alphabet ordering.
  const std::size_t dim = schema.dimension();
  for (std::size_t i = 0; i < dim; ++i) {
    FeatureKind kind = schema.kind(i);
    if (kind != FeatureKind::kFirstPosition &&
        kind != FeatureKind::kLastPosition &&
        kind != FeatureKind::kPrevalence) {
      continue;
    }
    // Name is "First_<behavior>" / "Last_<behavior>" / "Prev_<behavior>".
    const std::string& name = schema.names()[i];
    const std::string behavior = name.substr(name.find('_') + 1);
    std::size_t first = length, last = 0, count = 0;
    for (std::size_t pos = 0; pos < length; ++pos) {
      if (record.sequence[pos].contains(behavior)) {
        if (count == 0) first = pos;
        last = pos;
        ++count;
      }
    }
    if (kind == FeatureKind::kPrevalence) {
      out[i] = length == 0 ? 0.0
                           : static_cast<double>(count) /
                                 static_cast<double>(length);
    } else if (count == 0) {
      out[i] = -1.0;
    } else if (length == 1) {
      out[i] = 0.0;
    } else {
      std::size_t pos = kind == FeatureKind::kFirstPosition ? first : last;
      out[i] = static_cast<double>(pos) / static_cast<double>(length - 1);
    }
  }
  return out;
}

std::string masked_schema_id(const std::string& parent_id,
                             const SelectionMask& mask) {
  std::uint64_t h = fnv1a(parent_id, fnv1a("mask-v1"));
  for (std::size_t idx : mask.indices) {
    h = fnv1a(std::to_string(idx), h);
    h = fnv1a(",", h);
  }
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Dataset apply_selection(const Dataset& dataset, const SelectionMask& mask) {
  for (std::size_t i = 0; i < mask.indices.size(); ++i) {
    if (mask.indices[i] >= dataset.dimension()) {
      throw SchemaMismatchError("selection index " +
                                std::to_string(mask.indices[i]) +
                                " out of range for dimension " +
                                std::to_string(dataset.dimension()));
    }
    if (i > 0 && mask.indices[i] <= mask.indices[i - 1]) {
      throw SchemaMismatchError("selection indices must be strictly increasing");
    }
  }
  Dataset out;
  out.y = dataset.y;
  out.schema_id = masked_schema_id(dataset.schema_id, mask);
  out.x = Matrix(dataset.size(), mask.indices.size());
  for (std::size_t r = 0; r < dataset.size(); ++r) {
    auto src = dataset.x.row(r);
    auto dst = out.x.row(r);
    for (std::size_t c = 0; c < mask.indices.size(); ++c) {
      dst[c] = src[mask.indices[c]];
    }
  }
  return out;
}

}  // namespace magescan
