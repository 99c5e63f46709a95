#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "magescan/dfa.hpp"
#include "magescan/ingestion.hpp"

namespace magescan {

// Synthetic corpus controls. Malicious records embed one library pattern as
// a (possibly noisy) subsequence; benign records sample the grammar only.
struct GenConfig {
  std::size_t n = 1000;
  double malicious_fraction = 0.047;
  std::size_t length_min = 4;
  std::size_t length_max = 30;

  struct NoiseSpec {
    double insert = 0.3;  // fraction of the free length filled with noise
    double drop = 0.0;    // per-step probability of dropping a pattern step
  };
  NoiseSpec default_noise;
  std::map<std::string, NoiseSpec> pattern_noise;  // per-pattern override

  // Class-conditioned context so the context features carry signal.
  double benign_inline_prob = 0.7;
  double malicious_inline_prob = 0.2;
  double benign_clicks_mean = 3.0;
  double malicious_clicks_mean = 1.0;

  // Per-behavior sampling weight for benign/noise steps. Empty = uniform
  // over every behavior representable by a single-behavior action.
  std::vector<std::pair<std::string, double>> grammar;

  std::uint64_t seed = 0;
};

struct GeneratedCorpus {
  std::vector<ScriptRecord> records;  // labeled, one per script
  std::vector<RawEvent> events;       // the same corpus as ingestion input
};

// Deterministic per seed (bitwise-identical output). The action map is
// needed to emit events: every generated step must equal the behavior set
// of some action. Throws EmptyLibraryError when malicious records are
// requested without patterns, ConfigError when a pattern step has no
// representing action.
GeneratedCorpus generate(const GenConfig& config, const PatternLibrary& library,
                         const Alphabet& alphabet, const ActionBehaviorMap& map);

void write_corpus_jsonl(const std::vector<RawEvent>& events,
                        std::ostream& out);
// CSV: script_id,label
void write_labels_csv(const std::vector<ScriptRecord>& records,
                      std::ostream& out);

}  // namespace magescan
