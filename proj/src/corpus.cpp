#include "magescan/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>

#include <json.hpp>

#include "magescan/util.hpp"

namespace magescan {

namespace {

// Reverse action lookup keyed by the exact behavior set, actions sorted for
// deterministic choice.
std::map<std::vector<std::string>, std::vector<std::string>> reverse_map(
    const ActionBehaviorMap& map) {
  std::map<std::vector<std::string>, std::vector<std::string>> out;
  for (const auto& [action, behaviors] : map.entries()) {
    BehaviorStep step(behaviors);  // sorted, deduplicated
    out[step.behaviors].push_back(action);
  }
  for (auto& [step, actions] : out) {
    (void)step;
    std::sort(actions.begin(), actions.end());
  }
  return out;
}

}  // namespace

GeneratedCorpus generate(const GenConfig& config,
                         const PatternLibrary& library,
                         const Alphabet& alphabet,
                         const ActionBehaviorMap& map) {
  if (config.malicious_fraction < 0.0 || config.malicious_fraction > 1.0) {
    throw InvalidArgumentError("malicious_fraction must be in [0,1]");
  }
  if (config.length_min > config.length_max) {
    throw InvalidArgumentError("length_min must be <= length_max");
  }
  if (config.malicious_fraction > 0.0 && library.patterns.empty()) {
    throw EmptyLibraryError(
        "pattern library is empty but malicious_fraction > 0");
  }

  auto actions_for = reverse_map(map);
  auto pick_action = [&](const BehaviorStep& step,
                         std::mt19937_64& rng) -> const std::string& {
    auto it = actions_for.find(step.behaviors);
    if (it == actions_for.end()) {
      throw ConfigError("no action maps to behavior step {" + step.joined() +
                        "}");
    }
    if (it->second.size() == 1) return it->second.front();
    std::uniform_int_distribution<std::size_t> pick(0, it->second.size() - 1);
    return it->second[pick(rng)];
  };

  // Every pattern step must be representable before any work starts.
  for (const Pattern& pattern : library.patterns) {
    for (const BehaviorStep& step : pattern.steps) {
      if (!actions_for.count(step.behaviors)) {
        throw ConfigError("pattern \"" + pattern.name +
                          "\" contains step {" + step.joined() +
                          "} with no representing action");
      }
    }
  }

  // Grammar: behaviors representable as singleton steps.
  std::vector<std::string> grammar_behaviors;
  std::vector<double> grammar_weights;
  if (config.grammar.empty()) {
    for (const std::string& b : alphabet.names()) {
      if (actions_for.count({b})) {
        grammar_behaviors.push_back(b);
        grammar_weights.push_back(1.0);
      }
    }
  } else {
    for (const auto& [behavior, weight] : config.grammar) {
      if (!alphabet.contains(behavior)) {
        throw ConfigError("grammar behavior \"" + behavior +
                          "\" is not in the alphabet");
      }
      if (!actions_for.count({behavior})) {
        throw ConfigError("grammar behavior \"" + behavior +
                          "\" has no single-behavior action");
      }
      if (weight > 0.0) {
        grammar_behaviors.push_back(behavior);
        grammar_weights.push_back(weight);
      }
    }
  }
  if (grammar_behaviors.empty()) {
    throw ConfigError("benign grammar is empty");
  }
  std::discrete_distribution<std::size_t> grammar_dist(
      grammar_weights.begin(), grammar_weights.end());

  const std::size_t positives = static_cast<std::size_t>(
      std::llround(static_cast<double>(config.n) * config.malicious_fraction));

  // Deterministic spread of the positive labels across indices.
  std::vector<char> is_malicious(config.n, 0);
  std::fill(is_malicious.begin(),
            is_malicious.begin() + static_cast<std::ptrdiff_t>(positives), 1);
  {
    auto rng = make_rng(derive_seed(config.seed, "labels"));
    std::shuffle(is_malicious.begin(), is_malicious.end(), rng);
  }

  GeneratedCorpus corpus;
  corpus.records.reserve(config.n);
  char id_buf[32];
  for (std::size_t i = 0; i < config.n; ++i) {
    auto rng = make_rng(derive_seed(config.seed, "record", i));
    const bool malicious = is_malicious[i] != 0;

    std::uniform_int_distribution<std::size_t> length_dist(config.length_min,
                                                           config.length_max);
    std::size_t target_len = length_dist(rng);

    std::vector<BehaviorStep> steps;
    if (malicious) {
      std::uniform_int_distribution<std::size_t> pattern_dist(
          0, library.patterns.size() - 1);
      const Pattern& pattern = library.patterns[pattern_dist(rng)];
      auto noise_it = config.pattern_noise.find(pattern.name);
      const GenConfig::NoiseSpec& noise = noise_it != config.pattern_noise.end()
                                              ? noise_it->second
                                              : config.default_noise;
      std::uniform_real_distribution<double> unit(0.0, 1.0);
      std::vector<BehaviorStep> kept;
      for (const BehaviorStep& step : pattern.steps) {
        if (unit(rng) >= noise.drop) kept.push_back(step);
      }
      target_len = std::max(target_len, kept.size());
      std::size_t free_len = target_len - kept.size();
      std::size_t noise_count = static_cast<std::size_t>(
          std::llround(static_cast<double>(free_len) * noise.insert));
      // Positions of the pattern steps inside the final sequence.
      std::size_t total = kept.size() + noise_count;
      std::vector<char> is_pattern(total, 0);
      std::fill(is_pattern.begin(),
                is_pattern.begin() + static_cast<std::ptrdiff_t>(kept.size()),
                1);
      std::shuffle(is_pattern.begin(), is_pattern.end(), rng);
      std::size_t next_pattern = 0;
      for (std::size_t pos = 0; pos < total; ++pos) {
        if (is_pattern[pos]) {
          steps.push_back(kept[next_pattern++]);
        } else {
          steps.push_back(
              BehaviorStep{grammar_behaviors[grammar_dist(rng)]});
        }
      }
    } else {
      for (std::size_t pos = 0; pos < target_len; ++pos) {
        steps.push_back(BehaviorStep{grammar_behaviors[grammar_dist(rng)]});
      }
    }

    double inline_prob = malicious ? config.malicious_inline_prob
                                   : config.benign_inline_prob;
    double clicks_mean = malicious ? config.malicious_clicks_mean
                                   : config.benign_clicks_mean;
    std::bernoulli_distribution inline_dist(inline_prob);
    std::poisson_distribution<int> clicks_dist(clicks_mean);
    bool inline_origin = inline_dist(rng);
    int clicks = clicks_dist(rng);

    std::snprintf(id_buf, sizeof(id_buf), "s%06zu", i);
    ScriptRecord record;
    record.script_id = id_buf;
    std::snprintf(id_buf, sizeof(id_buf), "sess%04zu", i / 20);
    record.session_id = id_buf;
    std::snprintf(id_buf, sizeof(id_buf), "/page/%zu", i % 7);
    record.page = id_buf;
    record.sequence = steps;
    record.clicks_before = static_cast<double>(clicks);
    record.inline_origin = inline_origin;
    record.label = malicious ? Label::kMalicious : Label::kBenign;
    validate_record(record, alphabet);

    std::int64_t ts = 1000;
    for (const BehaviorStep& step : steps) {
      RawEvent event;
      event.script_id = record.script_id;
      event.session_id = record.session_id;
      event.page = record.page;
      event.ts = ts;
      ts += 50;
      event.action = pick_action(step, rng);
      event.clicks_before = clicks;
      event.inline_origin = inline_origin;
      corpus.events.push_back(std::move(event));
    }
    corpus.records.push_back(std::move(record));
  }
  return corpus;
}

void write_corpus_jsonl(const std::vector<RawEvent>& events,
                        std::ostream& out) {
  for (const RawEvent& e : events) {
    nlohmann::ordered_json j;
    j["script_id"] = e.script_id;
    j["session_id"] = e.session_id;
    j["page"] = e.page;
    j["ts"] = e.ts;
    j["action"] = e.action;
    j["clicks_before"] = e.clicks_before;
    j["inline"] = e.inline_origin;
    out << j.dump() << '\n';
  }
}

void write_labels_csv(const std::vector<ScriptRecord>& records,
                      std::ostream& out) {
  out << "script_id,label\n";
  for (const ScriptRecord& r : records) {
    out << csv_escape(r.script_id) << ','
        << (r.label == Label::kMalicious ? 1 : 0) << '\n';
  }
}

}  // namespace magescan
