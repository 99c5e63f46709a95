#include <doctest.h>

#include <random>

#include "magescan/features.hpp"
#include "magescan/sweep.hpp"
#include "magescan/util.hpp"

using namespace magescan;

namespace {

Alphabet small_alphabet() {
  return Alphabet({"Set Callback", "Send Data", "Access Input"});
}

DfaResult dfa_result(double pct) {
  DfaResult r;
  r.match_pct = pct;
  r.label = pct >= 100.0 ? DfaLabel::kMalign : DfaLabel::kBenign;
  return r;
}

ScriptRecord record_with(BehaviorSequence seq, double clicks = 2.0,
                         bool inline_origin = true) {
  ScriptRecord r;
  r.script_id = "s";
  r.sequence = std::move(seq);
  r.clicks_before = clicks;
  r.inline_origin = inline_origin;
  return r;
}

}  // namespace

TEST_CASE("schema layout is 3 per behavior plus 4 globals") {
  Alphabet a = small_alphabet();
  FeatureSchema s = FeatureSchema::for_alphabet(a);
  REQUIRE(s.dimension() == 3 * 3 + 4);
  CHECK(s.names()[0] == "First_Set Callback");
  CHECK(s.names()[1] == "Last_Set Callback");
  CHECK(s.names()[2] == "Prev_Set Callback");
  CHECK(s.names()[9] == "SeqLength");
  CHECK(s.names()[10] == "AvgClicks");
  CHECK(s.names()[11] == "Inline");
  CHECK(s.names()[12] == "AutomatonClassification");
  CHECK(s.kind(0) == FeatureKind::kFirstPosition);
  CHECK(s.kind(12) == FeatureKind::kAutomaton);
  CHECK(s.behavior_index(5) == 1);
  CHECK(s.behavior_index(9) == -1);
}

TEST_CASE("default 33-behavior alphabet gives 103 features") {
  std::vector<std::string> names;
  for (int i = 0; i < 33; ++i) names.push_back("b" + std::to_string(i));
  FeatureSchema s = FeatureSchema::for_alphabet(Alphabet(names));
  CHECK(s.dimension() == 103);
}

TEST_CASE("absent behaviors use the -1 sentinel") {
  Alphabet a = small_alphabet();
  FeatureSchema s = FeatureSchema::for_alphabet(a);
  auto v = extract(record_with({BehaviorStep{"Send Data"}}), dfa_result(0), s);
  CHECK(v[0] == -1.0);  // First_Set Callback
  CHECK(v[1] == -1.0);
  CHECK(v[2] == 0.0);   // Prev_Set Callback
}

TEST_CASE("length-1 sequences map positions to 0.0") {
  Alphabet a = small_alphabet();
  FeatureSchema s = FeatureSchema::for_alphabet(a);
  auto v = extract(record_with({BehaviorStep{"Send Data"}}), dfa_result(0), s);
  CHECK(v[3] == 0.0);  // First_Send Data
  CHECK(v[4] == 0.0);  // Last_Send Data
  CHECK(v[5] == 1.0);  // Prev_Send Data
}

TEST_CASE("positions on the L=5 fixture with hits at 1 and 4") {
  Alphabet a = small_alphabet();
  FeatureSchema s = FeatureSchema::for_alphabet(a);
  BehaviorSequence seq{BehaviorStep{"Set Callback"}, BehaviorStep{"Send Data"},
                       BehaviorStep{"Set Callback"}, BehaviorStep{"Set Callback"},
                       BehaviorStep{"Send Data"}};
  auto v = extract(record_with(seq), dfa_result(0), s);
  CHECK(v[3] == 0.25);  // First_Send Data = 1/4
  CHECK(v[4] == 1.0);   // Last_Send Data = 4/4
  CHECK(v[5] == 0.4);   // Prev_Send Data = 2/5
}

TEST_CASE("globals: length, clicks, inline, automaton") {
  Alphabet a = small_alphabet();
  FeatureSchema s = FeatureSchema::for_alphabet(a);
  auto v = extract(record_with({BehaviorStep{"Send Data"},
                                BehaviorStep{"Access Input"}},
                               3.5, false),
                   dfa_result(37.5), s);
  CHECK(v[9] == 2.0);
  CHECK(v[10] == 3.5);
  CHECK(v[11] == 0.0);
  CHECK(v[12] == doctest::Approx(0.375));
}

TEST_CASE("empty sequences use sentinels everywhere") {
  Alphabet a = small_alphabet();
  FeatureSchema s = FeatureSchema::for_alphabet(a);
  auto v = extract(record_with({}), dfa_result(0), s);
  CHECK(v[0] == -1.0);
  CHECK(v[2] == 0.0);
  CHECK(v[9] == 0.0);
}

TEST_CASE("extract is pure and satisfies the range invariants") {
  Alphabet a = small_alphabet();
  FeatureSchema s = FeatureSchema::for_alphabet(a);
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<std::size_t> len(0, 10);
  std::uniform_int_distribution<std::size_t> pick(0, a.size() - 1);
  std::uniform_real_distribution<double> clicks(0.0, 8.0);
  std::uniform_real_distribution<double> pct(0.0, 100.0);
  for (int it = 0; it < 500; ++it) {
    BehaviorSequence seq;
    std::size_t n = len(rng);
    for (std::size_t i = 0; i < n; ++i) {
      seq.push_back(BehaviorStep{a.names()[pick(rng)]});
    }
    ScriptRecord r = record_with(seq, clicks(rng), rng() % 2 == 0);
    DfaResult d = dfa_result(pct(rng));
    auto v = extract(r, d, s);
    auto v2 = extract(r, d, s);
    CHECK(v == v2);
    for (std::size_t i = 0; i < s.dimension(); ++i) {
      switch (s.kind(i)) {
        case FeatureKind::kFirstPosition:
        case FeatureKind::kLastPosition:
          CHECK((v[i] == -1.0 || (v[i] >= 0.0 && v[i] <= 1.0)));
          break;
        case FeatureKind::kPrevalence:
        case FeatureKind::kAutomaton:
          CHECK(v[i] >= 0.0);
          CHECK(v[i] <= 1.0);
          break;
        case FeatureKind::kSeqLength:
        case FeatureKind::kAvgClicks:
          CHECK(v[i] >= 0.0);
          break;
        case FeatureKind::kInline:
          CHECK((v[i] == 0.0 || v[i] == 1.0));
          break;
      }
    }
    // single-behavior steps: prevalences sum to exactly 1 over behaviors
    if (n > 0) {
      double total = v[2] + v[5] + v[8];
      CHECK(total == doctest::Approx(1.0));
    }
  }
}

TEST_CASE("selection mask keeps top-k by importance with index tie-break") {
  std::vector<double> importance{0.1, 0.5, 0.5, 0.2};
  SelectionMask m = SelectionMask::top_k(importance, 2);
  CHECK(m.indices == std::vector<std::size_t>{1, 2});
  SelectionMask m3 = SelectionMask::top_k(importance, 3);
  CHECK(m3.indices == std::vector<std::size_t>{1, 2, 3});
  CHECK_THROWS_AS(SelectionMask::top_k(importance, 9), InvalidArgumentError);
}

TEST_CASE("apply_selection projects columns and keeps labels") {
  Dataset d;
  d.schema_id = "parent";
  d.x.push_row(std::vector<double>{1, 2, 3, 4});
  d.x.push_row(std::vector<double>{5, 6, 7, 8});
  d.y = {Label::kBenign, Label::kMalicious};

  SelectionMask all{{0, 1, 2, 3}};
  Dataset same = apply_selection(d, all);
  CHECK(same.x.at(1, 2) == 7);
  CHECK(same.schema_id != d.schema_id);  // derived id

  SelectionMask first{{0}};
  Dataset one = apply_selection(d, first);
  CHECK(one.dimension() == 1);
  CHECK(one.x.at(1, 0) == 5);
  CHECK(one.y == d.y);

  CHECK_THROWS_AS(apply_selection(d, SelectionMask{{2, 1}}),
                  SchemaMismatchError);
  CHECK_THROWS_AS(apply_selection(d, SelectionMask{{0, 9}}),
                  SchemaMismatchError);
}

TEST_CASE("composed masks equal a single composed application") {
  Dataset d;
  d.schema_id = "parent";
  for (int r = 0; r < 3; ++r) {
    std::vector<double> row;
    for (int c = 0; c < 6; ++c) row.push_back(r * 10 + c);
    d.x.push_row(row);
    d.y.push_back(Label::kBenign);
  }
  SelectionMask outer{{0, 2, 3, 5}};
  SelectionMask inner{{1, 3}};
  Dataset two_step = apply_selection(apply_selection(d, outer), inner);
  // composition: outer[inner] = {2, 5}
  Dataset composed = apply_selection(d, SelectionMask{{2, 5}});
  CHECK(two_step.x.at(1, 0) == composed.x.at(1, 0));
  CHECK(two_step.x.at(2, 1) == composed.x.at(2, 1));
  CHECK(two_step.dimension() == composed.dimension());
}

TEST_CASE("schema select derives names and ids") {
  Alphabet a = small_alphabet();
  FeatureSchema s = FeatureSchema::for_alphabet(a);
  FeatureSchema sel = s.select({3, 4, 12});
  CHECK(sel.dimension() == 3);
  CHECK(sel.names()[0] == "First_Send Data");
  CHECK(sel.names()[2] == "AutomatonClassification");
  CHECK(sel.kind(2) == FeatureKind::kAutomaton);
  CHECK(sel.schema_id() != s.schema_id());
}

TEST_CASE("sweep on a tiny separable dataset picks a sensible k") {
  // label = indicator of feature 0; feature 1 is noise
  Dataset d;
  d.schema_id = "t";
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> noise(0.0, 1.0);
  for (int i = 0; i < 40; ++i) {
    double cls = i % 2 ? 1.0 : 0.0;
    d.x.push_row(std::vector<double>{cls, noise(rng)});
    d.y.push_back(i % 2 ? Label::kMalicious : Label::kBenign);
  }
  std::vector<double> importance{0.9, 0.1};
  SweepTable table = sweep_selection_sizes(
      d, importance, {1, 2}, {ml::Family::kDecisionTree}, 5, 42);
  REQUIRE(table.rows.size() == 2);
  CHECK(table.rows[0].k == 1);
  CHECK(table.rows[0].best_f1.at(ml::Family::kDecisionTree) ==
        doctest::Approx(1.0));
  std::size_t k = choose_k(table);
  CHECK((k == 1 || k == 2));
  if (table.rows[0].mean_f1() == table.rows[1].mean_f1()) {
    CHECK(k == 1);  // ties prefer the smaller k
  }
}

TEST_CASE("sweep over the full dimension equals plain full-feature CV") {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> noise(0.0, 1.0);
  Dataset d;
  d.schema_id = "t";
  for (int i = 0; i < 60; ++i) {
    int label = i % 2;
    d.x.push_row(std::vector<double>{noise(rng) + (label ? 1.5 : -1.5),
                                     noise(rng)});
    d.y.push_back(label ? Label::kMalicious : Label::kBenign);
  }
  std::vector<double> importance{0.7, 0.3};
  SweepTable table = sweep_selection_sizes(d, importance, {2},
                                           {ml::Family::kKnn}, 5, 17);
  // identical protocol by hand: top-2 mask is the identity projection
  Dataset projected = apply_selection(d, SelectionMask::top_k(importance, 2));
  ml::CvReport direct =
      ml::grid_search(ml::Family::kKnn, ml::default_grid(ml::Family::kKnn),
                      projected, 5, derive_seed(17, "sweep", 2));
  CHECK(table.rows[0].best_f1.at(ml::Family::kKnn) ==
        doctest::Approx(direct.best().mean_f1).epsilon(1e-12));
}

TEST_CASE("sweep validates the importance length") {
  Dataset d;
  d.schema_id = "t";
  d.x.push_row(std::vector<double>{1, 2});
  d.y = {Label::kBenign};
  CHECK_THROWS_AS(sweep_selection_sizes(d, {0.5}, {1},
                                        {ml::Family::kDecisionTree}, 5, 0),
                  SchemaMismatchError);
}
