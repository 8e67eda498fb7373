#include <doctest.h>

#include <algorithm>
#include <sstream>

#include "oracles.hpp"
#include "synthetic.hpp"
#include "prolink/calibrator.hpp"
#include "prolink/errors.hpp"

using namespace prolink;

namespace {

constexpr auto H2H = InteractionType::kH2H;
constexpr auto H2T = InteractionType::kH2T;
constexpr auto T2H = InteractionType::kT2H;
constexpr auto T2T = InteractionType::kT2T;

bool has(const std::vector<InteractionEdge>& v, InteractionEdge e) {
  return std::find(v.begin(), v.end(), e) != v.end();
}

bool touches_base(const InteractionEdge& e, RelationId r, std::size_t b) {
  return e.src % b == r || e.dst % b == r;
}

}  // namespace

TEST_CASE("beta modes") {
  CHECK(parse_beta_mode("1") == BetaMode::kOne);
  CHECK(parse_beta_mode("Mean") == BetaMode::kMean);
  CHECK(parse_beta_mode("max") == BetaMode::kMax);
  CHECK(to_string(BetaMode::kFive) == "5");
  CHECK_THROWS_AS(parse_beta_mode("2"), ContractError);
}

TEST_CASE("support expansion") {
  SUBCASE("zero-shot query relation") {
    TypeAssignment a(3);
    a.relations[0] = {{"person"}, {"city"}};
    a.relations[1] = {{"person"}, {"film"}};
    RelationGraph rg(6, {{1, H2H, 2}});
    auto ex = support_expand(0, rg, a);
    CHECK(ex.edges.empty());
    CHECK(ex.assignment == a);
  }

  SUBCASE("rule A widens the query types and links every matching relation") {
    TypeAssignment a(4);
    a.relations[1] = {{"person"}, {"city"}};
    a.relations[2] = {{"person"}, {"film"}};
    a.relations[3] = {{"film"}, {"person"}};
    RelationGraph rg(8, {{0, H2H, 1}});
    auto ex = support_expand(0, rg, a);
    CHECK(ex.assignment.relations[0].head == std::set<std::string>{"person"});
    CHECK(ex.assignment.relations[0].tail.empty());
    CHECK(has(ex.edges, {0, H2H, 2}));
    CHECK(has(ex.edges, {2, H2H, 0}));
    CHECK(has(ex.edges, {0, H2T, 3}));
    CHECK(has(ex.edges, {4, T2H, 2}));  // inverse node of r_q carries the head types as tails
    for (const auto& e : ex.edges) CHECK(touches_base(e, 0, 4));
  }

  SUBCASE("rule B composes two ground-truth edges") {
    auto s = testing::music_scenario();
    auto rg = build_relation_graph(s.kg);
    REQUIRE(rg.contains({s.co_worked, H2T, s.sung_by}));
    REQUIRE(rg.contains({s.sung_by, T2T, s.lyricized_by}));
    REQUIRE_FALSE(rg.contains({s.co_worked, H2T, s.lyricized_by}));
    auto ex = support_expand(s.co_worked, rg, s.assignment);
    CHECK(has(ex.edges, {s.co_worked, H2T, s.lyricized_by}));
    CHECK(has(ex.edges, {s.lyricized_by, T2H, s.co_worked}));
  }

  SUBCASE("contracts") {
    TypeAssignment a(2);
    CHECK_THROWS_AS(support_expand(2, RelationGraph(4), a), ContractError);
    CHECK_THROWS_AS(support_expand(0, RelationGraph(6), a), ContractError);
  }
}

TEST_CASE("unmatched edges") {
  RelationGraph rg(8, {{1, H2H, 2}, {0, H2H, 1}});
  SUBCASE("prompt graph inside the relation graph") {
    CHECK(unmatched_edges(rg, rg, 0, 4).empty());
  }
  SUBCASE("a prompting edge without ground truth") {
    RelationGraph pg(8, {{1, H2H, 3}, {0, T2T, 2}, {4, H2H, 1}, {1, H2H, 2}});
    auto tm = unmatched_edges(rg, pg, 0, 4);
    CHECK(has(tm, {1, H2H, 3}));
    CHECK(has(tm, {3, H2H, 1}));
    CHECK(tm.size() == 2);  // r_q and r_q^-1 edges never appear
  }
  SUBCASE("node sets must agree") {
    CHECK_THROWS_AS(unmatched_edges(rg, RelationGraph(6), 0, 4), ContractError);
  }
}

TEST_CASE("conflict filtering") {
  // r_q = 0 with head type "a"; relations 4..7 share it (R_s).
  TypeAssignment a(8);
  a.relations[0].head = {"a"};
  for (RelationId r = 4; r < 8; ++r) a.relations[r].head = {"a"};
  std::vector<InteractionEdge> cand = {{0, H2H, 1}, {0, H2T, 2}, {0, T2T, 3}, {8, H2H, 3}};
  // C(1) = 0, C(2) = 2, C(3) = 5.
  std::vector<InteractionEdge> tm = {{2, H2H, 4}, {2, T2T, 5}, {3, H2H, 4}, {3, H2T, 4},
                                     {3, T2H, 5}, {3, T2T, 6}, {3, H2H, 7}, {1, H2H, 9}};

  SUBCASE("no unmatched edges") {
    auto f = conflict_filter(cand, {}, a, 0, BetaMode::kOne);
    CHECK(f.kept == cand);
    CHECK(f.filtered.empty());
  }
  SUBCASE("counts") {
    auto f = conflict_filter(cand, tm, a, 0, BetaMode::kFive);
    CHECK(f.conflicts.at(1) == 0);
    CHECK(f.conflicts.at(2) == 2);
    CHECK(f.conflicts.at(3) == 5);
  }
  SUBCASE("threshold 1 filters every conflicting neighbor") {
    auto f = conflict_filter(cand, tm, a, 0, BetaMode::kOne);
    CHECK(f.filtered == std::vector<RelationId>{2, 3});
    CHECK(f.kept == std::vector<InteractionEdge>{{0, H2H, 1}});
  }
  SUBCASE("max and mean") {
    auto mx = conflict_filter(cand, tm, a, 0, BetaMode::kMax);
    CHECK(mx.beta == 5.0);
    CHECK(mx.filtered == std::vector<RelationId>{3});
    auto mean = conflict_filter(cand, tm, a, 0, BetaMode::kMean);
    CHECK(mean.beta == 3.5);
    CHECK(mean.filtered == std::vector<RelationId>{3});
    CHECK(mean.kept.size() == 2);
  }
  SUBCASE("mean without any conflict filters nothing") {
    auto f = conflict_filter(cand, {}, a, 0, BetaMode::kMean);
    CHECK(f.filtered.empty());
    CHECK(f.kept == cand);
  }
}

TEST_CASE("inverse closure") {
  auto c = inverse_closure(std::vector<InteractionEdge>{{0, T2H, 1}}, 2);
  std::set<InteractionEdge> got(c.begin(), c.end());
  CHECK(got.count({2, H2H, 1}));
  CHECK(got.count({0, T2T, 3}));
  CHECK(got.count({2, H2T, 3}));
  CHECK(got.count({1, H2T, 0}));
  CHECK(got == testing::rule_closure({{0, T2H, 1}}, 2));
}

TEST_CASE("calibration of the music scenario") {
  auto s = testing::music_scenario();
  auto rg = build_relation_graph(s.kg);
  auto pg = build_prompt_graph(s.assignment);
  CalibrationConfig cfg;
  cfg.beta = BetaMode::kOne;
  auto res = calibrate(s.co_worked, rg, pg, s.assignment, cfg);

  CHECK(has(res.report.injected, {s.co_worked, H2T, s.lyricized_by}));
  CHECK(res.graph.contains({s.co_worked, H2T, s.lyricized_by}));
  CHECK(res.report.filtered == std::vector<RelationId>{s.directed_by});
  CHECK(res.report.conflicts.at(s.directed_by) >= 1);
  for (const auto& e : res.report.injected) CHECK_FALSE(touches_base(e, s.directed_by, 4));

  std::ostringstream report;
  write_calibration_report(report, res.report, s.kg.relations());
  CHECK(report.str().find("[filtered]\t1\ndirected-by\n") != std::string::npos);
  CHECK(report.str().find("co-worked\th2t\tlyricized-by\n") != std::string::npos);
}

TEST_CASE("empty prompt graph and zero-shot query leave the graph alone") {
  Vocabulary ents(std::vector<std::string>{"a", "b", "c"});
  Vocabulary rels(std::vector<std::string>{"r0", "r1", "r2"});
  auto kg = augment_kg(KnowledgeGraph(ents, rels, {{0, 0, 1}, {1, 1, 2}}));
  TypeAssignment a(3);
  auto rg = build_relation_graph(kg);
  auto res = calibrate(2, rg, build_prompt_graph(a), a, {});
  CHECK(res.graph == rg);
  CHECK(res.report.injected.empty());
  CHECK(res.report.expanded.empty());
}

TEST_CASE("calibration invariants on random instances") {
  Rng rng(77);
  for (int i = 0; i < 50; ++i) {
    const std::size_t n_rel = 2 + rng.below(6);
    auto kg = augment_kg(testing::random_kg(rng, 6 + rng.below(10), n_rel, 4 + rng.below(20)));
    const std::size_t b = kg.base_relation_count();
    auto a = testing::random_assignment(rng, b, 4, 0.3, false);
    auto rg = build_relation_graph(kg);
    auto pg = build_prompt_graph(a);
    const auto rq = static_cast<RelationId>(rng.below(b));
    CalibrationConfig cfg;
    cfg.beta = static_cast<BetaMode>(rng.below(5));
    auto res = calibrate(rq, rg, pg, a, cfg);

    for (const auto& e : rg.edges()) CHECK(res.graph.contains(e));
    for (const auto& e : res.report.injected) CHECK(touches_base(e, rq, b));
    auto again = calibrate(rq, rg, pg, a, cfg);
    CHECK(again.graph == res.graph);
    CHECK(inject_edges(res.graph, res.report.injected) == res.graph);
    CHECK(testing::rule_closure(testing::edge_set(res.graph), b) == testing::edge_set(res.graph));
  }
}
