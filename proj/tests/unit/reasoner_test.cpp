#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "model_fixtures.hpp"
#include "oracles.hpp"
#include "prolink/errors.hpp"
#include "prolink/reasoner.hpp"

using namespace prolink;
using testing::kg_from;

namespace {

ModelConfig small_config(std::size_t d = 4, std::size_t lr = 2, std::size_t le = 2) {
  ModelConfig c;
  c.dim = d;
  c.layers_r = lr;
  c.layers_e = le;
  return c;
}

bool row_is_zero(const Tensor& t, std::size_t r) {
  auto row = t.row(r);
  return std::all_of(row.begin(), row.end(), [](double v) { return v == 0.0; });
}

Tensor relation_states(const ModelParams& p, RelationId r_q, const RelationGraph& rg) {
  Tape tape;
  auto b = bind_params(tape, p, false);
  return encode_relations(b, r_q, rg).value();
}

}  // namespace

TEST_CASE("role mapping") {
  CHECK(role_of(3, 3, 5) == RoleIndex::kQuery);
  CHECK(role_of(8, 3, 5) == RoleIndex::kInverseQuery);
  CHECK(role_of(0, 3, 5) == RoleIndex::kOther);
  CHECK(role_of(10, 3, 5) == RoleIndex::kOther);  // identity
  CHECK(role_of(3, 8, 5) == RoleIndex::kInverseQuery);
  CHECK_THROWS_AS(role_of(0, 10, 5), ContractError);
}

TEST_CASE("relation encoder without edges keeps only the query row") {
  auto p = ModelParams::init(small_config(4, 3, 1), 1);
  RelationGraph rg(6);
  auto h = relation_states(p, 2, rg);
  for (std::size_t r = 0; r < 6; ++r) CHECK(row_is_zero(h, r) == (r != 2));
}

TEST_CASE("one edge out of the query relation reaches its target at depth 1") {
  auto p = ModelParams::init(small_config(8, 1, 1), 3);
  RelationGraph empty(4);
  std::vector<InteractionEdge> e{{0, InteractionType::kH2T, 1}};
  auto with_edge = inject_edges(empty, e);
  CHECK(row_is_zero(relation_states(p, 0, empty), 1));
  auto h = relation_states(p, 0, with_edge);
  CHECK_FALSE(row_is_zero(h, 1));

  // Hand-rolled single step: h1[1] = relu((1 * fund[h2t]) W0).
  const std::size_t d = 8;
  for (std::size_t j = 0; j < d; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < d; ++i)
      s += p.fund_edge_emb(static_cast<std::size_t>(InteractionType::kH2T), i) * p.rel_layers[0](i, j);
    CHECK(h(1, j) == doctest::Approx(std::max(0.0, s)));
  }
}

TEST_CASE("relation encoder is permutation-equivariant") {
  Rng rng(5);
  auto kg = augment_kg(testing::random_kg(rng, 12, 4, 25));
  auto rg = build_relation_graph(kg);
  auto p = ModelParams::init(small_config(5, 3, 1), 9);
  std::vector<RelationId> perm(rg.node_count());
  std::iota(perm.begin(), perm.end(), 0u);
  std::span<RelationId> ps(perm);
  rng.shuffle(ps);
  std::vector<InteractionEdge> moved;
  for (const auto& e : rg.edges()) moved.push_back({perm[e.src], e.type, perm[e.dst]});
  RelationGraph permuted(rg.node_count(), moved);

  for (RelationId q = 0; q < rg.node_count(); ++q) {
    auto a = relation_states(p, q, rg);
    auto b = relation_states(p, perm[q], permuted);
    for (RelationId r = 0; r < rg.node_count(); ++r)
      for (std::size_t j = 0; j < 5; ++j) CHECK(b(perm[r], j) == doctest::Approx(a(r, j)));
  }
}

TEST_CASE("role-aware encoding") {
  auto p = ModelParams::init(small_config(6), 4);
  Tape tape;
  auto b = bind_params(tape, p, false);
  Tensor same(6, 6, 0.0);
  for (std::size_t r = 0; r < 6; ++r)
    for (std::size_t j = 0; j < 6; ++j) same(r, j) = 0.3 + 0.1 * static_cast<double>(j);
  Var rel = tape.constant(same);

  SUBCASE("identical rows with different roles differ") {
    auto out = role_aware_encode(b, rel, 1, 3).value();  // roles: 1 query, 4 inverse, rest other
    bool differs = false;
    for (std::size_t j = 0; j < 6; ++j) differs |= out(1, j) != out(0, j);
    CHECK(differs);
    for (std::size_t j = 0; j < 6; ++j) CHECK(out(0, j) == out(2, j));  // both "other"
  }

  SUBCASE("zero MLP weights give delta(0) everywhere") {
    ModelParams z = p;
    z.role_w1.fill(0.0);
    z.role_w2.fill(0.0);
    Tape t2;
    auto bz = bind_params(t2, z, false);
    auto out = role_aware_encode(bz, t2.constant(same), 1, 3).value();
    CHECK(out == Tensor(6, 6, 0.0));
  }

  SUBCASE("shape mismatch is a contract error") {
    CHECK_THROWS_AS(role_aware_encode(b, tape.constant(Tensor(5, 6)), 1, 3), ContractError);
    CHECK_THROWS_AS(role_aware_encode(b, tape.constant(Tensor(6, 5)), 1, 3), ContractError);
  }
}

TEST_CASE("entity encoder") {
  const std::size_t d = 4;
  auto p = ModelParams::init(small_config(d, 2, 1), 12);

  SUBCASE("no triples: only the query entity is non-zero") {
    Vocabulary ents(std::vector<std::string>{"a", "b", "c"});
    Vocabulary rels(std::vector<std::string>{"r"});
    auto kg = augment_kg(KnowledgeGraph(ents, rels, {}));
    Tape tape;
    auto b = bind_params(tape, p, false);
    auto e = forward_entities(b, 1, 0, build_relation_graph(kg), EntityGraph::from_kg(kg)).value();
    CHECK(row_is_zero(e, 0));
    CHECK_FALSE(row_is_zero(e, 1));
    CHECK(row_is_zero(e, 2));
  }

  SUBCASE("single triple, one layer, matches a hand-rolled step") {
    auto kg = augment_kg(kg_from({{"q", "r", "x"}}));
    Tape tape;
    auto b = bind_params(tape, p, false);
    Tensor rel_hat(3, d);
    for (std::size_t i = 0; i < rel_hat.size(); ++i) rel_hat[i] = 0.1 * static_cast<double>(i + 1);
    auto e = encode_entities(b, 0, 0, tape.constant(rel_hat), EntityGraph::from_kg(kg)).value();
    // init(q) = rel_hat[0]; x receives init(q) * rel_hat[r = 0].
    for (std::size_t j = 0; j < d; ++j) {
      double s = 0.0;
      for (std::size_t i = 0; i < d; ++i) s += rel_hat(0, i) * rel_hat(0, i) * p.ent_layers[0](i, j);
      CHECK(e(1, j) == doctest::Approx(std::max(0.0, s)));
    }
    CHECK_THROWS_AS(encode_entities(b, 5, 0, tape.constant(rel_hat), EntityGraph::from_kg(kg)),
                    ContractError);
  }
}

TEST_CASE("scoring") {
  Rng rng(21);
  auto kg = augment_kg(testing::random_kg(rng, 8, 3, 14));
  auto rg = build_relation_graph(kg);
  auto graph = EntityGraph::from_kg(kg);
  auto p = ModelParams::init(small_config(4, 2, 2), 6);

  SUBCASE("all-at-once equals one-by-one, and repeats are identical") {
    auto all = score_all(p, 0, 1, rg, graph);
    for (EntityId c = 0; c < 8; ++c) {
      Tape tape;
      auto b = bind_params(tape, p, false);
      auto e = forward_entities(b, 0, 1, rg, graph);
      std::vector<EntityId> one{c, c};
      auto s = score_candidates(b, e, one).value();
      CHECK(s[0] == all[c]);
      CHECK(s[0] == s[1]);
      CHECK(all[c] > 0.0);
      CHECK(all[c] < 1.0);
    }
  }

  SUBCASE("a very negative output bias saturates every score") {
    ModelParams q = p;
    q.scorer_b2 = Tensor::scalar(-20.0);
    for (double s : score_all(q, 0, 1, rg, graph)) CHECK(s < 1e-8);
  }

  SUBCASE("out-of-range candidates are rejected") {
    Tape tape;
    auto b = bind_params(tape, p, false);
    auto e = forward_entities(b, 0, 1, rg, graph);
    std::vector<EntityId> bad{9};
    CHECK_THROWS_AS(score_candidates(b, e, bad), ContractError);
  }
}

TEST_CASE("scores are invariant under joint relabelling of entities and relations") {
  Rng rng(31);
  const std::size_t n_ent = 10, n_rel = 3;
  auto base = testing::random_kg(rng, n_ent, n_rel, 20);
  std::vector<EntityId> pe(n_ent);
  std::iota(pe.begin(), pe.end(), 0u);
  std::vector<RelationId> pr(n_rel);
  std::iota(pr.begin(), pr.end(), 0u);
  std::span<EntityId> spe(pe);
  std::span<RelationId> spr(pr);
  rng.shuffle(spe);
  rng.shuffle(spr);

  Vocabulary ents, rels;
  std::vector<std::string> en(n_ent), rn(n_rel);
  for (std::size_t e = 0; e < n_ent; ++e) en[pe[e]] = base.entities().name(e);
  for (std::size_t r = 0; r < n_rel; ++r) rn[pr[r]] = base.relations().name(r);
  std::vector<Triple> moved;
  for (const auto& t : base.triples()) moved.push_back({pe[t.head], pr[t.relation], pe[t.tail]});
  KnowledgeGraph relabelled(Vocabulary(en), Vocabulary(rn), moved);

  auto a = augment_kg(base);
  auto b = augment_kg(relabelled);
  auto p = ModelParams::init(small_config(4, 2, 2), 2);
  auto map_rel = [&](RelationId r) {
    return r < n_rel ? pr[r] : static_cast<RelationId>(pr[r - n_rel] + n_rel);
  };
  for (EntityId anchor : {0u, 3u})
    for (RelationId r : {0u, 4u}) {
      auto sa = score_all(p, anchor, r, build_relation_graph(a), EntityGraph::from_kg(a));
      auto sb = score_all(p, pe[anchor], map_rel(r), build_relation_graph(b), EntityGraph::from_kg(b));
      for (EntityId e = 0; e < n_ent; ++e) CHECK(sb[pe[e]] == doctest::Approx(sa[e]).epsilon(1e-12));
    }
}

TEST_CASE("parameter count does not depend on the graph") {
  auto p = ModelParams::init(small_config(8, 3, 2), 0);
  // fund 4d, rel 3d^2, roles 3d + 2d^2 + d^2, ent 2d^2, scorer d^2 + d + d + 1
  const std::size_t d = 8;
  CHECK(p.parameter_count() == 4 * d + 3 * d * d + 3 * d + 3 * d * d + 2 * d * d + d * d + 2 * d + 1);
  Rng rng(1);
  for (std::size_t n : {5u, 40u}) {
    auto kg = augment_kg(testing::random_kg(rng, n, n / 5 + 1, 3 * n));
    auto s = score_all(p, 0, 0, build_relation_graph(kg), EntityGraph::from_kg(kg));
    CHECK(s.size() == n);
  }
}

TEST_CASE("end-to-end gradients match finite differences") {
  auto base = kg_from({{"a", "r0", "b"}, {"b", "r1", "c"}, {"c", "r2", "d"}, {"d", "r0", "e"},
                       {"e", "r1", "f"}, {"a", "r2", "f"}, {"b", "r0", "d"}});
  REQUIRE(base.num_entities() == 6);
  auto p = ModelParams::init(small_config(4, 2, 2), 17);
  TrainingConfig cfg;
  cfg.negatives = 3;
  cfg.batch_size = 2;
  Rng rng(4);
  Batch batch = sample_batch(base, cfg, rng);
  REQUIRE_FALSE(batch.examples.empty());
  auto mkg = batch_graph(base, batch, cfg);
  auto cmp = testing::compare_model_gradients(p, batch, mkg, 1e-5);
  for (std::size_t i = 0; i < cmp.names.size(); ++i) {
    INFO(cmp.names[i]);
    CHECK(cmp.relative_errors[i] < 1e-4);
  }
}

TEST_CASE("model checkpoint round trip") {
  auto cfg = small_config(5, 2, 3);
  cfg.entity_init = EntityInit::kAllOnes;
  auto p = ModelParams::init(cfg, 99);
  save_checkpoint("reasoner_test_model", p.to_checkpoint());
  auto back = ModelParams::from_checkpoint(load_checkpoint("reasoner_test_model"));
  CHECK(back.config.dim == 5);
  CHECK(back.config.layers_e == 3);
  CHECK(back.config.entity_init == EntityInit::kAllOnes);
  auto a = p.tensors();
  auto b = back.tensors();
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(*a[i] == *b[i]);
}
