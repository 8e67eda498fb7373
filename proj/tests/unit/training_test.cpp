#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "synthetic.hpp"
#include "prolink/errors.hpp"
#include "prolink/training.hpp"

using namespace prolink;
using testing::kg_from;

TEST_CASE("loss unit values") {
  std::vector<double> half{0.5};
  CHECK(std::abs(compute_loss(0.5, half) - 2.0 * std::log(2.0)) < 1e-10);

  std::vector<double> two{0.1, 0.2};
  const double expected = -std::log(0.9) - 0.5 * (std::log(0.9) + std::log(0.8));
  CHECK(std::abs(compute_loss(0.9, two) - expected) < 1e-10);
  CHECK(compute_loss(0.9, two) == doctest::Approx(0.2696).epsilon(1e-3));

  std::vector<double> tiny{1e-15, 1e-15};
  CHECK(compute_loss(1.0 - 1e-15, tiny) < 1e-12);
}

TEST_CASE("loss contract") {
  std::vector<double> none;
  std::vector<double> bad{1.5};
  std::vector<double> ok{0.5};
  CHECK_THROWS_AS(compute_loss(0.5, none), ContractError);
  CHECK_THROWS_AS(compute_loss(0.5, bad), ContractError);
  CHECK_THROWS_AS(compute_loss(-0.1, ok), ContractError);
  CHECK_THROWS_AS(compute_loss(std::nan(""), ok), ContractError);
  // Saturated scores stay finite thanks to the floor.
  std::vector<double> one{1.0};
  CHECK(std::isfinite(compute_loss(0.0, one)));
}

TEST_CASE("tape loss agrees with the scalar loss") {
  Tape tape;
  Var s = tape.constant(Tensor(3, 1, std::vector<double>{0.9, 0.1, 0.2}));
  std::vector<double> neg{0.1, 0.2};
  CHECK(loss_on_tape(s).value().item() == doctest::Approx(compute_loss(0.9, neg)).epsilon(1e-14));
  CHECK_THROWS_AS(loss_on_tape(tape.constant(Tensor(1, 1, 0.5))), ContractError);
}

namespace {

KnowledgeGraph ten_rq_triples() {
  std::vector<std::array<std::string, 3>> t;
  for (int i = 0; i < 10; ++i) t.push_back({"h" + std::to_string(i), "rq", "t" + std::to_string(i)});
  t.push_back({"h0", "other", "t5"});
  return kg_from(t);
}

std::size_t count_relation(const KnowledgeGraph& kg, RelationId r) {
  std::size_t n = 0;
  for (const auto& t : kg.base_triples()) n += t.relation == r;
  return n;
}

}  // namespace

TEST_CASE("masked graphs") {
  auto kg = ten_rq_triples();
  const RelationId rq = *kg.relations().find("rq");

  SUBCASE("gamma 0 removes only the batch positives") {
    std::vector<Triple> pos{kg.triples()[0]};
    auto m = build_masked_kg(kg, rq, 0.0, 1, pos);
    CHECK(m.augmented());
    CHECK(m.base_triples().size() == kg.num_triples() - 1);
    CHECK_FALSE(m.contains(pos[0]));
  }
  SUBCASE("gamma 1 removes every rq triple") {
    auto m = build_masked_kg(kg, rq, 1.0, 1);
    CHECK(count_relation(m, rq) == 0);
    CHECK(m.base_triples().size() == 1);
  }
  SUBCASE("gamma 0.5 masks exactly five, deterministically") {
    auto a = build_masked_kg(kg, rq, 0.5, 42);
    auto b = build_masked_kg(kg, rq, 0.5, 42);
    CHECK(count_relation(a, rq) == 5);
    CHECK(a.base_triples() == b.base_triples());
    bool some_seed_differs = false;
    for (std::uint64_t s = 0; s < 20 && !some_seed_differs; ++s)
      some_seed_differs = build_masked_kg(kg, rq, 0.5, s).base_triples() != a.base_triples();
    CHECK(some_seed_differs);
  }
  SUBCASE("augmentation is rebuilt consistently") {
    auto m = build_masked_kg(kg, rq, 0.5, 3);
    CHECK(m.num_triples() == 2 * m.base_triples().size() + m.num_entities());
    CHECK(m.num_entities() == kg.num_entities());
  }
  SUBCASE("contracts") {
    CHECK_THROWS_AS(build_masked_kg(kg, rq, 1.5, 0), ContractError);
    CHECK_THROWS_AS(build_masked_kg(kg, 7, 0.5, 0), ContractError);
    CHECK_THROWS_AS(build_masked_kg(augment_kg(kg), rq, 0.5, 0), ContractError);
  }
}

TEST_CASE("batch sampling") {
  Rng g(8);
  auto kg = testing::random_kg(g, 30, 4, 80);
  TrainingConfig cfg;
  cfg.negatives = 5;
  cfg.batch_size = 6;

  SUBCASE("alpha 1 gives only regular batches, alpha 0 only low-resource") {
    Rng rng(1);
    cfg.alpha = 1.0;
    for (int i = 0; i < 200; ++i) CHECK(sample_batch(kg, cfg, rng).kind == BatchKind::kRegular);
    cfg.alpha = 0.0;
    for (int i = 0; i < 200; ++i) {
      auto b = sample_batch(kg, cfg, rng);
      CHECK(b.kind == BatchKind::kLowResource);
      for (const auto& ex : b.examples) CHECK(ex.positive.relation == b.relation);
    }
  }

  SUBCASE("low-resource fraction at alpha 0.5") {
    Rng rng(2);
    cfg.alpha = 0.5;
    cfg.negatives = 1;
    cfg.batch_size = 1;
    int low = 0;
    const int n = 10000;
    for (int i = 0; i < n; ++i) low += sample_batch(kg, cfg, rng).kind == BatchKind::kLowResource;
    const double frac = static_cast<double>(low) / n;
    CHECK(frac >= 0.47);
    CHECK(frac <= 0.53);
  }

  SUBCASE("negatives never form true triples and positives are removed from messages") {
    Rng rng(3);
    for (int i = 0; i < 50; ++i) {
      auto b = sample_batch(kg, cfg, rng);
      REQUIRE_FALSE(b.examples.empty());
      auto mkg = batch_graph(kg, b, cfg);
      for (const auto& ex : b.examples) {
        CHECK_FALSE(mkg.contains(ex.positive));
        CHECK(ex.negatives.size() == cfg.negatives);
        for (EntityId e : ex.negatives) {
          Triple c = ex.positive;
          (ex.direction == QueryDirection::kTail ? c.tail : c.head) = e;
          CHECK_FALSE(kg.contains(c));
        }
      }
    }
  }

  SUBCASE("a relation with fewer triples than the batch size truncates the batch") {
    auto small = kg_from({{"a", "r", "b"}, {"c", "r", "d"}, {"a", "s", "d"}});
    cfg.alpha = 0.0;
    cfg.batch_size = 10;
    cfg.negatives = 1;
    Rng rng(4);
    for (int i = 0; i < 20; ++i) {
      auto b = sample_batch(small, cfg, rng);
      CHECK_FALSE(b.examples.empty());
      CHECK(b.examples.size() <= 2);
    }
  }
}

TEST_CASE("training loop") {
  auto comp = testing::composition_kg(20, 0.2, 5);
  ModelConfig mc;
  mc.dim = 8;
  mc.layers_r = 2;
  mc.layers_e = 2;
  auto init = ModelParams::init(mc, 1);
  TrainingConfig cfg;
  cfg.epochs = 3;
  cfg.batch_size = 4;
  cfg.batches_per_epoch = 3;
  cfg.negatives = 4;
  cfg.seed = 11;

  SUBCASE("lr 0 freezes the parameters") {
    cfg.lr = 0.0;
    auto r = train(comp.train, init, cfg);
    auto a = init.tensors();
    auto b = r.params.tensors();
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(*a[i] == *b[i]);
    CHECK(r.loss_curve.size() == 3);
  }

  SUBCASE("same seed gives bit-identical loss curves") {
    auto a = train(comp.train, init, cfg);
    auto b = train(comp.train, init, cfg);
    CHECK(a.loss_curve == b.loss_curve);
    for (double l : a.loss_curve) CHECK(l >= 0.0);
  }

  SUBCASE("epoch callback sees every epoch") {
    std::vector<std::size_t> seen;
    train(comp.train, init, cfg, [&](const EpochStats& s, const ModelParams&) { seen.push_back(s.epoch); });
    CHECK(seen == std::vector<std::size_t>{0, 1, 2});
  }

  SUBCASE("non-finite parameters abort with context") {
    ModelParams broken = init;
    broken.scorer_w1(0, 0) = std::nan("");
    try {
      train(comp.train, broken, cfg);
      FAIL("expected NumericError");
    } catch (const NumericError& e) {
      CHECK(std::string(e.what()).find("epoch 0") != std::string::npos);
    }
  }

  SUBCASE("invalid configs are rejected") {
    cfg.alpha = 2.0;
    CHECK_THROWS_AS(train(comp.train, init, cfg), ContractError);
  }
}

TEST_CASE("loss decreases on the compositional toy graph") {
  auto comp = testing::composition_kg(50, 0.2, 3);
  ModelConfig mc;
  mc.dim = 16;
  mc.layers_r = 2;
  mc.layers_e = 3;
  TrainingConfig cfg;
  cfg.epochs = 5;
  cfg.batch_size = 16;
  cfg.batches_per_epoch = 8;
  cfg.lr = 5e-3;
  cfg.seed = 2;
  auto r = train(comp.train, ModelParams::init(mc, 4), cfg);
  REQUIRE(r.loss_curve.size() == 5);
  for (std::size_t i = 1; i < 5; ++i) {
    INFO("epoch " << i);
    CHECK(r.loss_curve[i] < r.loss_curve[i - 1]);
  }
}
