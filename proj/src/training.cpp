#include "prolink/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "prolink/errors.hpp"
#include "prolink/relation_graph.hpp"

namespace prolink {

void TrainingConfig::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ContractError("TrainingConfig: alpha must be in [0, 1]");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw ContractError("TrainingConfig: gamma must be in [0, 1]");
  if (negatives < 1) throw ContractError("TrainingConfig: negatives must be >= 1");
  if (batch_size < 1) throw ContractError("TrainingConfig: batch_size must be >= 1");
  if (!(lr >= 0.0)) throw ContractError("TrainingConfig: lr must be >= 0");
}

double compute_loss(double positive, std::span<const double> negatives) {
  if (negatives.empty()) throw ContractError("compute_loss: at least one negative required");
  auto check = [](double p) {
    if (!(p >= 0.0 && p <= 1.0)) throw ContractError("compute_loss: score outside [0, 1]");
  };
  check(positive);
  double loss = -std::log(std::max(positive, kProbabilityFloor));
  double neg = 0.0;
  for (double p : negatives) {
    check(p);
    neg += std::log(std::max(1.0 - p, kProbabilityFloor));
  }
  return loss - neg / static_cast<double>(negatives.size());
}

Var loss_on_tape(const Var& scores) {
  const std::size_t rows = scores.rows();
  if (rows < 2 || scores.cols() != 1)
    throw ContractError("loss_on_tape: expected [1 + n x 1] scores with n >= 1");
  std::vector<std::uint32_t> neg_index(rows - 1);
  std::iota(neg_index.begin(), neg_index.end(), 1u);
  Var pos = index_rows(scores, {0});
  Var neg = index_rows(scores, std::move(neg_index));
  Var pos_term = affine(sum(log_floor(pos, kProbabilityFloor)), -1.0);
  Var neg_term = affine(mean(log_floor(affine(neg, -1.0, 1.0), kProbabilityFloor)), -1.0);
  return add(pos_term, neg_term);
}

KnowledgeGraph build_masked_kg(const KnowledgeGraph& base_kg, RelationId r_q, double gamma,
                               std::uint64_t seed, std::span<const Triple> batch_positives) {
  if (base_kg.augmented()) throw ContractError("build_masked_kg expects a base graph");
  if (r_q >= base_kg.base_relation_count()) throw ContractError("build_masked_kg: unknown relation");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw ContractError("build_masked_kg: gamma must be in [0, 1]");

  std::vector<Triple> removed(batch_positives.begin(), batch_positives.end());
  std::sort(removed.begin(), removed.end());
  std::vector<Triple> candidates;
  for (const auto& t : base_kg.triples())
    if (t.relation == r_q && !std::binary_search(removed.begin(), removed.end(), t))
      candidates.push_back(t);
  const auto n_mask = static_cast<std::size_t>(
      std::floor(gamma * static_cast<double>(candidates.size()) + 1e-9));
  Rng rng(seed);
  for (auto i : rng.sample_without_replacement(candidates.size(), n_mask))
    removed.push_back(candidates[i]);
  std::sort(removed.begin(), removed.end());

  std::vector<Triple> kept;
  kept.reserve(base_kg.num_triples());
  for (const auto& t : base_kg.triples())
    if (!std::binary_search(removed.begin(), removed.end(), t)) kept.push_back(t);
  return augment_kg(base_kg.with_base_triples(std::move(kept)));
}

std::vector<Triple> Batch::positives() const {
  std::vector<Triple> out;
  out.reserve(examples.size());
  for (const auto& e : examples) out.push_back(e.positive);
  return out;
}

namespace {

std::vector<EntityId> draw_negatives(const KnowledgeGraph& kg, const Triple& pos,
                                     QueryDirection dir, std::size_t n, Rng& rng) {
  std::vector<EntityId> out;
  const std::size_t n_ent = kg.num_entities();
  const std::size_t max_attempts = 64 * n + 64;
  for (std::size_t attempt = 0; attempt < max_attempts && out.size() < n; ++attempt) {
    auto e = static_cast<EntityId>(rng.below(n_ent));
    Triple cand = pos;
    (dir == QueryDirection::kTail ? cand.tail : cand.head) = e;
    if (kg.contains(cand)) continue;
    out.push_back(e);
  }
  return out;
}

}  // namespace

Batch sample_batch(const KnowledgeGraph& base_kg, const TrainingConfig& config, Rng& rng) {
  if (base_kg.augmented()) throw ContractError("sample_batch expects a base graph");
  if (base_kg.num_triples() == 0) throw ContractError("sample_batch: graph has no triples");
  Batch batch;
  std::vector<Triple> pool;
  if (rng.bernoulli(1.0 - config.alpha)) {
    batch.kind = BatchKind::kLowResource;
    std::vector<RelationId> present;
    for (const auto& t : base_kg.triples())
      if (present.empty() || present.back() != t.relation) present.push_back(t.relation);
    std::sort(present.begin(), present.end());
    present.erase(std::unique(present.begin(), present.end()), present.end());
    batch.relation = present[rng.below(present.size())];
    for (const auto& t : base_kg.triples())
      if (t.relation == batch.relation) pool.push_back(t);
  } else {
    batch.kind = BatchKind::kRegular;
    pool.assign(base_kg.triples().begin(), base_kg.triples().end());
  }
  const std::size_t take = std::min(config.batch_size, pool.size());
  for (auto i : rng.sample_without_replacement(pool.size(), take)) {
    TrainingExample ex;
    ex.positive = pool[i];
    ex.direction = rng.bernoulli(0.5) ? QueryDirection::kTail : QueryDirection::kHead;
    ex.negatives = draw_negatives(base_kg, ex.positive, ex.direction, config.negatives, rng);
    if (ex.negatives.empty()) continue;  // every corruption is a true triple
    batch.examples.push_back(std::move(ex));
  }
  batch.mask_seed = rng.next();
  return batch;
}

KnowledgeGraph batch_graph(const KnowledgeGraph& base_kg, const Batch& batch,
                           const TrainingConfig& config) {
  const auto positives = batch.positives();
  if (batch.kind == BatchKind::kLowResource)
    return build_masked_kg(base_kg, batch.relation, config.gamma, batch.mask_seed, positives);
  return build_masked_kg(base_kg, 0, 0.0, batch.mask_seed, positives);
}

Var batch_loss(const BoundParams& params, const Batch& batch, const KnowledgeGraph& message_kg) {
  if (batch.examples.empty()) throw ContractError("batch_loss: empty batch");
  const RelationGraph rg = build_relation_graph(message_kg);
  const EntityGraph graph = EntityGraph::from_kg(message_kg);
  const auto b = static_cast<RelationId>(message_kg.base_relation_count());
  Var total;
  for (const auto& ex : batch.examples) {
    const bool tail = ex.direction == QueryDirection::kTail;
    const EntityId anchor = tail ? ex.positive.head : ex.positive.tail;
    const EntityId answer = tail ? ex.positive.tail : ex.positive.head;
    const RelationId rel = tail ? ex.positive.relation : ex.positive.relation + b;
    std::vector<EntityId> candidates{answer};
    candidates.insert(candidates.end(), ex.negatives.begin(), ex.negatives.end());
    Var ent = forward_entities(params, anchor, rel, rg, graph);
    Var loss = loss_on_tape(score_candidates(params, ent, candidates));
    total = total.valid() ? add(total, loss) : loss;
  }
  return affine(total, 1.0 / static_cast<double>(batch.examples.size()));
}

AdamOptimizer::AdamOptimizer(const ModelParams& params, const TrainingConfig& config)
    : lr_(config.lr), beta1_(config.adam_beta1), beta2_(config.adam_beta2), eps_(config.adam_eps) {
  for (const auto* t : params.tensors()) {
    m_.emplace_back(t->rows(), t->cols(), 0.0);
    v_.emplace_back(t->rows(), t->cols(), 0.0);
  }
}

void AdamOptimizer::step(ModelParams& params, const std::vector<Tensor>& grads) {
  auto ts = params.tensors();
  if (grads.size() != ts.size()) throw ContractError("AdamOptimizer: gradient count mismatch");
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t p = 0; p < ts.size(); ++p) {
    Tensor& w = *ts[p];
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double g = grads[p][i];
      m_[p][i] = beta1_ * m_[p][i] + (1.0 - beta1_) * g;
      v_[p][i] = beta2_ * v_[p][i] + (1.0 - beta2_) * g * g;
      w[i] -= lr_ * (m_[p][i] / c1) / (std::sqrt(v_[p][i] / c2) + eps_);
    }
  }
}

TrainResult train(const KnowledgeGraph& kg, ModelParams params, const TrainingConfig& config,
                  const EpochCallback& on_epoch) {
  config.validate();
  const KnowledgeGraph base = kg.augmented() ? kg.with_base_triples(kg.base_triples()) : kg;
  if (base.num_triples() == 0) throw ContractError("train: graph has no triples");
  const std::size_t batches =
      config.batches_per_epoch > 0
          ? config.batches_per_epoch
          : (base.num_triples() + config.batch_size - 1) / config.batch_size;

  Rng rng(config.seed);
  AdamOptimizer adam(params, config);
  TrainResult result;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    double epoch_loss = 0.0;
    std::size_t counted = 0;
    for (std::size_t bi = 0; bi < batches; ++bi) {
      Batch batch = sample_batch(base, config, rng);
      if (batch.examples.empty()) continue;
      try {
        const KnowledgeGraph mkg = batch_graph(base, batch, config);
        Tape tape;
        auto bound = bind_params(tape, params, true);
        Var loss = batch_loss(bound, batch, mkg);
        auto vars = bound.all();
        auto grads = tape.gradients(loss, vars);
        adam.step(params, grads);
        for (const auto* t : params.tensors())
          if (!t->all_finite()) throw NumericError("optimizer step produced non-finite parameters");
        epoch_loss += loss.value().item();
        ++counted;
      } catch (const NumericError& e) {
        throw NumericError("epoch " + std::to_string(epoch) + ", batch " + std::to_string(bi) +
                           ": " + e.what());
      }
    }
    const double mean_loss = counted ? epoch_loss / static_cast<double>(counted) : 0.0;
    result.loss_curve.push_back(mean_loss);
    if (on_epoch) {
      const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - start;
      on_epoch({epoch, mean_loss, dt.count()}, params);
    }
  }
  result.params = std::move(params);
  return result;
}

}  // namespace prolink
