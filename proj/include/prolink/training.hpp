#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "prolink/autodiff.hpp"
#include "prolink/kg.hpp"
#include "prolink/reasoner.hpp"
#include "prolink/rng.hpp"
#include "prolink/tasks.hpp"

namespace prolink {

struct TrainingConfig {
  double alpha = 0.5;  // probability of a regular batch
  double gamma = 0.1;  // fraction of r_q triples masked in low-resource batches
  std::size_t negatives = 16;
  double lr = 1e-3;
  std::size_t epochs = 10;
  std::size_t batch_size = 8;
  // 0 means ceil(#triples / batch_size).
  std::size_t batches_per_epoch = 0;
  std::uint64_t seed = 0;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;

  void validate() const;
};

inline constexpr double kProbabilityFloor = 1e-12;

// -log p+ - (1/n) sum log(1 - p-_i). Scores must lie in [0, 1]; each log
// argument is floored at kProbabilityFloor.
double compute_loss(double positive, std::span<const double> negatives);

// Same objective on a tape. `scores` is [1 + n x 1] with the positive first.
Var loss_on_tape(const Var& scores);

// Base graph minus floor(gamma * m) uniformly chosen r_q triples (m = r_q
// triples that are not batch positives) and minus every batch positive,
// then augmented.
KnowledgeGraph build_masked_kg(const KnowledgeGraph& base_kg, RelationId r_q, double gamma,
                               std::uint64_t seed, std::span<const Triple> batch_positives = {});

enum class BatchKind : std::uint8_t { kRegular, kLowResource };

struct TrainingExample {
  Triple positive;
  QueryDirection direction;  // which side is predicted (the other is the anchor)
  std::vector<EntityId> negatives;
};

struct Batch {
  BatchKind kind = BatchKind::kRegular;
  RelationId relation = 0;  // shared relation of a low-resource batch
  std::vector<TrainingExample> examples;
  std::uint64_t mask_seed = 0;

  std::vector<Triple> positives() const;
};

// One batch: low-resource with probability 1 - alpha, else regular. Negatives
// corrupt the predicted side uniformly, rejecting triples of `base_kg`.
Batch sample_batch(const KnowledgeGraph& base_kg, const TrainingConfig& config, Rng& rng);

// Message-passing graph of a batch (positives always removed).
KnowledgeGraph batch_graph(const KnowledgeGraph& base_kg, const Batch& batch,
                           const TrainingConfig& config);

// Mean loss over the batch, recorded on `params`' tape.
Var batch_loss(const BoundParams& params, const Batch& batch, const KnowledgeGraph& message_kg);

class AdamOptimizer {
 public:
  AdamOptimizer(const ModelParams& params, const TrainingConfig& config);
  void step(ModelParams& params, const std::vector<Tensor>& grads);

 private:
  double lr_, beta1_, beta2_, eps_;
  std::size_t t_ = 0;
  std::vector<Tensor> m_, v_;
};

struct EpochStats {
  std::size_t epoch = 0;
  double mean_loss = 0.0;
  double seconds = 0.0;
};

struct TrainResult {
  ModelParams params;
  std::vector<double> loss_curve;  // per-epoch mean batch loss
};

using EpochCallback = std::function<void(const EpochStats&, const ModelParams&)>;

// Throws NumericError with epoch / batch context when a non-finite value
// appears anywhere in the step.
TrainResult train(const KnowledgeGraph& kg, ModelParams params, const TrainingConfig& config,
                  const EpochCallback& on_epoch = {});

}  // namespace prolink
