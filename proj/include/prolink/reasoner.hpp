#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "prolink/autodiff.hpp"
#include "prolink/checkpoint.hpp"
#include "prolink/kg.hpp"
#include "prolink/relation_graph.hpp"

namespace prolink {

enum class EntityInit : std::uint8_t {
  kQueryRelation,  // e_q row starts as the role-aware query-relation vector
  kAllOnes,        // e_q row starts as all ones
};

struct ModelConfig {
  std::size_t dim = 32;
  std::size_t layers_r = 4;
  std::size_t layers_e = 4;
  EntityInit entity_init = EntityInit::kQueryRelation;

  void validate() const;
};

enum class RoleIndex : std::uint8_t { kQuery = 0, kInverseQuery = 1, kOther = 2 };

// Role of relation r for a query on r_q. Relation ids follow the augmented
// layout: r and r + base_count are inverses; 2 * base_count is identity.
RoleIndex role_of(RelationId r, RelationId r_q, std::size_t base_count);

// All trainable tensors. Shapes depend only on ModelConfig, never on the
// size of the graph being reasoned over.
struct ModelParams {
  ModelConfig config;
  Tensor fund_edge_emb;            // 4 x d, one row per interaction type
  std::vector<Tensor> rel_layers;  // layers_r of d x d
  Tensor role_emb;                 // 3 x d
  Tensor role_w1;                  // 2d x d
  Tensor role_w2;                  // d x d
  std::vector<Tensor> ent_layers;  // layers_e of d x d
  Tensor scorer_w1;                // d x d
  Tensor scorer_b1;                // 1 x d
  Tensor scorer_w2;                // d x 1
  Tensor scorer_b2;                // 1 x 1

  // uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for every tensor.
  static ModelParams init(const ModelConfig& config, std::uint64_t seed);

  // Stable (name, tensor) view in a fixed order.
  std::vector<Tensor*> tensors();
  std::vector<const Tensor*> tensors() const;
  std::vector<std::string> names() const;
  std::size_t parameter_count() const;

  Checkpoint to_checkpoint() const;
  static ModelParams from_checkpoint(const Checkpoint& ckpt);
};

// Parameters placed on a tape. Tracked leaves receive gradients.
struct BoundParams {
  Tape* tape = nullptr;
  const ModelConfig* config = nullptr;
  Var fund_edge_emb;
  std::vector<Var> rel_layers;
  Var role_emb, role_w1, role_w2;
  std::vector<Var> ent_layers;
  Var scorer_w1, scorer_b1, scorer_w2, scorer_b2;

  std::vector<Var> all() const;  // same order as ModelParams::tensors()
};

BoundParams bind_params(Tape& tape, const ModelParams& params, bool track);

// Edge arrays of an augmented KG (identity edges included) for message passing.
struct EntityGraph {
  std::size_t num_entities = 0;
  std::size_t base_relation_count = 0;
  std::vector<std::uint32_t> src, rel, dst;

  static EntityGraph from_kg(const KnowledgeGraph& kg);
};

// Relation-level message passing over rg, conditioned on r_q: r_q starts as
// all ones, every other node as zeros. Returns a [node_count x d] matrix.
Var encode_relations(const BoundParams& p, RelationId r_q, const RelationGraph& rg);

// Row-wise delta(W2 delta(W1 [R[r] : R_o[role(r)]])). R may carry one extra
// trailing row for the identity relation.
Var role_aware_encode(const BoundParams& p, const Var& relations, RelationId r_q,
                      std::size_t base_count);

// Entity-level message passing with DistMult messages state(u) * R_hat[r].
// `relations` must cover every relation id used by `graph` (2B + 1 rows).
Var encode_entities(const BoundParams& p, EntityId e_q, RelationId r_q, const Var& relations,
                    const EntityGraph& graph);

// sigmoid(MLP(E[c])) for each candidate; returns [candidates x 1].
Var score_candidates(const BoundParams& p, const Var& entities,
                     std::span<const EntityId> candidates);

// Full forward pass for one query (anchor, relation, ?). Returns the
// [num_entities x d] entity states.
Var forward_entities(const BoundParams& p, EntityId anchor, RelationId relation,
                     const RelationGraph& rg, const EntityGraph& graph);

// Scores of every entity as the answer of (anchor, relation, ?).
std::vector<double> score_all(const ModelParams& params, EntityId anchor, RelationId relation,
                              const RelationGraph& rg, const EntityGraph& graph);

}  // namespace prolink
