#include "prolink/reasoner.hpp"

#include <spdlog/spdlog.h>

#include <cmath>

#include "prolink/errors.hpp"
#include "prolink/rng.hpp"

namespace prolink {

namespace {

Tensor uniform_tensor(std::size_t rows, std::size_t cols, std::size_t fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  Tensor t(rows, cols);
  for (auto& v : t.data()) v = rng.uniform(-bound, bound);
  return t;
}

// h <- h + relu(agg * W)
Var combine(const Var& state, const Var& agg, const Var& weight) {
  return add(state, relu(matmul(agg, weight)));
}

}  // namespace

void ModelConfig::validate() const {
  if (dim < 1) throw ContractError("ModelConfig: dim must be >= 1");
  if (layers_r < 1 || layers_e < 1) throw ContractError("ModelConfig: layers must be >= 1");
}

RoleIndex role_of(RelationId r, RelationId r_q, std::size_t base_count) {
  const auto b = static_cast<RelationId>(base_count);
  if (r_q >= 2 * b) throw ContractError("role_of: query relation must be a base or inverse relation");
  if (r == r_q) return RoleIndex::kQuery;
  const RelationId inv = r_q < b ? r_q + b : r_q - b;
  if (r == inv) return RoleIndex::kInverseQuery;
  return RoleIndex::kOther;
}

ModelParams ModelParams::init(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  const std::size_t d = config.dim;
  Rng rng(seed);
  ModelParams p;
  p.config = config;
  p.fund_edge_emb = uniform_tensor(kNumInteractionTypes, d, d, rng);
  for (std::size_t l = 0; l < config.layers_r; ++l) p.rel_layers.push_back(uniform_tensor(d, d, d, rng));
  p.role_emb = uniform_tensor(3, d, d, rng);
  p.role_w1 = uniform_tensor(2 * d, d, 2 * d, rng);
  p.role_w2 = uniform_tensor(d, d, d, rng);
  for (std::size_t l = 0; l < config.layers_e; ++l) p.ent_layers.push_back(uniform_tensor(d, d, d, rng));
  p.scorer_w1 = uniform_tensor(d, d, d, rng);
  p.scorer_b1 = uniform_tensor(1, d, d, rng);
  p.scorer_w2 = uniform_tensor(d, 1, d, rng);
  p.scorer_b2 = uniform_tensor(1, 1, d, rng);
  return p;
}

std::vector<Tensor*> ModelParams::tensors() {
  std::vector<Tensor*> out{&fund_edge_emb};
  for (auto& t : rel_layers) out.push_back(&t);
  out.insert(out.end(), {&role_emb, &role_w1, &role_w2});
  for (auto& t : ent_layers) out.push_back(&t);
  out.insert(out.end(), {&scorer_w1, &scorer_b1, &scorer_w2, &scorer_b2});
  return out;
}

std::vector<const Tensor*> ModelParams::tensors() const {
  auto mut = const_cast<ModelParams*>(this)->tensors();
  return {mut.begin(), mut.end()};
}

std::vector<std::string> ModelParams::names() const {
  std::vector<std::string> out{"fund_edge_emb"};
  for (std::size_t l = 0; l < rel_layers.size(); ++l) out.push_back("rel_layer" + std::to_string(l));
  out.insert(out.end(), {"role_emb", "role_w1", "role_w2"});
  for (std::size_t l = 0; l < ent_layers.size(); ++l) out.push_back("ent_layer" + std::to_string(l));
  out.insert(out.end(), {"scorer_w1", "scorer_b1", "scorer_w2", "scorer_b2"});
  return out;
}

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto* t : tensors()) n += t->size();
  return n;
}

Checkpoint ModelParams::to_checkpoint() const {
  Checkpoint ckpt;
  auto ns = names();
  auto ts = tensors();
  for (std::size_t i = 0; i < ns.size(); ++i) ckpt.tensors.push_back({ns[i], *ts[i]});
  ckpt.metadata["dim"] = std::to_string(config.dim);
  ckpt.metadata["layers_r"] = std::to_string(config.layers_r);
  ckpt.metadata["layers_e"] = std::to_string(config.layers_e);
  ckpt.metadata["entity_init"] =
      config.entity_init == EntityInit::kAllOnes ? "all_ones" : "query_relation";
  return ckpt;
}

ModelParams ModelParams::from_checkpoint(const Checkpoint& ckpt) {
  auto get = [&](const char* key) -> const std::string& {
    auto it = ckpt.metadata.find(key);
    if (it == ckpt.metadata.end())
      throw DataError(std::string("checkpoint manifest lacks model key '") + key + "'");
    return it->second;
  };
  ModelConfig config;
  try {
    config.dim = std::stoull(get("dim"));
    config.layers_r = std::stoull(get("layers_r"));
    config.layers_e = std::stoull(get("layers_e"));
  } catch (const std::logic_error&) {
    throw DataError("checkpoint manifest has a malformed model config");
  }
  const auto& init_mode = get("entity_init");
  if (init_mode == "all_ones") {
    config.entity_init = EntityInit::kAllOnes;
  } else if (init_mode == "query_relation") {
    config.entity_init = EntityInit::kQueryRelation;
  } else {
    throw DataError("checkpoint manifest: unknown entity_init '" + init_mode + "'");
  }

  ModelParams p = init(config, 0);
  auto ns = p.names();
  auto ts = p.tensors();
  for (std::size_t i = 0; i < ns.size(); ++i) {
    const Tensor& src = ckpt.at(ns[i]);
    if (!src.same_shape(*ts[i])) throw DataError("checkpoint: tensor '" + ns[i] + "' has wrong shape");
    *ts[i] = src;
  }
  return p;
}

std::vector<Var> BoundParams::all() const {
  std::vector<Var> out{fund_edge_emb};
  out.insert(out.end(), rel_layers.begin(), rel_layers.end());
  out.insert(out.end(), {role_emb, role_w1, role_w2});
  out.insert(out.end(), ent_layers.begin(), ent_layers.end());
  out.insert(out.end(), {scorer_w1, scorer_b1, scorer_w2, scorer_b2});
  return out;
}

BoundParams bind_params(Tape& tape, const ModelParams& params, bool track) {
  BoundParams b;
  b.tape = &tape;
  b.config = &params.config;
  b.fund_edge_emb = tape.leaf(params.fund_edge_emb, track);
  for (const auto& t : params.rel_layers) b.rel_layers.push_back(tape.leaf(t, track));
  b.role_emb = tape.leaf(params.role_emb, track);
  b.role_w1 = tape.leaf(params.role_w1, track);
  b.role_w2 = tape.leaf(params.role_w2, track);
  for (const auto& t : params.ent_layers) b.ent_layers.push_back(tape.leaf(t, track));
  b.scorer_w1 = tape.leaf(params.scorer_w1, track);
  b.scorer_b1 = tape.leaf(params.scorer_b1, track);
  b.scorer_w2 = tape.leaf(params.scorer_w2, track);
  b.scorer_b2 = tape.leaf(params.scorer_b2, track);
  return b;
}

EntityGraph EntityGraph::from_kg(const KnowledgeGraph& kg) {
  if (!kg.augmented()) throw ContractError("EntityGraph: knowledge graph must be augmented");
  EntityGraph g;
  g.num_entities = kg.num_entities();
  g.base_relation_count = kg.base_relation_count();
  g.src.reserve(kg.num_triples());
  g.rel.reserve(kg.num_triples());
  g.dst.reserve(kg.num_triples());
  for (const auto& t : kg.triples()) {
    g.src.push_back(t.head);
    g.rel.push_back(t.relation);
    g.dst.push_back(t.tail);
  }
  return g;
}

Var encode_relations(const BoundParams& p, RelationId r_q, const RelationGraph& rg) {
  const std::size_t n = rg.node_count();
  const std::size_t d = p.config->dim;
  if (r_q >= n) throw ContractError("encode_relations: query relation is not a graph node");

  std::vector<std::uint32_t> src, type, dst;
  src.reserve(rg.num_edges());
  type.reserve(rg.num_edges());
  dst.reserve(rg.num_edges());
  bool isolated = true;
  for (const auto& e : rg.edges()) {
    src.push_back(e.src);
    type.push_back(static_cast<std::uint32_t>(e.type));
    dst.push_back(e.dst);
    if (e.src == r_q && e.dst != r_q) isolated = false;
  }
  if (isolated) spdlog::debug("encode_relations: query relation {} has no neighbours", r_q);

  Tensor init(n, d, 0.0);
  for (auto& v : init.row(r_q)) v = 1.0;
  Tape& tape = *p.tape;
  Var h = tape.constant(std::move(init));
  const Var edge_types = index_rows(p.fund_edge_emb, type);
  for (const auto& w : p.rel_layers) {
    Var msg = mul(index_rows(h, src), edge_types);
    Var agg = scatter_sum_rows(msg, dst, n);
    h = combine(h, agg, w);
  }
  return h;
}

Var role_aware_encode(const BoundParams& p, const Var& relations, RelationId r_q,
                      std::size_t base_count) {
  const std::size_t d = p.config->dim;
  const std::size_t rows = relations.rows();
  if (relations.cols() != d) throw ContractError("role_aware_encode: relation matrix width != dim");
  if (rows != 2 * base_count && rows != 2 * base_count + 1)
    throw ContractError("role_aware_encode: expected 2B or 2B+1 relation rows");
  std::vector<std::uint32_t> roles(rows);
  for (std::size_t r = 0; r < rows; ++r)
    roles[r] = static_cast<std::uint32_t>(role_of(static_cast<RelationId>(r), r_q, base_count));
  Var x = concat_cols(relations, index_rows(p.role_emb, std::move(roles)));
  return relu(matmul(relu(matmul(x, p.role_w1)), p.role_w2));
}

Var encode_entities(const BoundParams& p, EntityId e_q, RelationId r_q, const Var& relations,
                    const EntityGraph& graph) {
  const std::size_t n = graph.num_entities;
  const std::size_t d = p.config->dim;
  if (e_q >= n) throw ContractError("encode_entities: query entity out of range");
  if (relations.rows() < 2 * graph.base_relation_count + 1 || relations.cols() != d)
    throw ContractError("encode_entities: relation matrix does not cover the graph's relations");

  Tape& tape = *p.tape;
  Var h;
  if (p.config->entity_init == EntityInit::kAllOnes) {
    Tensor init(n, d, 0.0);
    for (auto& v : init.row(e_q)) v = 1.0;
    h = tape.constant(std::move(init));
  } else {
    h = scatter_sum_rows(index_rows(relations, {r_q}), {e_q}, n);
  }
  const Var edge_rel = index_rows(relations, graph.rel);
  for (const auto& w : p.ent_layers) {
    Var msg = mul(index_rows(h, graph.src), edge_rel);
    Var agg = scatter_sum_rows(msg, graph.dst, n);
    h = combine(h, agg, w);
  }
  return h;
}

Var score_candidates(const BoundParams& p, const Var& entities,
                     std::span<const EntityId> candidates) {
  for (auto c : candidates)
    if (c >= entities.rows()) throw ContractError("score_candidates: candidate out of range");
  Var x = index_rows(entities, {candidates.begin(), candidates.end()});
  Var hidden = relu(add_row(matmul(x, p.scorer_w1), p.scorer_b1));
  return sigmoid(add_row(matmul(hidden, p.scorer_w2), p.scorer_b2));
}

Var forward_entities(const BoundParams& p, EntityId anchor, RelationId relation,
                     const RelationGraph& rg, const EntityGraph& graph) {
  const std::size_t b = graph.base_relation_count;
  if (rg.node_count() != 2 * b) throw ContractError("forward: relation graph does not match the KG");
  Var rel = encode_relations(p, relation, rg);
  // Identity relation: zero structural vector, role "other".
  Var with_identity = concat_rows(rel, p.tape->constant(Tensor(1, p.config->dim, 0.0)));
  Var rel_hat = role_aware_encode(p, with_identity, relation, b);
  return encode_entities(p, anchor, relation, rel_hat, graph);
}

std::vector<double> score_all(const ModelParams& params, EntityId anchor, RelationId relation,
                              const RelationGraph& rg, const EntityGraph& graph) {
  Tape tape;
  auto bound = bind_params(tape, params, false);
  Var ent = forward_entities(bound, anchor, relation, rg, graph);
  std::vector<EntityId> all(graph.num_entities);
  for (EntityId e = 0; e < all.size(); ++e) all[e] = e;
  Var scores = score_candidates(bound, ent, all);
  auto data = scores.value().data();
  return {data.begin(), data.end()};
}

}  // namespace prolink
