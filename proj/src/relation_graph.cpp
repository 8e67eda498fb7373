#include "prolink/relation_graph.hpp"

#include <Eigen/SparseCore>
#include <algorithm>
#include <array>
#include <istream>
#include <ostream>
#include <string>

#include "prolink/errors.hpp"

namespace prolink {

namespace {

constexpr std::array<std::string_view, kNumInteractionTypes> kTypeNames = {"h2h", "h2t",
                                                                           "t2h", "t2t"};

void require_augmented(const KnowledgeGraph& kg, const char* who) {
  if (!kg.augmented())
    throw ContractError(std::string(who) + ": knowledge graph must be augmented");
}

std::vector<InteractionEdge> close_and_sort(std::vector<InteractionEdge> edges) {
  const std::size_t n = edges.size();
  edges.reserve(2 * n);
  for (std::size_t i = 0; i < n; ++i) edges.push_back(edges[i].reverse());
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  return edges;
}

}  // namespace

std::string_view to_string(InteractionType t) { return kTypeNames[static_cast<int>(t)]; }

std::optional<InteractionType> parse_interaction(std::string_view s) {
  for (std::size_t i = 0; i < kTypeNames.size(); ++i)
    if (kTypeNames[i] == s) return static_cast<InteractionType>(i);
  return std::nullopt;
}

RelationGraph::RelationGraph(std::size_t node_count, std::vector<InteractionEdge> edges)
    : node_count_(node_count) {
  for (const auto& e : edges)
    if (e.src >= node_count || e.dst >= node_count)
      throw ContractError("relation graph edge references node " +
                          std::to_string(std::max(e.src, e.dst)) + " outside [0, " +
                          std::to_string(node_count) + ")");
  edges_ = close_and_sort(std::move(edges));
}

bool RelationGraph::contains(const InteractionEdge& e) const {
  return std::binary_search(edges_.begin(), edges_.end(), e);
}

std::span<const InteractionEdge> RelationGraph::out_edges(RelationId node) const {
  auto lo = std::lower_bound(edges_.begin(), edges_.end(),
                             InteractionEdge{node, InteractionType::kH2H, 0});
  auto hi = std::lower_bound(lo, edges_.end(),
                             InteractionEdge{node + 1, InteractionType::kH2H, 0});
  return {lo, hi};
}

SideSets relation_side_sets(const KnowledgeGraph& kg) {
  require_augmented(kg, "relation_side_sets");
  const std::size_t nodes = kg.relation_node_count();
  SideSets sets;
  sets.head.resize(nodes);
  sets.tail.resize(nodes);
  for (const auto& t : kg.triples()) {
    if (t.relation >= nodes) continue;  // identity relation
    sets.head[t.relation].push_back(t.head);
    sets.tail[t.relation].push_back(t.tail);
  }
  for (auto* side : {&sets.head, &sets.tail})
    for (auto& v : *side) {
      std::sort(v.begin(), v.end());
      v.erase(std::unique(v.begin(), v.end()), v.end());
    }
  return sets;
}

RelationGraph graph_from_side_sets(const SideSets& sets, std::size_t member_count,
                                   const RelationGraphOptions& opts) {
  const std::size_t nodes = sets.head.size();
  if (sets.tail.size() != nodes) throw ContractError("side sets: head/tail size mismatch");

  // member -> list of (node, side) slots containing it
  std::vector<std::vector<std::pair<RelationId, Side>>> slots(member_count);
  for (RelationId n = 0; n < nodes; ++n)
    for (Side s : {Side::kHead, Side::kTail})
      for (auto m : sets.of(n, s)) {
        if (m >= member_count) throw ContractError("side sets: member id out of range");
        slots[m].emplace_back(n, s);
      }

  std::vector<bool> seen(nodes * nodes * kNumInteractionTypes, false);
  std::vector<InteractionEdge> edges;
  for (const auto& list : slots)
    for (const auto& [a, sa] : list)
      for (const auto& [b, sb] : list) {
        if (!opts.self_loops && a == b) continue;
        auto type = make_interaction(sa, sb);
        std::size_t key = (static_cast<std::size_t>(a) * nodes + b) * kNumInteractionTypes +
                          static_cast<std::size_t>(type);
        if (seen[key]) continue;
        seen[key] = true;
        edges.push_back({a, type, b});
      }
  return RelationGraph(nodes, std::move(edges));
}

RelationGraph build_relation_graph(const KnowledgeGraph& kg, const RelationGraphOptions& opts) {
  require_augmented(kg, "build_relation_graph");
  return graph_from_side_sets(relation_side_sets(kg), kg.num_entities(), opts);
}

RelationGraph build_relation_graph_sparse(const KnowledgeGraph& kg,
                                          const RelationGraphOptions& opts) {
  require_augmented(kg, "build_relation_graph_sparse");
  using Sparse = Eigen::SparseMatrix<std::int64_t, Eigen::RowMajor>;
  const auto nodes = static_cast<Eigen::Index>(kg.relation_node_count());
  const auto ents = static_cast<Eigen::Index>(kg.num_entities());

  std::vector<Eigen::Triplet<std::int64_t>> head_entries, tail_entries;
  for (const auto& t : kg.triples()) {
    if (t.relation >= static_cast<RelationId>(nodes)) continue;
    head_entries.emplace_back(t.relation, t.head, 1);
    tail_entries.emplace_back(t.relation, t.tail, 1);
  }
  Sparse incidence[2] = {Sparse(nodes, ents), Sparse(nodes, ents)};
  // Duplicate (relation, entity) entries sum; only non-zero structure matters.
  incidence[0].setFromTriplets(head_entries.begin(), head_entries.end());
  incidence[1].setFromTriplets(tail_entries.begin(), tail_entries.end());

  std::vector<InteractionEdge> edges;
  for (Side s1 : {Side::kHead, Side::kTail})
    for (Side s2 : {Side::kHead, Side::kTail}) {
      Sparse product = incidence[static_cast<int>(s1)] *
                       Sparse(incidence[static_cast<int>(s2)].transpose());
      for (Eigen::Index a = 0; a < product.outerSize(); ++a)
        for (Sparse::InnerIterator it(product, a); it; ++it) {
          if (it.value() == 0) continue;
          auto b = static_cast<RelationId>(it.col());
          if (!opts.self_loops && static_cast<RelationId>(a) == b) continue;
          edges.push_back({static_cast<RelationId>(a), make_interaction(s1, s2), b});
        }
    }
  return RelationGraph(static_cast<std::size_t>(nodes), std::move(edges));
}

RelationGraph inject_edges(const RelationGraph& rg, std::span<const InteractionEdge> extra) {
  std::vector<InteractionEdge> all(rg.edges().begin(), rg.edges().end());
  all.insert(all.end(), extra.begin(), extra.end());
  return RelationGraph(rg.node_count(), std::move(all));
}

void write_relation_graph(std::ostream& out, const RelationGraph& rg,
                          const Vocabulary& relations) {
  for (const auto& e : rg.edges())
    out << relations.name(e.src) << '\t' << to_string(e.type) << '\t' << relations.name(e.dst)
        << '\n';
}

RelationGraph read_relation_graph(std::istream& in, const Vocabulary& relations,
                                  std::size_t node_count) {
  std::vector<InteractionEdge> edges;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split_tabs(line);
    if (fields.size() != 3) throw ParseError("expected src<TAB>type<TAB>dst", lineno);
    auto type = parse_interaction(fields[1]);
    if (!type) throw ParseError("unknown interaction '" + std::string(fields[1]) + "'", lineno);
    auto src = relations.find(fields[0]);
    auto dst = relations.find(fields[2]);
    if (!src || !dst) throw VocabularyError("line " + std::to_string(lineno) + ": unknown relation");
    if (*src >= node_count || *dst >= node_count)
      throw DataError("line " + std::to_string(lineno) + ": relation is not a graph node");
    edges.push_back({*src, *type, *dst});
  }
  return RelationGraph(node_count, std::move(edges));
}

}  // namespace prolink
