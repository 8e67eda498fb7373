#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "prolink/kg.hpp"

namespace prolink {

enum class Side : std::uint8_t { kHead = 0, kTail = 1 };

constexpr Side opposite(Side s) { return s == Side::kHead ? Side::kTail : Side::kHead; }

// The four fundamental relation interactions. The value encodes
// (source side, target side) as 2 * src + dst.
enum class InteractionType : std::uint8_t { kH2H = 0, kH2T = 1, kT2H = 2, kT2T = 3 };

inline constexpr std::size_t kNumInteractionTypes = 4;

constexpr InteractionType make_interaction(Side src, Side dst) {
  return static_cast<InteractionType>(2 * static_cast<int>(src) + static_cast<int>(dst));
}
constexpr Side source_side(InteractionType t) { return static_cast<Side>(static_cast<int>(t) >> 1); }
constexpr Side target_side(InteractionType t) { return static_cast<Side>(static_cast<int>(t) & 1); }
// Type of the same interaction seen from the other endpoint.
constexpr InteractionType reversed(InteractionType t) {
  return make_interaction(target_side(t), source_side(t));
}

std::string_view to_string(InteractionType t);
std::optional<InteractionType> parse_interaction(std::string_view s);

struct InteractionEdge {
  RelationId src = 0;
  InteractionType type = InteractionType::kH2H;
  RelationId dst = 0;

  auto operator<=>(const InteractionEdge&) const = default;

  InteractionEdge reverse() const { return {dst, reversed(type), src}; }
};

// Directed multigraph over relation nodes with typed, unweighted edges.
// The edge set is kept sorted, deduplicated and closed under reversal.
class RelationGraph {
 public:
  RelationGraph() = default;
  explicit RelationGraph(std::size_t node_count) : node_count_(node_count) {}
  // Adds every edge and its reverse. Throws ContractError on bad node ids.
  RelationGraph(std::size_t node_count, std::vector<InteractionEdge> edges);

  std::size_t node_count() const { return node_count_; }
  std::span<const InteractionEdge> edges() const { return edges_; }
  std::size_t num_edges() const { return edges_.size(); }
  bool contains(const InteractionEdge& e) const;

  // Edges whose source is `node`.
  std::span<const InteractionEdge> out_edges(RelationId node) const;

  bool operator==(const RelationGraph&) const = default;

 private:
  std::size_t node_count_ = 0;
  std::vector<InteractionEdge> edges_;
};

struct RelationGraphOptions {
  // Keep edges whose endpoints are the same relation node.
  bool self_loops = true;
};

// Per-node member sets for both sides. Members are arbitrary dense ids
// (entities for a KG, entity types for a prompt graph); each list is sorted.
struct SideSets {
  std::vector<std::vector<std::uint32_t>> head;
  std::vector<std::vector<std::uint32_t>> tail;

  const std::vector<std::uint32_t>& of(RelationId node, Side s) const {
    return s == Side::kHead ? head.at(node) : tail.at(node);
  }
};

// Head/tail entity sets of every relation node of an augmented KG.
SideSets relation_side_sets(const KnowledgeGraph& kg);

// Edge (a, s1-to-s2, b) for every node pair whose s1-set of a meets the
// s2-set of b. Works through an inverted member -> (node, side) index.
RelationGraph graph_from_side_sets(const SideSets& sets, std::size_t member_count,
                                   const RelationGraphOptions& opts = {});

// Relation graph of an augmented KG over its 2B non-identity relations.
RelationGraph build_relation_graph(const KnowledgeGraph& kg,
                                   const RelationGraphOptions& opts = {});

// Same graph computed through the relation-by-entity head/tail incidence
// matrices and their four sparse products.
RelationGraph build_relation_graph_sparse(const KnowledgeGraph& kg,
                                          const RelationGraphOptions& opts = {});

RelationGraph inject_edges(const RelationGraph& rg, std::span<const InteractionEdge> extra);

// src_relation<TAB>interaction<TAB>dst_relation, using names from `relations`.
void write_relation_graph(std::ostream& out, const RelationGraph& rg,
                          const Vocabulary& relations);
RelationGraph read_relation_graph(std::istream& in, const Vocabulary& relations,
                                  std::size_t node_count);

}  // namespace prolink
