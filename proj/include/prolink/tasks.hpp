#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "prolink/kg.hpp"

namespace prolink {

enum class QueryDirection : std::uint8_t { kTail = 0, kHead = 1 };

// One directional query. Head-queries are stored already rewritten as
// tail-queries under the inverse relation: (anchor, relation, ?) -> answer.
struct DirectionalQuery {
  EntityId anchor = 0;
  RelationId relation = 0;
  EntityId answer = 0;
  QueryDirection direction = QueryDirection::kTail;

  auto operator<=>(const DirectionalQuery&) const = default;
};

struct KShotTask {
  RelationId query_relation = 0;  // base relation id
  std::size_t k = 0;
  std::uint64_t seed = 0;
  std::vector<Triple> support;        // base triples of query_relation
  std::vector<Triple> held_out;       // base triples of query_relation to predict
  std::vector<DirectionalQuery> queries;
  KnowledgeGraph inference_kg;        // augmented

  std::size_t num_queries() const { return queries.size(); }
};

// Builds a task from an explicit support / held-out split of the r_q triples
// of `full_kg` (base graph). Everything else in full_kg is kept.
KShotTask make_task(const KnowledgeGraph& full_kg, RelationId r_q, std::vector<Triple> support,
                    std::vector<Triple> held_out, std::uint64_t seed);

// Retains k uniformly chosen r_q triples as support; the rest become queries
// (one tail-query and one head-query each).
KShotTask sample_kshot_task(const KnowledgeGraph& full_kg, RelationId r_q, std::size_t k,
                            std::uint64_t seed);

std::vector<KShotTask> make_variants(const KnowledgeGraph& full_kg, RelationId r_q,
                                     std::size_t k, std::size_t n_variants,
                                     std::uint64_t base_seed);

// Base relations with at least k + 1 triples.
std::vector<RelationId> eligible_relations(const KnowledgeGraph& full_kg, std::size_t k);

// Manifest: one block per task.
//   [task]
//   relation<TAB>name / k<TAB>K / seed<TAB>S
//   [support]   head<TAB>relation<TAB>tail lines
//   [queries]   head<TAB>relation<TAB>tail lines
//   [end]
void write_task_manifest(std::ostream& out, const KnowledgeGraph& full_kg,
                         const std::vector<KShotTask>& tasks);

// Rebuilds the tasks against `full_kg` (the base graph they were sampled from).
std::vector<KShotTask> read_task_manifest(std::istream& in, const KnowledgeGraph& full_kg);

}  // namespace prolink
