#pragma once

#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "prolink/kg.hpp"
#include "prolink/reasoner.hpp"
#include "prolink/relation_graph.hpp"
#include "prolink/tasks.hpp"

namespace prolink {

// 1 + #(strictly higher) + #(ties) / 2 over non-filtered competitors.
// `filtered` lists other known answers; it must not contain `true_answer`.
double rank_candidates(std::span<const double> scores, EntityId true_answer,
                       std::span<const EntityId> filtered);

struct RankingResult {
  std::vector<double> ranks;
  double mrr = 0.0;
  double hits1 = 0.0;
  double hits3 = 0.0;
  double hits10 = 0.0;

  std::size_t num_queries() const { return ranks.size(); }
  double hits_at(std::size_t n) const;
};

RankingResult summarize_ranks(std::vector<double> ranks);

// Known answers of (anchor, relation, ?) over the augmented relation ids of a
// base graph: relation r < B looks up tails, r + B looks up heads.
class AnswerIndex {
 public:
  explicit AnswerIndex(const KnowledgeGraph& base_kg);
  std::span<const EntityId> answers(EntityId anchor, RelationId relation) const;

 private:
  std::map<std::pair<EntityId, RelationId>, std::vector<EntityId>> answers_;
};

// Filtered ranking of every directional query of `task`. With a calibrated
// graph the relation encoder runs on it instead of the task's own relation
// graph. Throws ContractError for a task without queries.
RankingResult evaluate(const ModelParams& params, const KShotTask& task,
                       const AnswerIndex& known, const RelationGraph* calibrated = nullptr);

struct ResultRow {
  std::string dataset;
  std::string relation;
  std::size_t k = 0;
  std::string variant_seed;
  RankingResult result;
};

// TSV with header; per-task rows followed by one mean row per (dataset, k)
// averaging tasks with equal weight (relation "*", variant_seed "mean").
void write_results(std::ostream& out, const std::vector<ResultRow>& rows);

}  // namespace prolink
