#include "prolink/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <ostream>

#include "prolink/errors.hpp"

namespace prolink {

double rank_candidates(std::span<const double> scores, EntityId true_answer,
                       std::span<const EntityId> filtered) {
  if (true_answer >= scores.size()) throw ContractError("rank_candidates: true answer not scored");
  std::vector<bool> skip(scores.size(), false);
  for (auto e : filtered) {
    if (e == true_answer) throw ContractError("rank_candidates: true answer is in the filter set");
    if (e < skip.size()) skip[e] = true;
  }
  const double target = scores[true_answer];
  std::size_t higher = 0, ties = 0;
  for (std::size_t e = 0; e < scores.size(); ++e) {
    if (e == true_answer || skip[e]) continue;
    if (scores[e] > target) {
      ++higher;
    } else if (scores[e] == target) {
      ++ties;
    }
  }
  return 1.0 + static_cast<double>(higher) + static_cast<double>(ties) / 2.0;
}

double RankingResult::hits_at(std::size_t n) const {
  if (ranks.empty()) return 0.0;
  std::size_t hit = 0;
  for (double r : ranks)
    if (r <= static_cast<double>(n)) ++hit;
  return static_cast<double>(hit) / static_cast<double>(ranks.size());
}

RankingResult summarize_ranks(std::vector<double> ranks) {
  if (ranks.empty()) throw ContractError("summarize_ranks: no ranks");
  for (double x : ranks)
    if (!(x >= 1.0)) throw ContractError("summarize_ranks: rank below 1");
  RankingResult r;
  r.ranks = std::move(ranks);
  double rr = 0.0;
  for (double x : r.ranks) rr += 1.0 / x;
  r.mrr = rr / static_cast<double>(r.ranks.size());
  r.hits1 = r.hits_at(1);
  r.hits3 = r.hits_at(3);
  r.hits10 = r.hits_at(10);
  return r;
}

AnswerIndex::AnswerIndex(const KnowledgeGraph& base_kg) {
  if (base_kg.augmented()) throw ContractError("AnswerIndex expects a base graph");
  const auto b = static_cast<RelationId>(base_kg.base_relation_count());
  for (const auto& t : base_kg.triples()) {
    answers_[{t.head, t.relation}].push_back(t.tail);
    answers_[{t.tail, t.relation + b}].push_back(t.head);
  }
  for (auto& [key, v] : answers_) std::sort(v.begin(), v.end());
}

std::span<const EntityId> AnswerIndex::answers(EntityId anchor, RelationId relation) const {
  auto it = answers_.find({anchor, relation});
  if (it == answers_.end()) return {};
  return it->second;
}

RankingResult evaluate(const ModelParams& params, const KShotTask& task,
                       const AnswerIndex& known, const RelationGraph* calibrated) {
  if (task.queries.empty()) throw ContractError("evaluate: task has no queries");
  const RelationGraph own = calibrated ? RelationGraph() : build_relation_graph(task.inference_kg);
  const RelationGraph& rg = calibrated ? *calibrated : own;
  const EntityGraph graph = EntityGraph::from_kg(task.inference_kg);

  std::vector<double> ranks;
  ranks.reserve(task.queries.size());
  for (const auto& q : task.queries) {
    auto scores = score_all(params, q.anchor, q.relation, rg, graph);
    std::vector<EntityId> filtered;
    for (auto e : known.answers(q.anchor, q.relation))
      if (e != q.answer) filtered.push_back(e);
    ranks.push_back(rank_candidates(scores, q.answer, filtered));
  }
  return summarize_ranks(std::move(ranks));
}

namespace {

std::string fmt6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

void write_results(std::ostream& out, const std::vector<ResultRow>& rows) {
  out << "dataset\trelation\tk\tvariant_seed\tMRR\tHits@1\tHits@3\tHits@10\tn_queries\n";
  auto line = [&](const std::string& ds, const std::string& rel, std::size_t k,
                  const std::string& seed, double mrr, double h1, double h3, double h10,
                  std::size_t n) {
    out << ds << '\t' << rel << '\t' << k << '\t' << seed << '\t' << fmt6(mrr) << '\t' << fmt6(h1)
        << '\t' << fmt6(h3) << '\t' << fmt6(h10) << '\t' << n << '\n';
  };
  std::map<std::pair<std::string, std::size_t>, std::vector<const ResultRow*>> groups;
  for (const auto& r : rows) {
    const auto& m = r.result;
    line(r.dataset, r.relation, r.k, r.variant_seed, m.mrr, m.hits1, m.hits3, m.hits10,
         m.num_queries());
    groups[{r.dataset, r.k}].push_back(&r);
  }
  for (const auto& [key, group] : groups) {
    double mrr = 0, h1 = 0, h3 = 0, h10 = 0;
    std::size_t n = 0;
    for (const auto* r : group) {
      mrr += r->result.mrr;
      h1 += r->result.hits1;
      h3 += r->result.hits3;
      h10 += r->result.hits10;
      n += r->result.num_queries();
    }
    const double c = static_cast<double>(group.size());
    line(key.first, "*", key.second, "mean", mrr / c, h1 / c, h3 / c, h10 / c, n);
  }
}

}  // namespace prolink
