#include "prolink/calibrator.hpp"

#include <algorithm>
#include <ostream>
#include <set>

#include "prolink/errors.hpp"

namespace prolink {

BetaMode parse_beta_mode(std::string_view s) {
  if (s == "1") return BetaMode::kOne;
  if (s == "3") return BetaMode::kThree;
  if (s == "5") return BetaMode::kFive;
  if (s == "mean" || s == "Mean") return BetaMode::kMean;
  if (s == "max" || s == "Max") return BetaMode::kMax;
  throw ContractError("unknown beta mode '" + std::string(s) + "' (1, 3, 5, mean, max)");
}

std::string to_string(BetaMode m) {
  switch (m) {
    case BetaMode::kOne: return "1";
    case BetaMode::kThree: return "3";
    case BetaMode::kFive: return "5";
    case BetaMode::kMean: return "mean";
    case BetaMode::kMax: return "max";
  }
  return "?";
}

namespace {

bool touches(const InteractionEdge& e, RelationId r_q, std::size_t b) {
  const RelationId inv = r_q + static_cast<RelationId>(b);
  return e.src == r_q || e.src == inv || e.dst == r_q || e.dst == inv;
}

std::vector<InteractionEdge> incident(const RelationGraph& g, RelationId r_q, std::size_t b) {
  std::vector<InteractionEdge> out;
  for (const auto& e : g.edges())
    if (touches(e, r_q, b)) out.push_back(e);
  return out;
}

void sort_unique(std::vector<InteractionEdge>& v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
}

RelationId base_of(RelationId node, std::size_t b) {
  return node >= b ? node - static_cast<RelationId>(b) : node;
}

}  // namespace

Expansion support_expand(RelationId r_q, const RelationGraph& rg, const TypeAssignment& assignment,
                         const RelationGraphOptions& opts) {
  const std::size_t b = assignment.base_count();
  if (r_q >= b) throw ContractError("support_expand: r_q must be a base relation");
  if (rg.node_count() != 2 * b) throw ContractError("support_expand: graph / assignment size mismatch");

  Expansion ex{{}, assignment};
  const auto support = rg.out_edges(r_q);
  if (support.empty()) return ex;

  for (const auto& e : support) {
    const auto& from = assignment.types(e.dst, target_side(e.type));
    ex.assignment.types(r_q, source_side(e.type)).insert(from.begin(), from.end());
  }
  const auto before = incident(build_prompt_graph(assignment, opts), r_q, b);
  for (const auto& e : incident(build_prompt_graph(ex.assignment, opts), r_q, b))
    if (!std::binary_search(before.begin(), before.end(), e)) ex.edges.push_back(e);

  for (const auto& first : support) {
    const Side s2 = target_side(first.type);
    for (const auto& second : rg.out_edges(first.dst)) {
      if (second.type != make_interaction(s2, s2) || second.dst == r_q) continue;
      InteractionEdge e{r_q, first.type, second.dst};
      if (!rg.contains(e)) {
        ex.edges.push_back(e);
        ex.edges.push_back(e.reverse());
      }
    }
  }
  sort_unique(ex.edges);
  return ex;
}

std::vector<InteractionEdge> unmatched_edges(const RelationGraph& rg, const RelationGraph& pg,
                                             RelationId r_q, std::size_t base_count) {
  if (rg.node_count() != pg.node_count() || rg.node_count() != 2 * base_count)
    throw ContractError("unmatched_edges: relation and prompt graphs cover different node sets");
  std::vector<InteractionEdge> out;
  for (const auto& e : pg.edges())
    if (!touches(e, r_q, base_count) && !rg.contains(e)) out.push_back(e);
  return out;
}

ConflictFilter conflict_filter(std::span<const InteractionEdge> candidates,
                               std::span<const InteractionEdge> unmatched,
                               const TypeAssignment& assignment, RelationId r_q, BetaMode mode) {
  const std::size_t b = assignment.base_count();
  ConflictFilter out;

  std::set<RelationId> neighbors;
  for (const auto& e : candidates)
    for (RelationId n : {e.src, e.dst})
      if (base_of(n, b) != r_q) neighbors.insert(base_of(n, b));

  // R_s: base relations with a type in common with r_q on any side.
  const auto& qh = assignment.relations.at(r_q).head;
  const auto& qt = assignment.relations.at(r_q).tail;
  auto shares = [&](const std::set<std::string>& s) {
    return std::any_of(s.begin(), s.end(), [&](const std::string& t) { return qh.count(t) || qt.count(t); });
  };
  std::vector<bool> in_rs(b, false);
  for (RelationId r = 0; r < b; ++r)
    in_rs[r] = r != r_q && (shares(assignment.relations[r].head) || shares(assignment.relations[r].tail));

  // Each conflict is counted once per side pair: inverse targets are folded
  // onto their base relation by only counting edges into base nodes.
  for (RelationId rj : neighbors) out.conflicts[rj] = 0;
  for (const auto& e : unmatched) {
    if (e.src >= b || e.dst >= b || e.src == e.dst) continue;
    auto it = out.conflicts.find(e.src);
    if (it != out.conflicts.end() && in_rs[e.dst]) ++it->second;
  }

  switch (mode) {
    case BetaMode::kOne: out.beta = 1; break;
    case BetaMode::kThree: out.beta = 3; break;
    case BetaMode::kFive: out.beta = 5; break;
    case BetaMode::kMean:
    case BetaMode::kMax: {
      double sum = 0.0, mx = 0.0;
      std::size_t n = 0;
      for (const auto& [r, c] : out.conflicts)
        if (c > 0) {
          sum += static_cast<double>(c);
          mx = std::max(mx, static_cast<double>(c));
          ++n;
        }
      if (n == 0) {
        out.beta = 0.0;  // nothing to filter
      } else {
        out.beta = mode == BetaMode::kMax ? mx : sum / static_cast<double>(n);
      }
      break;
    }
  }

  std::set<RelationId> drop;
  for (const auto& [r, c] : out.conflicts)
    if (c > 0 && static_cast<double>(c) >= out.beta) drop.insert(r);
  out.filtered.assign(drop.begin(), drop.end());
  for (const auto& e : candidates)
    if (!drop.count(base_of(e.src, b)) && !drop.count(base_of(e.dst, b))) out.kept.push_back(e);
  return out;
}

std::vector<InteractionEdge> inverse_closure(std::span<const InteractionEdge> edges,
                                             std::size_t base_count) {
  const auto b = static_cast<RelationId>(base_count);
  auto inv = [b](RelationId n) { return n >= b ? n - b : n + b; };
  std::vector<InteractionEdge> out;
  for (const auto& e : edges) {
    const Side s1 = source_side(e.type), s2 = target_side(e.type);
    out.push_back(e);
    out.push_back({inv(e.src), make_interaction(opposite(s1), s2), e.dst});
    out.push_back({e.src, make_interaction(s1, opposite(s2)), inv(e.dst)});
    out.push_back({inv(e.src), make_interaction(opposite(s1), opposite(s2)), inv(e.dst)});
  }
  const std::size_t n = out.size();
  for (std::size_t i = 0; i < n; ++i) out.push_back(out[i].reverse());
  sort_unique(out);
  return out;
}

CalibrationResult calibrate(RelationId r_q, const RelationGraph& rg, const RelationGraph& pg,
                            const TypeAssignment& assignment, const CalibrationConfig& config) {
  const std::size_t b = assignment.base_count();
  if (pg.node_count() != rg.node_count())
    throw ContractError("calibrate: relation and prompt graphs cover different node sets");

  CalibrationReport report;
  report.query = r_q;
  auto expansion = support_expand(r_q, rg, assignment, config.graph);
  report.expanded = expansion.edges;

  std::vector<InteractionEdge> candidates = expansion.edges;
  for (const auto& e : incident(pg, r_q, b)) candidates.push_back(e);
  sort_unique(candidates);

  const auto unmatched = unmatched_edges(rg, pg, r_q, b);
  report.unmatched = unmatched.size();
  auto filter = conflict_filter(candidates, unmatched, assignment, r_q, config.beta);
  report.conflicts = filter.conflicts;
  report.beta = filter.beta;
  report.filtered = filter.filtered;

  for (const auto& e : inverse_closure(filter.kept, b))
    if (!rg.contains(e)) report.injected.push_back(e);
  RelationGraph graph = inject_edges(rg, report.injected);
  return {std::move(graph), std::move(report)};
}

void write_calibration_report(std::ostream& out, const CalibrationReport& report,
                              const Vocabulary& relations) {
  auto edges = [&](const char* title, const std::vector<InteractionEdge>& es) {
    out << '[' << title << "]\t" << es.size() << '\n';
    for (const auto& e : es)
      out << relations.name(e.src) << '\t' << to_string(e.type) << '\t' << relations.name(e.dst) << '\n';
  };
  out << "[query]\t" << relations.name(report.query) << '\n';
  edges("expanded", report.expanded);
  out << "[unmatched]\t" << report.unmatched << '\n';
  out << "[conflicts]\t" << report.conflicts.size() << '\n';
  for (const auto& [r, c] : report.conflicts) out << relations.name(r) << '\t' << c << '\n';
  out << "[beta]\t" << report.beta << '\n';
  out << "[filtered]\t" << report.filtered.size() << '\n';
  for (RelationId r : report.filtered) out << relations.name(r) << '\n';
  edges("injected", report.injected);
}

}  // namespace prolink
