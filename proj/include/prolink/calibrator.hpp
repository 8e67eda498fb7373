#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string_view>
#include <vector>

#include "prolink/prompter.hpp"
#include "prolink/relation_graph.hpp"

namespace prolink {

enum class BetaMode : std::uint8_t { kOne, kThree, kFive, kMean, kMax };

BetaMode parse_beta_mode(std::string_view s);  // "1", "3", "5", "mean", "max"
std::string to_string(BetaMode m);

struct CalibrationConfig {
  BetaMode beta = BetaMode::kOne;
  RelationGraphOptions graph;
};

struct Expansion {
  std::vector<InteractionEdge> edges;  // new r_q-incident edges
  TypeAssignment assignment;           // with the widened r_q type sets
};

// Rule A widens S(r_q, s1) by S(r_j, s2) for every ground-truth edge
// (r_q, s1-to-s2, r_j) and re-derives the r_q-incident prompting edges once.
// Rule B adds (r_q, s1-to-s2, r_k) for (r_q, s1-to-s2, r_j), (r_j, s2-to-s2, r_k).
// `r_q` is a base relation id.
Expansion support_expand(RelationId r_q, const RelationGraph& rg, const TypeAssignment& assignment,
                         const RelationGraphOptions& opts = {});

// Prompting edges among relations other than r_q and r_q^-1 that the
// ground-truth graph lacks.
std::vector<InteractionEdge> unmatched_edges(const RelationGraph& rg, const RelationGraph& pg,
                                             RelationId r_q, std::size_t base_count);

struct ConflictFilter {
  std::vector<InteractionEdge> kept;
  std::map<RelationId, std::size_t> conflicts;  // base relation -> C
  double beta = 0.0;
  std::vector<RelationId> filtered;  // base relations
};

// C(r_j) counts unmatched edges from r_j to relations sharing an entity type
// with r_q. Relations with C >= beta lose every candidate edge.
ConflictFilter conflict_filter(std::span<const InteractionEdge> candidates,
                               std::span<const InteractionEdge> unmatched,
                               const TypeAssignment& assignment, RelationId r_q, BetaMode mode);

// Adds the inverse-relation equivalents of every edge: (a, s1-to-s2, b)
// implies (a^-1, s1'-to-s2, b) and (a, s1-to-s2', b^-1) with sides flipped.
std::vector<InteractionEdge> inverse_closure(std::span<const InteractionEdge> edges,
                                             std::size_t base_count);

struct CalibrationReport {
  RelationId query = 0;
  std::vector<InteractionEdge> expanded;
  std::size_t unmatched = 0;
  std::map<RelationId, std::size_t> conflicts;
  double beta = 0.0;
  std::vector<RelationId> filtered;
  std::vector<InteractionEdge> injected;  // closed under inverses and reversal
};

struct CalibrationResult {
  RelationGraph graph;
  CalibrationReport report;
};

// Gather, expand, find unmatched edges, filter, inject.
CalibrationResult calibrate(RelationId r_q, const RelationGraph& rg, const RelationGraph& pg,
                            const TypeAssignment& assignment, const CalibrationConfig& config);

void write_calibration_report(std::ostream& out, const CalibrationReport& report,
                              const Vocabulary& relations);

}  // namespace prolink
