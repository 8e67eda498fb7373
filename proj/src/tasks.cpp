#include "prolink/tasks.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <string>

#include "prolink/errors.hpp"
#include "prolink/rng.hpp"

namespace prolink {

namespace {

std::vector<Triple> triples_of(const KnowledgeGraph& kg, RelationId r) {
  std::vector<Triple> out;
  for (const auto& t : kg.triples())
    if (t.relation == r) out.push_back(t);
  return out;
}

void check_relation(const KnowledgeGraph& kg, RelationId r_q) {
  if (kg.augmented()) throw ContractError("task construction expects the base (non-augmented) graph");
  if (r_q >= kg.base_relation_count())
    throw ContractError("unknown query relation id " + std::to_string(r_q));
}

}  // namespace

KShotTask make_task(const KnowledgeGraph& full_kg, RelationId r_q, std::vector<Triple> support,
                    std::vector<Triple> held_out, std::uint64_t seed) {
  check_relation(full_kg, r_q);
  std::sort(support.begin(), support.end());
  std::sort(held_out.begin(), held_out.end());
  for (const auto* set : {&support, &held_out})
    for (const auto& t : *set)
      if (t.relation != r_q || !full_kg.contains(t))
        throw TaskError("task triple is not an r_q triple of the graph");

  KShotTask task;
  task.query_relation = r_q;
  task.k = support.size();
  task.seed = seed;

  std::vector<Triple> kept;
  kept.reserve(full_kg.num_triples());
  for (const auto& t : full_kg.triples()) {
    if (t.relation == r_q && !std::binary_search(support.begin(), support.end(), t)) continue;
    kept.push_back(t);
  }
  task.inference_kg = augment_kg(full_kg.with_base_triples(std::move(kept)));

  const RelationId inv = full_kg.inverse_of(r_q);
  for (const auto& t : held_out) {
    task.queries.push_back({t.head, r_q, t.tail, QueryDirection::kTail});
    task.queries.push_back({t.tail, inv, t.head, QueryDirection::kHead});
  }
  task.support = std::move(support);
  task.held_out = std::move(held_out);
  return task;
}

KShotTask sample_kshot_task(const KnowledgeGraph& full_kg, RelationId r_q, std::size_t k,
                            std::uint64_t seed) {
  check_relation(full_kg, r_q);
  auto all = triples_of(full_kg, r_q);
  if (all.size() < k + 1)
    throw TaskError("relation '" + full_kg.relations().name(r_q) + "' has " +
                    std::to_string(all.size()) + " triples; need at least " +
                    std::to_string(k + 1));
  Rng rng(seed);
  auto picked = rng.sample_without_replacement(all.size(), k);
  std::vector<bool> is_support(all.size(), false);
  for (auto i : picked) is_support[i] = true;
  std::vector<Triple> support, held_out;
  for (std::size_t i = 0; i < all.size(); ++i)
    (is_support[i] ? support : held_out).push_back(all[i]);
  return make_task(full_kg, r_q, std::move(support), std::move(held_out), seed);
}

std::vector<KShotTask> make_variants(const KnowledgeGraph& full_kg, RelationId r_q,
                                     std::size_t k, std::size_t n_variants,
                                     std::uint64_t base_seed) {
  std::vector<KShotTask> out;
  out.reserve(n_variants);
  for (std::size_t i = 0; i < n_variants; ++i)
    out.push_back(sample_kshot_task(full_kg, r_q, k, base_seed + i));
  return out;
}

std::vector<RelationId> eligible_relations(const KnowledgeGraph& full_kg, std::size_t k) {
  std::vector<std::size_t> counts(full_kg.base_relation_count(), 0);
  for (const auto& t : full_kg.triples())
    if (t.relation < counts.size()) ++counts[t.relation];
  std::vector<RelationId> out;
  for (RelationId r = 0; r < counts.size(); ++r)
    if (counts[r] >= k + 1) out.push_back(r);
  return out;
}

void write_task_manifest(std::ostream& out, const KnowledgeGraph& full_kg,
                         const std::vector<KShotTask>& tasks) {
  const auto& ents = full_kg.entities();
  const auto& rels = full_kg.relations();
  auto write_block = [&](const std::vector<Triple>& ts) {
    for (const auto& t : ts)
      out << ents.name(t.head) << '\t' << rels.name(t.relation) << '\t' << ents.name(t.tail)
          << '\n';
  };
  for (const auto& task : tasks) {
    out << "[task]\n";
    out << "relation\t" << rels.name(task.query_relation) << '\n';
    out << "k\t" << task.k << '\n';
    out << "seed\t" << task.seed << '\n';
    out << "[support]\n";
    write_block(task.support);
    out << "[queries]\n";
    write_block(task.held_out);
    out << "[end]\n";
  }
}

std::vector<KShotTask> read_task_manifest(std::istream& in, const KnowledgeGraph& full_kg) {
  enum class Section { kNone, kHeader, kSupport, kQueries };
  std::vector<KShotTask> tasks;
  Section section = Section::kNone;
  RelationId relation = 0;
  bool has_relation = false;
  std::size_t k = 0;
  std::uint64_t seed = 0;
  std::vector<Triple> support, held_out;

  auto triple_of = [&](const std::vector<std::string_view>& f, std::size_t lineno) {
    auto h = full_kg.entities().find(f[0]);
    auto r = full_kg.relations().find(f[1]);
    auto t = full_kg.entities().find(f[2]);
    if (!h || !r || !t)
      throw VocabularyError("manifest line " + std::to_string(lineno) + ": unknown name");
    return Triple{*h, *r, *t};
  };

  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line == "[task]") {
      if (section != Section::kNone) throw ParseError("nested [task] block", lineno);
      section = Section::kHeader;
      has_relation = false;
      k = 0;
      seed = 0;
      support.clear();
      held_out.clear();
      continue;
    }
    if (section == Section::kNone) throw ParseError("content outside a [task] block", lineno);
    if (line == "[support]") { section = Section::kSupport; continue; }
    if (line == "[queries]") { section = Section::kQueries; continue; }
    if (line == "[end]") {
      if (!has_relation) throw ParseError("task block without relation", lineno);
      auto task = make_task(full_kg, relation, support, held_out, seed);
      if (task.k != k) throw ParseError("support size does not match k", lineno);
      tasks.push_back(std::move(task));
      section = Section::kNone;
      continue;
    }
    auto f = split_tabs(line);
    if (section == Section::kHeader) {
      if (f.size() != 2) throw ParseError("expected key<TAB>value", lineno);
      const std::string value(f[1]);
      try {
        if (f[0] == "relation") {
          relation = full_kg.relations().at(value);
          has_relation = true;
        } else if (f[0] == "k") {
          k = std::stoull(value);
        } else if (f[0] == "seed") {
          seed = std::stoull(value);
        } else {
          throw ParseError("unknown task key '" + std::string(f[0]) + "'", lineno);
        }
      } catch (const std::logic_error&) {
        throw ParseError("bad value for '" + std::string(f[0]) + "'", lineno);
      }
    } else {
      if (f.size() != 3) throw ParseError("expected head<TAB>relation<TAB>tail", lineno);
      (section == Section::kSupport ? support : held_out).push_back(triple_of(f, lineno));
    }
  }
  if (section != Section::kNone) throw ParseError("unterminated task block", lineno);
  return tasks;
}

}  // namespace prolink
