#include "prolink/kg.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>

#include "prolink/errors.hpp"

namespace prolink {

namespace {

constexpr std::string_view kInverseSuffix = "^-1";
constexpr std::string_view kIdentityName = "__identity__";

std::string_view strip_cr(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

bool blank(std::string_view line) {
  return line.find_first_not_of(" \t") == std::string_view::npos;
}

}  // namespace

Vocabulary::Vocabulary(std::vector<std::string> names) {
  for (auto& n : names) intern(n);
}

std::uint32_t Vocabulary::intern(std::string_view name) {
  if (auto it = index_.find(std::string(name)); it != index_.end()) return it->second;
  if (frozen_) throw VocabularyError("unknown name '" + std::string(name) + "'");
  auto id = static_cast<std::uint32_t>(names_.size());
  names_.emplace_back(name);
  index_.emplace(names_.back(), id);
  return id;
}

std::optional<std::uint32_t> Vocabulary::find(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::uint32_t Vocabulary::at(std::string_view name) const {
  auto id = find(name);
  if (!id) throw VocabularyError("unknown name '" + std::string(name) + "'");
  return *id;
}

KnowledgeGraph::KnowledgeGraph(Vocabulary entities, Vocabulary relations,
                               std::vector<Triple> triples)
    : entities_(std::move(entities)),
      relations_(std::move(relations)),
      triples_(std::move(triples)),
      base_relation_count_(relations_.size()) {
  for (const auto& t : triples_) {
    if (t.head >= entities_.size() || t.tail >= entities_.size() ||
        t.relation >= relations_.size())
      throw ContractError("triple id out of vocabulary range");
  }
  std::sort(triples_.begin(), triples_.end());
  triples_.erase(std::unique(triples_.begin(), triples_.end()), triples_.end());
}

RelationId KnowledgeGraph::inverse_of(RelationId r) const {
  const auto b = static_cast<RelationId>(base_relation_count_);
  if (r >= 2 * b) throw ContractError("inverse_of: relation has no inverse");
  return r < b ? r + b : r - b;
}

RelationId KnowledgeGraph::identity_relation() const {
  if (!augmented_) throw ContractError("identity_relation: graph is not augmented");
  return static_cast<RelationId>(2 * base_relation_count_);
}

bool KnowledgeGraph::contains(const Triple& t) const {
  return std::binary_search(triples_.begin(), triples_.end(), t);
}

std::vector<Triple> KnowledgeGraph::base_triples() const {
  std::vector<Triple> out;
  out.reserve(augmented_ ? (triples_.size() - entities_.size()) / 2 : triples_.size());
  for (const auto& t : triples_)
    if (t.relation < base_relation_count_) out.push_back(t);
  return out;
}

KnowledgeGraph KnowledgeGraph::with_base_triples(std::vector<Triple> triples) const {
  Vocabulary rel;
  for (std::size_t r = 0; r < base_relation_count_; ++r) rel.intern(relations_.name(r));
  return KnowledgeGraph(entities_, std::move(rel), std::move(triples));
}

KnowledgeGraph augment_kg(const KnowledgeGraph& kg) {
  if (kg.augmented()) throw ContractError("augment_kg: graph is already augmented");
  KnowledgeGraph out;
  out.entities_ = kg.entities_;
  out.relations_ = kg.relations_;
  out.base_relation_count_ = kg.base_relation_count_;
  out.augmented_ = true;
  const auto b = static_cast<RelationId>(kg.base_relation_count_);
  for (RelationId r = 0; r < b; ++r)
    out.relations_.intern(kg.relations_.name(r) + std::string(kInverseSuffix));
  out.relations_.intern(kIdentityName);
  if (out.relations_.size() != 2 * kg.base_relation_count_ + 1)
    throw DataError("augment_kg: relation names collide with generated inverse names");

  out.triples_.reserve(2 * kg.triples_.size() + kg.num_entities());
  for (const auto& t : kg.triples_) {
    out.triples_.push_back(t);
    out.triples_.push_back({t.tail, t.relation + b, t.head});
  }
  for (EntityId e = 0; e < kg.num_entities(); ++e)
    out.triples_.push_back({e, 2 * b, e});
  std::sort(out.triples_.begin(), out.triples_.end());
  return out;
}

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find('\t', start);
    if (pos == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

ParsedGraph parse_triples(std::istream& in, const Vocabulary* entity_vocab,
                          const Vocabulary* relation_vocab) {
  Vocabulary ents = entity_vocab ? *entity_vocab : Vocabulary{};
  Vocabulary rels = relation_vocab ? *relation_vocab : Vocabulary{};
  if (entity_vocab) ents.freeze();
  if (relation_vocab) rels.freeze();

  std::vector<Triple> triples;
  std::string raw;
  std::size_t lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    auto line = strip_cr(raw);
    if (blank(line)) continue;
    auto fields = split_tabs(line);
    if (fields.size() != 3)
      throw ParseError("expected 3 tab-separated fields, got " +
                           std::to_string(fields.size()),
                       lineno);
    try {
      EntityId h = ents.intern(fields[0]);
      RelationId r = rels.intern(fields[1]);
      EntityId t = ents.intern(fields[2]);
      triples.push_back({h, r, t});
    } catch (const VocabularyError& e) {
      throw VocabularyError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  const std::size_t raw_count = triples.size();
  ents = Vocabulary(ents.names());
  rels = Vocabulary(rels.names());
  KnowledgeGraph g(std::move(ents), std::move(rels), std::move(triples));
  const std::size_t duplicates = raw_count - g.num_triples();
  return {std::move(g), duplicates};
}

ParsedGraph load_triples(const std::string& path, const Vocabulary* entity_vocab,
                         const Vocabulary* relation_vocab) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open triple file '" + path + "'");
  return parse_triples(in, entity_vocab, relation_vocab);
}

void write_triples(std::ostream& out, const KnowledgeGraph& kg) {
  for (const auto& t : kg.triples()) {
    out << kg.entities().name(t.head) << '\t' << kg.relations().name(t.relation)
        << '\t' << kg.entities().name(t.tail) << '\n';
  }
}

std::map<std::string, std::string> parse_relation_descriptions(std::istream& in) {
  std::map<std::string, std::string> out;
  std::string raw;
  std::size_t lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    auto line = strip_cr(raw);
    if (blank(line)) continue;
    auto tab = line.find('\t');
    if (tab == std::string_view::npos)
      throw ParseError("expected relation<TAB>description", lineno);
    out[std::string(line.substr(0, tab))] = std::string(line.substr(tab + 1));
  }
  return out;
}

std::map<std::string, RelationExample> parse_relation_examples(std::istream& in) {
  std::map<std::string, RelationExample> out;
  std::string raw;
  std::size_t lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    auto line = strip_cr(raw);
    if (blank(line)) continue;
    auto fields = split_tabs(line);
    if (fields.size() != 3)
      throw ParseError("expected relation<TAB>head<TAB>tail", lineno);
    out[std::string(fields[0])] = {std::string(fields[1]), std::string(fields[2])};
  }
  return out;
}

}  // namespace prolink
