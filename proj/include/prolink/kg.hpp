#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace prolink {

using EntityId = std::uint32_t;
using RelationId = std::uint32_t;

struct Triple {
  EntityId head = 0;
  RelationId relation = 0;
  EntityId tail = 0;

  auto operator<=>(const Triple&) const = default;
};

// Insertion-ordered, case-sensitive string interner.
class Vocabulary {
 public:
  Vocabulary() = default;
  explicit Vocabulary(std::vector<std::string> names);

  // Returns the id of `name`, adding it if absent. Throws VocabularyError
  // when the vocabulary is frozen and the name is unknown.
  std::uint32_t intern(std::string_view name);
  std::optional<std::uint32_t> find(std::string_view name) const;
  std::uint32_t at(std::string_view name) const;

  const std::string& name(std::uint32_t id) const { return names_.at(id); }
  const std::vector<std::string>& names() const { return names_; }
  std::size_t size() const { return names_.size(); }

  void freeze() { frozen_ = true; }
  bool frozen() const { return frozen_; }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::uint32_t> index_;
  bool frozen_ = false;
};

// A triple store over fixed entity/relation vocabularies.
//
// Base graphs hold relations [0, B). Augmented graphs additionally hold the
// inverse r + B of every base relation r and one identity relation 2B, with
// (t, r + B, h) for every base triple and (e, 2B, e) for every entity.
class KnowledgeGraph {
 public:
  KnowledgeGraph() = default;

  // Builds a base (non-augmented) graph. Triples are sorted and deduplicated;
  // ids are validated against the vocabularies.
  KnowledgeGraph(Vocabulary entities, Vocabulary relations,
                 std::vector<Triple> triples);

  const Vocabulary& entities() const { return entities_; }
  const Vocabulary& relations() const { return relations_; }
  std::span<const Triple> triples() const { return triples_; }

  std::size_t num_entities() const { return entities_.size(); }
  std::size_t num_relations() const { return relations_.size(); }
  std::size_t num_triples() const { return triples_.size(); }

  bool augmented() const { return augmented_; }
  std::size_t base_relation_count() const { return base_relation_count_; }

  // Number of relation-graph nodes: 2B (the identity relation is excluded).
  std::size_t relation_node_count() const { return 2 * base_relation_count_; }

  RelationId inverse_of(RelationId r) const;
  RelationId identity_relation() const;
  bool is_inverse(RelationId r) const { return r >= base_relation_count_ && r < 2 * base_relation_count_; }
  RelationId base_of(RelationId r) const { return is_inverse(r) ? r - static_cast<RelationId>(base_relation_count_) : r; }

  bool contains(const Triple& t) const;

  // Base triples only (relation < B), in sorted order.
  std::vector<Triple> base_triples() const;

  // A new base graph over the same vocabularies with a different triple set.
  KnowledgeGraph with_base_triples(std::vector<Triple> triples) const;

  friend KnowledgeGraph augment_kg(const KnowledgeGraph& kg);

 private:
  Vocabulary entities_;
  Vocabulary relations_;
  std::vector<Triple> triples_;
  bool augmented_ = false;
  std::size_t base_relation_count_ = 0;
};

struct ParsedGraph {
  KnowledgeGraph graph;
  std::size_t duplicates = 0;
};

// Reads head<TAB>relation<TAB>tail lines. When a vocabulary is supplied it is
// treated as frozen: unknown names raise VocabularyError.
ParsedGraph parse_triples(std::istream& in,
                          const Vocabulary* entity_vocab = nullptr,
                          const Vocabulary* relation_vocab = nullptr);
ParsedGraph load_triples(const std::string& path,
                         const Vocabulary* entity_vocab = nullptr,
                         const Vocabulary* relation_vocab = nullptr);

// Adds inverse and identity relations. Throws ContractError if `kg` is
// already augmented.
KnowledgeGraph augment_kg(const KnowledgeGraph& kg);

void write_triples(std::ostream& out, const KnowledgeGraph& kg);

struct RelationExample {
  std::string head;
  std::string tail;
};

// relation_name<TAB>description
std::map<std::string, std::string> parse_relation_descriptions(std::istream& in);
// relation_name<TAB>head_name<TAB>tail_name
std::map<std::string, RelationExample> parse_relation_examples(std::istream& in);

// Splits on TAB, keeping empty fields.
std::vector<std::string_view> split_tabs(std::string_view line);

}  // namespace prolink
