#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "prolink/kg.hpp"
#include "prolink/relation_graph.hpp"

namespace prolink {

class LlmBackend;

enum class InfoForm : std::uint8_t { kDescription, kExample, kBoth };  // des, exp, d&e
enum class TypeMode : std::uint8_t { kFixed, kRefer, kFree };

InfoForm parse_info_form(std::string_view s);
TypeMode parse_type_mode(std::string_view s);
std::string to_string(InfoForm f);
std::string to_string(TypeMode m);

struct PromptConfig {
  InfoForm info_form = InfoForm::kDescription;
  TypeMode type_mode = TypeMode::kFixed;
  std::vector<std::string> candidate_types;
  std::size_t relations_per_request = 20;

  void validate() const;
};

struct RelationInfo {
  RelationId id = 0;  // base relation id, rendered as "rel<id>"
  std::string name;
  std::string description;  // empty when unknown
  std::optional<RelationExample> example;
};

// One RelationInfo per base relation of `base_kg`. Examples fall back to the
// first triple of the relation in `base_kg`; with `names_as_descriptions` a
// missing description falls back to the relation name.
std::vector<RelationInfo> make_relation_infos(
    const KnowledgeGraph& base_kg, const std::map<std::string, std::string>* descriptions,
    const std::map<std::string, RelationExample>* examples, bool names_as_descriptions);

// Task description, entity-type clause and rel_dict. Throws PromptError for
// an empty relation list or a relation missing a required field.
std::string render_prompt(const PromptConfig& config, std::span<const RelationInfo> relations);

struct SideTypes {
  std::set<std::string> head;
  std::set<std::string> tail;

  bool operator==(const SideTypes&) const = default;
};

// S(r, h) and S(r, t) per base relation.
struct TypeAssignment {
  std::vector<SideTypes> relations;

  TypeAssignment() = default;
  explicit TypeAssignment(std::size_t base_count) : relations(base_count) {}

  std::size_t base_count() const { return relations.size(); }
  // Node-level view: inverse nodes swap sides.
  const std::set<std::string>& types(RelationId node, Side side) const;
  std::set<std::string>& types(RelationId node, Side side);

  bool operator==(const TypeAssignment&) const = default;
};

// Lowercase, trim, collapse internal whitespace.
std::string normalize_type(std::string_view s);

struct ParsedTypes {
  std::map<RelationId, SideTypes> relations;
  std::vector<std::string> warnings;
};

// Reads the first mapping block of `relN: {"head": [...], "tail": [...]}`
// entries. Expected relations missing from the block get empty sets; under
// the fixed mode types outside the candidate list are dropped. Throws
// ParseError when no block can be found.
ParsedTypes parse_type_response(std::string_view text, std::span<const RelationId> expected,
                                const PromptConfig& config);

// Prompting edges: (r1, s1-to-s2, r2) whenever S(r1, s1) and S(r2, s2) share
// a type, over 2 * base_count nodes.
RelationGraph build_prompt_graph(const TypeAssignment& assignment,
                                 const RelationGraphOptions& opts = {});

struct PromptOutcome {
  TypeAssignment assignment;
  std::vector<std::string> warnings;
  std::size_t requests = 0;
};

// Renders one request per chunk of relations_per_request relations, queries
// the backend (up to `concurrency` requests in flight) and merges the parsed
// answers in chunk order; a relation answered twice keeps the last answer.
PromptOutcome run_prompting(const PromptConfig& config, std::span<const RelationInfo> relations,
                            std::size_t base_count, LlmBackend& backend,
                            std::size_t concurrency = 4);

// relation<TAB>head types (comma separated)<TAB>tail types. Shared by the
// mock oracle file and the persisted type assignment.
std::map<std::string, SideTypes> read_type_table(std::istream& in);
void write_type_table(std::ostream& out, const TypeAssignment& assignment,
                      const Vocabulary& relations);
TypeAssignment assignment_from_table(const std::map<std::string, SideTypes>& table,
                                     const Vocabulary& relations, std::size_t base_count);

}  // namespace prolink
