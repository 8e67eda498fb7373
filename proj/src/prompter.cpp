#include "prolink/prompter.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cctype>
#include <istream>
#include <json.hpp>
#include <ostream>
#include <utility>

#include "prolink/errors.hpp"
#include "prolink/llm.hpp"

namespace prolink {

InfoForm parse_info_form(std::string_view s) {
  if (s == "des") return InfoForm::kDescription;
  if (s == "exp") return InfoForm::kExample;
  if (s == "d&e") return InfoForm::kBoth;
  throw ContractError("unknown info form '" + std::string(s) + "' (des, exp, d&e)");
}

TypeMode parse_type_mode(std::string_view s) {
  if (s == "fixed") return TypeMode::kFixed;
  if (s == "refer") return TypeMode::kRefer;
  if (s == "free") return TypeMode::kFree;
  throw ContractError("unknown type mode '" + std::string(s) + "' (fixed, refer, free)");
}

std::string to_string(InfoForm f) {
  switch (f) {
    case InfoForm::kDescription: return "des";
    case InfoForm::kExample: return "exp";
    case InfoForm::kBoth: return "d&e";
  }
  return "?";
}

std::string to_string(TypeMode m) {
  switch (m) {
    case TypeMode::kFixed: return "fixed";
    case TypeMode::kRefer: return "refer";
    case TypeMode::kFree: return "free";
  }
  return "?";
}

void PromptConfig::validate() const {
  if (type_mode != TypeMode::kFree && candidate_types.empty())
    throw ContractError("prompt type mode '" + to_string(type_mode) +
                        "' needs a non-empty candidate type list");
  if (relations_per_request == 0) throw ContractError("relations_per_request must be >= 1");
}

std::vector<RelationInfo> make_relation_infos(
    const KnowledgeGraph& base_kg, const std::map<std::string, std::string>* descriptions,
    const std::map<std::string, RelationExample>* examples, bool names_as_descriptions) {
  const std::size_t b = base_kg.base_relation_count();
  std::vector<RelationInfo> out(b);
  for (RelationId r = 0; r < b; ++r) {
    out[r].id = r;
    out[r].name = base_kg.relations().name(r);
    if (descriptions) {
      auto it = descriptions->find(out[r].name);
      if (it != descriptions->end()) out[r].description = it->second;
    }
    if (out[r].description.empty() && names_as_descriptions) out[r].description = out[r].name;
    if (examples) {
      auto it = examples->find(out[r].name);
      if (it != examples->end()) out[r].example = it->second;
    }
  }
  for (const auto& t : base_kg.base_triples())
    if (!out[t.relation].example)
      out[t.relation].example = RelationExample{std::string(base_kg.entities().name(t.head)),
                                                std::string(base_kg.entities().name(t.tail))};
  return out;
}

namespace {

std::string quoted(const std::string& s) { return nlohmann::json(s).dump(); }

std::string type_list(const std::vector<std::string>& types) {
  std::string out = "[";
  for (std::size_t i = 0; i < types.size(); ++i) {
    if (i) out += ", ";
    out += quoted(types[i]);
  }
  return out + "]";
}

}  // namespace

std::string render_prompt(const PromptConfig& config, std::span<const RelationInfo> relations) {
  config.validate();
  if (relations.empty()) throw PromptError("render_prompt: no relations to describe");

  std::string out =
      "The dictionary rel_dict includes brief information of partial relationships in a "
      "knowledge graph. Please analyze the possible entity types of each relationship's head "
      "and tail entities.\n";
  if (config.type_mode == TypeMode::kFixed)
    out += "The candidate entity types are strictly fixed in " + type_list(config.candidate_types) + ".\n";
  else if (config.type_mode == TypeMode::kRefer)
    out += "The candidate entity types are not limited to " + type_list(config.candidate_types) + ".\n";

  const bool need_desc = config.info_form != InfoForm::kExample;
  const bool need_example = config.info_form != InfoForm::kDescription;
  out += "rel_dict = {";
  for (std::size_t i = 0; i < relations.size(); ++i) {
    const auto& r = relations[i];
    if (need_desc && r.description.empty())
      throw PromptError("render_prompt: relation '" + r.name + "' has no description");
    if (need_example && !r.example)
      throw PromptError("render_prompt: relation '" + r.name + "' has no example triple");
    if (i) out += ", ";
    out += "\"rel" + std::to_string(r.id) + "\": ";
    if (config.info_form == InfoForm::kDescription) {
      out += quoted(r.description);
    } else {
      out += "{";
      if (need_desc) out += "\"description\": " + quoted(r.description) + ", ";
      out += "\"head entity\": " + quoted(r.example->head) +
             ", \"tail entity\": " + quoted(r.example->tail) + "}";
    }
  }
  out += "}\n";
  out += "Answer with one line per key of rel_dict in the form rel0: {\"head\": [types], "
         "\"tail\": [types]}, enclosed in braces.\n";
  return out;
}

const std::set<std::string>& TypeAssignment::types(RelationId node, Side side) const {
  const std::size_t b = relations.size();
  if (node >= 2 * b) throw ContractError("TypeAssignment: node outside [0, 2B)");
  const auto& st = relations[node % b];
  const bool swap = node >= b;
  return (side == Side::kHead) != swap ? st.head : st.tail;
}

std::set<std::string>& TypeAssignment::types(RelationId node, Side side) {
  return const_cast<std::set<std::string>&>(std::as_const(*this).types(node, side));
}

std::string normalize_type(std::string_view s) {
  std::string out;
  bool pending_space = false;
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out += ' ';
    pending_space = false;
    out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return out;
}

namespace {

// Hand-rolled scanner for the loose object syntax LLMs produce: bare or
// quoted keys, single or double quotes, trailing commas.
class Scanner {
 public:
  explicit Scanner(std::string_view text, std::size_t pos = 0) : s_(text), i_(pos) {}

  std::size_t pos() const { return i_; }
  bool done() const { return i_ >= s_.size(); }
  char peek() const { return done() ? '\0' : s_[i_]; }

  void skip_ws() {
    while (!done() && std::isspace(static_cast<unsigned char>(s_[i_]))) ++i_;
  }
  void skip_separators() {
    while (!done() && (std::isspace(static_cast<unsigned char>(s_[i_])) || s_[i_] == ',')) ++i_;
  }
  bool eat(char c) {
    skip_ws();
    if (peek() != c) return false;
    ++i_;
    return true;
  }

  std::optional<std::string> quoted() {
    skip_ws();
    const char q = peek();
    if (q != '"' && q != '\'') return std::nullopt;
    std::string out;
    for (++i_; !done(); ++i_) {
      char c = s_[i_];
      if (c == '\\' && i_ + 1 < s_.size()) {
        out += s_[++i_];
      } else if (c == q) {
        ++i_;
        return out;
      } else if (c == '\n') {
        return std::nullopt;
      } else {
        out += c;
      }
    }
    return std::nullopt;
  }

  // Up to (not including) any stop character or end of line.
  std::string bare(std::string_view stops) {
    skip_ws();
    std::size_t start = i_;
    while (!done() && s_[i_] != '\n' && stops.find(s_[i_]) == std::string_view::npos) ++i_;
    return std::string(s_.substr(start, i_ - start));
  }

  std::optional<std::string> key() {
    skip_ws();
    if (peek() == '"' || peek() == '\'') return quoted();
    auto k = bare(":,{}[]");
    if (k.empty()) return std::nullopt;
    return k;
  }

  std::optional<std::vector<std::string>> value() {
    skip_ws();
    if (peek() == '[') {
      ++i_;
      std::vector<std::string> items;
      while (true) {
        skip_separators();
        if (done()) return std::nullopt;
        if (peek() == ']') {
          ++i_;
          return items;
        }
        if (peek() == '"' || peek() == '\'') {
          auto q = quoted();
          if (!q) return std::nullopt;
          items.push_back(*q);
        } else {
          auto b = bare(",]");
          if (b.empty()) return std::nullopt;
          items.push_back(b);
        }
      }
    }
    if (peek() == '"' || peek() == '\'') {
      auto q = quoted();
      if (!q) return std::nullopt;
      return std::vector<std::string>{*q};
    }
    auto b = bare(",}");
    if (b.empty()) return std::nullopt;
    return std::vector<std::string>{b};
  }

 private:
  std::string_view s_;
  std::size_t i_;
};

// "rel<digits>" possibly wrapped in quotes; returns the id.
std::optional<RelationId> relation_key(std::string_view k) {
  std::string t = normalize_type(k);
  if (t.size() < 4 || t.compare(0, 3, "rel") != 0) return std::nullopt;
  RelationId id = 0;
  for (std::size_t i = 3; i < t.size(); ++i) {
    if (!std::isdigit(static_cast<unsigned char>(t[i]))) return std::nullopt;
    id = id * 10 + static_cast<RelationId>(t[i] - '0');
    if (id > (1u << 28)) return std::nullopt;
  }
  return id;
}

// {"head": [...], "tail": [...]} starting at the scanner position.
std::optional<SideTypes> parse_entry_object(Scanner& sc) {
  if (!sc.eat('{')) return std::nullopt;
  SideTypes st;
  bool any = false;
  while (true) {
    sc.skip_separators();
    if (sc.done()) return std::nullopt;
    if (sc.peek() == '}') {
      sc.eat('}');
      break;
    }
    auto k = sc.key();
    if (!k || !sc.eat(':')) return std::nullopt;
    auto v = sc.value();
    if (!v) return std::nullopt;
    const std::string nk = normalize_type(*k);
    std::set<std::string>* dst = nullptr;
    if (nk.rfind("head", 0) == 0) dst = &st.head;
    if (nk.rfind("tail", 0) == 0) dst = &st.tail;
    if (!dst) continue;
    any = true;
    dst->clear();
    for (const auto& t : *v) {
      auto n = normalize_type(t);
      if (!n.empty()) dst->insert(std::move(n));
    }
  }
  if (!any) return std::nullopt;
  return st;
}

struct Entry {
  RelationId id;
  SideTypes types;
};

// Entries of one block: `relN: {...}` repeated, separated by commas or
// newlines, until the closing brace of the block or the first non-entry.
std::vector<Entry> parse_block(std::string_view text, std::size_t start, bool braced) {
  Scanner sc(text, start);
  std::vector<Entry> entries;
  while (true) {
    sc.skip_separators();
    if (sc.done()) break;
    if (braced && sc.peek() == '}') break;
    auto k = sc.key();
    auto id = k ? relation_key(*k) : std::nullopt;
    if (!id || !sc.eat(':')) break;
    auto st = parse_entry_object(sc);
    if (!st) break;
    entries.push_back({*id, std::move(*st)});
  }
  return entries;
}

bool is_key_start(std::string_view text, std::size_t i) {
  if (i > 0) {
    const char prev = text[i - 1];
    if (std::isalnum(static_cast<unsigned char>(prev)) || prev == '_') return false;
  }
  return text.substr(i, 3) == "rel" && i + 3 < text.size() &&
         std::isdigit(static_cast<unsigned char>(text[i + 3]));
}

std::vector<Entry> first_block(std::string_view text) {
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (!is_key_start(text, i)) continue;
    std::size_t start = i;
    if (start > 0 && (text[start - 1] == '"' || text[start - 1] == '\'')) --start;
    // Braced when the nearest non-space character before the key opens a block.
    std::size_t j = start;
    while (j > 0 && std::isspace(static_cast<unsigned char>(text[j - 1]))) --j;
    const bool braced = j > 0 && text[j - 1] == '{';
    auto entries = parse_block(text, start, braced);
    if (!entries.empty()) return entries;
  }
  return {};
}

std::size_t line_of(std::string_view text, std::size_t pos) {
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(std::min(pos, text.size())), '\n'));
}

}  // namespace

ParsedTypes parse_type_response(std::string_view text, std::span<const RelationId> expected,
                                const PromptConfig& config) {
  auto entries = first_block(text);
  if (entries.empty())
    throw ParseError("no relation type block in LLM response", line_of(text, text.size()));

  std::set<std::string> allowed;
  for (const auto& t : config.candidate_types) allowed.insert(normalize_type(t));
  const std::set<RelationId> wanted(expected.begin(), expected.end());

  ParsedTypes out;
  for (auto& e : entries) {
    if (!wanted.count(e.id)) {
      out.warnings.push_back("response mentions unrequested relation rel" + std::to_string(e.id));
      continue;
    }
    if (config.type_mode == TypeMode::kFixed) {
      for (auto* side : {&e.types.head, &e.types.tail})
        for (auto it = side->begin(); it != side->end();) {
          if (allowed.count(*it)) {
            ++it;
            continue;
          }
          out.warnings.push_back("rel" + std::to_string(e.id) + ": dropped type '" + *it +
                                 "' outside the candidate list");
          it = side->erase(it);
        }
    }
    out.relations[e.id] = std::move(e.types);
  }
  for (RelationId r : expected)
    if (!out.relations.count(r)) {
      out.warnings.push_back("rel" + std::to_string(r) + " missing from the response");
      out.relations[r] = SideTypes{};
    }
  return out;
}

RelationGraph build_prompt_graph(const TypeAssignment& assignment, const RelationGraphOptions& opts) {
  const std::size_t b = assignment.base_count();
  std::map<std::string, std::uint32_t> ids;
  for (const auto& st : assignment.relations)
    for (const auto* side : {&st.head, &st.tail})
      for (const auto& t : *side) ids.emplace(t, 0);
  std::uint32_t next = 0;
  for (auto& [name, id] : ids) id = next++;

  SideSets sets;
  sets.head.resize(2 * b);
  sets.tail.resize(2 * b);
  for (RelationId node = 0; node < 2 * b; ++node)
    for (Side s : {Side::kHead, Side::kTail}) {
      auto& dst = s == Side::kHead ? sets.head[node] : sets.tail[node];
      for (const auto& t : assignment.types(node, s)) dst.push_back(ids.at(t));
      std::sort(dst.begin(), dst.end());
    }
  return graph_from_side_sets(sets, ids.size(), opts);
}

PromptOutcome run_prompting(const PromptConfig& config, std::span<const RelationInfo> relations,
                            std::size_t base_count, LlmBackend& backend, std::size_t concurrency) {
  config.validate();
  std::vector<std::string> prompts;
  std::vector<std::vector<RelationId>> chunks;
  for (std::size_t i = 0; i < relations.size(); i += config.relations_per_request) {
    auto chunk = relations.subspan(i, std::min(config.relations_per_request, relations.size() - i));
    prompts.push_back(render_prompt(config, chunk));
    auto& ids = chunks.emplace_back();
    for (const auto& r : chunk) {
      if (r.id >= base_count) throw ContractError("run_prompting: relation id outside the base range");
      ids.push_back(r.id);
    }
  }

  PromptOutcome out;
  out.assignment = TypeAssignment(base_count);
  out.requests = prompts.size();
  auto responses = complete_all(backend, prompts, concurrency);
  for (std::size_t c = 0; c < chunks.size(); ++c) {
    try {
      auto parsed = parse_type_response(responses[c], chunks[c], config);
      for (auto& [id, st] : parsed.relations) out.assignment.relations[id] = std::move(st);
      for (auto& w : parsed.warnings) out.warnings.push_back(std::move(w));
    } catch (const ParseError& e) {
      out.warnings.push_back("request " + std::to_string(c) + ": " + e.what() +
                             "; its relations keep empty type sets");
    }
  }
  for (const auto& w : out.warnings) spdlog::warn("prompt: {}", w);
  return out;
}

namespace {

std::string_view strip_cr(std::string_view s) {
  if (!s.empty() && s.back() == '\r') s.remove_suffix(1);
  return s;
}

std::set<std::string> split_types(std::string_view field) {
  std::set<std::string> out;
  std::size_t start = 0;
  while (start <= field.size()) {
    auto comma = field.find(',', start);
    if (comma == std::string_view::npos) comma = field.size();
    auto t = normalize_type(field.substr(start, comma - start));
    if (!t.empty()) out.insert(std::move(t));
    start = comma + 1;
  }
  return out;
}

std::string join_types(const std::set<std::string>& types) {
  std::string out;
  for (const auto& t : types) {
    if (!out.empty()) out += ',';
    out += t;
  }
  return out;
}

}  // namespace

std::map<std::string, SideTypes> read_type_table(std::istream& in) {
  std::map<std::string, SideTypes> out;
  std::string raw;
  std::size_t lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    auto line = strip_cr(raw);
    if (line.empty() || line.front() == '#') continue;
    auto fields = split_tabs(line);
    if (fields.size() != 3)
      throw ParseError("expected relation<TAB>head types<TAB>tail types", lineno);
    out[std::string(fields[0])] = SideTypes{split_types(fields[1]), split_types(fields[2])};
  }
  return out;
}

void write_type_table(std::ostream& out, const TypeAssignment& assignment,
                      const Vocabulary& relations) {
  for (RelationId r = 0; r < assignment.base_count(); ++r) {
    const auto& st = assignment.relations[r];
    out << relations.name(r) << '\t' << join_types(st.head) << '\t' << join_types(st.tail) << '\n';
  }
}

TypeAssignment assignment_from_table(const std::map<std::string, SideTypes>& table,
                                     const Vocabulary& relations, std::size_t base_count) {
  TypeAssignment a(base_count);
  for (const auto& [name, st] : table) {
    auto id = relations.find(name);
    if (!id || *id >= base_count) throw VocabularyError("type table names unknown relation '" + name + "'");
    a.relations[*id] = st;
  }
  return a;
}

}  // namespace prolink
