#include <doctest.h>

#include <set>
#include <sstream>

#include "oracles.hpp"
#include "prolink/errors.hpp"
#include "prolink/kg.hpp"

using namespace prolink;

namespace {

ParsedGraph parse(const std::string& text, const Vocabulary* ev = nullptr,
                  const Vocabulary* rv = nullptr) {
  std::istringstream in(text);
  return parse_triples(in, ev, rv);
}

std::set<std::array<std::string, 3>> named_triples(const KnowledgeGraph& kg) {
  std::set<std::array<std::string, 3>> out;
  for (const auto& t : kg.triples())
    out.insert({kg.entities().name(t.head), kg.relations().name(t.relation),
                kg.entities().name(t.tail)});
  return out;
}

}  // namespace

TEST_CASE("parse_triples on an empty stream yields an empty graph") {
  auto p = parse("");
  CHECK(p.graph.num_entities() == 0);
  CHECK(p.graph.num_relations() == 0);
  CHECK(p.graph.num_triples() == 0);
  CHECK(p.duplicates == 0);
}

TEST_CASE("parse_triples interns names in insertion order") {
  auto p = parse("a\tr\tb\nb\ts\tc\nd\tr\tb\n");
  CHECK(p.graph.num_entities() == 4);
  CHECK(p.graph.num_relations() == 2);
  CHECK(p.graph.num_triples() == 3);
  CHECK(p.graph.entities().names() == std::vector<std::string>{"a", "b", "c", "d"});
  CHECK(p.graph.relations().at("s") == 1);
}

TEST_CASE("duplicate lines collapse and are counted") {
  auto p = parse("a\tr\tb\na\tr\tb\n\n");
  CHECK(p.graph.num_triples() == 1);
  CHECK(p.duplicates == 1);
}

TEST_CASE("names are case-sensitive") {
  auto p = parse("A\tr\ta\n");
  CHECK(p.graph.num_entities() == 2);
}

TEST_CASE("malformed lines report their line number") {
  try {
    parse("a\tr\tb\n\nonly\ttwo\n");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }
  CHECK_THROWS_AS(parse("a\tr\tb\tc\n"), ParseError);
}

TEST_CASE("a frozen vocabulary rejects unknown names") {
  Vocabulary ents(std::vector<std::string>{"a", "b"});
  Vocabulary rels(std::vector<std::string>{"r"});
  CHECK_NOTHROW(parse("a\tr\tb\n", &ents, &rels));
  CHECK_THROWS_AS(parse("a\tr\tz\n", &ents, &rels), VocabularyError);
  CHECK_THROWS_AS(parse("a\tq\tb\n", &ents, &rels), VocabularyError);
  // Frozen vocabularies keep the caller's ids even for unused names.
  auto p = parse("b\tr\tb\n", &ents, &rels);
  CHECK(p.graph.num_entities() == 2);
  CHECK(p.graph.entities().at("b") == 1);
}

TEST_CASE("augment_kg adds inverse and identity triples") {
  auto kg = parse("a\tr\tb\nb\ts\tc\nd\tr\tb\n").graph;
  auto aug = augment_kg(kg);
  CHECK(aug.augmented());
  CHECK(aug.num_triples() == 10);
  CHECK(aug.num_relations() == 2 * 2 + 1);
  CHECK(aug.base_relation_count() == 2);
  CHECK(aug.relation_node_count() == 4);
  CHECK(aug.identity_relation() == 4);
  CHECK(aug.contains({1, 2, 0}));  // (b, r^-1, a)
  CHECK(aug.contains({3, 4, 3}));  // (d, identity, d)
  CHECK(aug.relations().name(2) == "r^-1");
}

TEST_CASE("augment_kg on the empty graph is empty") {
  auto aug = augment_kg(KnowledgeGraph{});
  CHECK(aug.num_triples() == 0);
  CHECK(aug.augmented());
}

TEST_CASE("augmenting twice is rejected") {
  auto aug = augment_kg(parse("a\tr\tb\n").graph);
  CHECK_THROWS_AS(augment_kg(aug), ContractError);
}

TEST_CASE("augmented triple count follows 2|T| + |E| at FB:v1 scale") {
  // 3717 distinct triples over 2146 entities, 120 relations.
  Vocabulary ents, rels;
  for (int e = 0; e < 2146; ++e) ents.intern("e" + std::to_string(e));
  for (int r = 0; r < 120; ++r) rels.intern("r" + std::to_string(r));
  std::vector<Triple> ts;
  for (std::uint32_t i = 0; i < 3717; ++i) ts.push_back({i % 2146, i % 120, (i * 7 + 1) % 2146});
  KnowledgeGraph kg(ents, rels, ts);
  REQUIRE(kg.num_triples() == 3717);
  CHECK(augment_kg(kg).num_triples() == 9580);
}

TEST_CASE("inverse mapping is an involution and every base triple has its inverse") {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    auto kg = testing::random_kg(rng, 15, 4, 40);
    auto aug = augment_kg(kg);
    for (RelationId r = 0; r < aug.relation_node_count(); ++r)
      CHECK(aug.inverse_of(aug.inverse_of(r)) == r);
    for (const auto& t : kg.triples())
      CHECK(aug.contains({t.tail, aug.inverse_of(t.relation), t.head}));
    CHECK(aug.num_triples() == 2 * kg.num_triples() + kg.num_entities());
  }
}

TEST_CASE("write_triples then parse_triples reproduces the triple set") {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    auto kg = testing::random_kg(rng, 12, 3, 30);
    std::ostringstream out;
    write_triples(out, kg);
    auto back = parse(out.str()).graph;
    CHECK(named_triples(back) == named_triples(kg));
  }
}

TEST_CASE("relation description and example files") {
  std::istringstream desc("r0\tmusic artist origin\nr1\tfilm actor film\n");
  auto d = parse_relation_descriptions(desc);
  CHECK(d.at("r0") == "music artist origin");
  std::istringstream ex("r0\tStan Lee\tNew York\n");
  auto e = parse_relation_examples(ex);
  CHECK(e.at("r0").head == "Stan Lee");
  CHECK(e.at("r0").tail == "New York");
  std::istringstream bad("r0\tonly-two\n");
  CHECK_THROWS_AS(parse_relation_examples(bad), ParseError);
}
