#pragma once

// Synthetic knowledge graphs with known generating rules.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "prolink/kg.hpp"
#include "prolink/prompter.hpp"

namespace prolink::testing {

// r0 and r1 are random total functions over the entities; r2 = r0 then r1.
// A fraction of the r2 triples is held out for evaluation.
struct CompositionKg {
  KnowledgeGraph full;               // all triples, base graph
  std::vector<Triple> train_r2;      // r2 triples visible during training
  std::vector<Triple> held_out_r2;   // r2 triples to predict
  KnowledgeGraph train;              // full minus held_out_r2
  RelationId r2 = 2;
};
CompositionKg composition_kg(std::size_t n_entities, double held_out_fraction, std::uint64_t seed);

struct TypeSets {
  std::vector<std::string> head;
  std::vector<std::string> tail;
};

// Entities are generated per type first; every relation gets a head type and
// a tail type and its triples are sampled uniformly within those types.
struct TypedKg {
  KnowledgeGraph kg;
  std::map<std::string, TypeSets> relation_types;  // relation name -> types
  std::vector<std::string> entity_type;            // per entity id
  std::vector<std::string> type_names;
};

struct TypedKgSpec {
  std::size_t n_types = 4;
  std::size_t entities_per_type = 25;
  std::size_t n_relations = 12;
  std::size_t triples_per_relation = 40;
  std::string entity_prefix = "e";
  std::string relation_prefix = "rel";
};

TypedKg typed_kg(const TypedKgSpec& spec, std::uint64_t seed);

// relation<TAB>head_types<TAB>tail_types, comma separated.
std::string type_oracle_tsv(const TypedKg& g);

// Four relations around a query relation "co-worked" (one support triple):
// sung-by and lyricized-by share a singer, directed-by shares nothing with
// the others in the graph but its tail type "person" collides with sung-by.
struct MusicScenario {
  KnowledgeGraph kg;  // augmented
  TypeAssignment assignment;
  RelationId co_worked, sung_by, lyricized_by, directed_by;
};
MusicScenario music_scenario();

}  // namespace prolink::testing
