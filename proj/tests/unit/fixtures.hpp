#pragma once

// Shared test fixtures: the dog_kennels schema and the basic query grammar.

#include <string>

#include "sdcg/grammar.hpp"
#include "sdcg/schema.hpp"

namespace fixtures {

inline sdcg::Schema dog_kennels() {
  sdcg::Schema s;
  s.db_name = "dog_kennels";
  s.tables = {
      {"Dogs", "Dogs", {{"dog_id", "dog_id"}, {"abandoned_yn", "abandoned_yn"}}},
      {"Professionals", "Professionals", {{"prof_id", "prof_id"}, {"role_code", "role_code"}}},
      {"Treatments", "Treatments", {{"treat_id", "treat_id"}, {"dog_id", "dog_id"}, {"prof_id", "prof_id"}}},
  };
  s.foreign_keys = {{"Treatments", "dog_id", "Dogs", "dog_id"}};
  return s;
}

inline constexpr const char* kNl = "Find the ids of professionals who have ever treated dogs.";

// Table first through an empty production, then a column bound to it.
inline constexpr const char* kQueryRules = R"(
query(NL, DB) --> table(NL, DB, T), ["SELECT"], column(NL, DB, T), ["FROM"], token(T).
table(NL, DB, T) --> [] :: oracle(table_lm, [NL], T, table_domain(DB, T), "the answer should be Answer")
column(NL, DB, T) --> token(C) :: oracle(column_lm, [NL], C, column_domain(DB, T, C), "the answer should be Answer")
token(X) --> [X].
)";

inline sdcg::Grammar query_grammar(const sdcg::Schema& s = dog_kennels()) {
  sdcg::Grammar g = sdcg::parse_grammar_source(kQueryRules);
  for (auto& f : sdcg::schema_to_facts(s)) g.add_fact(f);
  for (auto& f : sdcg::domain_facts(s)) g.add_fact(f);
  return g;
}

inline sdcg::Atom query_goal(const std::string& nl = kNl, const std::string& db = "dog_kennels") {
  return sdcg::Atom{"query", {sdcg::Term::constant(nl), sdcg::Term::constant(db)}};
}

}  // namespace fixtures
