#include <sstream>

#include "sdcg/sql.hpp"

namespace sdcg::sql {

namespace {

constexpr const char* kPrompt = "\"the answer should be Answer\"";

// fixed oracle domains, in answer-index order
const std::vector<std::pair<std::string, std::vector<std::string>>>& choice_domains() {
  static const std::vector<std::pair<std::string, std::vector<std::string>>> d{
      {"selection1",
       {"*", "COUNT(*)", "column", "COUNT(column)", "SUM(column)", "AVG(column)", "MIN(column)", "MAX(column)"}},
      {"selection2",
       {"*", "COUNT(*)", "column", "DISTINCT column", "COUNT(column)", "COUNT(DISTINCT column)", "SUM(column)",
        "AVG(column)", "MIN(column)", "MAX(column)"}},
      {"aggregate", {"COUNT(*)", "COUNT(column)", "SUM(column)", "AVG(column)", "MIN(column)", "MAX(column)"}},
      {"except", {"empty", "EXCEPT"}},
      {"where", {"empty", "WHERE"}},
      {"groupby", {"empty", "GROUP BY"}},
      {"having", {"empty", "HAVING"}},
      {"order", {"empty", "ORDER BY"}},
      {"desc", {"empty", "ASC", "DESC"}},
      {"limit", {"empty", "LIMIT"}},
      {"operator", {"=", "!=", ">", "<", ">=", "<=", "LIKE"}},
  };
  return d;
}

std::string oracle(const std::string& id, const std::string& inputs, const std::string& out, const std::string& domain) {
  return " :: oracle(" + id + ", [" + inputs + "], " + out + ", " + domain + ", " + kPrompt + ")\n";
}

// sel_body(NL, DB, T, ColumnState, Choice): one dispatch rule per selection branch
void selection_bodies(std::ostringstream& g) {
  g << "sel_body(NL, DB, T, Cs, \"*\") --> [\"*\"].\n"
       "sel_body(NL, DB, T, Cs, \"COUNT(*)\") --> [\"COUNT\", \"(\", \"*\", \")\"].\n"
       "sel_body(NL, DB, T, Cs, \"column\") --> column(NL, DB, T, Cs).\n"
       "sel_body(NL, DB, T, Cs, \"DISTINCT column\") --> [\"DISTINCT\"], column(NL, DB, T, Cs).\n"
       "sel_body(NL, DB, T, Cs, \"COUNT(DISTINCT column)\") --> [\"COUNT\", \"(\", \"DISTINCT\"], column(NL, DB, T, Cs), [\")\"].\n";
  for (const char* agg : {"COUNT", "SUM", "AVG", "MIN", "MAX"})
    g << "sel_body(NL, DB, T, Cs, \"" << agg << "(column)\") --> [\"" << agg
      << "\", \"(\"], column(NL, DB, T, Cs), [\")\"].\n";
}

}  // namespace

Scope parse_scope(const std::string& name) {
  if (name == "basic") return Scope::basic;
  if (name == "task1") return Scope::task1;
  if (name == "task2") return Scope::task2;
  throw std::invalid_argument("unknown grammar scope '" + name + "' (basic, task1, task2)");
}

std::string to_string(Scope scope) {
  switch (scope) {
    case Scope::basic: return "basic";
    case Scope::task1: return "task1";
    default: return "task2";
  }
}

std::string grammar_rules(Scope scope, bool ablation, bool with_except) {
  std::ostringstream g;
  for (const auto& [name, values] : choice_domains())
    for (const auto& v : values) g << "choice(" << name << ", \"" << v << "\").\n";

  const std::string column_domain = ablation ? "db_column_domain(DB, C)" : "column_domain(DB, T, C)";
  g << "token(X) --> [X].\n";
  g << "table(NL, DB, S, T) --> []" << oracle("table_lm", "NL, S", "T", "table_domain(DB, T)");
  g << "column(NL, DB, T, S) --> token(C)" << oracle("column_lm", "NL, S", "C", column_domain);

  if (scope == Scope::basic) {
    g << "query(NL, DB) --> table(NL, DB, \"\", T), [\"SELECT\"], column(NL, DB, T, \"\"), [\"FROM\"], token(T).\n";
    return g.str();
  }

  const bool t2 = scope == Scope::task2;
  selection_bodies(g);
  g << "sel_choice(NL, S, X) --> []"
    << oracle("selection_lm", "NL, S", "X", t2 ? "choice(selection2, X)" : "choice(selection1, X)");
  g << "selection(NL, DB, T, Cs) --> sel_choice(NL, \"\", X), sel_body(NL, DB, T, Cs, X).\n";

  if (!t2) {
    g << "query(NL, DB) --> table(NL, DB, \"\", T), [\"SELECT\"], selection(NL, DB, T, \"\"), [\"FROM\"], token(T).\n";
    return g.str();
  }

  // clause existence switches: an empty production picks, a dispatch rule emits
  auto sw = [&g](const std::string& name, const std::string& lm) {
    g << name << "_choice(NL, X) --> []" << oracle(lm, "NL", "X", "choice(" + name + ", X)");
  };
  sw("where", "where_lm");
  sw("groupby", "groupby_lm");
  sw("having", "having_lm");
  sw("order", "order_lm");
  sw("desc", "desc_lm");
  sw("limit", "limit_lm");
  g << "operator(NL, S) --> token(O)" << oracle("operator_lm", "NL, S", "O", "choice(operator, O)");

  g << "where_clause(NL, DB, T) --> where_choice(NL, X), where_body(NL, DB, T, X).\n"
       "where_body(NL, DB, T, \"empty\") --> [].\n"
       "where_body(NL, DB, T, \"WHERE\") --> [\"WHERE\"], column(NL, DB, T, \"WHERE [column]\"), "
       "operator(NL, \"WHERE [operator]\"), [\"<value>\"].\n";

  g << "group_clause(NL, DB, T) --> groupby_choice(NL, X), group_body(NL, DB, T, X).\n"
       "group_body(NL, DB, T, \"empty\") --> [].\n"
       "group_body(NL, DB, T, \"GROUP BY\") --> [\"GROUP\", \"BY\"], column(NL, DB, T, \"GROUP BY [column]\"), "
       "having_clause(NL, DB, T).\n"
       "having_clause(NL, DB, T) --> having_choice(NL, X), having_body(NL, DB, T, X).\n"
       "having_body(NL, DB, T, \"empty\") --> [].\n"
       "having_body(NL, DB, T, \"HAVING\") --> [\"HAVING\"], aggregate(NL, DB, T), "
       "operator(NL, \"HAVING [operator]\"), [\"<value>\"].\n";
  g << "agg_choice(NL, X) --> []"
    << oracle("selection_lm", "NL, \"HAVING [selection]\"", "X", "choice(aggregate, X)");
  g << "aggregate(NL, DB, T) --> agg_choice(NL, X), sel_body(NL, DB, T, \"HAVING [column]\", X).\n";

  g << "order_clause(NL, DB, T) --> order_choice(NL, X), order_body(NL, DB, T, X).\n"
       "order_body(NL, DB, T, \"empty\") --> [].\n"
       "order_body(NL, DB, T, \"ORDER BY\") --> [\"ORDER\", \"BY\"], column(NL, DB, T, \"ORDER BY [column]\"), "
       "direction(NL), limit_clause(NL).\n"
       "direction(NL) --> desc_choice(NL, X), dir_body(X).\n"
       "dir_body(\"empty\") --> [].\n"
       "dir_body(\"ASC\") --> [\"ASC\"].\n"
       "dir_body(\"DESC\") --> [\"DESC\"].\n"
       "limit_clause(NL) --> limit_choice(NL, X), limit_body(X).\n"
       "limit_body(\"empty\") --> [].\n"
       "limit_body(\"LIMIT\") --> [\"LIMIT\", \"<value>\"].\n";

  g << "single(NL, DB) --> table(NL, DB, \"\", T), [\"SELECT\"], selection(NL, DB, T, \"SELECT [column]\"), "
       "[\"FROM\"], token(T), where_clause(NL, DB, T), group_clause(NL, DB, T), order_clause(NL, DB, T).\n";

  if (!with_except) {
    g << "query(NL, DB) --> single(NL, DB).\n";
    return g.str();
  }
  sw("except", "except_lm");
  g << "except_first(NL, DB, T) --> []" << oracle("table_lm", "NL, \"SELECT [table]\"", "T", "except_table(DB, T)");
  g << "except_second(NL, DB, T1, T2) --> []"
    << oracle("table_lm", "NL, \"EXCEPT [table]\"", "T2", "except_pair(DB, T1, _, T2, _)");
  g << "query(NL, DB) --> except_choice(NL, X), query_body(NL, DB, X).\n"
       "query_body(NL, DB, \"empty\") --> single(NL, DB).\n"
       "query_body(NL, DB, \"EXCEPT\") --> except_first(NL, DB, T1), except_second(NL, DB, T1, T2), "
       "{except_pair(DB, T1, C1, T2, C2)}, [\"SELECT\"], token(C1), [\"FROM\"], token(T1), "
       "[\"EXCEPT\", \"SELECT\"], token(C2), [\"FROM\"], token(T2).\n";
  return g.str();
}

namespace {

Grammar build(const Schema& s, Scope scope, bool ablation) {
  validate_schema(s);
  bool linked = false;
  for (const auto& fk : s.foreign_keys) linked = linked || fk.table != fk.ref_table;
  Grammar g = parse_grammar_source(grammar_rules(scope, ablation, linked));
  for (auto& f : schema_to_facts(s)) g.add_fact(f);
  for (auto& f : domain_facts(s)) g.add_fact(f);
  return g;
}

}  // namespace

Grammar build_dcg_grammar(const Schema& s, Scope scope) { return build(s, scope, false); }
Grammar build_cfg_ablation_grammar(const Schema& s, Scope scope) { return build(s, scope, true); }

Atom query_atom(const std::string& nl, const Schema& s) {
  return Atom{"query", {Term::constant(nl), Term::constant(s.db_name)}};
}

}  // namespace sdcg::sql
