#include "sdcg/grammar.hpp"

#include <charconv>
#include <cmath>
#include <set>
#include <sstream>

namespace sdcg {

const Table* Schema::find_table(const std::string& name) const {
  for (const auto& t : tables)
    if (t.name == name) return &t;
  return nullptr;
}

GrammarError::GrammarError(std::size_t line, std::size_t column, const std::string& message)
    : std::runtime_error("grammar:" + std::to_string(line) + ":" + std::to_string(column) + ": " + message),
      line_(line),
      column_(column) {}

std::string Grammar::key(const std::string& predicate, std::size_t arity) {
  return predicate + "/" + std::to_string(arity);
}

void Grammar::add_rule(GrammarRule rule) {
  if (auto* l = std::get_if<prob::Learnable>(&rule.prob); l && !l->domain) {
    auto& weights = learnable_groups[l->group];
    l->branch = weights.size();
    weights.push_back(0.0);
  }
  rule_index_[key(rule.head.predicate, rule.head.arity())].push_back(rules_.size());
  rules_.push_back(std::move(rule));
}

void Grammar::add_fact(Fact fact) {
  fact_index_[key(fact.atom.predicate, fact.atom.arity())].push_back(facts_.size());
  facts_.push_back(std::move(fact));
}

std::span<const std::size_t> Grammar::rules_for(const std::string& predicate, std::size_t arity) const {
  auto it = rule_index_.find(key(predicate, arity));
  if (it == rule_index_.end()) return {};
  return it->second;
}

std::span<const std::size_t> Grammar::facts_for(const std::string& predicate, std::size_t arity) const {
  auto it = fact_index_.find(key(predicate, arity));
  if (it == fact_index_.end()) return {};
  return it->second;
}

bool Grammar::has_rules_for(const std::string& predicate, std::size_t arity) const {
  return rule_index_.contains(key(predicate, arity));
}

bool Grammar::has_facts_for(const std::string& predicate, std::size_t arity) const {
  return fact_index_.contains(key(predicate, arity));
}

// ---------------------------------------------------------------------------
// Printing

namespace {

std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  std::string s(buf, end);
  if (s.find_first_of(".eE") == std::string::npos && s.find("inf") == std::string::npos &&
      s.find("nan") == std::string::npos)
    s += ".0";
  return s;
}

std::string render_list(std::span<const Term> terms) {
  std::string out = "[";
  for (std::size_t i = 0; i < terms.size(); ++i) {
    if (i) out += ", ";
    out += terms[i].to_string();
  }
  return out + "]";
}

std::string render_prompt_term(const std::string& prompt) {
  // Always quoted, so that a one-word prompt stays a string.
  std::string q = quote_symbol(prompt);
  if (q.front() != '"') q = "\"" + q + "\"";
  return q;
}

std::string render_domain_source(const std::string& keyword, const std::string& id, const DomainSpec& d) {
  return keyword + "(" + quote_symbol(id) + ", " + render_list(d.inputs) + ", " + d.output.to_string() + ", " +
         d.domain_goal.to_string() + ", " + render_prompt_term(d.prompt) + ")";
}

}  // namespace

std::string to_string(const ProbabilitySource& p) {
  return std::visit(
      [](const auto& src) -> std::string {
        using T = std::decay_t<decltype(src)>;
        if constexpr (std::is_same_v<T, prob::Certain>) {
          return "1.0";
        } else if constexpr (std::is_same_v<T, prob::Static>) {
          return format_double(src.p);
        } else if constexpr (std::is_same_v<T, prob::Learnable>) {
          if (!src.domain) return "learnable(" + quote_symbol(src.group) + ")";
          return render_domain_source("learnable", src.group, *src.domain);
        } else {
          return render_domain_source("oracle", src.oracle_id, src.domain);
        }
      },
      p);
}

std::string GrammarRule::to_string() const {
  std::string out;
  if (!std::holds_alternative<prob::Certain>(prob)) out += sdcg::to_string(prob) + " :: ";
  out += head.to_string() + " --> ";
  if (body.empty()) out += "[]";
  for (std::size_t i = 0; i < body.size(); ++i) {
    if (i) out += ", ";
    std::visit(
        [&out](const auto& item) {
          using T = std::decay_t<decltype(item)>;
          if constexpr (std::is_same_v<T, NonTerminal>) {
            out += item.atom.to_string();
          } else if constexpr (std::is_same_v<T, Terminals>) {
            out += render_list(item.tokens);
          } else {
            out += "{" + item.atom.to_string() + "}";
          }
        },
        body[i]);
  }
  return out + ".";
}

std::string to_source(const Grammar& g) {
  std::ostringstream os;
  for (const auto& f : g.facts()) os << f.atom.to_string() << ".\n";
  for (const auto& r : g.rules()) os << r.to_string() << "\n";
  return os.str();
}

// ---------------------------------------------------------------------------
// Stochastic constraint

std::vector<StochasticViolation> validate_stochastic_constraint(const Grammar& g) {
  struct Tally {
    double sum = 0.0;
    bool has_static = false;
    bool has_normalized = false;
  };
  std::vector<std::pair<std::string, std::size_t>> order;
  std::map<std::pair<std::string, std::size_t>, Tally> tallies;
  for (const auto& r : g.rules()) {
    auto k = std::make_pair(r.head.predicate, r.head.arity());
    auto [it, inserted] = tallies.try_emplace(k);
    if (inserted) order.push_back(k);
    auto& t = it->second;
    if (const auto* s = std::get_if<prob::Static>(&r.prob)) {
      t.has_static = true;
      t.sum += s->p;
    } else if (std::holds_alternative<prob::Certain>(r.prob)) {
      t.sum += 1.0;
    } else {
      t.has_normalized = true;
    }
  }
  std::vector<StochasticViolation> out;
  for (const auto& k : order) {
    const auto& t = tallies.at(k);
    if (!t.has_static) continue;
    std::string name = k.first + "/" + std::to_string(k.second);
    if (t.has_normalized) {
      out.push_back({k.first, k.second, t.sum, name + " mixes static probabilities with learnable or oracle rules"});
    } else if (std::abs(t.sum - 1.0) > 1e-9) {
      out.push_back({k.first, k.second, t.sum, name + " rule probabilities sum to " + format_double(t.sum)});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Facts from a schema

namespace {

Term str(const std::string& s) { return Term::constant(s); }

}  // namespace

std::vector<Fact> schema_to_facts(const Schema& s) {
  std::vector<Fact> out;
  std::vector<Term> tables;
  for (const auto& t : s.tables) tables.push_back(str(t.semantic_name));
  out.push_back({Atom{"database", {str(s.db_name), Term::list(tables)}}});
  for (const auto& t : s.tables) {
    std::vector<Term> cols;
    for (const auto& c : t.columns) cols.push_back(str(c.semantic_name));
    out.push_back({Atom{"table", {str(s.db_name), str(t.semantic_name), Term::list(cols)}}});
  }
  auto semantic_of = [&s](const std::string& table, const std::string& column) -> std::pair<std::string, std::string> {
    const Table* t = s.find_table(table);
    if (!t) return {table, column};
    for (const auto& c : t->columns)
      if (c.name == column) return {t->semantic_name, c.semantic_name};
    return {t->semantic_name, column};
  };
  for (const auto& fk : s.foreign_keys) {
    auto [t1, c1] = semantic_of(fk.table, fk.column);
    auto [t2, c2] = semantic_of(fk.ref_table, fk.ref_column);
    out.push_back({Atom{"foreign_key", {str(s.db_name), str(t1), str(c1), str(t2), str(c2)}}});
  }
  return out;
}

std::vector<Fact> domain_facts(const Schema& s) {
  std::vector<Fact> out;
  const Term db = str(s.db_name);
  for (const auto& t : s.tables) out.push_back({Atom{"table_domain", {db, str(t.semantic_name)}}});
  for (const auto& t : s.tables)
    for (const auto& c : t.columns)
      out.push_back({Atom{"column_domain", {db, str(t.semantic_name), str(c.semantic_name)}}});

  std::set<std::string> seen_columns;
  for (const auto& t : s.tables)
    for (const auto& c : t.columns)
      if (seen_columns.insert(c.semantic_name).second)
        out.push_back({Atom{"db_column_domain", {db, str(c.semantic_name)}}});

  // First foreign key per unordered pair of distinct tables, in both directions.
  std::vector<Fact> pairs;
  std::set<std::pair<std::string, std::string>> linked;
  std::set<std::string> linked_tables;
  for (const auto& fk : s.foreign_keys) {
    if (fk.table == fk.ref_table) continue;
    auto k = std::minmax(fk.table, fk.ref_table);
    if (!linked.insert({k.first, k.second}).second) continue;
    const Table* a = s.find_table(fk.table);
    const Table* b = s.find_table(fk.ref_table);
    if (!a || !b) continue;
    auto sem = [](const Table* t, const std::string& col) {
      for (const auto& c : t->columns)
        if (c.name == col) return c.semantic_name;
      return col;
    };
    Term ta = str(a->semantic_name), ca = str(sem(a, fk.column));
    Term tb = str(b->semantic_name), cb = str(sem(b, fk.ref_column));
    pairs.push_back({Atom{"except_pair", {db, ta, ca, tb, cb}}});
    pairs.push_back({Atom{"except_pair", {db, tb, cb, ta, ca}}});
    linked_tables.insert(fk.table);
    linked_tables.insert(fk.ref_table);
  }
  for (const auto& t : s.tables)
    if (linked_tables.contains(t.name)) out.push_back({Atom{"except_table", {db, str(t.semantic_name)}}});
  out.insert(out.end(), pairs.begin(), pairs.end());
  return out;
}

}  // namespace sdcg
