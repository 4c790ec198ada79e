#pragma once

#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include "sdcg/schema.hpp"
#include "sdcg/terms.hpp"

namespace sdcg {

// ---------------------------------------------------------------------------
// Body items

struct NonTerminal {
  Atom atom;
  friend bool operator==(const NonTerminal&, const NonTerminal&) = default;
};

// A terminal list such as ["SELECT"] or [C]; empty for the empty production.
struct Terminals {
  std::vector<Term> tokens;
  friend bool operator==(const Terminals&, const Terminals&) = default;
};

// A brace goal {p(...)}; resolved against facts only.
struct EmbeddedGoal {
  Atom atom;
  friend bool operator==(const EmbeddedGoal&, const EmbeddedGoal&) = default;
};

using BodyItem = std::variant<NonTerminal, Terminals, EmbeddedGoal>;

// ---------------------------------------------------------------------------
// Probability sources

// Inputs and output domain of a branch family whose probabilities come from
// an indexed distribution. `inputs[0]` is the natural-language text and the
// optional `inputs[1]` a state string placed in front of the answer list.
struct DomainSpec {
  std::vector<Term> inputs;
  Term output;
  Atom domain_goal;
  std::string prompt;
  friend bool operator==(const DomainSpec&, const DomainSpec&) = default;
};

namespace prob {

struct Certain {
  friend bool operator==(const Certain&, const Certain&) = default;
};

struct Static {
  double p = 1.0;
  friend bool operator==(const Static&, const Static&) = default;
};

// A branch of a trainable parameter vector. Without a domain, each rule in
// `group` is one branch (`branch` is assigned by Grammar::add_rule). With a
// domain, the rule expands into one branch per domain value and the group
// instance is keyed by the rendered prompt.
struct Learnable {
  std::string group;
  std::optional<DomainSpec> domain;
  std::size_t branch = 0;
  friend bool operator==(const Learnable&, const Learnable&) = default;
};

struct Oracle {
  std::string oracle_id;
  DomainSpec domain;
  friend bool operator==(const Oracle&, const Oracle&) = default;
};

}  // namespace prob

using ProbabilitySource = std::variant<prob::Certain, prob::Static, prob::Learnable, prob::Oracle>;

struct GrammarRule {
  Atom head;
  std::vector<BodyItem> body;
  ProbabilitySource prob = prob::Certain{};
  std::size_t line = 0;

  std::string to_string() const;
  friend bool operator==(const GrammarRule& a, const GrammarRule& b) {
    return a.head == b.head && a.body == b.body && a.prob == b.prob;
  }
};

struct Fact {
  Atom atom;
  friend bool operator==(const Fact&, const Fact&) = default;
};

// Rules, facts and learnable parameter vectors. Rules and facts are fixed
// after loading; only `learnable_groups` changes, and only between episodes.
class Grammar {
 public:
  // Assigns the branch index of simple learnable rules and grows their group.
  void add_rule(GrammarRule rule);
  void add_fact(Fact fact);

  std::span<const GrammarRule> rules() const noexcept { return rules_; }
  std::span<const Fact> facts() const noexcept { return facts_; }

  // Rule indices for predicate/arity in source order.
  std::span<const std::size_t> rules_for(const std::string& predicate, std::size_t arity) const;
  std::span<const std::size_t> facts_for(const std::string& predicate, std::size_t arity) const;
  bool has_rules_for(const std::string& predicate, std::size_t arity) const;
  bool has_facts_for(const std::string& predicate, std::size_t arity) const;

  // Unnormalized weights; probabilities are their softmax.
  std::map<std::string, std::vector<double>> learnable_groups;

  friend bool operator==(const Grammar& a, const Grammar& b) {
    return a.rules_ == b.rules_ && a.facts_ == b.facts_;
  }

 private:
  static std::string key(const std::string& predicate, std::size_t arity);
  std::vector<GrammarRule> rules_;
  std::vector<Fact> facts_;
  std::unordered_map<std::string, std::vector<std::size_t>> rule_index_;
  std::unordered_map<std::string, std::vector<std::size_t>> fact_index_;
};

class GrammarError : public std::runtime_error {
 public:
  GrammarError(std::size_t line, std::size_t column, const std::string& message);
  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

// Parses the grammar DSL:
// 
//   % comment
//   database("dog_kennels", ["Dogs", "Professionals", "Treatments"]).
//   query(NL, DB) --> table(NL, DB, T), ["SELECT"], column(NL, DB, T), ["FROM"], token(T).
//   table(NL, DB, T) --> [] :: oracle(table_lm, [NL], T, table_domain(DB, T), "the answer should be Answer")
//   0.3 :: s --> ["a"].
//   learnable(g) :: s --> ["b"].
//   pick(X) --> {member_of(X)}, [X].
// 
// One clause per line (a line may continue after ',', '-->' or '::' or inside
// brackets). Facts end with '.', the '.' after a rule is optional. A
// probability annotation may prefix the head or follow the body.
Grammar parse_grammar_source(std::string_view text);

// Renders a grammar back into the DSL. parse(to_source(parse(x))) == parse(x).
std::string to_source(const Grammar& g);

std::string to_string(const ProbabilitySource& p);

struct StochasticViolation {
  std::string predicate;
  std::size_t arity = 0;
  double sum = 0.0;
  std::string message;
};

// Checks that the Static probabilities of every predicate sum to 1 (within
// 1e-9). Certain-only, learnable and oracle predicates normalize by
// construction and are not reported.
std::vector<StochasticViolation> validate_stochastic_constraint(const Grammar& g);

// database/2, table/3 and foreign_key/5 facts, in schema order, using
// semantic names.
std::vector<Fact> schema_to_facts(const Schema& s);

// Flattened lookup facts the generated grammars draw oracle domains from:
// table_domain/2, column_domain/3, db_column_domain/2, except_table/2 and
// except_pair/5. Also in schema order and using semantic names.
std::vector<Fact> domain_facts(const Schema& s);

}  // namespace sdcg
