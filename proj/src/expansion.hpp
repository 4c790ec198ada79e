#pragma once

// Rule-level semantics shared by the tabled and the naive resolver: renaming a
// rule apart and turning its probability source into concrete branches.

#include <optional>
#include <vector>

#include "sdcg/grammar.hpp"
#include "sdcg/oracle.hpp"
#include "sdcg/probability.hpp"
#include "sdcg/terms.hpp"

namespace sdcg::detail {

GrammarRule rename_rule(const GrammarRule& rule, FreshVars& fresh);

// One way of applying a rule whose head already unified: the substitution
// after binding the branch output, and the probability handle of the branch.
struct Branch {
  Substitution subst;
  std::optional<std::size_t> index;
  std::optional<LeafHandle> leaf;
  std::optional<OracleRequest> request;
};

// Domain values of `spec.output` over the facts, distinct, in fact order.
std::vector<std::string> resolve_domain(const Grammar& g, const DomainSpec& spec, const Substitution& s);

// Branches of `rule` (renamed) under `s`. Throws ResolutionError when a
// domain is empty or an input is not ground.
std::vector<Branch> expand_source(const Grammar& g, std::size_t rule_index, const GrammarRule& rule,
                                  const Substitution& s);

// Embedded goals: every fact unifying with `goal` under `s`, in fact order.
std::vector<std::pair<std::size_t, Substitution>> match_facts(const Grammar& g, const Atom& goal,
                                                              const Substitution& s);

// Unknown-mode terminal: must be ground constant text at emission time.
std::string emit_token(const Term& t, const Substitution& s, const GrammarRule& rule);

}  // namespace sdcg::detail
