#include "expansion.hpp"

#include "sdcg/resolver.hpp"

namespace sdcg::detail {

GrammarRule rename_rule(const GrammarRule& rule, FreshVars& fresh) {
  Renamer rename(fresh);
  GrammarRule out;
  out.line = rule.line;
  out.head = rename(rule.head);
  out.body.reserve(rule.body.size());
  for (const auto& item : rule.body) {
    if (const auto* nt = std::get_if<NonTerminal>(&item)) {
      out.body.emplace_back(NonTerminal{rename(nt->atom)});
    } else if (const auto* eg = std::get_if<EmbeddedGoal>(&item)) {
      out.body.emplace_back(EmbeddedGoal{rename(eg->atom)});
    } else {
      Terminals t;
      for (const auto& tok : std::get<Terminals>(item).tokens) t.tokens.push_back(rename(tok));
      out.body.emplace_back(std::move(t));
    }
  }
  auto rename_spec = [&rename](const DomainSpec& d) {
    DomainSpec r{{}, rename(d.output), rename(d.domain_goal), d.prompt};
    for (const auto& in : d.inputs) r.inputs.push_back(rename(in));
    return r;
  };
  out.prob = std::visit(
      [&](const auto& src) -> ProbabilitySource {
        using T = std::decay_t<decltype(src)>;
        if constexpr (std::is_same_v<T, prob::Oracle>) {
          return prob::Oracle{src.oracle_id, rename_spec(src.domain)};
        } else if constexpr (std::is_same_v<T, prob::Learnable>) {
          prob::Learnable l = src;
          if (l.domain) l.domain = rename_spec(*l.domain);
          return l;
        } else {
          return src;
        }
      },
      rule.prob);
  return out;
}

std::vector<std::pair<std::size_t, Substitution>> match_facts(const Grammar& g, const Atom& goal,
                                                              const Substitution& s) {
  if (!g.has_facts_for(goal.predicate, goal.arity()))
    throw ResolutionError("no facts for embedded goal " + goal.predicate + "/" + std::to_string(goal.arity()));
  std::vector<std::pair<std::size_t, Substitution>> out;
  const Atom applied = s.apply(goal);
  for (std::size_t fi : g.facts_for(goal.predicate, goal.arity()))
    if (auto s2 = unify(applied, g.facts()[fi].atom, s)) out.emplace_back(fi, std::move(*s2));
  return out;
}

std::vector<std::string> resolve_domain(const Grammar& g, const DomainSpec& spec, const Substitution& s) {
  std::vector<std::string> domain;
  for (const auto& [fi, s2] : match_facts(g, spec.domain_goal, s)) {
    Term v = s2.apply(spec.output);
    if (!v.is_constant())
      throw ResolutionError("domain goal " + spec.domain_goal.to_string() + " does not bind its output to a constant");
    bool seen = false;
    for (const auto& d : domain) seen = seen || d == v.symbol();
    if (!seen) domain.push_back(v.symbol());
  }
  return domain;
}

namespace {

std::string ground_text(const Term& t, const Substitution& s, const char* what, const GrammarRule& rule) {
  Term v = s.apply(t);
  if (!v.is_constant())
    throw ResolutionError(std::string(what) + " " + v.to_string() + " is not a ground constant in rule at line " +
                          std::to_string(rule.line) + ": " + rule.head.to_string());
  return v.symbol();
}

OracleRequest make_request(const std::string& id, const DomainSpec& spec, std::vector<std::string> domain,
                           const Substitution& s, const GrammarRule& rule) {
  OracleRequest req;
  req.oracle_id = id;
  req.nl = ground_text(spec.inputs.at(0), s, "oracle input", rule);
  if (spec.inputs.size() > 1) req.state = ground_text(spec.inputs[1], s, "oracle state", rule);
  req.domain = std::move(domain);
  req.prompt = spec.prompt;
  return req;
}

}  // namespace

std::vector<Branch> expand_source(const Grammar& g, std::size_t rule_index, const GrammarRule& rule,
                                  const Substitution& s) {
  std::vector<Branch> out;
  const DomainSpec* spec = nullptr;
  std::string id;
  bool is_oracle = false;
  if (const auto* st = std::get_if<prob::Static>(&rule.prob)) {
    out.push_back({s, std::nullopt, StaticLeaf{rule_index, st->p}, std::nullopt});
    return out;
  }
  if (const auto* l = std::get_if<prob::Learnable>(&rule.prob)) {
    if (!l->domain) {
      std::size_t size = g.learnable_groups.count(l->group) ? g.learnable_groups.at(l->group).size() : 0;
      out.push_back({s, std::nullopt, LearnableLeaf{l->group, l->branch, size}, std::nullopt});
      return out;
    }
    spec = &*l->domain;
    id = l->group;
  } else if (const auto* o = std::get_if<prob::Oracle>(&rule.prob)) {
    spec = &o->domain;
    id = o->oracle_id;
    is_oracle = true;
  } else {
    out.push_back({s, std::nullopt, std::nullopt, std::nullopt});
    return out;
  }

  std::vector<std::string> domain = resolve_domain(g, *spec, s);
  if (domain.empty())
    throw ResolutionError("empty domain for " + id + " from " + s.apply(spec->domain_goal).to_string() +
                          " in rule at line " + std::to_string(rule.line));
  OracleRequest req = make_request(id, *spec, domain, s, rule);
  std::string prompt = build_prompt(req);
  for (std::size_t i = 0; i < domain.size(); ++i) {
    auto s2 = unify(spec->output, Term::constant(domain[i]), s);
    if (!s2) continue;
    std::optional<LeafHandle> leaf;
    if (is_oracle) {
      leaf = OracleLeaf{OracleKey{id, prompt}, i};
    } else {
      leaf = LearnableLeaf{id + "|" + prompt, i, domain.size()};
    }
    out.push_back({std::move(*s2), i, std::move(leaf), is_oracle ? std::optional(req) : std::nullopt});
  }
  return out;
}

std::string emit_token(const Term& t, const Substitution& s, const GrammarRule& rule) {
  return ground_text(t, s, "terminal", rule);
}

}  // namespace sdcg::detail
