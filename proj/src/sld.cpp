// Plain SLD resolution over goal lists, no tabling. Used as the reference
// enumerator and for greedy decoding.

#include <algorithm>
#include <memory>

#include "expansion.hpp"
#include "sdcg/resolver.hpp"

namespace sdcg {
namespace {

struct Cell {
  BodyItem item;
  std::shared_ptr<const GrammarRule> rule;
  std::shared_ptr<const Cell> next;
};
using GoalList = std::shared_ptr<const Cell>;

class Sld {
 public:
  using OnSuccess = std::function<bool(const std::vector<DerivationStep>&, const std::vector<std::string>&)>;

  Sld(const Grammar& g, const Goal& goal, const ResolveOptions& opts, const LeafProbability* prob)
      : g_(g), goal_(goal), opts_(opts), prob_(prob) {}

  void run(const OnSuccess& on_success) {
    on_success_ = &on_success;
    auto root = std::make_shared<GrammarRule>();
    root->head = Atom{"$goal", {}};
    root->body.emplace_back(NonTerminal{goal_.atom});
    solve(std::make_shared<const Cell>(Cell{root->body[0], root, nullptr}), Substitution{}, 0, 0);
  }

 private:
  struct Candidate {
    std::size_t rule;
    std::shared_ptr<const GrammarRule> renamed;
    detail::Branch branch;
    double p = 1.0;
  };

  bool solve(const GoalList& goals, const Substitution& s, std::size_t pos, std::size_t applications) {
    if (!goals) {
      if (goal_.tokens && pos != goal_.tokens->size()) return true;
      return (*on_success_)(steps_, tokens_);
    }
    const Cell& cell = *goals;
    if (const auto* t = std::get_if<Terminals>(&cell.item)) {
      const std::size_t mark = tokens_.size();
      Substitution cur = s;
      bool ok = true;
      for (const auto& tok : t->tokens) {
        if (goal_.tokens) {
          const auto& toks = *goal_.tokens;
          std::optional<Substitution> s2;
          if (pos < toks.size()) s2 = unify(tok, Term::constant(toks[pos]), cur);
          if (!s2) {
            ok = false;
            break;
          }
          cur = std::move(*s2);
          tokens_.push_back(toks[pos++]);
        } else {
          tokens_.push_back(detail::emit_token(tok, cur, *cell.rule));
        }
      }
      const bool go = !ok || solve(cell.next, cur, pos, applications);
      tokens_.resize(mark);
      return go;
    }
    if (const auto* eg = std::get_if<EmbeddedGoal>(&cell.item)) {
      for (auto& [fi, s2] : detail::match_facts(g_, eg->atom, s)) {
        steps_.push_back({DerivationStep::Kind::fact, fi, std::nullopt, std::nullopt});
        const bool go = solve(cell.next, s2, pos, applications);
        steps_.pop_back();
        if (!go) return false;
      }
      return true;
    }

    const Atom atom = s.apply(std::get<NonTerminal>(cell.item).atom);
    const std::string name = atom.predicate + "/" + std::to_string(atom.arity());
    if (!g_.has_rules_for(atom.predicate, atom.arity())) throw ResolutionError("unknown nonterminal " + name);
    if (applications + 1 > opts_.max_depth)
      throw ResolutionError("resolution depth limit " + std::to_string(opts_.max_depth) + " exceeded at " + name);

    std::vector<Candidate> cands;
    for (std::size_t ri : g_.rules_for(atom.predicate, atom.arity())) {
      auto renamed = std::make_shared<const GrammarRule>(detail::rename_rule(g_.rules()[ri], fresh_));
      auto s2 = unify(renamed->head, atom, s);
      if (!s2) continue;
      for (auto& br : detail::expand_source(g_, ri, *renamed, *s2)) {
        double p = 1.0;
        if (prob_ && br.leaf) p = (*prob_)(*br.leaf, br.request ? &*br.request : nullptr);
        cands.push_back({ri, renamed, std::move(br), p});
      }
    }
    if (prob_)
      std::stable_sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) { return a.p > b.p; });

    for (const auto& c : cands) {
      GoalList next = cell.next;
      for (auto it = c.renamed->body.rbegin(); it != c.renamed->body.rend(); ++it)
        next = std::make_shared<const Cell>(Cell{*it, c.renamed, next});
      steps_.push_back({DerivationStep::Kind::rule, c.rule, c.branch.index, c.branch.leaf});
      const bool go = solve(next, c.branch.subst, pos, applications + 1);
      steps_.pop_back();
      if (!go) return false;
    }
    return true;
  }

  const Grammar& g_;
  const Goal& goal_;
  ResolveOptions opts_;
  const LeafProbability* prob_;
  const OnSuccess* on_success_ = nullptr;
  FreshVars fresh_;
  std::vector<DerivationStep> steps_;
  std::vector<std::string> tokens_;
};

}  // namespace

EnumerationResult enumerate_derivations(const Goal& goal, const Grammar& g, std::size_t max,
                                        const ResolveOptions& opts) {
  EnumerationResult out;
  Sld sld(g, goal, opts, nullptr);
  sld.run([&](const std::vector<DerivationStep>& steps, const std::vector<std::string>& tokens) {
    if (out.derivations.size() == max) {
      out.truncated = true;
      return false;
    }
    out.derivations.push_back({Derivation{steps}, tokens});
    return true;
  });
  return out;
}

std::optional<DerivedSequence> greedy_derive(const Goal& goal, const Grammar& g, const LeafProbability& prob,
                                             const ResolveOptions& opts) {
  std::optional<DerivedSequence> out;
  Sld sld(g, goal, opts, &prob);
  sld.run([&](const std::vector<DerivationStep>& steps, const std::vector<std::string>& tokens) {
    out = DerivedSequence{Derivation{steps}, tokens};
    return false;
  });
  return out;
}

}  // namespace sdcg
