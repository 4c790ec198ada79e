#include "sdcg/resolver.hpp"

#include <cmath>
#include <limits>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "expansion.hpp"

namespace sdcg {

std::vector<LeafHandle> Derivation::leaves() const {
  std::vector<LeafHandle> out;
  for (const auto& st : steps)
    if (st.leaf) out.push_back(*st.leaf);
  return out;
}

double Derivation::probability(const Parameters& params) const {
  double p = 1.0;
  for (const auto& st : steps)
    if (st.leaf) p *= params.value(*st.leaf);
  return p;
}

class ForestBuilder {
 public:
  ForestBuilder(const Goal& goal, const Grammar& g, const ResolveOptions& opts) : g_(g), opts_(opts) {
    f_.goal_ = goal;
  }

  DerivationForest build() {
    const std::size_t root = solve(f_.goal_.atom, 0, 0);
    const auto& answers = f_.calls_[root].answers;
    for (std::size_t a = 0; a < answers.size(); ++a) {
      if (f_.goal_.tokens && answers[a].end != f_.goal_.tokens->size()) continue;
      f_.roots_.push_back({root, a});
    }
    return std::move(f_);
  }

 private:
  using Items = std::vector<DerivationForest::Item>;

  std::size_t solve(const Atom& atom, std::size_t start, std::size_t depth) {
    const std::string key = atom.as_term().variant_key() + "@" + std::to_string(start);
    if (opts_.tabling) {
      if (auto it = done_.find(key); it != done_.end()) return it->second;
    }
    const std::string name = atom.predicate + "/" + std::to_string(atom.arity());
    if (active_.contains(key))
      throw ResolutionError("left-recursive call " + atom.to_string() + " at position " + std::to_string(start));
    if (depth > opts_.max_depth)
      throw ResolutionError("resolution depth limit " + std::to_string(opts_.max_depth) + " exceeded at " + name);
    if (!g_.has_rules_for(atom.predicate, atom.arity())) throw ResolutionError("unknown nonterminal " + name);

    Renamer rename(fresh_);
    const std::size_t id = f_.calls_.size();
    f_.calls_.push_back({rename(atom), start, {}});
    answer_index_.emplace_back();
    active_.insert(key);

    const Atom call_atom = f_.calls_[id].atom;
    for (std::size_t ri : g_.rules_for(atom.predicate, atom.arity())) {
      const GrammarRule rule = detail::rename_rule(g_.rules()[ri], fresh_);
      auto s = unify(rule.head, call_atom, Substitution{});
      if (!s) continue;
      for (auto& br : detail::expand_source(g_, ri, rule, *s)) {
        Items items;
        Substitution s0 = br.subst;
        run_body(id, ri, rule, br, 0, std::move(s0), start, items, depth);
      }
    }

    active_.erase(key);
    if (opts_.tabling) done_.emplace(key, id);
    return id;
  }

  void run_body(std::size_t call, std::size_t ri, const GrammarRule& rule, const detail::Branch& br, std::size_t i,
                Substitution s, std::size_t pos, Items& items, std::size_t depth) {
    if (i == rule.body.size()) {
      add_alternative(call, ri, br, s, pos, items);
      return;
    }
    const std::size_t mark = items.size();
    const auto& item = rule.body[i];
    if (const auto* t = std::get_if<Terminals>(&item)) {
      for (const auto& tok : t->tokens) {
        if (f_.goal_.tokens) {
          const auto& toks = *f_.goal_.tokens;
          if (pos >= toks.size()) return void(items.resize(mark));
          auto s2 = unify(tok, Term::constant(toks[pos]), s);
          if (!s2) return void(items.resize(mark));
          s = std::move(*s2);
          items.push_back(DerivationForest::TokenItem{toks[pos]});
          ++pos;
        } else {
          items.push_back(DerivationForest::TokenItem{detail::emit_token(tok, s, rule)});
        }
      }
      run_body(call, ri, rule, br, i + 1, std::move(s), pos, items, depth);
    } else if (const auto* eg = std::get_if<EmbeddedGoal>(&item)) {
      for (auto& [fi, s2] : detail::match_facts(g_, eg->atom, s)) {
        items.push_back(DerivationForest::FactRef{fi});
        run_body(call, ri, rule, br, i + 1, std::move(s2), pos, items, depth);
        items.resize(mark);
      }
    } else {
      const Atom goal = s.apply(std::get<NonTerminal>(item).atom);
      const std::size_t child = solve(goal, f_.goal_.tokens ? pos : 0, depth + 1);
      const std::size_t n = f_.calls_[child].answers.size();
      for (std::size_t a = 0; a < n; ++a) {
        const auto& ans = f_.calls_[child].answers[a];
        const std::size_t end = ans.end;
        Renamer rename(fresh_);
        auto s2 = unify(goal, rename(ans.atom), s);
        if (!s2) continue;
        items.push_back(DerivationForest::ChildRef{child, a});
        run_body(call, ri, rule, br, i + 1, std::move(*s2), end, items, depth);
        items.resize(mark);
      }
    }
    items.resize(mark);
  }

  void add_alternative(std::size_t call, std::size_t ri, const detail::Branch& br, const Substitution& s,
                       std::size_t end, const Items& items) {
    if (br.request) {
      OracleKey k = key_of(*br.request);
      if (requested_.insert(k).second) f_.requests_.push_back(*br.request);
    }
    Atom ans = s.apply(f_.calls_[call].atom);
    const std::string key = ans.as_term().variant_key() + "@" + std::to_string(end);
    auto& index = answer_index_[call];
    auto& answers = f_.calls_[call].answers;
    auto it = index.find(key);
    if (it == index.end()) {
      it = index.emplace(key, answers.size()).first;
      answers.push_back({std::move(ans), end, {}});
    }
    answers[it->second].alternatives.push_back(f_.alternatives_.size());
    f_.alternatives_.push_back({ri, br.index, br.leaf, items});
  }

  const Grammar& g_;
  ResolveOptions opts_;
  DerivationForest f_;
  FreshVars fresh_;
  std::unordered_map<std::string, std::size_t> done_;
  std::unordered_set<std::string> active_;
  std::vector<std::unordered_map<std::string, std::size_t>> answer_index_;
  std::set<OracleKey> requested_;
};

DerivationForest derive(const Goal& goal, const Grammar& g, const ResolveOptions& opts) {
  return ForestBuilder(goal, g, opts).build();
}

double DerivationForest::count_derivations() const {
  std::vector<std::vector<double>> memo(calls_.size());
  for (std::size_t c = 0; c < calls_.size(); ++c) memo[c].assign(calls_[c].answers.size(), -1.0);
  // calls are created parent-first but completed child-first, so recurse with memo
  std::function<double(ChildRef)> count = [&](ChildRef r) -> double {
    double& m = memo[r.call][r.answer];
    if (m >= 0) return m;
    double total = 0.0;
    for (std::size_t alt : answer(r).alternatives) {
      double prod = 1.0;
      for (const auto& item : alternatives_[alt].items)
        if (const auto* c = std::get_if<ChildRef>(&item)) prod *= count(*c);
      total += prod;
    }
    return m = std::isfinite(total) ? total : std::numeric_limits<double>::infinity();
  };
  double total = 0.0;
  for (const auto& r : roots_) total += count(r);
  return total;
}

namespace {

struct Partial {
  std::vector<DerivationStep> steps;
  std::vector<std::string> tokens;
};

class ForestWalker {
 public:
  using Cont = std::function<bool(Partial&)>;
  explicit ForestWalker(const DerivationForest& f) : f_(f) {}

  bool answer(DerivationForest::ChildRef r, Partial& p, const Cont& k) {
    for (std::size_t alt : f_.answer(r).alternatives)
      if (!alternative(alt, p, k)) return false;
    return true;
  }

 private:
  bool alternative(std::size_t alt, Partial& p, const Cont& k) {
    const auto& a = f_.alternatives()[alt];
    p.steps.push_back({DerivationStep::Kind::rule, a.rule, a.branch, a.leaf});
    const bool go = items(a, 0, p, k);
    p.steps.pop_back();
    return go;
  }

  bool items(const DerivationForest::Alternative& a, std::size_t i, Partial& p, const Cont& k) {
    if (i == a.items.size()) return k(p);
    const auto& item = a.items[i];
    if (const auto* t = std::get_if<DerivationForest::TokenItem>(&item)) {
      p.tokens.push_back(t->token);
      const bool go = items(a, i + 1, p, k);
      p.tokens.pop_back();
      return go;
    }
    if (const auto* fr = std::get_if<DerivationForest::FactRef>(&item)) {
      p.steps.push_back({DerivationStep::Kind::fact, fr->fact, std::nullopt, std::nullopt});
      const bool go = items(a, i + 1, p, k);
      p.steps.pop_back();
      return go;
    }
    // the child's steps land in pre-order; the continuation resumes our items
    return answer(std::get<DerivationForest::ChildRef>(item), p,
                  [&](Partial& q) { return items(a, i + 1, q, k); });
  }

  const DerivationForest& f_;
};

}  // namespace

std::size_t DerivationForest::for_each_derivation(const std::function<bool(const DerivedSequence&)>& visit,
                                                  std::size_t limit) const {
  std::size_t visited = 0;
  if (limit == 0) return 0;
  ForestWalker walker(*this);
  Partial p;
  auto done = [&](Partial& q) {
    ++visited;
    DerivedSequence seq{Derivation{q.steps}, q.tokens};
    return visit(seq) && visited < limit;
  };
  for (const auto& r : roots_)
    if (!walker.answer(r, p, done)) break;
  return visited;
}

DerivedSequence DerivationForest::replay(const DerivationTree& tree) const {
  DerivedSequence out;
  std::function<void(const DerivationTree&)> walk = [&](const DerivationTree& t) {
    const auto& a = alternatives_.at(t.alternative);
    out.derivation.steps.push_back({DerivationStep::Kind::rule, a.rule, a.branch, a.leaf});
    std::size_t child = 0;
    for (const auto& item : a.items) {
      if (const auto* tok = std::get_if<TokenItem>(&item)) {
        out.tokens.push_back(tok->token);
      } else if (const auto* fr = std::get_if<FactRef>(&item)) {
        out.derivation.steps.push_back({DerivationStep::Kind::fact, fr->fact, std::nullopt, std::nullopt});
      } else {
        if (child >= t.children.size()) throw std::invalid_argument("derivation tree is missing children");
        walk(t.children[child++]);
      }
    }
  };
  walk(tree);
  return out;
}

}  // namespace sdcg
