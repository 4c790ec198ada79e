#include "sdcg/circuit.hpp"
#include "sdcg/sql.hpp"

#include <iomanip>
#include <sstream>

namespace sdcg::sql {

namespace {

Parameters gather(const DerivationForest& f, const Grammar& g, OracleSession* oracles) {
  Parameters p(g.learnable_groups);
  if (!f.requests().empty()) {
    if (!oracles) throw OracleError("grammar uses oracle '" + f.requests()[0].oracle_id + "' but no oracle is configured");
    p.collect(f.requests(), *oracles);
  }
  return p;
}

}  // namespace

std::string render_sql(const std::vector<std::string>& semantic_tokens, const Schema& s,
                       const std::vector<std::string>& gold_values) {
  auto filled = fill_values(semantic_tokens, gold_values);
  return detokenize(map_semantic_names(filled, s, NameDirection::to_original));
}

GenerationResult generate(const std::string& nl, const Schema& s, const Grammar& g, OracleSession* oracles,
                          const GenerateOptions& opts) {
  const Goal goal{query_atom(nl, s), std::nullopt};
  GenerationResult out;
  out.mode = opts.mode;
  if (opts.mode == Mode::exact) {
    DerivationForest f = derive(goal, g, opts.resolve);
    const double count = f.count_derivations();
    if (count > opts.exact_budget)
    {
      std::ostringstream msg;
      msg << std::fixed << std::setprecision(0) << "exact inference needs " << count
          << " derivations, over the budget of " << opts.exact_budget << "; use greedy mode";
      throw GenerationError(msg.str());
    }
    const Parameters params = gather(f, g, oracles);
    const Circuit c = compile(f);
    auto best = evaluate_max_product(c, params);
    if (!best) throw GenerationError("no derivation for '" + nl + "' in database " + s.db_name);
    DerivedSequence d = f.replay(best->tree);
    out.probability = best->probability;
    out.tokens = std::move(d.tokens);
    out.derivation = std::move(d.derivation);
  } else {
    Parameters params(g.learnable_groups);
    LeafProbability prob = [&](const LeafHandle& leaf, const OracleRequest* req) -> double {
      if (const auto* o = std::get_if<OracleLeaf>(&leaf)) {
        if (!params.has_oracle(o->key)) {
          if (!oracles) throw OracleError("grammar uses oracle '" + o->key.oracle_id + "' but no oracle is configured");
          params.set_oracle(o->key, oracles->query(*req).probs);
        }
      }
      return params.value(leaf);
    };
    auto d = greedy_derive(goal, g, prob, opts.resolve);
    if (!d) throw GenerationError("no derivation for '" + nl + "' in database " + s.db_name);
    out.probability = d->derivation.probability(params);
    out.tokens = std::move(d->tokens);
    out.derivation = std::move(d->derivation);
  }
  out.sql = render_sql(out.tokens, s, opts.gold_values);
  return out;
}

std::optional<Goal> known_goal(const std::string& nl, const Schema& s, const std::string& sql) {
  std::vector<std::string> tokens;
  try {
    tokens = tokenize(sql);
    abstract_values(tokens);
    tokens = map_semantic_names(tokens, s, NameDirection::to_semantic);
  } catch (const SqlSyntaxError&) {
    return std::nullopt;
  } catch (const MappingError&) {
    return std::nullopt;
  }
  return Goal{query_atom(nl, s), std::move(tokens)};
}

double score(const std::string& nl, const Schema& s, const Grammar& g, const std::string& sql, OracleSession* oracles,
             const ResolveOptions& resolve) {
  auto goal = known_goal(nl, s, sql);
  if (!goal) return 0.0;
  DerivationForest f = derive(*goal, g, resolve);
  if (f.empty()) return 0.0;
  return evaluate_sum_product(compile(f), gather(f, g, oracles)).probability;
}

}  // namespace sdcg::sql
