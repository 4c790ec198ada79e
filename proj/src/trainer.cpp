#include "sdcg/trainer.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace sdcg {

namespace {

void scale(Gradients& g, double factor) {
  for (auto& [k, v] : g.learnable)
    for (double& x : v) x *= factor;
  for (auto& [k, v] : g.oracle)
    for (double& x : v) x *= factor;
  for (auto& [k, x] : g.static_rules) x *= factor;
  for (auto& [h, x] : g.leaves) x *= factor;
}

std::string describe(const TrainingExample& ex) {
  std::string seq;
  if (ex.goal.tokens)
    for (const auto& t : *ex.goal.tokens) seq += (seq.empty() ? "" : " ") + t;
  return "example '" + ex.id + "' (" + ex.goal.atom.to_string() + " -> " + seq + ")";
}

LossResult circuit_loss(const Circuit& c, const Parameters& params, double target) {
  LossResult r;
  const Evaluation ev = evaluate_sum_product(c, params);
  r.probability = ev.probability;
  if (target == 1.0) {
    r.loss = -ev.log_probability;
  } else {
    r.loss = -(target * ev.log_probability + (1 - target) * std::log1p(-ev.probability));
  }
  r.gradients = backpropagate(c, params, ev, GradientScale::log);
  // d loss / d log P
  const double factor = -target + (1 - target) * ev.probability / (1 - ev.probability);
  scale(r.gradients, target == 1.0 ? -1.0 : factor);
  return r;
}

struct Prepared {
  std::size_t index;
  Circuit circuit;
};

DerivationForest derive_example(const TrainingExample& ex, const Grammar& g, const ResolveOptions& opts) {
  if (!ex.goal.tokens) throw TrainingDataError(ex.id, describe(ex) + " has no token sequence");
  return derive(ex.goal, g, opts);
}

void ensure_groups(Grammar& g, const Circuit& c) {
  for (const auto& n : c.nodes()) {
    if (n.kind != Circuit::Kind::leaf) continue;
    const auto* l = std::get_if<LearnableLeaf>(&*n.leaf);
    if (!l) continue;
    auto [it, inserted] = g.learnable_groups.try_emplace(l->group, std::vector<double>(l->size, 0.0));
    if (!inserted && it->second.size() != l->size)
      throw std::invalid_argument("learnable group '" + l->group + "' has " + std::to_string(it->second.size()) +
                                  " weights but is used with " + std::to_string(l->size) + " branches");
  }
}

void collect_oracles(const DerivationForest& f, OracleSession* session, Parameters& params) {
  if (f.requests().empty()) return;
  if (!session) throw OracleError("grammar uses oracle '" + f.requests()[0].oracle_id + "' but no oracle is configured");
  params.collect(f.requests(), *session);
}

}  // namespace

LossResult loss_nll(const TrainingExample& example, const Grammar& g, const Parameters& params,
                    const ResolveOptions& opts) {
  if (!(example.target > 0.0 && example.target <= 1.0))
    throw TrainingDataError(example.id, describe(example) + " has target outside (0, 1]");
  auto f = derive_example(example, g, opts);
  if (f.empty()) throw TrainingDataError(example.id, describe(example) + " has no derivation under the grammar");
  return circuit_loss(compile(f), params, example.target);
}

FitResult fit(std::span<const TrainingExample> dataset, Grammar& g, const OptimizerConfig& cfg,
              const FitOptions& opts) {
  if (dataset.empty()) throw std::invalid_argument("fit: empty dataset");
  if (!(cfg.learning_rate > 0)) throw std::invalid_argument("fit: learning rate must be positive");

  FitResult result;
  Parameters params(g.learnable_groups);
  std::vector<Prepared> prepared;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto& ex = dataset[i];
    if (!(ex.target > 0.0 && ex.target <= 1.0))
      throw TrainingDataError(ex.id, describe(ex) + " has target outside (0, 1]");
    auto f = derive_example(ex, g, opts.resolve);
    if (f.empty()) {
      if (!opts.quarantine) throw TrainingDataError(ex.id, describe(ex) + " has no derivation under the grammar");
      result.quarantined.push_back(ex.id);
      continue;
    }
    collect_oracles(f, opts.oracles, params);
    prepared.push_back({i, compile(f)});
    ensure_groups(g, prepared.back().circuit);
  }
  if (prepared.empty()) throw TrainingDataError("", "every training example was quarantined");
  for (const auto& [group, w] : g.learnable_groups) params.set_learnable(group, w);

  std::map<std::string, std::vector<double>> m1, m2;
  std::mt19937_64 rng(cfg.seed);
  const std::size_t batch = cfg.batch_size == 0 ? prepared.size() : std::min(cfg.batch_size, prepared.size());
  std::vector<std::size_t> order(prepared.size());
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (batch < prepared.size()) std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t end = std::min(order.size(), start + batch);
      std::map<std::string, std::vector<double>> grad;
      for (std::size_t k = start; k < end; ++k) {
        const auto& p = prepared[order[k]];
        LossResult r = circuit_loss(p.circuit, params, dataset[p.index].target);
        if (!std::isfinite(r.loss)) {
          result.trace.push_back({epoch, r.loss});
          throw TrainingDiverged("loss became non-finite on " + describe(dataset[p.index]) + " in epoch " +
                                     std::to_string(epoch),
                                 result.trace);
        }
        epoch_loss += r.loss;
        for (auto& [group, v] : r.gradients.learnable) {
          auto& acc = grad[group];
          if (acc.empty()) acc.assign(v.size(), 0.0);
          for (std::size_t j = 0; j < v.size(); ++j) acc[j] += v[j];
        }
      }
      const double n = static_cast<double>(end - start);
      ++result.steps;
      for (auto& [group, gv] : grad) {
        auto& w = g.learnable_groups.at(group);
        if (cfg.kind == OptimizerKind::adam) {
          auto& a = m1[group];
          auto& b = m2[group];
          if (a.empty()) a.assign(w.size(), 0.0), b.assign(w.size(), 0.0);
          const double t = static_cast<double>(result.steps);
          for (std::size_t j = 0; j < w.size(); ++j) {
            const double gj = gv[j] / n;
            a[j] = cfg.beta1 * a[j] + (1 - cfg.beta1) * gj;
            b[j] = cfg.beta2 * b[j] + (1 - cfg.beta2) * gj * gj;
            const double mh = a[j] / (1 - std::pow(cfg.beta1, t));
            const double vh = b[j] / (1 - std::pow(cfg.beta2, t));
            w[j] -= cfg.learning_rate * mh / (std::sqrt(vh) + cfg.epsilon);
          }
        } else {
          for (std::size_t j = 0; j < w.size(); ++j) w[j] -= cfg.learning_rate * gv[j] / n;
        }
        params.set_learnable(group, w);
      }
      if (opts.on_step) opts.on_step(g, result.steps);
    }
    const EpochRecord rec{epoch, epoch_loss / static_cast<double>(prepared.size())};
    result.trace.push_back(rec);
    if (!std::isfinite(rec.mean_loss))
      throw TrainingDiverged("mean loss became non-finite in epoch " + std::to_string(epoch), result.trace);
    if (opts.trace_out)
      *opts.trace_out << nlohmann::json{{"epoch", rec.epoch}, {"mean_loss", rec.mean_loss}}.dump() << '\n';
  }
  return result;
}

ClosedFormResult fit_closed_form(std::span<const TrainingExample> dataset, Grammar& g, OracleSession* oracles,
                                 const ResolveOptions& opts) {
  ClosedFormResult out;
  std::vector<std::pair<std::size_t, Circuit>> kept;
  Parameters params;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto& ex = dataset[i];
    auto f = derive_example(ex, g, opts);
    if (f.empty()) {
      out.quarantined.push_back(ex.id);
      continue;
    }
    if (f.count_derivations() != 1.0)
      throw TrainingDataError(ex.id, describe(ex) + " has " + std::to_string(f.count_derivations()) +
                                         " derivations; the closed form needs exactly one");
    collect_oracles(f, oracles, params);
    f.for_each_derivation([&](const DerivedSequence& d) {
      for (const auto& leaf : d.derivation.leaves()) {
        const auto* l = std::get_if<LearnableLeaf>(&leaf);
        if (!l) continue;
        auto& c = out.counts[l->group];
        if (c.size() < l->size) c.resize(l->size, 0.0);
        c[l->branch] += 1.0;
      }
      return true;
    });
    kept.emplace_back(i, compile(f));
  }
  for (const auto& [group, c] : out.counts) {
    const double total = std::accumulate(c.begin(), c.end(), 0.0);
    std::vector<double> w(c.size());
    for (std::size_t j = 0; j < c.size(); ++j) w[j] = c[j] > 0 ? std::log(c[j] / total) : -1000.0;
    g.learnable_groups[group] = w;
  }
  for (const auto& [group, w] : g.learnable_groups) params.set_learnable(group, w);
  double nll = 0.0;
  for (const auto& [i, c] : kept) nll += -evaluate_sum_product(c, params).log_probability;
  out.mean_nll = kept.empty() ? 0.0 : nll / static_cast<double>(kept.size());
  return out;
}

Grammar to_learnable(const Grammar& g) {
  Grammar out;
  for (const auto& f : g.facts()) out.add_fact(f);
  for (GrammarRule r : g.rules()) {
    if (const auto* o = std::get_if<prob::Oracle>(&r.prob)) r.prob = prob::Learnable{o->oracle_id, o->domain, 0};
    out.add_rule(std::move(r));
  }
  for (const auto& [group, w] : g.learnable_groups) out.learnable_groups[group] = w;
  return out;
}

void export_learned_table(const Grammar& g, TableOracle& table) {
  for (const auto& [group, w] : g.learnable_groups) {
    const auto bar = group.find('|');
    if (bar == std::string::npos) continue;
    table.set_probs(group.substr(0, bar), group.substr(bar + 1), softmax(w));
  }
}

std::map<std::string, std::vector<TrainItem>> supervised_items(std::span<const TrainingExample> dataset,
                                                               const Grammar& g, const ResolveOptions& opts) {
  std::map<std::string, std::vector<TrainItem>> out;
  for (const auto& ex : dataset) {
    auto f = derive_example(ex, g, opts);
    if (f.count_derivations() != 1.0) continue;
    f.for_each_derivation([&](const DerivedSequence& d) {
      for (const auto& leaf : d.derivation.leaves())
        if (const auto* o = std::get_if<OracleLeaf>(&leaf))
          out[o->key.oracle_id].push_back({o->key.prompt, o->index + 1});
      return true;
    });
  }
  return out;
}

std::map<std::string, double> train_oracles(const std::map<std::string, std::vector<TrainItem>>& items,
                                            const OracleRegistry& registry) {
  std::map<std::string, double> out;
  for (const auto& [id, batch] : items)
    if (auto loss = registry.handle_for(id).train(id, batch)) out[id] = *loss;
  return out;
}

}  // namespace sdcg
