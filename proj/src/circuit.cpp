#include "sdcg/circuit.hpp"

#include <cmath>
#include <limits>
#include <unordered_map>

namespace sdcg {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_add(double a, double b) { return LogSumProduct::plus(a, b); }

std::string leaf_key(const LeafHandle& h) {
  if (const auto* s = std::get_if<StaticLeaf>(&h)) return "s\x1f" + std::to_string(s->rule);
  if (const auto* l = std::get_if<LearnableLeaf>(&h)) return "l\x1f" + l->group + "\x1f" + std::to_string(l->branch);
  const auto& o = std::get<OracleLeaf>(h);
  return "o\x1f" + o.key.oracle_id + "\x1f" + o.key.prompt + "\x1f" + std::to_string(o.index);
}

}  // namespace

std::size_t Circuit::edge_count() const {
  std::size_t n = 0;
  for (const auto& node : nodes_) n += node.children.size();
  return n;
}

class CircuitCompiler {
 public:
  CircuitCompiler(const DerivationForest& f, const CompileOptions& opts) : f_(f), opts_(opts) {}

  Circuit run() {
    std::vector<std::size_t> roots;
    for (const auto& r : f_.roots()) roots.push_back(answer_node(r));
    if (roots.size() == 1) {
      c_.root_ = roots[0];
    } else {
      c_.root_ = add({Circuit::Kind::or_node, std::nullopt, std::move(roots), std::nullopt});
    }
    return std::move(c_);
  }

 private:
  std::size_t add(Circuit::Node n) {
    if (c_.nodes_.size() >= opts_.max_nodes)
      throw CircuitError("circuit exceeds " + std::to_string(opts_.max_nodes) + " nodes");
    c_.nodes_.push_back(std::move(n));
    return c_.nodes_.size() - 1;
  }

  std::size_t leaf_node(const LeafHandle& h) {
    if (!opts_.share) return add({Circuit::Kind::leaf, h, {}, std::nullopt});
    const std::string key = leaf_key(h);
    if (auto it = leaves_.find(key); it != leaves_.end()) return it->second;
    const std::size_t id = add({Circuit::Kind::leaf, h, {}, std::nullopt});
    leaves_.emplace(key, id);
    return id;
  }

  std::size_t answer_node(DerivationForest::ChildRef r) {
    const std::uint64_t key = (static_cast<std::uint64_t>(r.call) << 32) | r.answer;
    if (opts_.share) {
      if (auto it = answers_.find(key); it != answers_.end()) return it->second;
    }
    std::vector<std::size_t> alts;
    for (std::size_t alt : f_.answer(r).alternatives) alts.push_back(alternative_node(alt));
    const std::size_t id =
        alts.size() == 1 ? alts[0] : add({Circuit::Kind::or_node, std::nullopt, std::move(alts), std::nullopt});
    if (opts_.share) answers_.emplace(key, id);
    return id;
  }

  std::size_t alternative_node(std::size_t alt) {
    const auto& a = f_.alternatives()[alt];
    std::vector<std::size_t> children;
    if (a.leaf) children.push_back(leaf_node(*a.leaf));
    for (const auto& item : a.items)
      if (const auto* c = std::get_if<DerivationForest::ChildRef>(&item)) children.push_back(answer_node(*c));
    return add({Circuit::Kind::and_node, std::nullopt, std::move(children), alt});
  }

  const DerivationForest& f_;
  CompileOptions opts_;
  Circuit c_;
  std::unordered_map<std::string, std::size_t> leaves_;
  std::unordered_map<std::uint64_t, std::size_t> answers_;
};

Circuit compile(const DerivationForest& forest, const CompileOptions& opts) {
  return CircuitCompiler(forest, opts).run();
}

Evaluation evaluate_sum_product(const Circuit& c, const Parameters& params) {
  const auto& nodes = c.nodes();
  Evaluation ev;
  std::vector<double> leaf_values(nodes.size(), 0.0);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].kind != Circuit::Kind::leaf) continue;
    leaf_values[i] = params.value(*nodes[i].leaf);
    if (leaf_values[i] < kLogSpaceThreshold) ev.log_space = true;
  }
  if (ev.log_space) {
    for (std::size_t i = 0; i < nodes.size(); ++i)
      if (nodes[i].kind == Circuit::Kind::leaf) leaf_values[i] = std::log(leaf_values[i]);
    ev.values = evaluate_nodes<LogSumProduct>(c, leaf_values);
  } else {
    ev.values = evaluate_nodes<SumProduct>(c, leaf_values);
  }
  if (nodes.empty()) {
    ev.probability = 0.0;
    ev.log_probability = kNegInf;
    return ev;
  }
  const double r = ev.values[c.root()];
  ev.probability = ev.log_space ? std::exp(r) : r;
  ev.log_probability = ev.log_space ? r : std::log(r);
  return ev;
}

namespace {

template <typename Choose>
DerivationTree extract_tree(const Circuit& c, std::size_t node, Choose&& choose) {
  const auto& nodes = c.nodes();
  while (nodes[node].kind == Circuit::Kind::or_node) node = nodes[node].children.at(choose(node));
  const auto& n = nodes[node];
  if (!n.alternative) throw CircuitError("circuit node " + std::to_string(node) + " is not an alternative");
  DerivationTree t;
  t.alternative = *n.alternative;
  for (std::size_t ch : n.children)
    if (nodes[ch].kind != Circuit::Kind::leaf) t.children.push_back(extract_tree(c, ch, choose));
  return t;
}

}  // namespace

std::optional<MaxDerivation> evaluate_max_product(const Circuit& c, const Parameters& params) {
  const auto& nodes = c.nodes();
  if (nodes.empty()) return std::nullopt;
  std::vector<double> best(nodes.size(), kNegInf);
  std::vector<std::size_t> arg(nodes.size(), 0);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto& n = nodes[i];
    if (n.kind == Circuit::Kind::leaf) {
      best[i] = std::log(params.value(*n.leaf));
    } else if (n.kind == Circuit::Kind::and_node) {
      double v = 0.0;
      for (std::size_t ch : n.children) v += best[ch];
      best[i] = v;
    } else {
      for (std::size_t k = 0; k < n.children.size(); ++k) {
        if (best[n.children[k]] > best[i]) {
          best[i] = best[n.children[k]];
          arg[i] = k;
        }
      }
    }
  }
  const double lp = best[c.root()];
  if (lp == kNegInf || std::isnan(lp)) return std::nullopt;
  MaxDerivation out;
  out.log_probability = lp;
  out.probability = std::exp(lp);
  out.tree = extract_tree(c, c.root(), [&](std::size_t node) { return arg[node]; });
  return out;
}

Gradients backpropagate(const Circuit& c, const Parameters& params, const Evaluation& eval, GradientScale scale) {
  const auto& nodes = c.nodes();
  const auto& val = eval.values;
  std::vector<double> leaf_grad(nodes.size(), 0.0);
  if (!nodes.empty()) {
    if (scale == GradientScale::log && eval.probability <= 0.0 && !eval.log_space)
      throw CircuitError("log gradient of a zero-probability circuit");
    if (!eval.log_space) {
      std::vector<double> adj(nodes.size(), 0.0);
      adj[c.root()] = 1.0;
      for (std::size_t i = nodes.size(); i-- > 0;) {
        const auto& n = nodes[i];
        if (adj[i] == 0.0) continue;
        if (n.kind == Circuit::Kind::or_node) {
          for (std::size_t ch : n.children) adj[ch] += adj[i];
        } else if (n.kind == Circuit::Kind::and_node) {
          // product of the siblings, without dividing by a possibly zero child
          const std::size_t k = n.children.size();
          std::vector<double> suffix(k + 1, 1.0);
          for (std::size_t j = k; j-- > 0;) suffix[j] = suffix[j + 1] * val[n.children[j]];
          double prefix = 1.0;
          for (std::size_t j = 0; j < k; ++j) {
            adj[n.children[j]] += adj[i] * prefix * suffix[j + 1];
            prefix *= val[n.children[j]];
          }
        }
      }
      const double z = scale == GradientScale::log ? eval.probability : 1.0;
      for (std::size_t i = 0; i < nodes.size(); ++i)
        if (nodes[i].kind == Circuit::Kind::leaf) leaf_grad[i] = adj[i] / z;
    } else {
      // outside values in log space: out[v] = log dZ/dv
      if (eval.log_probability == kNegInf) throw CircuitError("gradient of a zero-probability circuit");
      std::vector<double> out(nodes.size(), kNegInf);
      out[c.root()] = 0.0;
      for (std::size_t i = nodes.size(); i-- > 0;) {
        const auto& n = nodes[i];
        if (out[i] == kNegInf) continue;
        if (n.kind == Circuit::Kind::or_node) {
          for (std::size_t ch : n.children) out[ch] = log_add(out[ch], out[i]);
        } else if (n.kind == Circuit::Kind::and_node) {
          const std::size_t k = n.children.size();
          std::vector<double> suffix(k + 1, 0.0);
          for (std::size_t j = k; j-- > 0;) suffix[j] = suffix[j + 1] + val[n.children[j]];
          double prefix = 0.0;
          for (std::size_t j = 0; j < k; ++j) {
            out[n.children[j]] = log_add(out[n.children[j]], out[i] + prefix + suffix[j + 1]);
            prefix += val[n.children[j]];
          }
        }
      }
      const double shift = scale == GradientScale::log ? eval.log_probability : 0.0;
      for (std::size_t i = 0; i < nodes.size(); ++i)
        if (nodes[i].kind == Circuit::Kind::leaf) leaf_grad[i] = std::exp(out[i] - shift);
    }
  }

  Gradients g;
  std::unordered_map<std::string, std::size_t> seen;
  std::map<std::string, std::vector<double>> group_prob_grad;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].kind != Circuit::Kind::leaf) continue;
    const LeafHandle& h = *nodes[i].leaf;
    const std::string key = leaf_key(h);
    if (auto it = seen.find(key); it != seen.end()) {
      g.leaves[it->second].second += leaf_grad[i];
    } else {
      seen.emplace(key, g.leaves.size());
      g.leaves.emplace_back(h, leaf_grad[i]);
    }
    if (const auto* s = std::get_if<StaticLeaf>(&h)) {
      g.static_rules[s->rule] += leaf_grad[i];
    } else if (const auto* l = std::get_if<LearnableLeaf>(&h)) {
      auto& v = group_prob_grad[l->group];
      if (v.size() < l->size) v.resize(l->size, 0.0);
      v.at(l->branch) += leaf_grad[i];
    } else {
      const auto& o = std::get<OracleLeaf>(h);
      auto& v = g.oracle[o.key];
      if (v.empty()) v.assign(params.oracle_probs(o.key).size(), 0.0);
      v.at(o.index) += leaf_grad[i];
    }
  }
  for (auto& [group, gp] : group_prob_grad) {
    const auto p = params.group_probs(group, gp.size());
    double dot = 0.0;
    for (std::size_t j = 0; j < gp.size(); ++j) dot += gp[j] * p[j];
    std::vector<double> gw(gp.size());
    for (std::size_t j = 0; j < gp.size(); ++j) gw[j] = p[j] * (gp[j] - dot);
    g.learnable.emplace(group, std::move(gw));
  }
  return g;
}

DerivationTree sample_derivation(const Circuit& c, const Evaluation& eval, std::mt19937_64& rng) {
  if (c.nodes().empty() || (eval.probability <= 0.0 && !eval.log_space))
    throw CircuitError("cannot sample from a zero-probability circuit");
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  return extract_tree(c, c.root(), [&](std::size_t node) {
    const auto& ch = c.nodes()[node].children;
    std::vector<double> w(ch.size());
    double total = 0.0;
    if (eval.log_space) {
      double m = kNegInf;
      for (std::size_t k : ch) m = std::max(m, eval.values[k]);
      for (std::size_t k = 0; k < ch.size(); ++k) total += (w[k] = std::exp(eval.values[ch[k]] - m));
    } else {
      for (std::size_t k = 0; k < ch.size(); ++k) total += (w[k] = eval.values[ch[k]]);
    }
    double u = unif(rng) * total;
    for (std::size_t k = 0; k < ch.size(); ++k) {
      if (u < w[k]) return k;
      u -= w[k];
    }
    for (std::size_t k = ch.size(); k-- > 0;)
      if (w[k] > 0) return k;
    return std::size_t{0};
  });
}

}  // namespace sdcg
