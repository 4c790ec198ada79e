#include "sdcg/probability.hpp"

#include <algorithm>
#include <cmath>

namespace sdcg {

std::string to_string(const LeafHandle& h) {
  return std::visit(
      [](const auto& leaf) -> std::string {
        using T = std::decay_t<decltype(leaf)>;
        if constexpr (std::is_same_v<T, StaticLeaf>) {
          return "static(rule " + std::to_string(leaf.rule) + ")";
        } else if constexpr (std::is_same_v<T, LearnableLeaf>) {
          return "learnable(" + leaf.group + ", " + std::to_string(leaf.branch) + ")";
        } else {
          return "oracle(" + leaf.key.oracle_id + ", " + std::to_string(leaf.index + 1) + ")";
        }
      },
      h);
}

std::vector<double> softmax(std::span<const double> weights) {
  std::vector<double> out(weights.size());
  if (weights.empty()) return out;
  const double m = *std::max_element(weights.begin(), weights.end());
  double z = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) z += (out[i] = std::exp(weights[i] - m));
  for (double& p : out) p /= z;
  return out;
}

Parameters::Parameters(const std::map<std::string, std::vector<double>>& learnable_groups) {
  for (const auto& [group, weights] : learnable_groups) learnable_probs_.emplace(group, softmax(weights));
}

void Parameters::set_learnable(const std::string& group, std::span<const double> weights) {
  learnable_probs_[group] = softmax(weights);
}

void Parameters::set_oracle(const OracleKey& key, std::vector<double> probs) { oracles_[key] = std::move(probs); }

void Parameters::collect(std::span<const OracleRequest> requests, OracleSession& session) {
  for (const auto& req : requests) {
    OracleKey key = key_of(req);
    if (!oracles_.contains(key)) oracles_.emplace(std::move(key), session.query(req).probs);
  }
}

std::vector<double> Parameters::group_probs(const std::string& group, std::size_t size) const {
  auto it = learnable_probs_.find(group);
  if (it != learnable_probs_.end() && it->second.size() == size) return it->second;
  if (it != learnable_probs_.end())
    throw UnresolvedLeaf("learnable group '" + group + "' has " + std::to_string(it->second.size()) +
                         " branches, expected " + std::to_string(size));
  return std::vector<double>(size, size ? 1.0 / static_cast<double>(size) : 0.0);
}

const std::vector<double>& Parameters::oracle_probs(const OracleKey& key) const {
  auto it = oracles_.find(key);
  if (it == oracles_.end())
    throw UnresolvedLeaf("no distribution collected for oracle '" + key.oracle_id + "' prompt: " + key.prompt);
  return it->second;
}

double Parameters::value(const LeafHandle& leaf) const {
  if (const auto* s = std::get_if<StaticLeaf>(&leaf)) return s->p;
  if (const auto* l = std::get_if<LearnableLeaf>(&leaf)) {
    auto it = learnable_probs_.find(l->group);
    if (it == learnable_probs_.end()) return 1.0 / static_cast<double>(l->size);
    if (l->branch >= it->second.size()) throw UnresolvedLeaf("learnable branch out of range: " + to_string(leaf));
    return it->second[l->branch];
  }
  const auto& o = std::get<OracleLeaf>(leaf);
  const auto& probs = oracle_probs(o.key);
  if (o.index >= probs.size()) throw UnresolvedLeaf("oracle answer index out of range: " + to_string(leaf));
  return probs[o.index];
}

}  // namespace sdcg
