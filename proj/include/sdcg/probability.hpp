#pragma once

#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "sdcg/grammar.hpp"
#include "sdcg/oracle.hpp"

namespace sdcg {

struct StaticLeaf {
  std::size_t rule = 0;
  double p = 1.0;
  friend bool operator==(const StaticLeaf&, const StaticLeaf&) = default;
};

// Branch `branch` of a parameter vector of length `size`.
struct LearnableLeaf {
  std::string group;
  std::size_t branch = 0;
  std::size_t size = 0;
  friend bool operator==(const LearnableLeaf&, const LearnableLeaf&) = default;
};

// Entry `index` (0-based) of an oracle distribution.
struct OracleLeaf {
  OracleKey key;
  std::size_t index = 0;
  friend bool operator==(const OracleLeaf&, const OracleLeaf&) = default;
};

// Where one rule application's probability comes from.
using LeafHandle = std::variant<StaticLeaf, LearnableLeaf, OracleLeaf>;

std::string to_string(const LeafHandle& h);

std::vector<double> softmax(std::span<const double> weights);

class UnresolvedLeaf : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Frozen probabilities for one evaluation: learnable groups (softmaxed at
// construction) plus the oracle distributions collected for an episode.
// Groups that have never been trained read as uniform.
class Parameters {
 public:
  Parameters() = default;
  explicit Parameters(const std::map<std::string, std::vector<double>>& learnable_groups);

  void set_oracle(const OracleKey& key, std::vector<double> probs);
  // Replaces one group's weights (softmaxed here).
  void set_learnable(const std::string& group, std::span<const double> weights);
  bool has_oracle(const OracleKey& key) const { return oracles_.contains(key); }

  // Queries every request through `session` and stores the result.
  void collect(std::span<const OracleRequest> requests, OracleSession& session);

  double value(const LeafHandle& leaf) const;

  // Softmax of a learnable group, or uniform of `size` if unknown.
  std::vector<double> group_probs(const std::string& group, std::size_t size) const;
  const std::vector<double>& oracle_probs(const OracleKey& key) const;

 private:
  std::map<std::string, std::vector<double>> learnable_probs_;
  std::map<OracleKey, std::vector<double>> oracles_;
};

}  // namespace sdcg
