#pragma once

#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

#include "sdcg/probability.hpp"
#include "sdcg/resolver.hpp"

namespace sdcg {

// AND-OR circuit over probability leaves. Nodes are stored children-first, so
// a forward pass is a single sweep over `nodes`.
// 
// An And node with `alternative` set stands for one forest alternative: its
// first child is the leaf (if the branch has one), the rest are the answer
// nodes of its nonterminal items in body order. An And without children is 1,
// an Or without children is 0.
class Circuit {
 public:
  enum class Kind { leaf, and_node, or_node };
  struct Node {
    Kind kind = Kind::and_node;
    std::optional<LeafHandle> leaf;
    std::vector<std::size_t> children;
    std::optional<std::size_t> alternative;
  };

  const std::vector<Node>& nodes() const noexcept { return nodes_; }
  std::size_t root() const noexcept { return root_; }
  std::size_t size() const noexcept { return nodes_.size(); }
  std::size_t edge_count() const;

 private:
  friend class CircuitCompiler;
  std::vector<Node> nodes_;
  std::size_t root_ = 0;
};

class CircuitError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CompileOptions {
  // Share tabled answers and leaves (a DAG). Off expands every use into its
  // own subtree; only meant for small forests.
  bool share = true;
  std::size_t max_nodes = 5'000'000;
};

Circuit compile(const DerivationForest& forest, const CompileOptions& opts = {});

// Semirings the circuit is evaluated under. Log semirings carry natural logs.
struct SumProduct {
  static double zero() { return 0.0; }
  static double one() { return 1.0; }
  static double plus(double a, double b) { return a + b; }
  static double times(double a, double b) { return a * b; }
};

struct MaxProduct {
  static double zero() { return 0.0; }
  static double one() { return 1.0; }
  static double plus(double a, double b) { return a < b ? b : a; }
  static double times(double a, double b) { return a * b; }
};

struct LogSumProduct {
  static double zero() { return -std::numeric_limits<double>::infinity(); }
  static double one() { return 0.0; }
  static double plus(double a, double b) {
    if (a == zero()) return b;
    if (b == zero()) return a;
    const double m = a < b ? b : a;
    return m + std::log1p(std::exp(-std::abs(a - b)));
  }
  static double times(double a, double b) { return a + b; }
};

// Bottom-up values of every node; `leaf_values` is indexed by node and read
// only at leaves.
template <typename S>
std::vector<double> evaluate_nodes(const Circuit& c, const std::vector<double>& leaf_values) {
  const auto& nodes = c.nodes();
  std::vector<double> v(nodes.size(), S::zero());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto& n = nodes[i];
    if (n.kind == Circuit::Kind::leaf) {
      v[i] = leaf_values[i];
    } else if (n.kind == Circuit::Kind::and_node) {
      double acc = S::one();
      for (std::size_t ch : n.children) acc = S::times(acc, v[ch]);
      v[i] = acc;
    } else {
      double acc = S::zero();
      for (std::size_t ch : n.children) acc = S::plus(acc, v[ch]);
      v[i] = acc;
    }
  }
  return v;
}

// Below this a leaf value switches evaluation to log space.
inline constexpr double kLogSpaceThreshold = 1e-12;

struct Evaluation {
  double probability = 0.0;
  double log_probability = 0.0;
  bool log_space = false;
  // Per-node values: linear, or natural logs when `log_space`.
  std::vector<double> values;
};

Evaluation evaluate_sum_product(const Circuit& c, const Parameters& params);

struct MaxDerivation {
  double probability = 0.0;
  double log_probability = 0.0;
  DerivationTree tree;
};

// Most probable derivation; ties go to the first alternative in rule order.
// nullopt when the circuit has value 0.
std::optional<MaxDerivation> evaluate_max_product(const Circuit& c, const Parameters& params);

enum class GradientScale { linear, log };

// Derivatives of the root value (or of its log) with respect to the
// parameters. Learnable entries are already chained through the softmax, so
// they are derivatives with respect to the raw weights.
struct Gradients {
  std::map<std::string, std::vector<double>> learnable;
  std::map<OracleKey, std::vector<double>> oracle;
  std::map<std::size_t, double> static_rules;
  // Derivative with respect to each distinct leaf value.
  std::vector<std::pair<LeafHandle, double>> leaves;
};

Gradients backpropagate(const Circuit& c, const Parameters& params, const Evaluation& eval,
                        GradientScale scale = GradientScale::log);

// Draws one derivation with probability proportional to its share of the
// root value.
DerivationTree sample_derivation(const Circuit& c, const Evaluation& eval, std::mt19937_64& rng);

}  // namespace sdcg
