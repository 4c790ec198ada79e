#pragma once

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "sdcg/grammar.hpp"
#include "sdcg/oracle.hpp"
#include "sdcg/probability.hpp"

namespace sdcg {

// A goal atom to derive, with the terminal sequence it must produce
// (Known) or nullopt (Unknown: every derivable sequence).
struct Goal {
  Atom atom;
  std::optional<std::vector<std::string>> tokens;
};

// One rule application or fact lookup. Rule steps carry the oracle/learnable
// branch they took and the probability handle of that branch.
struct DerivationStep {
  enum class Kind { rule, fact };
  Kind kind = Kind::rule;
  std::size_t index = 0;
  std::optional<std::size_t> branch;
  std::optional<LeafHandle> leaf;
  friend bool operator==(const DerivationStep&, const DerivationStep&) = default;
};

// Steps in leftmost (pre-order) application order.
struct Derivation {
  std::vector<DerivationStep> steps;

  std::vector<LeafHandle> leaves() const;
  // Product of leaf probabilities, rule repetitions included.
  double probability(const Parameters& params) const;
  friend bool operator==(const Derivation&, const Derivation&) = default;
};

struct DerivedSequence {
  Derivation derivation;
  std::vector<std::string> tokens;
  friend bool operator==(const DerivedSequence&, const DerivedSequence&) = default;
};

class ResolutionError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ResolveOptions {
  bool tabling = true;
  // Rule applications along one derivation (SLD) or nested calls (forest).
  std::size_t max_depth = 512;
};

// Which alternative was taken at every node of a derivation, children in
// body order.
struct DerivationTree {
  std::size_t alternative = 0;
  std::vector<DerivationTree> children;
};

// Shared derivation structure produced by tabled resolution. Each call is a
// (goal variant, start position) pair proved once; its answers are the
// distinct (instantiated atom, end position) results, each with the list of
// alternatives proving it.
class DerivationForest {
 public:
  struct ChildRef {
    std::size_t call = 0;
    std::size_t answer = 0;
    friend bool operator==(const ChildRef&, const ChildRef&) = default;
  };
  struct FactRef {
    std::size_t fact = 0;
  };
  struct TokenItem {
    std::string token;
  };
  using Item = std::variant<TokenItem, FactRef, ChildRef>;

  struct Alternative {
    std::size_t rule = 0;
    std::optional<std::size_t> branch;
    std::optional<LeafHandle> leaf;
    std::vector<Item> items;
  };
  struct Answer {
    Atom atom;
    std::size_t end = 0;
    std::vector<std::size_t> alternatives;
  };
  struct Call {
    Atom atom;
    std::size_t start = 0;
    std::vector<Answer> answers;
  };

  const Goal& goal() const noexcept { return goal_; }
  const std::vector<Call>& calls() const noexcept { return calls_; }
  const std::vector<Alternative>& alternatives() const noexcept { return alternatives_; }
  // Answers of the goal call that cover the whole token sequence (Known) or
  // all of them (Unknown).
  const std::vector<ChildRef>& roots() const noexcept { return roots_; }
  // Oracle requests met during resolution, deduplicated, in first-use order.
  const std::vector<OracleRequest>& requests() const noexcept { return requests_; }

  bool empty() const noexcept { return roots_.empty(); }
  // Number of derivations (saturates at +inf for huge forests).
  double count_derivations() const;

  const Answer& answer(ChildRef r) const { return calls_.at(r.call).answers.at(r.answer); }

  // Visits derivations in first-rule-order; the visitor returns false to stop.
  // Returns the number visited.
  std::size_t for_each_derivation(const std::function<bool(const DerivedSequence&)>& visit,
                                  std::size_t limit = static_cast<std::size_t>(-1)) const;

  // Rebuilds steps and tokens of the derivation selected by `tree`.
  DerivedSequence replay(const DerivationTree& tree) const;

 private:
  friend class ForestBuilder;
  Goal goal_;
  std::vector<Call> calls_;
  std::vector<Alternative> alternatives_;
  std::vector<ChildRef> roots_;
  std::vector<OracleRequest> requests_;
};

// Tabled resolution of `goal`. Failing branches are dropped; oracle
// probabilities are not fetched, only recorded as leaf handles.
DerivationForest derive(const Goal& goal, const Grammar& g, const ResolveOptions& opts = {});

struct EnumerationResult {
  std::vector<DerivedSequence> derivations;
  bool truncated = false;
};

// Plain depth-first SLD resolution without tabling; the reference the forest
// is tested against.
EnumerationResult enumerate_derivations(const Goal& goal, const Grammar& g, std::size_t max,
                                        const ResolveOptions& opts = {});

// Probability of a branch, evaluated lazily while searching.
using LeafProbability = std::function<double(const LeafHandle&, const OracleRequest*)>;

// Left-to-right search that tries the branches of every stochastic choice in
// decreasing probability (ties in rule order) and returns the first complete
// derivation. Backtracks only when unification fails.
std::optional<DerivedSequence> greedy_derive(const Goal& goal, const Grammar& g, const LeafProbability& prob,
                                             const ResolveOptions& opts = {});

}  // namespace sdcg
