#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "sdcg/circuit.hpp"
#include "sdcg/grammar.hpp"
#include "sdcg/oracle.hpp"
#include "sdcg/resolver.hpp"

namespace sdcg {

struct TrainingExample {
  Goal goal;  // tokens must be Known
  double target = 1.0;
  std::string id;  // used in error messages
};

// An example whose goal cannot be derived: the grammar and the ground truth
// disagree.
class TrainingDataError : public std::runtime_error {
 public:
  TrainingDataError(std::string example_id, const std::string& message)
      : std::runtime_error(message), example_id_(std::move(example_id)) {}
  const std::string& example_id() const noexcept { return example_id_; }

 private:
  std::string example_id_;
};

struct LossResult {
  double loss = 0.0;
  double probability = 0.0;
  // d loss / d parameters (learnable entries are per raw weight).
  Gradients gradients;
};

// Cross-entropy against the target; -log P for target 1. Oracle
// distributions needed by the circuit must already be in `params`.
LossResult loss_nll(const TrainingExample& example, const Grammar& g, const Parameters& params,
                    const ResolveOptions& opts = {});

enum class OptimizerKind { gradient_descent, adam };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::adam;
  double learning_rate = 1e-3;
  std::size_t batch_size = 0;  // 0: full batch
  std::size_t epochs = 10;
  std::uint64_t seed = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double mean_loss = 0.0;
};

class TrainingDiverged : public std::runtime_error {
 public:
  TrainingDiverged(const std::string& message, std::vector<EpochRecord> trace)
      : std::runtime_error(message), trace_(std::move(trace)) {}
  const std::vector<EpochRecord>& trace() const noexcept { return trace_; }

 private:
  std::vector<EpochRecord> trace_;
};

struct FitOptions {
  // Supplies oracle distributions (frozen during training). May be null when
  // the grammar has no oracle rules.
  OracleSession* oracles = nullptr;
  // Underivable examples are set aside instead of aborting the run.
  bool quarantine = true;
  // Called after every parameter update with the updated grammar.
  std::function<void(const Grammar&, std::size_t step)> on_step;
  // Line-delimited {"epoch", "mean_loss"} records.
  std::ostream* trace_out = nullptr;
  ResolveOptions resolve;
};

struct FitResult {
  std::vector<EpochRecord> trace;
  std::vector<std::string> quarantined;
  std::size_t steps = 0;
};

// Gradient training of the learnable groups of `g` (updated in place).
FitResult fit(std::span<const TrainingExample> dataset, Grammar& g, const OptimizerConfig& cfg,
              const FitOptions& opts = {});

struct ClosedFormResult {
  // Branch counts per learnable group.
  std::map<std::string, std::vector<double>> counts;
  // Mean NLL of the dataset at the closed-form optimum.
  double mean_nll = 0.0;
  std::vector<std::string> quarantined;
};

// Supervised fast path: when every example has exactly one derivation, the
// maximum-likelihood branch probabilities of each group are its empirical
// branch frequencies. Sets the weights of `g` to their logs (floor -1000 for
// unseen branches). Throws TrainingDataError on an ambiguous example.
ClosedFormResult fit_closed_form(std::span<const TrainingExample> dataset, Grammar& g,
                                 OracleSession* oracles = nullptr, const ResolveOptions& opts = {});

// Rewrites every oracle rule into a learnable rule over the same domain, so
// its branch probabilities are trained in-process. The group is the oracle id.
Grammar to_learnable(const Grammar& g);

// Learned distributions of the domain-form groups ("group|prompt"), ready to
// be served by a TableOracle under the group's name as oracle id.
void export_learned_table(const Grammar& g, TableOracle& table);

// Observed oracle choices on uniquely derivable examples, per oracle id,
// as /train items (1-based target indices).
std::map<std::string, std::vector<TrainItem>> supervised_items(std::span<const TrainingExample> dataset,
                                                               const Grammar& g, const ResolveOptions& opts = {});

// Sends the supervised items to the oracle handles. Returns the reported
// loss per oracle id (handles that cannot learn are skipped).
std::map<std::string, double> train_oracles(const std::map<std::string, std::vector<TrainItem>>& items,
                                            const OracleRegistry& registry);

}  // namespace sdcg
