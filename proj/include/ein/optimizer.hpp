#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <unordered_set>
#include <vector>

#include <Eigen/Core>

#include "ein/datasets.hpp"
#include "ein/miner.hpp"
#include "ein/model.hpp"
#include "ein/prox.hpp"

namespace ein {

struct TrainConfig {
  // Explicit regularization path, strictly decreasing. Empty means the
  // automatic path below lambda_max.
  std::vector<double> lambdas;
  int path_length = 5;
  double path_ratio = 0.01;
  int halving_threshold = 10;

  int maxpat = 10;
  int k = 2;
  Activation activation = Activation::sigmoid;
  int ffn_depth = 1;

  double eta0 = 1.0;
  double alpha0 = 1.0;
  double gamma = 0.01;
  double step_floor = 1e-12;
  int max_iter_theta = 30;
  // Passes of the (B, b, Theta) block updates between two traversals.
  int block_rounds = 10;
  int outer_cap = 100;
  int patience = 5;
  double improvement_tol = 1e-7;
  // Rounds of bias and FFN updates with B = 0 before lambda_max is taken;
  // stops early once the loss moves by less than warmup_tol (relative).
  int warmup_rounds = 1000;
  double warmup_tol = 1e-10;

  std::uint64_t seed = 0;
  std::size_t node_cap = kDefaultNodeCap;
  bool prune = true;
  // Fully enumerate the candidate set after training to report |H|.
  bool measure_all_subgraphs = false;

  // Throws DomainError.
  void validate() const;
};

/// Patterns admitted for update, in admission order. Only ever grows.
class WorkingSet {
 public:
  bool contains(const PatternNode& node) const { return ids_.count(node.id()) != 0; }
  bool insert(PatternNode* node);
  const std::vector<PatternNode*>& members() const { return members_; }
  std::size_t size() const { return members_.size(); }

 private:
  std::vector<PatternNode*> members_;
  std::unordered_set<std::size_t> ids_;
};

/// Bound on ||g_H'|| for every supergraph H' of the pattern with this support.
double ub(const Support& support, const ForwardState<double>& state);
inline double ub(const PatternNode& node, const ForwardState<double>& state) {
  return ub(node.support(), state);
}

struct TraverseStats {
  std::size_t visited = 0;
  std::size_t added = 0;
};

/// Depth-first working-set update. A subtree is skipped when UB <= lambda
/// (unless prune is false); a pattern joins when ||g_H|| > lambda. `visit`
/// sees every node whose bound was evaluated.
TraverseStats traverse(MiningForest& forest, WorkingSet& working_set, double lambda,
                       const ForwardState<double>& state, bool prune = true,
                       const std::function<void(const PatternNode&)>& visit = {});

/// max_H ||g_H|| over the whole candidate set, by branch and bound on UB.
double lambda_max(MiningForest& forest, const ForwardState<double>& state);

/// Log-spaced path below lambda_max. The gap halves whenever the caller
/// reports that the last lambda added at least `halving_threshold` groups.
class LambdaSchedule {
 public:
  explicit LambdaSchedule(double lambda_max, int count = 5, double ratio = 0.01,
                          int halving_threshold = 10);

  std::optional<double> next();
  void report_increase(std::ptrdiff_t nonzero_increase);
  double log_step() const { return log_step_; }

 private:
  double lambda_max_;
  double floor_;
  double log_current_;
  double log_step_;
  int remaining_;
  int halving_threshold_;
};

/// Smooth part of the objective restricted to the working set.
struct GroupProblem {
  Eigen::MatrixXd features;  // n x |W|, psi of each member
  Eigen::MatrixXd weights;   // |W| x K, row r is beta of member r
  Network<double> network;
  std::vector<int> labels;   // output-unit indices

  ForwardState<double> evaluate() const { return forward(features, weights, network, labels); }
  double penalty() const;
  double objective(double lambda) const { return evaluate().loss + lambda * penalty(); }
};

struct StepResult {
  double step = 0;
  bool moved = false;
  ForwardState<double> state;  // at the parameters after the step
};

/// Simultaneous proximal step on every group with a halving backtrack on
/// L(new) <= L + <g, D> + ||D||^2 / (2 eta).
StepResult step_groups(GroupProblem& problem, const ForwardState<double>& state, double lambda,
                       double eta0, double step_floor = 1e-12);

/// Backtracking gradient step on the GML bias.
StepResult step_bias(GroupProblem& problem, const ForwardState<double>& state, double alpha0,
                     double step_floor = 1e-12);

/// `max_iter` gradient steps of size gamma on the FFN parameters.
ForwardState<double> step_theta(GroupProblem& problem, double gamma, int max_iter);

struct IterationRecord {
  std::size_t lambda_index = 0;
  int outer = 0;
  double lambda = 0;
  const WorkingSet* working_set = nullptr;
  const GroupProblem* problem = nullptr;
  double train_objective = 0;
  double valid_loss = 0;
};

struct LambdaRow {
  std::size_t index = 0;
  double lambda = 0;
  std::size_t working_set = 0;
  std::size_t nonzero = 0;
  std::size_t traverse_calls = 0;
  double traversed = 0;             // nodes whose bound was evaluated, mean per call
  std::size_t distinct_traversed = 0;
  int outer_iterations = 0;
  double train_loss = 0;            // mean cross-entropy
  double valid_loss = 0;
  double train_accuracy = 0;
  double valid_accuracy = 0;
  std::vector<double> objective_curve;
  std::vector<double> valid_curve;
};

struct TrainReport {
  std::string dataset;
  double warmup_loss = 0;  // mean cross-entropy with B = 0 after warm-up
  double lambda_max = 0;
  std::vector<LambdaRow> rows;
  std::optional<std::size_t> all_subgraphs;
  std::size_t materialized = 0;
  std::size_t best_lambda_index = 0;  // 0 = initial parameters, r + 1 = rows[r]
  double best_lambda = 0;
  int best_outer = 0;
  double best_valid_loss = 0;
  std::size_t selected = 0;
  double seconds = 0;

  double mean_working_set() const;
  double mean_traversed() const;           // mean over lambda of per-call visits
  double mean_distinct_traversed() const;  // mean over lambda of distinct visited nodes
  // 1 - mean traversed / |H|; requires all_subgraphs.
  std::optional<double> pruning_rate() const;
  std::optional<double> distinct_pruning_rate() const;
};

struct TrainResult {
  EinModel model;
  TrainReport report;
};

/// Regularization path with warm starts; returns the snapshot with the best
/// validation loss. Class ids are those of `train`; validation labels must
/// be among them.
TrainResult train(const GraphDataset& train_set, const GraphDataset& valid_set,
                  const TrainConfig& config,
                  const std::function<void(const IterationRecord&)>& on_iteration = {});

double mean_cross_entropy(const EinModel& model, std::span<const LabeledGraph> graphs,
                          std::span<const int> class_ids);
double accuracy(const EinModel& model, std::span<const LabeledGraph> graphs,
                std::span<const int> class_ids);

void write_report(std::ostream& out, const TrainReport& report);

}  // namespace ein
