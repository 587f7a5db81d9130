#include "ein/optimizer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <unordered_set>

#include "ein/errors.hpp"

namespace ein {

void TrainConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw DomainError(what);
  };
  require(maxpat >= 1, "maxpat must be >= 1");
  require(k >= 1, "K must be >= 1");
  require(ffn_depth >= 1, "FFN depth must be >= 1");
  require(eta0 > 0 && alpha0 > 0 && gamma > 0, "step sizes must be positive");
  require(step_floor > 0, "step floor must be positive");
  require(max_iter_theta >= 0, "max_iter_theta must be >= 0");
  require(block_rounds >= 1, "block_rounds must be >= 1");
  require(warmup_rounds >= 0 && warmup_tol >= 0, "warm-up settings must be non-negative");
  require(outer_cap >= 1, "outer iteration cap must be >= 1");
  require(patience >= 1, "patience must be >= 1");
  require(path_length >= 1, "path length must be >= 1");
  require(path_ratio > 0 && path_ratio < 1, "path ratio must lie in (0, 1)");
  require(node_cap >= 1, "node cap must be >= 1");
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    require(lambdas[i] > 0, "lambda values must be positive");
    require(i == 0 || lambdas[i] < lambdas[i - 1], "lambda values must be strictly decreasing");
  }
}

bool WorkingSet::insert(PatternNode* node) {
  if (!ids_.insert(node->id()).second) return false;
  members_.push_back(node);
  return true;
}

double ub(const Support& support, const ForwardState<double>& state) {
  const Eigen::Index width = state.delta.cols();
  Eigen::VectorXd positive = Eigen::VectorXd::Zero(width);
  Eigen::VectorXd negative = Eigen::VectorXd::Zero(width);
  for (auto i = support.find_first(); i != Support::npos; i = support.find_next(i)) {
    for (Eigen::Index k = 0; k < width; ++k) {
      const double d = state.delta(static_cast<Eigen::Index>(i), k);
      if (d > 0) {
        positive(k) += d;
      } else if (d < 0) {
        negative(k) += d;
      }
    }
  }
  return positive.cwiseAbs().cwiseMax(negative.cwiseAbs()).norm();
}

TraverseStats traverse(MiningForest& forest, WorkingSet& working_set, double lambda,
                       const ForwardState<double>& state, bool prune,
                       const std::function<void(const PatternNode&)>& visit) {
  TraverseStats stats;
  const Eigen::Index width = state.delta.cols();
  const auto descend = [&](auto&& self, PatternNode& node) -> void {
    ++stats.visited;
    if (visit) visit(node);
    if (prune && ub(node, state) <= lambda) return;
    if (!working_set.contains(node) && grad_group(state, node.support()).norm() > lambda) {
      node.beta = Eigen::VectorXd::Zero(width);
      working_set.insert(&node);
      ++stats.added;
    }
    for (PatternNode* child : forest.expand(node)) self(self, *child);
  };
  for (PatternNode* root : forest.roots()) descend(descend, *root);
  return stats;
}

double lambda_max(MiningForest& forest, const ForwardState<double>& state) {
  double best = 0;
  const auto descend = [&](auto&& self, PatternNode& node) -> void {
    if (ub(node, state) <= best) return;
    best = std::max(best, grad_group(state, node.support()).norm());
    for (PatternNode* child : forest.expand(node)) self(self, *child);
  };
  for (PatternNode* root : forest.roots()) descend(descend, *root);
  return best;
}

LambdaSchedule::LambdaSchedule(double lambda_max, int count, double ratio, int halving_threshold)
    : lambda_max_(lambda_max),
      floor_(ratio * lambda_max),
      log_current_(lambda_max > 0 ? std::log(lambda_max) : 0.0),
      log_step_(-std::log(ratio) / count),
      remaining_(lambda_max > 0 ? count : 0),
      halving_threshold_(halving_threshold) {}

std::optional<double> LambdaSchedule::next() {
  if (remaining_ <= 0) return std::nullopt;
  const double log_next = log_current_ - log_step_;
  const double lambda = std::exp(log_next);
  if (lambda < floor_ * (1.0 - 1e-12)) {
    remaining_ = 0;
    return std::nullopt;
  }
  log_current_ = log_next;
  --remaining_;
  return lambda;
}

void LambdaSchedule::report_increase(std::ptrdiff_t nonzero_increase) {
  if (nonzero_increase >= halving_threshold_) log_step_ *= 0.5;
}

double GroupProblem::penalty() const {
  double total = 0;
  for (Eigen::Index r = 0; r < weights.rows(); ++r) total += weights.row(r).norm();
  return total;
}

namespace {

// Halving backtrack shared by the group and bias steps. `propose(step)`
// writes the candidate into the problem and returns the change D.
template <typename Propose, typename Restore>
StepResult backtrack(GroupProblem& problem, const ForwardState<double>& state,
                     const Eigen::MatrixXd& gradient, double step0, double floor, Propose&& propose,
                     Restore&& restore) {
  for (double step = step0; step >= floor; step *= 0.5) {
    const Eigen::MatrixXd change = propose(step);
    try {
      ForwardState<double> next = problem.evaluate();
      const double model =
          state.loss + gradient.cwiseProduct(change).sum() + change.squaredNorm() / (2.0 * step);
      if (next.loss <= model) return {step, !change.isZero(0.0), std::move(next)};
    } catch (const NumericError&) {
    }
  }
  restore();
  return {0.0, false, state};
}

}  // namespace

StepResult step_groups(GroupProblem& problem, const ForwardState<double>& state, double lambda,
                       double eta0, double step_floor) {
  if (problem.weights.rows() == 0) return {eta0, false, state};
  const Eigen::MatrixXd gradient = problem.features.transpose() * state.delta;
  const Eigen::MatrixXd start = problem.weights;
  return backtrack(
      problem, state, gradient, eta0, step_floor,
      [&](double eta) {
        for (Eigen::Index r = 0; r < start.rows(); ++r) {
          const Eigen::VectorXd moved = (start.row(r) - eta * gradient.row(r)).transpose();
          problem.weights.row(r) = prox(moved, eta * lambda).transpose();
        }
        return Eigen::MatrixXd(problem.weights - start);
      },
      [&] { problem.weights = start; });
}

StepResult step_bias(GroupProblem& problem, const ForwardState<double>& state, double alpha0,
                     double step_floor) {
  const Eigen::VectorXd gradient = grad_bias(state);
  const Eigen::VectorXd start = problem.network.gml_bias;
  return backtrack(
      problem, state, gradient, alpha0, step_floor,
      [&](double alpha) {
        problem.network.gml_bias = start - alpha * gradient;
        return Eigen::MatrixXd(problem.network.gml_bias - start);
      },
      [&] { problem.network.gml_bias = start; });
}

ForwardState<double> step_theta(GroupProblem& problem, double gamma, int max_iter) {
  for (int it = 0; it < max_iter; ++it) {
    const ForwardState<double> state = problem.evaluate();
    for (std::size_t l = 0; l < problem.network.layers.size(); ++l) {
      problem.network.layers[l].weight -= gamma * state.ffn_gradients[l].weight;
      problem.network.layers[l].bias -= gamma * state.ffn_gradients[l].bias;
    }
  }
  return problem.evaluate();
}

double TrainReport::mean_working_set() const {
  if (rows.empty()) return 0;
  double total = 0;
  for (const LambdaRow& r : rows) total += static_cast<double>(r.working_set);
  return total / static_cast<double>(rows.size());
}

double TrainReport::mean_traversed() const {
  if (rows.empty()) return 0;
  double total = 0;
  for (const LambdaRow& r : rows) total += r.traversed;
  return total / static_cast<double>(rows.size());
}

double TrainReport::mean_distinct_traversed() const {
  if (rows.empty()) return 0;
  double total = 0;
  for (const LambdaRow& r : rows) total += static_cast<double>(r.distinct_traversed);
  return total / static_cast<double>(rows.size());
}

std::optional<double> TrainReport::pruning_rate() const {
  if (!all_subgraphs || *all_subgraphs == 0) return std::nullopt;
  return 1.0 - mean_traversed() / static_cast<double>(*all_subgraphs);
}

std::optional<double> TrainReport::distinct_pruning_rate() const {
  if (!all_subgraphs || *all_subgraphs == 0) return std::nullopt;
  return 1.0 - mean_distinct_traversed() / static_cast<double>(*all_subgraphs);
}

namespace {

std::size_t count_nonzero(const Eigen::MatrixXd& weights) {
  std::size_t n = 0;
  for (Eigen::Index r = 0; r < weights.rows(); ++r) {
    if (!weights.row(r).isZero(0.0)) ++n;
  }
  return n;
}

double accuracy_of(const ForwardState<double>& state, std::span<const int> labels) {
  std::size_t hits = 0;
  for (Eigen::Index i = 0; i < state.probabilities.rows(); ++i) {
    Eigen::Index arg = 0;
    for (Eigen::Index c = 1; c < state.probabilities.cols(); ++c) {
      if (state.probabilities(i, c) > state.probabilities(i, arg)) arg = c;
    }
    if (arg == labels[static_cast<std::size_t>(i)]) ++hits;
  }
  return labels.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(labels.size());
}

}  // namespace

TrainResult train(const GraphDataset& train_set, const GraphDataset& valid_set,
                  const TrainConfig& config,
                  const std::function<void(const IterationRecord&)>& on_iteration) {
  const auto started = std::chrono::steady_clock::now();
  config.validate();
  train_set.check();
  valid_set.check();
  if (train_set.size() == 0 || valid_set.size() == 0) {
    throw DomainError("training and validation splits must be nonempty");
  }

  std::vector<int> classes = train_set.labels;
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
  if (classes.size() < 2) throw DomainError("training split needs at least two classes");
  EinModel layout;
  layout.classes = classes;
  std::vector<int> train_labels;
  std::vector<int> valid_labels;
  for (int y : train_set.labels) train_labels.push_back(layout.class_index(y));
  for (int y : valid_set.labels) valid_labels.push_back(layout.class_index(y));

  MiningForest forest(train_set.graphs, config.maxpat, config.node_cap);
  GroupProblem problem;
  const Eigen::Index n = static_cast<Eigen::Index>(train_set.size());
  const Eigen::Index nv = static_cast<Eigen::Index>(valid_set.size());
  problem.features.resize(n, 0);
  problem.weights.resize(0, config.k);
  problem.network = init_network(config.k, static_cast<Eigen::Index>(classes.size()),
                                 config.ffn_depth, config.activation, config.seed);
  problem.labels = train_labels;
  Eigen::MatrixXd valid_features(nv, 0);
  WorkingSet working_set;

  const auto valid_state = [&] {
    return forward(valid_features, problem.weights, problem.network, valid_labels);
  };
  const auto snapshot = [&] {
    EinModel m;
    m.classes = classes;
    m.network = problem.network;
    for (std::size_t r = 0; r < working_set.size(); ++r) {
      m.patterns.push_back({working_set.members()[r]->code(),
                            problem.weights.row(static_cast<Eigen::Index>(r)).transpose()});
    }
    return m;
  };

  TrainResult result;
  TrainReport& report = result.report;
  report.dataset = train_set.name;

  ForwardState<double> state = problem.evaluate();
  for (int round = 0; round < config.warmup_rounds; ++round) {
    const double before = state.loss;
    state = step_bias(problem, state, config.alpha0, config.step_floor).state;
    state = step_theta(problem, config.gamma, config.max_iter_theta);
    if (before - state.loss <= config.warmup_tol * std::max(1.0, before)) break;
  }
  report.warmup_loss = state.loss / static_cast<double>(n);
  report.lambda_max = lambda_max(forest, state);
  result.model = snapshot();
  report.best_valid_loss = valid_state().loss / static_cast<double>(nv);

  std::optional<LambdaSchedule> schedule;
  if (config.lambdas.empty()) {
    schedule.emplace(report.lambda_max, config.path_length, config.path_ratio,
                     config.halving_threshold);
  }
  std::size_t explicit_next = 0;
  const auto next_lambda = [&]() -> std::optional<double> {
    if (schedule) return schedule->next();
    if (explicit_next < config.lambdas.size()) return config.lambdas[explicit_next++];
    return std::nullopt;
  };

  std::size_t lambda_index = 0;
  while (const std::optional<double> lambda = next_lambda()) {
    LambdaRow row;
    row.index = lambda_index;
    row.lambda = *lambda;
    const std::size_t nonzero_before = count_nonzero(problem.weights);
    std::unordered_set<std::size_t> visited;
    std::size_t visits = 0;
    double best_here = valid_state().loss / static_cast<double>(nv);
    int stall = 0;

    for (int outer = 1; outer <= config.outer_cap; ++outer) {
      try {
        state = problem.evaluate();
        const TraverseStats stats =
            traverse(forest, working_set, *lambda, state, config.prune,
                     [&](const PatternNode& node) { visited.insert(node.id()); });
        ++row.traverse_calls;
        visits += stats.visited;

        const Eigen::Index old_size = problem.weights.rows();
        const Eigen::Index new_size = static_cast<Eigen::Index>(working_set.size());
        if (new_size > old_size) {
          problem.features.conservativeResize(Eigen::NoChange, new_size);
          problem.weights.conservativeResize(new_size, Eigen::NoChange);
          valid_features.conservativeResize(Eigen::NoChange, new_size);
          for (Eigen::Index r = old_size; r < new_size; ++r) {
            const PatternNode& node = *working_set.members()[static_cast<std::size_t>(r)];
            problem.weights.row(r).setZero();
            for (Eigen::Index i = 0; i < n; ++i) {
              problem.features(i, r) = node.support().test(static_cast<std::size_t>(i)) ? 1.0 : 0.0;
            }
            const LabeledGraph pattern = graph_from_code(node.code());
            for (Eigen::Index i = 0; i < nv; ++i) {
              valid_features(i, r) =
                  contains_subgraph(pattern, valid_set.graphs[static_cast<std::size_t>(i)]) ? 1.0 : 0.0;
            }
          }
        }

        for (int round = 0; round < config.block_rounds; ++round) {
          state = step_groups(problem, state, *lambda, config.eta0, config.step_floor).state;
          state = step_bias(problem, state, config.alpha0, config.step_floor).state;
          state = step_theta(problem, config.gamma, config.max_iter_theta);
        }
      } catch (const ResourceError& e) {
        throw ResourceError("lambda " + std::to_string(lambda_index) + ", outer iteration " +
                            std::to_string(outer) + ": " + e.what());
      } catch (const NumericError& e) {
        throw NumericError("lambda " + std::to_string(lambda_index) + ", outer iteration " +
                           std::to_string(outer) + ": " + e.what());
      }
      for (std::size_t r = 0; r < working_set.size(); ++r) {
        working_set.members()[r]->beta = problem.weights.row(static_cast<Eigen::Index>(r)).transpose();
      }

      const double objective = state.loss + *lambda * problem.penalty();
      const double valid_loss = valid_state().loss / static_cast<double>(nv);
      row.objective_curve.push_back(objective);
      row.valid_curve.push_back(valid_loss);
      row.outer_iterations = outer;
      if (on_iteration) {
        on_iteration({lambda_index, outer, *lambda, &working_set, &problem, objective, valid_loss});
      }
      if (valid_loss < report.best_valid_loss) {
        report.best_valid_loss = valid_loss;
        report.best_lambda_index = lambda_index + 1;
        report.best_lambda = *lambda;
        report.best_outer = outer;
        result.model = snapshot();
      }
      if (valid_loss < best_here - config.improvement_tol) {
        best_here = valid_loss;
        stall = 0;
      } else if (++stall >= config.patience) {
        break;
      }
    }

    const ForwardState<double> vs = valid_state();
    row.working_set = working_set.size();
    row.nonzero = count_nonzero(problem.weights);
    row.distinct_traversed = visited.size();
    row.traversed =
        row.traverse_calls ? static_cast<double>(visits) / static_cast<double>(row.traverse_calls) : 0.0;
    row.train_loss = state.loss / static_cast<double>(n);
    row.valid_loss = vs.loss / static_cast<double>(nv);
    row.train_accuracy = accuracy_of(state, train_labels);
    row.valid_accuracy = accuracy_of(vs, valid_labels);
    report.rows.push_back(std::move(row));
    if (schedule) {
      schedule->report_increase(static_cast<std::ptrdiff_t>(count_nonzero(problem.weights)) -
                                static_cast<std::ptrdiff_t>(nonzero_before));
    }
    ++lambda_index;
  }

  report.selected = result.model.selected().size();
  if (config.measure_all_subgraphs) report.all_subgraphs = forest.enumerate_all().size();
  report.materialized = forest.materialized();
  report.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return result;
}

double mean_cross_entropy(const EinModel& model, std::span<const LabeledGraph> graphs,
                          std::span<const int> class_ids) {
  if (graphs.empty()) return 0;
  const std::vector<Prediction> predictions = predict(graphs, model);
  double total = 0;
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    total -= std::log(predictions[i].probabilities(model.class_index(class_ids[i])));
  }
  return total / static_cast<double>(graphs.size());
}

double accuracy(const EinModel& model, std::span<const LabeledGraph> graphs,
                std::span<const int> class_ids) {
  if (graphs.empty()) return 0;
  const std::vector<Prediction> predictions = predict(graphs, model);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    if (predictions[i].class_id == class_ids[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(graphs.size());
}

void write_report(std::ostream& out, const TrainReport& report) {
  const auto old_precision = out.precision(10);
  const auto optional = [&](const auto& value) -> std::ostream& {
    if (value) return out << *value;
    return out << "NA";
  };
  const auto rate = [&](double traversed) -> std::optional<double> {
    if (!report.all_subgraphs || *report.all_subgraphs == 0) return std::nullopt;
    return 1.0 - traversed / static_cast<double>(*report.all_subgraphs);
  };

  out << "# training report\n";
  out << "dataset " << (report.dataset.empty() ? "-" : report.dataset) << '\n';
  out << "warmup_loss " << report.warmup_loss << '\n';
  out << "lambda_max " << report.lambda_max << '\n';
  out << "best_lambda_index " << report.best_lambda_index << '\n';
  out << "best_lambda " << report.best_lambda << '\n';
  out << "best_outer " << report.best_outer << '\n';
  out << "best_valid_loss " << report.best_valid_loss << '\n';
  out << "selected " << report.selected << '\n';
  out << "materialized " << report.materialized << '\n';
  out << "all_subgraphs ";
  optional(report.all_subgraphs) << '\n';
  out << "mean_working_set " << report.mean_working_set() << '\n';
  out << "mean_traversed " << report.mean_traversed() << '\n';
  out << "mean_distinct_traversed " << report.mean_distinct_traversed() << '\n';
  out << "pruning_rate ";
  optional(report.pruning_rate()) << '\n';
  out << "distinct_pruning_rate ";
  optional(report.distinct_pruning_rate()) << '\n';
  out << "seconds " << report.seconds << '\n';
  out << "[path]\n";
  out << "index lambda working_set nonzero traverse_calls traversed distinct_traversed "
         "pruning_rate outer train_loss valid_loss train_accuracy valid_accuracy\n";
  for (const LambdaRow& r : report.rows) {
    out << r.index << ' ' << r.lambda << ' ' << r.working_set << ' ' << r.nonzero << ' '
        << r.traverse_calls << ' ' << r.traversed << ' ' << r.distinct_traversed << ' ';
    optional(rate(r.traversed)) << ' ' << r.outer_iterations << ' ' << r.train_loss << ' '
                                << r.valid_loss << ' ' << r.train_accuracy << ' '
                                << r.valid_accuracy << '\n';
  }
  out << "[curves]\n";
  out << "index outer objective valid_loss\n";
  for (const LambdaRow& r : report.rows) {
    for (std::size_t i = 0; i < r.objective_curve.size(); ++i) {
      out << r.index << ' ' << i + 1 << ' ' << r.objective_curve[i] << ' ' << r.valid_curve[i]
          << '\n';
    }
  }
  out.precision(old_precision);
}

}  // namespace ein
