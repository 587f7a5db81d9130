// One PASS/FAIL line per acceptance criterion; exits nonzero if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <random>
#include <set>
#include <string>

#include "ein/datasets.hpp"
#include "ein/optimizer.hpp"
#include "gradcheck.hpp"
#include "oracles.hpp"

using namespace ein;

namespace {

constexpr double kCycleMinAccuracy = 0.95;
constexpr std::size_t kCycleMaxSelected = 15;
constexpr double kCycleMaxSeconds = 600;
constexpr double kXorMinAccuracy = 0.90;
constexpr double kParityTol = 1e-10;
constexpr double kBoundSlack = 1e-12;
constexpr double kGradTol = 1e-5;
constexpr double kProxTol = 1e-14;
constexpr double kMinPruningRate = 0.90;
constexpr double kMaxWorkingSet = 200;

constexpr std::uint64_t kSeed = 1;

std::map<int, std::pair<bool, std::string>> results;

void verdict(int id, bool pass, const std::string& detail) {
  results[id] = {pass, detail};
  std::fprintf(stderr, "[done %d] %s\n", id, pass ? "PASS" : "FAIL");
}

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::vector<LabeledGraph> tiny_graphs(std::mt19937_64& rng, int count, int max_nodes) {
  std::vector<LabeledGraph> out;
  for (int i = 0; i < count; ++i) {
    const int n = 3 + static_cast<int>(rng() % static_cast<std::uint64_t>(max_nodes - 2));
    out.push_back(oracle::random_connected(rng, n, static_cast<int>(rng() % 4), 2, 2));
  }
  return out;
}

// y = 1 iff some edge carries edge label 1 and joins two label-1 nodes.
GraphDataset tiny_dataset(std::mt19937_64& rng, int count) {
  GraphDataset ds;
  ds.name = "tiny";
  ds.node_tokens = {"0", "1"};
  ds.edge_tokens = {"0", "1"};
  ds.class_tokens = {"0", "1"};
  for (LabeledGraph& g : tiny_graphs(rng, count, 8)) {
    int y = 0;
    for (const Edge& e : g.edges()) y |= e.label == 1 && g.node_label(e.u) == 1 && g.node_label(e.v) == 1;
    ds.labels.push_back(y);
    ds.graphs.push_back(std::move(g));
  }
  return ds;
}

void descendants(const PatternNode& node, std::vector<const PatternNode*>& out) {
  for (const PatternNode* c : node.children()) {
    out.push_back(c);
    descendants(*c, out);
  }
}

void prox_suite() {
  std::size_t checked = 0;
  bool ok = prox(Eigen::Vector2d(3, 4), 5.0).isZero(0.0);
  const Eigen::VectorXd shrunk = prox(Eigen::Vector2d(3, 4), 2.5);
  ok = ok && std::abs(shrunk(0) - 1.5) <= kProxTol && std::abs(shrunk(1) - 2.0) <= kProxTol;
  const Eigen::Vector3d a(-1, 0.5, 2);
  ok = ok && prox(a, 0.0) == Eigen::VectorXd(a);
  checked += 3;
  std::mt19937_64 rng(kSeed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unit(0.0, 3.0);
  double worst = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const Eigen::VectorXd v = Eigen::VectorXd::NullaryExpr(1 + trial % 6, [&] { return normal(rng); });
    const double t = unit(rng);
    const Eigen::VectorXd out = prox(v, t);
    double norm = 0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    if (norm <= t) {
      ok = ok && out.isZero(0.0);
    } else {
      ok = ok && !out.isZero(0.0);
      worst = std::max(worst, (out - (1.0 - t / norm) * v).norm());
    }
    ++checked;
  }
  ok = ok && worst <= kProxTol;
  verdict(7, ok, fmt("cases=%zu max_abs_diff=%.3g tol=%.0e", checked, worst, kProxTol));
}

void gradient_suite() {
  std::mt19937_64 rng(kSeed);
  double worst = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const Activation act = trial % 2 ? Activation::sigmoid : Activation::leaky_relu;
    worst = std::max(worst, gradcheck::check(gradcheck::random_instance(rng, act, 1 + trial % 3 / 2)).worst());
  }
  verdict(6, worst < kGradTol, fmt("configs=50 step=%.0e max_rel_err=%.3g tol=%.0e", gradcheck::kStep, worst, kGradTol));
}

void enumeration_oracle() {
  std::mt19937_64 rng(kSeed);
  constexpr int kMaxpat = 5;
  int matched = 0;
  std::size_t patterns = 0;
  for (int set = 0; set < 10; ++set) {
    const auto graphs = tiny_graphs(rng, 10, 8);
    MiningForest forest(graphs, kMaxpat);
    std::map<std::string, std::set<int>> mined;
    for (const PatternNode* node : forest.enumerate_all()) {
      mined.emplace(oracle::canonical(graph_from_code(node->code())), oracle::bits(node->support()));
    }
    const auto expected = oracle::all_patterns(graphs, kMaxpat);
    matched += mined == expected && mined.size() == forest.enumerate_all().size();
    patterns += expected.size();
  }
  verdict(5, matched == 10, fmt("datasets=%d/10 maxpat=%d patterns=%zu", matched, kMaxpat, patterns));
}

void bound_soundness() {
  std::mt19937_64 rng(kSeed);
  std::normal_distribution<double> normal;
  double worst_excess = -1e300;
  std::size_t pairs = 0;
  for (int set = 0; set < 20; ++set) {
    const auto graphs = tiny_graphs(rng, 12, 8);
    const int n = static_cast<int>(graphs.size());
    MiningForest forest(graphs, 4);
    const auto all = forest.enumerate_all();
    for (int setting = 0; setting < 5; ++setting) {
      // Random parameters on a random handful of patterns.
      const int k = 1 + setting % 3;
      const int p = std::min<int>(4, static_cast<int>(all.size()));
      std::vector<DfsCode> codes;
      for (int j = 0; j < p; ++j) codes.push_back(all[rng() % all.size()]->code());
      const Eigen::MatrixXd x = pattern_features(graphs, codes);
      const Eigen::MatrixXd b = Eigen::MatrixXd::NullaryExpr(p, k, [&] { return normal(rng); });
      Network<double> net = init_network(k, 2 + setting % 2, 1, setting % 2 ? Activation::sigmoid : Activation::leaky_relu, rng());
      for (Eigen::Index q = 0; q < k; ++q) net.gml_bias(q) = normal(rng);
      std::vector<int> y;
      for (int i = 0; i < n; ++i) y.push_back(static_cast<int>(rng() % net.layers.back().weight.rows()));
      const ForwardState<double> s = forward(x, b, net, y);
      for (const PatternNode* node : all) {
        const double bound = ub(*node, s);
        std::vector<const PatternNode*> below{node};
        descendants(*node, below);
        for (const PatternNode* d : below) {
          worst_excess = std::max(worst_excess, grad_group(s, d->support()).norm() - bound);
          ++pairs;
        }
      }
    }
  }
  verdict(4, worst_excess <= kBoundSlack,
          fmt("datasets=20 settings=5 pairs=%zu max(||g||-UB)=%.3g slack=%.0e", pairs, worst_excess, kBoundSlack));
}

struct Snapshot {
  std::map<std::string, Eigen::VectorXd> beta;
  Eigen::VectorXd bias;
  std::vector<Eigen::MatrixXd> theta;
};

std::vector<Snapshot> trajectory(const GraphDataset& train_set, const GraphDataset& valid_set, bool prune) {
  TrainConfig config;
  config.maxpat = 4;
  config.seed = kSeed;
  config.prune = prune;
  config.outer_cap = 40;
  std::vector<Snapshot> out;
  train(train_set, valid_set, config, [&](const IterationRecord& rec) {
    Snapshot s;
    const auto& members = rec.working_set->members();
    for (std::size_t r = 0; r < members.size(); ++r) {
      s.beta[to_string(members[r]->code())] = rec.problem->weights.row(static_cast<Eigen::Index>(r)).transpose();
    }
    s.bias = rec.problem->network.gml_bias;
    for (const auto& layer : rec.problem->network.layers) {
      s.theta.push_back(layer.weight);
      s.theta.push_back(layer.bias);
    }
    out.push_back(std::move(s));
  });
  return out;
}

double snapshot_gap(const Snapshot& a, const Snapshot& b) {
  double gap = (a.bias - b.bias).cwiseAbs().maxCoeff();
  for (std::size_t l = 0; l < a.theta.size(); ++l) gap = std::max(gap, (a.theta[l] - b.theta[l]).cwiseAbs().maxCoeff());
  // A pattern present in only one working set has beta 0 in the other.
  const auto side = [&](const Snapshot& x, const Snapshot& y) {
    for (const auto& [code, beta] : x.beta) {
      const auto it = y.beta.find(code);
      const Eigen::VectorXd other = it == y.beta.end() ? Eigen::VectorXd::Zero(beta.size()) : it->second;
      gap = std::max(gap, (beta - other).cwiseAbs().maxCoeff());
    }
  };
  side(a, b);
  side(b, a);
  return gap;
}

void pruning_parity() {
  std::mt19937_64 rng(kSeed);
  const GraphDataset ds = tiny_dataset(rng, 30);
  std::vector<std::size_t> train_idx, valid_idx;
  for (std::size_t i = 0; i < ds.size(); ++i) (i % 5 == 4 ? valid_idx : train_idx).push_back(i);
  const GraphDataset train_set = ds.subset(train_idx);
  const GraphDataset valid_set = ds.subset(valid_idx);
  const auto pruned = trajectory(train_set, valid_set, true);
  const auto full = trajectory(train_set, valid_set, false);
  double gap = 0;
  const bool same_length = pruned.size() == full.size() && !pruned.empty();
  if (same_length) {
    for (std::size_t i = 0; i < pruned.size(); ++i) gap = std::max(gap, snapshot_gap(pruned[i], full[i]));
  }
  verdict(3, same_length && gap <= kParityTol,
          fmt("graphs=30 maxpat=4 iterations=%zu/%zu max_abs_diff=%.3g tol=%.0e", pruned.size(), full.size(), gap,
              kParityTol));
}

// Criteria 1 and 8 share one run.
void cycle_run() {
  const GraphDataset ds = gen_cycle(100, kSeed);
  const Splits s = split(ds, kSeed);
  TrainConfig config;
  config.maxpat = 10;
  config.k = 2;
  config.seed = kSeed;
  config.measure_all_subgraphs = true;
  const auto start = std::chrono::steady_clock::now();
  const TrainResult r = train(s.train, s.valid, config);
  const double total = seconds_since(start);
  const double acc = accuracy(r.model, s.test.graphs, s.test.labels);
  verdict(1, acc >= kCycleMinAccuracy && r.report.selected <= kCycleMaxSelected && total <= kCycleMaxSeconds,
          fmt("test_accuracy=%.4f (>= %.2f) selected=%zu (<= %zu) seconds=%.1f (<= %.0f, includes |H| enumeration)",
              acc, kCycleMinAccuracy, r.report.selected, kCycleMaxSelected, total, kCycleMaxSeconds));
  const double rate = r.report.pruning_rate().value_or(-1);
  const double w = r.report.mean_working_set();
  verdict(8, rate >= kMinPruningRate && w < kMaxWorkingSet,
          fmt("pruning_rate=%.4f (>= %.2f) distinct_pruning_rate=%.4f all_subgraphs=%zu mean_traversed=%.1f "
              "mean_working_set=%.1f (< %.0f)",
              rate, kMinPruningRate, r.report.distinct_pruning_rate().value_or(-1), r.report.all_subgraphs.value_or(0),
              r.report.mean_traversed(), w, kMaxWorkingSet));
}

void xor_run() {
  const GraphDataset ds = gen_cycle_xor(50, kSeed);
  const Splits s = split(ds, kSeed);
  TrainConfig config;
  config.maxpat = 10;
  config.k = 2;
  config.seed = kSeed;
  const auto start = std::chrono::steady_clock::now();
  const TrainResult r = train(s.train, s.valid, config);
  const double acc = accuracy(r.model, s.test.graphs, s.test.labels);
  verdict(2, acc >= kXorMinAccuracy,
          fmt("test_accuracy=%.4f (>= %.2f) selected=%zu seconds=%.1f", acc, kXorMinAccuracy, r.report.selected,
              seconds_since(start)));
}

}  // namespace

// With arguments, only the listed criteria run.
int main(int argc, char** argv) {
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  const auto wanted = [&](std::initializer_list<int> ids) {
    if (only.empty()) return true;
    for (int id : ids) {
      if (only.count(id)) return true;
    }
    return false;
  };
  if (wanted({7})) prox_suite();
  if (wanted({6})) gradient_suite();
  if (wanted({5})) enumeration_oracle();
  if (wanted({4})) bound_soundness();
  if (wanted({3})) pruning_parity();
  if (wanted({1, 8})) cycle_run();
  if (wanted({2})) xor_run();
  int failures = 0;
  for (const auto& [id, result] : results) {
    std::printf("criterion %d %s  %s\n", id, result.first ? "PASS" : "FAIL", result.second.c_str());
    failures += result.first ? 0 : 1;
  }
  std::printf("%d of %zu criteria failed\n", failures, results.size());
  return failures == 0 ? 0 : 1;
}
