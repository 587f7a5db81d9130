#include "ein/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "ein/datasets.hpp"
#include "ein/errors.hpp"
#include "ein/miner.hpp"
#include "ein/model_file.hpp"
#include "ein/optimizer.hpp"

namespace ein {

std::string csv_field(const std::string& value) {
  if (value.find_first_of(",\"\r\n") == std::string::npos) return value;
  std::string out = "\"";
  for (char c : value) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

namespace {

namespace fs = std::filesystem;

std::string number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct DataOptions {
  std::string path;
  std::string format;
};

void add_data_options(CLI::App& cmd, DataOptions& data) {
  cmd.add_option("--data", data.path, "dataset: TUDataset directory or gSpan file")->required();
  cmd.add_option("--format", data.format, "input format (default: tud for directories, else gspan)")
      ->check(CLI::IsMember({"tud", "gspan"}));
}

GraphDataset load_dataset(const DataOptions& data) {
  std::string format = data.format;
  if (format.empty()) format = fs::is_directory(data.path) ? "tud" : "gspan";
  if (format == "tud") return parse_tud(data.path);
  return parse_gspan(fs::path(data.path));
}

// Re-expresses `ds` in the model's label ids. Node and edge tokens the
// model never saw get fresh ids, so no stored pattern can match them.
GraphDataset align(const GraphDataset& ds, const ModelFile& model) {
  const auto remap = [](const std::vector<std::string>& from, std::vector<std::string> to) {
    std::vector<int> ids;
    for (const std::string& token : from) {
      const auto it = std::find(to.begin(), to.end(), token);
      if (it != to.end()) {
        ids.push_back(static_cast<int>(it - to.begin()));
      } else {
        ids.push_back(static_cast<int>(to.size()));
        to.push_back(token);
      }
    }
    return std::pair{ids, to};
  };
  GraphDataset out;
  out.name = ds.name;
  auto [node_ids, node_tokens] = remap(ds.node_tokens, model.node_tokens);
  auto [edge_ids, edge_tokens] = remap(ds.edge_tokens, model.edge_tokens);
  out.node_tokens = std::move(node_tokens);
  out.edge_tokens = std::move(edge_tokens);
  out.class_tokens = model.class_tokens;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const std::string& token = ds.class_tokens.at(static_cast<std::size_t>(ds.labels[i]));
    const auto it = std::find(model.class_tokens.begin(), model.class_tokens.end(), token);
    if (it == model.class_tokens.end()) {
      throw DomainError("label dictionary mismatch: class '" + token + "' is unknown to the model");
    }
    out.labels.push_back(static_cast<int>(it - model.class_tokens.begin()));
    const LabeledGraph& g = ds.graphs[i];
    std::vector<Label> labels;
    for (Label l : g.node_labels()) labels.push_back(node_ids[static_cast<std::size_t>(l)]);
    std::vector<Edge> edges;
    for (Edge e : g.edges()) {
      e.label = edge_ids[static_cast<std::size_t>(e.label)];
      edges.push_back(e);
    }
    out.graphs.emplace_back(std::move(labels), std::move(edges));
  }
  return out;
}

std::ostream& open_output(const std::string& path, std::ofstream& file, std::ostream& fallback) {
  if (path.empty() || path == "-") return fallback;
  file.open(path);
  if (!file) throw Error("cannot write " + path);
  return file;
}

struct TrainOptions {
  DataOptions data;
  int maxpat = 10;
  int k = 2;
  std::string activation = "sigmoid";
  std::vector<double> lambdas;
  bool auto_path = false;
  std::uint64_t seed = 0;
  bool grid = false;
  std::string out = "ein-out";
  int threads = 1;
  std::size_t node_cap = kDefaultNodeCap;
  int outer_cap = 100;
  int block_rounds = 10;
  bool measure_all = false;
};

int cmd_train(const TrainOptions& opt, std::ostream& out) {
  const GraphDataset ds = load_dataset(opt.data);
  const Splits splits = split(ds, opt.seed);

  TrainConfig base;
  base.lambdas = opt.lambdas;
  base.maxpat = opt.maxpat;
  base.k = opt.k;
  base.activation = parse_activation(opt.activation);
  base.seed = opt.seed;
  base.node_cap = opt.node_cap;
  base.outer_cap = opt.outer_cap;
  base.block_rounds = opt.block_rounds;
  base.measure_all_subgraphs = opt.measure_all;

  std::vector<TrainConfig> configs;
  if (opt.grid) {
    for (int maxpat : {5, 10}) {
      for (int k : {2, 6, 10}) {
        for (Activation act : {Activation::sigmoid, Activation::leaky_relu}) {
          TrainConfig c = base;
          c.maxpat = maxpat;
          c.k = k;
          c.activation = act;
          configs.push_back(c);
        }
      }
    }
  } else {
    configs.push_back(base);
  }
  for (const TrainConfig& c : configs) c.validate();

  fs::create_directories(opt.out);
  std::ofstream grid_log;
  if (opt.grid) grid_log.open(fs::path(opt.out) / "grid.txt");
  if (grid_log) grid_log << "maxpat k activation best_valid_loss selected\n";

  std::optional<TrainResult> best;
  const TrainConfig* best_config = nullptr;
  for (const TrainConfig& c : configs) {
    TrainResult r = train(splits.train, splits.valid, c);
    if (grid_log) {
      grid_log << c.maxpat << ' ' << c.k << ' ' << to_string(c.activation) << ' '
               << number(r.report.best_valid_loss) << ' ' << r.report.selected << '\n';
    }
    if (!best || r.report.best_valid_loss < best->report.best_valid_loss) {
      best = std::move(r);
      best_config = &c;
    }
  }

  ModelFile file;
  file.model = best->model;
  file.k = best_config->k;
  file.maxpat = best_config->maxpat;
  file.seed = opt.seed;
  file.split_seed = opt.seed;
  file.class_tokens = ds.class_tokens;
  file.node_tokens = ds.node_tokens;
  file.edge_tokens = ds.edge_tokens;
  file.lambda = best->report.best_lambda;
  file.dataset = ds.name;
  // Zero groups carry no information; keep the in-memory model identical
  // to what a reload produces.
  std::erase_if(file.model.patterns, [](const SelectedPattern& p) { return p.beta.isZero(0.0); });
  save_model(fs::path(opt.out) / "model.ein", file);

  const double train_acc = accuracy(file.model, splits.train.graphs, splits.train.labels);
  const double valid_acc = accuracy(file.model, splits.valid.graphs, splits.valid.labels);
  const double test_acc = accuracy(file.model, splits.test.graphs, splits.test.labels);
  {
    std::ofstream report(fs::path(opt.out) / "report.txt");
    write_report(report, best->report);
    report << "[result]\n";
    report << "maxpat " << best_config->maxpat << '\n';
    report << "k " << best_config->k << '\n';
    report << "activation " << to_string(best_config->activation) << '\n';
    report << "train_accuracy " << number(train_acc) << '\n';
    report << "valid_accuracy " << number(valid_acc) << '\n';
    report << "test_accuracy " << number(test_acc) << '\n';
  }
  for (const auto& [name, part] : {std::pair{"train", &splits.train}, std::pair{"valid", &splits.valid},
                                   std::pair{"test", &splits.test}}) {
    std::ofstream f(fs::path(opt.out) / (std::string(name) + ".gspan"));
    write_gspan(f, *part);
  }

  out << "selected " << file.model.patterns.size() << '\n';
  out << "train_accuracy " << number(train_acc) << '\n';
  out << "valid_accuracy " << number(valid_acc) << '\n';
  out << "test_accuracy " << number(test_acc) << '\n';
  out << "model " << (fs::path(opt.out) / "model.ein").string() << '\n';
  return 0;
}

struct ApplyOptions {
  std::string model;
  DataOptions data;
  std::string out;
};

int cmd_predict(const ApplyOptions& opt, std::ostream& stdout_) {
  const ModelFile model = load_model(fs::path(opt.model));
  const GraphDataset ds = align(load_dataset(opt.data), model);
  std::ofstream file;
  std::ostream& out = open_output(opt.out, file, stdout_);

  const auto selected = model.model.selected();
  std::vector<DfsCode> codes;
  for (const SelectedPattern* p : selected) codes.push_back(p->code);
  const Eigen::MatrixXd psi = pattern_features(ds.graphs, codes);
  const std::vector<Prediction> predictions = predict(ds.graphs, model.model);

  out << "graph_id,predicted";
  for (std::size_t c = 0; c < model.model.classes.size(); ++c) {
    out << ',' << csv_field("p_" + model.class_token(static_cast<int>(c)));
  }
  for (const DfsCode& code : codes) out << ',' << csv_field(to_string(code));
  out << '\n';
  for (std::size_t i = 0; i < ds.size(); ++i) {
    out << i << ',' << csv_field(model.class_token(predictions[i].class_index));
    for (Eigen::Index c = 0; c < predictions[i].probabilities.size(); ++c) {
      out << ',' << number(predictions[i].probabilities(c));
    }
    for (Eigen::Index j = 0; j < psi.cols(); ++j) out << ',' << static_cast<int>(psi(static_cast<Eigen::Index>(i), j));
    out << '\n';
  }
  return 0;
}

int cmd_export(const ApplyOptions& opt, std::ostream& stdout_) {
  const ModelFile model = load_model(fs::path(opt.model));
  const GraphDataset ds = align(load_dataset(opt.data), model);
  std::ofstream file;
  std::ostream& out = open_output(opt.out, file, stdout_);

  const auto selected = model.model.selected();
  std::vector<DfsCode> codes;
  for (const SelectedPattern* p : selected) codes.push_back(p->code);
  const Eigen::MatrixXd psi = pattern_features(ds.graphs, codes);
  const std::vector<Prediction> predictions = predict(ds.graphs, model.model);

  out << "graph_id";
  for (const DfsCode& code : codes) out << ',' << csv_field(to_string(code));
  out << ",f,y\n";
  for (std::size_t i = 0; i < ds.size(); ++i) {
    out << i;
    for (Eigen::Index j = 0; j < psi.cols(); ++j) out << ',' << static_cast<int>(psi(static_cast<Eigen::Index>(i), j));
    out << ',' << csv_field(model.class_token(predictions[i].class_index)) << ','
        << csv_field(ds.class_tokens.at(static_cast<std::size_t>(ds.labels[i]))) << '\n';
  }
  return 0;
}

struct MineOptions {
  DataOptions data;
  int maxpat = 10;
  std::size_t node_cap = kDefaultNodeCap;
  std::string out;
};

int cmd_mine(const MineOptions& opt, std::ostream& stdout_) {
  const GraphDataset ds = load_dataset(opt.data);
  MiningForest forest(ds.graphs, opt.maxpat, opt.node_cap);
  std::vector<PatternNode*> all = forest.enumerate_all();
  std::sort(all.begin(), all.end(), [](const PatternNode* a, const PatternNode* b) {
    if (a->size() != b->size()) return a->size() < b->size();
    return compare(a->code(), b->code()) < 0;
  });
  std::ofstream file;
  std::ostream& out = open_output(opt.out, file, stdout_);
  out << "size,support,code\n";
  for (const PatternNode* node : all) {
    out << node->size() << ',' << node->support().count() << ',' << csv_field(to_string(node->code()))
        << '\n';
  }
  stdout_ << "patterns " << all.size() << '\n';
  return 0;
}

struct GenerateOptions {
  std::string kind = "cycle";
  int count = 100;
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_generate(const GenerateOptions& opt, std::ostream& stdout_) {
  const GraphDataset ds =
      opt.kind == "cycle" ? gen_cycle(opt.count, opt.seed) : gen_cycle_xor(opt.count, opt.seed);
  std::ofstream file;
  std::ostream& out = open_output(opt.out, file, stdout_);
  write_gspan(out, ds);
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Exact subgraph isomorphism network: training and inference", "ein"};
  app.require_subcommand(1);
  app.set_config("--config", "", "key=value file; command-line flags take precedence");

  TrainOptions train_opt;
  CLI::App* train_cmd = app.add_subcommand("train", "split a dataset, train, write model and report");
  add_data_options(*train_cmd, train_opt.data);
  train_cmd->add_option("--maxpat", train_opt.maxpat, "largest pattern size in edges")
      ->check(CLI::PositiveNumber);
  train_cmd->add_option("--k", train_opt.k, "GML width")->check(CLI::PositiveNumber);
  train_cmd->add_option("--activation", train_opt.activation)
      ->check(CLI::IsMember({"sigmoid", "leakyrelu", "leaky_relu"}));
  auto* lambdas = train_cmd->add_option("--lambda-values", train_opt.lambdas, "strictly decreasing lambdas")
                      ->delimiter(',');
  auto* auto_path =
      train_cmd->add_flag("--auto-path", train_opt.auto_path, "lambda path below lambda_max (default)");
  lambdas->excludes(auto_path);
  train_cmd->add_option("--seed", train_opt.seed, "seeds the split and the FFN initialization");
  train_cmd->add_flag("--grid", train_opt.grid, "sweep maxpat {5,10} x K {2,6,10} x activation");
  train_cmd->add_option("--out", train_opt.out, "output directory");
  train_cmd->add_option("--threads", train_opt.threads, "worker threads (execution is sequential)")
      ->check(CLI::PositiveNumber);
  train_cmd->add_option("--node-cap", train_opt.node_cap, "materialized pattern limit")
      ->check(CLI::PositiveNumber);
  train_cmd->add_option("--outer-cap", train_opt.outer_cap, "outer iterations per lambda")
      ->check(CLI::PositiveNumber);
  train_cmd->add_option("--block-rounds", train_opt.block_rounds, "block updates between traversals")
      ->check(CLI::PositiveNumber);
  train_cmd->add_flag("--measure-all", train_opt.measure_all, "enumerate every pattern to report |H|");

  ApplyOptions predict_opt;
  CLI::App* predict_cmd = app.add_subcommand("predict", "per-graph class, probabilities and pattern bits");
  predict_cmd->add_option("--model", predict_opt.model)->required();
  add_data_options(*predict_cmd, predict_opt.data);
  predict_cmd->add_option("--out", predict_opt.out, "CSV path (default stdout)");

  ApplyOptions export_opt;
  CLI::App* export_cmd = app.add_subcommand("export-features", "selected-pattern feature matrix with f and y");
  export_cmd->add_option("--model", export_opt.model)->required();
  add_data_options(*export_cmd, export_opt.data);
  export_cmd->add_option("--out", export_opt.out, "CSV path (default stdout)");

  MineOptions mine_opt;
  CLI::App* mine_cmd = app.add_subcommand("mine", "list every connected pattern with its support");
  add_data_options(*mine_cmd, mine_opt.data);
  mine_cmd->add_option("--maxpat", mine_opt.maxpat)->check(CLI::PositiveNumber);
  mine_cmd->add_option("--node-cap", mine_opt.node_cap)->check(CLI::PositiveNumber);
  mine_cmd->add_option("--out", mine_opt.out, "CSV path (default stdout)");

  GenerateOptions gen_opt;
  CLI::App* gen_cmd = app.add_subcommand("generate", "write a synthetic dataset in gSpan format");
  gen_cmd->add_option("--kind", gen_opt.kind)->check(CLI::IsMember({"cycle", "cycle-xor"}));
  gen_cmd->add_option("--n", gen_opt.count, "graphs per class (cycle) or per quadrant (cycle-xor)")
      ->check(CLI::PositiveNumber);
  gen_cmd->add_option("--seed", gen_opt.seed);
  gen_cmd->add_option("--out", gen_opt.out, "gSpan path (default stdout)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 1;
  }

  try {
    if (*train_cmd) return cmd_train(train_opt, out);
    if (*predict_cmd) return cmd_predict(predict_opt, out);
    if (*export_cmd) return cmd_export(export_opt, out);
    if (*mine_cmd) return cmd_mine(mine_opt, out);
    if (*gen_cmd) return cmd_generate(gen_opt, out);
  } catch (const ResourceError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const NumericError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}

}  // namespace ein
