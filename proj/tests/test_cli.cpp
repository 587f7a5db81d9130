#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "ein/cli.hpp"
#include "ein/datasets.hpp"
#include "ein/model_file.hpp"
#include "ein/miner.hpp"

using namespace ein;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::vector<std::vector<std::string>> rows(const std::string& csv) {
  std::vector<std::vector<std::string>> out;
  std::istringstream in(csv);
  for (std::string line; std::getline(in, line);) {
    std::vector<std::string> cells;
    std::istringstream fields(line);
    for (std::string cell; std::getline(fields, cell, ',');) cells.push_back(cell);
    out.push_back(cells);
  }
  return out;
}

// "key value" lines of a report.
std::map<std::string, std::string> keyed(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) {
    const auto space = line.find(' ');
    if (space != std::string::npos) out[line.substr(0, space)] = line.substr(space + 1);
  }
  return out;
}

void write(const fs::path& p, const std::string& body) { std::ofstream(p) << body; }

class Cli : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = fs::temp_directory_path() / "ein_cli_test";
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    const Outcome gen = run({"generate", "--kind", "cycle", "--n", "10", "--seed", "3", "--out", path("cycle.gspan")});
    ASSERT_EQ(gen.code, 0) << gen.err;
    train_ = run({"train", "--data", path("cycle.gspan"), "--maxpat", "4", "--seed", "1", "--out", path("run")});
    ASSERT_EQ(train_.code, 0) << train_.err;
  }
  static void TearDownTestSuite() { fs::remove_all(dir_); }

  static std::string path(const std::string& name) { return (dir_ / name).string(); }

  static inline fs::path dir_;
  static inline Outcome train_;
};

}  // namespace

TEST(CsvField, QuotesOnlyWhenNeeded) {
  EXPECT_EQ(csv_field("0-1-0-0-1"), "0-1-0-0-1");
  EXPECT_EQ(csv_field("a,b"), "\"a,b\"");
  EXPECT_EQ(csv_field("say \"hi\""), "\"say \"\"hi\"\"\"");
  EXPECT_EQ(csv_field("two\nlines"), "\"two\nlines\"");
  EXPECT_EQ(csv_field(""), "");
}

TEST(ExitCodes, UsageAndInputErrors) {
  EXPECT_EQ(run({"train"}).code, 1);
  EXPECT_EQ(run({}).code, 1);
  EXPECT_EQ(run({"frobnicate"}).code, 1);
  EXPECT_EQ(run({"train", "--data", "x", "--activation", "tanh"}).code, 1);
  EXPECT_EQ(run({"train", "--data", "x", "--lambda-values", "1", "--auto-path"}).code, 1);
  EXPECT_EQ(run({"--help"}).code, 0);
  const Outcome missing = run({"mine", "--data", "/nonexistent/file.gspan"});
  EXPECT_EQ(missing.code, 1);
  EXPECT_NE(missing.err.find("/nonexistent/file.gspan"), std::string::npos);
}

TEST_F(Cli, TrainWritesArtifacts) {
  for (const char* f : {"model.ein", "report.txt", "train.gspan", "valid.gspan", "test.gspan"}) {
    EXPECT_TRUE(fs::exists(dir_ / "run" / f)) << f;
  }
  const auto summary = keyed(train_.out);
  const auto report = keyed(slurp(dir_ / "run" / "report.txt"));
  EXPECT_EQ(summary.at("train_accuracy"), report.at("train_accuracy"));
  EXPECT_EQ(summary.at("test_accuracy"), report.at("test_accuracy"));
  EXPECT_EQ(report.at("maxpat"), "4");
  const ModelFile model = load_model(dir_ / "run" / "model.ein");
  EXPECT_EQ(std::to_string(model.model.patterns.size()), summary.at("selected"));
  for (const SelectedPattern& p : model.model.patterns) EXPECT_FALSE(p.beta.isZero(0.0));
  EXPECT_EQ(parse_gspan(dir_ / "run" / "train.gspan").size() + parse_gspan(dir_ / "run" / "valid.gspan").size() +
                parse_gspan(dir_ / "run" / "test.gspan").size(),
            20u);
}

TEST_F(Cli, PredictReproducesTrainAccuracy) {
  const Outcome r = run({"predict", "--model", path("run/model.ein"), "--data", path("run/train.gspan")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto table = rows(r.out);
  const GraphDataset train = parse_gspan(dir_ / "run" / "train.gspan");
  ASSERT_EQ(table.size(), train.size() + 1);
  EXPECT_EQ(table[0][0], "graph_id");
  EXPECT_EQ(table[0][2], "p_0");
  EXPECT_EQ(table[0][3], "p_1");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < train.size(); ++i) {
    const auto& row = table[i + 1];
    EXPECT_NEAR(std::stod(row[2]) + std::stod(row[3]), 1.0, 1e-12);
    correct += row[1] == train.class_tokens[static_cast<std::size_t>(train.labels[i])];
  }
  char expected[40];
  std::snprintf(expected, sizeof expected, "%.17g", static_cast<double>(correct) / static_cast<double>(train.size()));
  EXPECT_EQ(keyed(train_.out).at("train_accuracy"), expected);
}

TEST_F(Cli, ExportFeaturesMatchModel) {
  const Outcome r = run({"export-features", "--model", path("run/model.ein"), "--data", path("run/test.gspan"),
                     "--out", path("features.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto table = rows(slurp(dir_ / "features.csv"));
  const ModelFile model = load_model(dir_ / "run" / "model.ein");
  const std::size_t s = model.model.patterns.size();
  ASSERT_GE(table.size(), 2u);
  EXPECT_EQ(table[0].size(), s + 3);
  EXPECT_EQ(table[0][s + 1], "f");
  EXPECT_EQ(table[0][s + 2], "y");

  Eigen::MatrixXd psi(static_cast<Eigen::Index>(table.size() - 1), static_cast<Eigen::Index>(s));
  for (std::size_t i = 1; i < table.size(); ++i) {
    ASSERT_EQ(table[i].size(), s + 3);
    for (std::size_t j = 0; j < s; ++j) {
      const std::string& v = table[i][j + 1];
      EXPECT_TRUE(v == "0" || v == "1") << v;
      psi(static_cast<Eigen::Index>(i - 1), static_cast<Eigen::Index>(j)) = std::stod(v);
    }
  }
  const GraphDataset test = parse_gspan(dir_ / "run" / "test.gspan");
  for (std::size_t j = 0; j < s; ++j) {
    EXPECT_EQ(table[0][j + 1], to_string(model.model.patterns[j].code));
    const LabeledGraph h = graph_from_code(model.model.patterns[j].code);
    for (std::size_t i = 0; i < test.size(); ++i) {
      EXPECT_EQ(psi(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) == 1.0,
                contains_subgraph(h, test.graphs[i]));
    }
  }
  if (s == 0) return;
  Eigen::MatrixXd b(static_cast<Eigen::Index>(s), model.model.network.width());
  for (std::size_t j = 0; j < s; ++j) b.row(static_cast<Eigen::Index>(j)) = model.model.patterns[j].beta.transpose();
  const ForwardState<double> state = forward(psi, b, model.model.network, std::vector<int>(test.size(), 0));
  for (std::size_t i = 0; i < test.size(); ++i) {
    Eigen::Index best;
    state.probabilities.row(static_cast<Eigen::Index>(i)).maxCoeff(&best);
    EXPECT_EQ(table[i + 1][s + 1], model.class_token(static_cast<int>(best)));
    EXPECT_EQ(table[i + 1][s + 2], test.class_tokens[static_cast<std::size_t>(test.labels[i])]);
  }
}

TEST_F(Cli, ModelSaveLoadSaveIsByteIdentical) {
  const std::string text = slurp(dir_ / "run" / "model.ein");
  const ModelFile loaded = load_model(dir_ / "run" / "model.ein");
  std::ostringstream again;
  save_model(again, loaded);
  EXPECT_EQ(again.str(), text);
}

TEST_F(Cli, TrainIsDeterministic) {
  const Outcome second =
      run({"train", "--data", path("cycle.gspan"), "--maxpat", "4", "--seed", "1", "--out", path("again")});
  ASSERT_EQ(second.code, 0) << second.err;
  EXPECT_EQ(slurp(dir_ / "again" / "model.ein"), slurp(dir_ / "run" / "model.ein"));
  const auto timeless = [](std::string text) {
    const auto at = text.find("\nseconds ");
    return text.erase(at, text.find('\n', at + 1) - at);
  };
  EXPECT_EQ(timeless(slurp(dir_ / "again" / "report.txt")), timeless(slurp(dir_ / "run" / "report.txt")));
}

TEST_F(Cli, UnknownClassIsRejectedAndEmptyDataGivesHeader) {
  write(dir_ / "alien.gspan", "t # 0 7\nv 0 0\nv 1 0\ne 0 1 0\n");
  const Outcome alien = run({"predict", "--model", path("run/model.ein"), "--data", path("alien.gspan")});
  EXPECT_EQ(alien.code, 1);
  EXPECT_NE(alien.err.find("label dictionary mismatch"), std::string::npos);

  write(dir_ / "unseen.gspan", "t # 0 1\nv 0 9\nv 1 9\ne 0 1 4\n");
  const Outcome unseen = run({"predict", "--model", path("run/model.ein"), "--data", path("unseen.gspan")});
  ASSERT_EQ(unseen.code, 0) << unseen.err;
  const auto unseen_rows = rows(unseen.out);
  ASSERT_EQ(unseen_rows.size(), 2u);
  for (std::size_t j = 4; j < unseen_rows[1].size(); ++j) EXPECT_EQ(unseen_rows[1][j], "0");

  write(dir_ / "empty.gspan", "");
  const Outcome empty = run({"predict", "--model", path("run/model.ein"), "--data", path("empty.gspan")});
  ASSERT_EQ(empty.code, 0) << empty.err;
  EXPECT_EQ(rows(empty.out).size(), 1u);
}

TEST_F(Cli, MineListsSortedPatterns) {
  write(dir_ / "triangle.gspan", "t # 0 a\nv 0 0\nv 1 0\nv 2 0\ne 0 1 0\ne 1 2 0\ne 2 0 0\n");
  const Outcome tri = run({"mine", "--data", path("triangle.gspan"), "--maxpat", "3"});
  ASSERT_EQ(tri.code, 0) << tri.err;
  const auto table = rows(tri.out);
  ASSERT_EQ(table.size(), 5u);
  EXPECT_EQ(table[0], (std::vector<std::string>{"size", "support", "code"}));
  EXPECT_EQ(table[1], (std::vector<std::string>{"1", "1", "0-1-0-0-0"}));
  EXPECT_EQ(table[2][0], "2");
  EXPECT_EQ(table[3][0], "3");
  EXPECT_EQ(table[4], (std::vector<std::string>{"patterns 3"}));

  const Outcome roots = run({"mine", "--data", path("cycle.gspan"), "--maxpat", "1", "--out", path("roots.csv")});
  ASSERT_EQ(roots.code, 0) << roots.err;
  const GraphDataset cycle = parse_gspan(dir_ / "cycle.gspan");
  EXPECT_EQ(roots.out, "patterns " + std::to_string(MiningForest(cycle.graphs, 1).roots().size()) + "\n");

  const Outcome four = run({"mine", "--data", path("cycle.gspan"), "--maxpat", "4", "--out", path("four.csv")});
  ASSERT_EQ(four.code, 0);
  const auto mined = rows(slurp(dir_ / "four.csv"));
  for (std::size_t i = 2; i < mined.size(); ++i) {
    const int a = std::stoi(mined[i - 1][0]);
    const int b = std::stoi(mined[i][0]);
    EXPECT_TRUE(a < b || (a == b && compare(parse_code(mined[i - 1][2]), parse_code(mined[i][2])) < 0)) << i;
  }
}

TEST_F(Cli, NodeCapExceededExitsWithResourceCode) {
  const Outcome r = run({"mine", "--data", path("cycle.gspan"), "--maxpat", "4", "--node-cap", "2"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("error"), std::string::npos);
}

TEST_F(Cli, ConfigFileWithFlagOverride) {
  write(dir_ / "mine.ini", "[mine]\nmaxpat=1\n");
  const Outcome from_config = run({"--config", path("mine.ini"), "mine", "--data", path("cycle.gspan")});
  ASSERT_EQ(from_config.code, 0) << from_config.err;
  const Outcome plain = run({"mine", "--data", path("cycle.gspan"), "--maxpat", "1"});
  EXPECT_EQ(from_config.out, plain.out);
  const Outcome overridden = run({"--config", path("mine.ini"), "mine", "--data", path("cycle.gspan"), "--maxpat", "2"});
  const Outcome two = run({"mine", "--data", path("cycle.gspan"), "--maxpat", "2"});
  EXPECT_EQ(overridden.out, two.out);
  EXPECT_NE(overridden.out, plain.out);
}

TEST_F(Cli, GenerateIsDeterministic) {
  const Outcome a = run({"generate", "--kind", "cycle-xor", "--n", "2", "--seed", "5"});
  const Outcome b = run({"generate", "--kind", "cycle-xor", "--n", "2", "--seed", "5"});
  ASSERT_EQ(a.code, 0);
  EXPECT_EQ(a.out, b.out);
  std::istringstream in(a.out);
  GraphDataset parsed = parse_gspan(in, "gen");
  parsed.name = "cycle_xor";
  EXPECT_EQ(parsed, gen_cycle_xor(2, 5));
}
