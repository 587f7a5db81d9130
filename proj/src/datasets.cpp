#include "ein/datasets.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "ein/errors.hpp"

namespace ein {

GraphDataset GraphDataset::subset(std::span<const std::size_t> indices) const {
  GraphDataset out;
  out.name = name;
  out.node_tokens = node_tokens;
  out.edge_tokens = edge_tokens;
  out.class_tokens = class_tokens;
  for (std::size_t i : indices) {
    out.graphs.push_back(graphs.at(i));
    out.labels.push_back(labels.at(i));
  }
  return out;
}

void GraphDataset::check() const {
  if (graphs.size() != labels.size()) throw DomainError("graph and label counts differ");
  const auto in_range = [](int id, const std::vector<std::string>& dict) {
    return id >= 0 && static_cast<std::size_t>(id) < dict.size();
  };
  for (int y : labels) {
    if (!in_range(y, class_tokens)) throw DomainError("class id " + std::to_string(y) + " has no token");
  }
  for (const LabeledGraph& g : graphs) {
    for (Label l : g.node_labels()) {
      if (!in_range(l, node_tokens)) throw DomainError("node label " + std::to_string(l) + " has no token");
    }
    for (const Edge& e : g.edges()) {
      if (!in_range(e.label, edge_tokens)) {
        throw DomainError("edge label " + std::to_string(e.label) + " has no token");
      }
    }
  }
}

namespace {

// Dense ids for a set of tokens: numeric order when every token is an
// integer, lexicographic otherwise.
class Dictionary {
 public:
  void add(const std::string& token) { tokens_.insert(token); }

  std::vector<std::string> finish() {
    std::vector<std::string> out(tokens_.begin(), tokens_.end());
    const bool numeric = std::all_of(out.begin(), out.end(), [](const std::string& t) {
      long long v;
      const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
      return ec == std::errc{} && p == t.data() + t.size();
    });
    if (numeric) {
      std::sort(out.begin(), out.end(),
                [](const std::string& a, const std::string& b) { return std::stoll(a) < std::stoll(b); });
    }
    for (std::size_t i = 0; i < out.size(); ++i) ids_[out[i]] = static_cast<int>(i);
    return out;
  }

  int id(const std::string& token) const { return ids_.at(token); }

 private:
  std::set<std::string> tokens_;
  std::map<std::string, int> ids_;
};

long long parse_integer(std::string_view tok, const std::string& file, std::size_t line) {
  while (!tok.empty() && (tok.front() == ' ' || tok.front() == '\t')) tok.remove_prefix(1);
  while (!tok.empty() && (tok.back() == ' ' || tok.back() == '\t' || tok.back() == '\r')) {
    tok.remove_suffix(1);
  }
  long long v = 0;
  const auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (tok.empty() || ec != std::errc{} || p != tok.data() + tok.size()) {
    throw ParseError(file, line, "expected an integer, got '" + std::string(tok) + "'");
  }
  return v;
}

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

// Non-blank lines of a one-value-per-line file, as trimmed tokens.
std::vector<std::pair<std::size_t, std::string>> read_column(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path.string(), 0, "cannot open file");
  std::vector<std::pair<std::size_t, std::string>> out;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    std::string t = trim(line);
    if (t.empty()) continue;
    parse_integer(t, path.string(), number);
    out.emplace_back(number, std::move(t));
  }
  return out;
}

std::string canonical_token(const std::string& t, const std::string& file, std::size_t line) {
  return std::to_string(parse_integer(t, file, line));
}

}  // namespace

GraphDataset parse_tud(const std::filesystem::path& directory) {
  std::string prefix;
  if (std::filesystem::is_directory(directory)) {
    for (const auto& entry : std::filesystem::directory_iterator(directory)) {
      const std::string f = entry.path().filename().string();
      if (f.size() > 6 && f.ends_with("_A.txt")) prefix = f.substr(0, f.size() - 6);
    }
  }
  if (prefix.empty()) throw ParseError(directory.string(), 0, "no <name>_A.txt file found");
  const auto file = [&](const std::string& suffix) { return directory / (prefix + "_" + suffix); };

  const auto indicator = read_column(file("graph_indicator.txt"));
  const auto graph_labels = read_column(file("graph_labels.txt"));
  const auto node_labels = read_column(file("node_labels.txt"));
  if (node_labels.size() != indicator.size()) {
    throw ParseError(file("node_labels.txt").string(), node_labels.size(),
                     "has " + std::to_string(node_labels.size()) + " labels for " +
                         std::to_string(indicator.size()) + " nodes");
  }

  const std::string indicator_name = file("graph_indicator.txt").string();
  std::vector<long long> graph_of(indicator.size());
  long long graph_count = 0;
  for (std::size_t i = 0; i < indicator.size(); ++i) {
    graph_of[i] = parse_integer(indicator[i].second, indicator_name, indicator[i].first);
    if (graph_of[i] < 1) throw ParseError(indicator_name, indicator[i].first, "graph ids start at 1");
    graph_count = std::max(graph_count, graph_of[i]);
  }
  if (static_cast<long long>(graph_labels.size()) != graph_count) {
    throw ParseError(file("graph_labels.txt").string(), graph_labels.size(),
                     "has " + std::to_string(graph_labels.size()) + " labels for " +
                         std::to_string(graph_count) + " graphs");
  }

  // Local index of each global node inside its graph.
  std::vector<int> local(indicator.size());
  std::vector<std::vector<std::string>> node_tokens(static_cast<std::size_t>(graph_count));
  Dictionary node_dict, edge_dict, class_dict;
  for (std::size_t i = 0; i < indicator.size(); ++i) {
    auto& tokens = node_tokens[static_cast<std::size_t>(graph_of[i] - 1)];
    local[i] = static_cast<int>(tokens.size());
    const std::string t =
        canonical_token(node_labels[i].second, file("node_labels.txt").string(), node_labels[i].first);
    tokens.push_back(t);
    node_dict.add(t);
  }
  std::vector<std::string> class_of(graph_labels.size());
  for (std::size_t g = 0; g < graph_labels.size(); ++g) {
    class_of[g] = canonical_token(graph_labels[g].second, file("graph_labels.txt").string(),
                                  graph_labels[g].first);
    class_dict.add(class_of[g]);
  }

  const std::filesystem::path a_path = file("A.txt");
  const std::filesystem::path el_path = file("edge_labels.txt");
  std::vector<std::pair<std::size_t, std::string>> edge_labels;
  const bool has_edge_labels = std::filesystem::exists(el_path);
  if (has_edge_labels) edge_labels = read_column(el_path);

  std::ifstream in(a_path);
  if (!in) throw ParseError(a_path.string(), 0, "cannot open file");
  struct RawEdge {
    int u, v;
    std::string label;
  };
  std::vector<std::vector<RawEdge>> edges(static_cast<std::size_t>(graph_count));
  std::vector<std::set<std::pair<int, int>>> seen(static_cast<std::size_t>(graph_count));
  std::string line;
  std::size_t number = 0;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++number;
    if (trim(line).empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw ParseError(a_path.string(), number, "expected 'row, col'");
    const long long r = parse_integer(std::string_view(line).substr(0, comma), a_path.string(), number);
    const long long c = parse_integer(std::string_view(line).substr(comma + 1), a_path.string(), number);
    const long long nodes = static_cast<long long>(indicator.size());
    if (r < 1 || r > nodes || c < 1 || c > nodes) {
      throw ParseError(a_path.string(), number, "node id out of range [1, " + std::to_string(nodes) + "]");
    }
    if (graph_of[r - 1] != graph_of[c - 1]) {
      throw ParseError(a_path.string(), number, "edge joins nodes of different graphs");
    }
    std::string label = "0";
    if (has_edge_labels) {
      if (row >= edge_labels.size()) {
        throw ParseError(el_path.string(), edge_labels.size(), "fewer edge labels than edges");
      }
      label = canonical_token(edge_labels[row].second, el_path.string(), edge_labels[row].first);
    }
    ++row;
    if (r == c) continue;
    const std::size_t g = static_cast<std::size_t>(graph_of[r - 1] - 1);
    const int u = local[r - 1];
    const int v = local[c - 1];
    if (!seen[g].insert(std::pair<int, int>(std::minmax(u, v))).second) continue;
    edge_dict.add(label);
    edges[g].push_back({u, v, label});
  }
  if (has_edge_labels && row != edge_labels.size()) {
    throw ParseError(el_path.string(), edge_labels.size(),
                     "has " + std::to_string(edge_labels.size()) + " labels for " +
                         std::to_string(row) + " edge rows");
  }

  GraphDataset ds;
  ds.name = prefix;
  ds.node_tokens = node_dict.finish();
  ds.edge_tokens = edge_dict.finish();
  if (ds.edge_tokens.empty()) ds.edge_tokens = {"0"};
  ds.class_tokens = class_dict.finish();
  for (std::size_t g = 0; g < static_cast<std::size_t>(graph_count); ++g) {
    std::vector<Label> labels;
    for (const std::string& t : node_tokens[g]) labels.push_back(node_dict.id(t));
    std::vector<Edge> es;
    for (const RawEdge& e : edges[g]) es.push_back({e.u, e.v, edge_dict.id(e.label)});
    ds.graphs.emplace_back(std::move(labels), std::move(es));
    ds.labels.push_back(class_dict.id(class_of[g]));
  }
  return ds;
}

GraphDataset parse_gspan(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ParseError(file.string(), 0, "cannot open file");
  GraphDataset ds = parse_gspan(in, file.string());
  ds.name = file.stem().string();
  return ds;
}

GraphDataset parse_gspan(std::istream& in, const std::string& source) {
  struct RawGraph {
    std::string label;
    std::vector<std::string> nodes;
    std::vector<std::tuple<int, int, std::string, std::size_t>> edges;
  };
  std::vector<RawGraph> raw;
  Dictionary node_dict, edge_dict, class_dict;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    std::istringstream fields(line);
    std::vector<std::string> tok;
    for (std::string t; fields >> t;) tok.push_back(t);
    if (tok.empty() || tok[0].starts_with('#')) continue;
    if (tok[0] == "t") {
      if (tok.size() != 4 || tok[1] != "#") {
        throw ParseError(source, number, "expected 't # <gid> <class>'");
      }
      raw.push_back({tok[3], {}, {}});
      class_dict.add(tok[3]);
    } else if (tok[0] == "v") {
      if (raw.empty()) throw ParseError(source, number, "vertex before any 't' line");
      if (tok.size() != 3) throw ParseError(source, number, "expected 'v <id> <label>'");
      const long long id = parse_integer(tok[1], source, number);
      if (id != static_cast<long long>(raw.back().nodes.size())) {
        throw ParseError(source, number, "vertex ids must be consecutive from 0");
      }
      raw.back().nodes.push_back(tok[2]);
      node_dict.add(tok[2]);
    } else if (tok[0] == "e") {
      if (raw.empty() || raw.back().nodes.empty()) {
        throw ParseError(source, number, "edge before any vertex");
      }
      if (tok.size() != 4) throw ParseError(source, number, "expected 'e <u> <v> <label>'");
      const long long u = parse_integer(tok[1], source, number);
      const long long v = parse_integer(tok[2], source, number);
      const long long count = static_cast<long long>(raw.back().nodes.size());
      if (u < 0 || v < 0 || u >= count || v >= count) {
        throw ParseError(source, number, "edge endpoint refers to an undeclared vertex");
      }
      if (u == v) throw ParseError(source, number, "self-loop");
      raw.back().edges.emplace_back(static_cast<int>(u), static_cast<int>(v), tok[3], number);
      edge_dict.add(tok[3]);
    } else {
      throw ParseError(source, number, "unknown record type '" + tok[0] + "'");
    }
  }

  GraphDataset ds;
  ds.name = source;
  ds.node_tokens = node_dict.finish();
  ds.edge_tokens = edge_dict.finish();
  if (ds.edge_tokens.empty()) ds.edge_tokens = {"0"};
  ds.class_tokens = class_dict.finish();
  for (const RawGraph& g : raw) {
    std::vector<Label> labels;
    for (const std::string& t : g.nodes) labels.push_back(node_dict.id(t));
    std::vector<Edge> es;
    std::set<std::pair<int, int>> seen;
    for (const auto& [u, v, t, at] : g.edges) {
      if (!seen.insert(std::pair<int, int>(std::minmax(u, v))).second) throw ParseError(source, at, "parallel edge");
      es.push_back({u, v, edge_dict.id(t)});
    }
    ds.graphs.emplace_back(std::move(labels), std::move(es));
    ds.labels.push_back(class_dict.id(g.label));
  }
  return ds;
}

void write_gspan(std::ostream& out, const GraphDataset& dataset) {
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const LabeledGraph& g = dataset.graphs[i];
    out << "t # " << i << ' ' << dataset.class_tokens.at(dataset.labels[i]) << '\n';
    for (int v = 0; v < g.node_count(); ++v) {
      out << "v " << v << ' ' << dataset.node_tokens.at(g.node_label(v)) << '\n';
    }
    for (const Edge& e : g.edges()) {
      out << "e " << e.u << ' ' << e.v << ' ' << dataset.edge_tokens.at(e.label) << '\n';
    }
  }
}

namespace {

using Rng = std::mt19937_64;

struct Builder {
  std::vector<Label> labels;
  std::vector<Edge> edges;
};

int uniform(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

// 5-10 nodes labeled 0, uniformly chosen node pairs, at most 20 edges,
// resampled until connected.
Builder random_base(Rng& rng) {
  const int n = uniform(rng, 5, 10);
  std::vector<std::pair<int, int>> pairs;
  for (int u = 0; u < n; ++u) {
    for (int v = u + 1; v < n; ++v) pairs.emplace_back(u, v);
  }
  const int most = std::min<int>(20, static_cast<int>(pairs.size()));
  while (true) {
    const int m = uniform(rng, n - 1, most);
    std::shuffle(pairs.begin(), pairs.end(), rng);
    Builder b;
    b.labels.assign(n, 0);
    for (int e = 0; e < m; ++e) b.edges.push_back({pairs[e].first, pairs[e].second, 0});
    if (LabeledGraph(b.labels, b.edges).is_connected()) return b;
  }
}

std::vector<std::pair<int, int>> cycles(std::initializer_list<int> lengths) {
  std::vector<std::pair<int, int>> out;
  int offset = 0;
  for (int len : lengths) {
    for (int i = 0; i < len; ++i) out.emplace_back(offset + i, offset + (i + 1) % len);
    offset += len;
  }
  return out;
}

const std::vector<std::pair<int, int>>& positive_motif() {
  static const auto edges = cycles({8, 8});
  return edges;
}

const std::vector<std::pair<int, int>>& negative_motif() {
  static const auto edges = cycles({9, 7});
  return edges;
}

// Balanced binary tree on 16 nodes.
const std::vector<std::pair<int, int>>& padding_motif() {
  static const auto edges = [] {
    std::vector<std::pair<int, int>> out;
    for (int v = 1; v < 16; ++v) out.emplace_back((v - 1) / 2, v);
    return out;
  }();
  return edges;
}

// Adds a 16-node motif labeled 1 and joins 3-6 distinct motif nodes to one
// random base node.
void attach(Builder& b, int base_nodes, const std::vector<std::pair<int, int>>& motif, Rng& rng) {
  const int offset = static_cast<int>(b.labels.size());
  b.labels.insert(b.labels.end(), 16, 1);
  for (const auto& [u, v] : motif) b.edges.push_back({offset + u, offset + v, 0});
  std::vector<int> nodes(16);
  std::iota(nodes.begin(), nodes.end(), 0);
  std::shuffle(nodes.begin(), nodes.end(), rng);
  const int connect = uniform(rng, 3, 6);
  const int anchor = uniform(rng, 0, base_nodes - 1);
  for (int i = 0; i < connect; ++i) b.edges.push_back({anchor, offset + nodes[i], 0});
}

GraphDataset synthetic(const std::string& name) {
  GraphDataset ds;
  ds.name = name;
  ds.node_tokens = {"0", "1"};
  ds.edge_tokens = {"0"};
  ds.class_tokens = {"0", "1"};
  return ds;
}

}  // namespace

GraphDataset gen_cycle(int n_per_class, std::uint64_t seed) {
  if (n_per_class < 1) throw DomainError("n_per_class must be >= 1");
  Rng rng(seed);
  GraphDataset ds = synthetic("cycle");
  for (int i = 0; i < n_per_class; ++i) {
    for (const int y : {1, 0}) {
      Builder b = random_base(rng);
      const int base = static_cast<int>(b.labels.size());
      attach(b, base, y ? positive_motif() : negative_motif(), rng);
      ds.graphs.emplace_back(std::move(b.labels), std::move(b.edges));
      ds.labels.push_back(y);
    }
  }
  return ds;
}

GraphDataset gen_cycle_xor(int n_per_quadrant, std::uint64_t seed) {
  if (n_per_quadrant < 1) throw DomainError("n_per_quadrant must be >= 1");
  Rng rng(seed);
  GraphDataset ds = synthetic("cycle_xor");
  for (int i = 0; i < n_per_quadrant; ++i) {
    for (const auto& [p, q] : {std::pair{0, 0}, std::pair{0, 1}, std::pair{1, 0}, std::pair{1, 1}}) {
      Builder b = random_base(rng);
      const int base = static_cast<int>(b.labels.size());
      if (p) attach(b, base, positive_motif(), rng);
      if (q) attach(b, base, negative_motif(), rng);
      for (int pad = p + q; pad < 2; ++pad) attach(b, base, padding_motif(), rng);
      ds.graphs.emplace_back(std::move(b.labels), std::move(b.edges));
      ds.labels.push_back(p ^ q);
    }
  }
  return ds;
}

Splits split(const GraphDataset& dataset, std::uint64_t seed) {
  if (dataset.size() < 5) throw DomainError("split needs at least 5 graphs");
  Rng rng(seed);
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < dataset.size(); ++i) by_class[dataset.labels[i]].push_back(i);
  std::vector<std::size_t> train, valid, test;
  for (auto& [label, members] : by_class) {
    std::shuffle(members.begin(), members.end(), rng);
    const std::size_t n_valid = members.size() / 5;
    const std::size_t n_test = members.size() / 5;
    const std::size_t n_train = members.size() - n_valid - n_test;
    if (n_train == 0) throw DomainError("class " + std::to_string(label) + " has no training graph");
    valid.insert(valid.end(), members.begin(), members.begin() + n_valid);
    test.insert(test.end(), members.begin() + n_valid, members.begin() + n_valid + n_test);
    train.insert(train.end(), members.begin() + n_valid + n_test, members.end());
  }
  for (auto* part : {&train, &valid, &test}) std::sort(part->begin(), part->end());
  return {dataset.subset(train), dataset.subset(valid), dataset.subset(test)};
}

}  // namespace ein
