#include <algorithm>
#include <charconv>
#include <ostream>
#include <tuple>

#include "ein/errors.hpp"
#include "ein/graph.hpp"

namespace ein {

bool extension_less(const DfsEdge& a, const DfsEdge& b) {
  const bool af = a.is_forward();
  const bool bf = b.is_forward();
  if (af != bf) return bf;
  if (!af) {
    return std::tie(b.from, a.to, a.edge_label, a.from_label, a.to_label) <
           std::tie(a.from, b.to, b.edge_label, b.from_label, b.to_label);
  }
  return std::tie(b.from, a.from_label, a.edge_label, a.to_label, a.to) <
         std::tie(a.from, b.from_label, b.edge_label, b.to_label, b.to);
}

std::strong_ordering compare(const DfsCode& a, const DfsCode& b) {
  const std::size_t n = std::min(a.size(), b.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (a[i] == b[i]) continue;
    return extension_less(a[i], b[i]) ? std::strong_ordering::less : std::strong_ordering::greater;
  }
  return a.size() <=> b.size();
}

int DfsCode::node_count() const {
  int n = 0;
  for (const DfsEdge& e : edges_) n = std::max({n, e.from + 1, e.to + 1});
  return n;
}

std::vector<int> DfsCode::rightmost_path() const {
  const int n = node_count();
  if (n == 0) return {};
  std::vector<int> parent(n, -1);
  for (const DfsEdge& e : edges_) {
    if (e.is_forward()) parent[e.to] = e.from;
  }
  std::vector<int> path;
  for (int v = n - 1; v >= 0; v = parent[v]) path.push_back(v);
  return path;
}

Label DfsCode::node_label(int v) const {
  for (const DfsEdge& e : edges_) {
    if (e.from == v) return e.from_label;
    if (e.to == v) return e.to_label;
  }
  throw StructuralError("DFS index " + std::to_string(v) + " does not occur in the code");
}

void validate(const DfsCode& code) {
  if (code.empty()) throw StructuralError("empty DFS code");
  std::vector<Label> labels;
  std::vector<int> parent;
  std::vector<std::pair<int, int>> seen;
  for (std::size_t p = 0; p < code.size(); ++p) {
    const DfsEdge& t = code[p];
    const std::string where = "tuple " + std::to_string(p) + ": ";
    if (t.from_label < 0 || t.to_label < 0 || t.edge_label < 0) {
      throw StructuralError(where + "negative label");
    }
    if (p == 0) {
      if (t.from != 0 || t.to != 1) throw StructuralError(where + "first tuple must be (0,1)");
      labels = {t.from_label, t.to_label};
      parent = {-1, 0};
      seen.emplace_back(0, 1);
      continue;
    }
    const int n = static_cast<int>(labels.size());
    const int rightmost = n - 1;
    auto on_path = [&](int v) {
      for (int u = rightmost; u >= 0; u = parent[u]) {
        if (u == v) return true;
      }
      return false;
    };
    if (t.from < 0 || t.to < 0 || t.from >= n || t.to > n) {
      throw StructuralError(where + "index out of range");
    }
    if (labels[t.from] != t.from_label) throw StructuralError(where + "inconsistent source label");
    if (t.is_forward()) {
      if (t.to != n) throw StructuralError(where + "forward edge must create node " + std::to_string(n));
      if (!on_path(t.from)) throw StructuralError(where + "forward edge not from the rightmost path");
      labels.push_back(t.to_label);
      parent.push_back(t.from);
    } else {
      if (t.from == t.to) throw StructuralError(where + "self-loop");
      if (t.from != rightmost) throw StructuralError(where + "backward edge not from the rightmost vertex");
      if (!on_path(t.to)) throw StructuralError(where + "backward edge target not on the rightmost path");
      if (labels[t.to] != t.to_label) throw StructuralError(where + "inconsistent target label");
    }
    const std::pair<int, int> key = std::minmax(t.from, t.to);
    if (std::find(seen.begin(), seen.end(), key) != seen.end()) {
      throw StructuralError(where + "duplicate edge");
    }
    seen.push_back(key);
  }
}

LabeledGraph graph_from_code(const DfsCode& code) {
  validate(code);
  std::vector<Label> labels(code.node_count());
  std::vector<Edge> edges;
  edges.reserve(code.size());
  for (const DfsEdge& t : code) {
    labels[t.from] = t.from_label;
    labels[t.to] = t.to_label;
    edges.push_back({t.from, t.to, t.edge_label});
  }
  return LabeledGraph(std::move(labels), std::move(edges));
}

namespace {

// One way of laying the current code prefix onto the graph.
struct Layout {
  std::vector<int> node_of;  // DFS index -> graph node
  std::vector<int> dfs_of;   // graph node -> DFS index or -1
  std::vector<char> used;    // graph edge already in the code
};

// Calls visit(tuple, edge id, graph target) for every rightmost-path
// extension of `layout`.
template <typename Visit>
void for_each_extension(const LabeledGraph& g, const std::vector<int>& path, const Layout& layout,
                        Visit&& visit) {
  const int rightmost = path.front();
  const int next = static_cast<int>(layout.node_of.size());
  const int x = layout.node_of[rightmost];
  for (const Incidence& inc : g.neighbors(x)) {
    if (layout.used[inc.edge]) continue;
    const int j = layout.dfs_of[inc.neighbor];
    if (j < 0) continue;
    if (std::find(path.begin() + 1, path.end(), j) == path.end()) continue;
    visit(DfsEdge{rightmost, j, g.node_label(x), g.edge(inc.edge).label, g.node_label(inc.neighbor)},
          inc.edge, inc.neighbor);
  }
  for (int u : path) {
    const int y = layout.node_of[u];
    for (const Incidence& inc : g.neighbors(y)) {
      if (layout.dfs_of[inc.neighbor] >= 0) continue;
      visit(DfsEdge{u, next, g.node_label(y), g.edge(inc.edge).label, g.node_label(inc.neighbor)},
            inc.edge, inc.neighbor);
    }
  }
}

// Greedy minimum-code construction. When `target` is given, stops at the
// first tuple where the minimum differs and reports false.
bool build_min_code(const LabeledGraph& g, DfsCode& code, const DfsCode* target) {
  if (g.edge_count() == 0) throw DomainError("min_code requires at least one edge");
  if (!g.is_connected()) throw DomainError("min_code requires a connected graph");

  std::vector<Layout> layouts;
  DfsEdge best;
  bool have = false;
  for (const Edge& e : g.edges()) {
    for (const auto& [a, b] : {std::pair{e.u, e.v}, std::pair{e.v, e.u}}) {
      const DfsEdge t{0, 1, g.node_label(a), e.label, g.node_label(b)};
      if (!have || extension_less(t, best)) {
        best = t;
        have = true;
      }
    }
  }
  if (target && !(best == (*target)[0])) return false;
  for (int id = 0; id < g.edge_count(); ++id) {
    const Edge& e = g.edge(id);
    for (const auto& [a, b] : {std::pair{e.u, e.v}, std::pair{e.v, e.u}}) {
      if (g.node_label(a) != best.from_label || e.label != best.edge_label ||
          g.node_label(b) != best.to_label) {
        continue;
      }
      Layout l;
      l.node_of = {a, b};
      l.dfs_of.assign(g.node_count(), -1);
      l.dfs_of[a] = 0;
      l.dfs_of[b] = 1;
      l.used.assign(g.edge_count(), 0);
      l.used[id] = 1;
      layouts.push_back(std::move(l));
    }
  }
  code = DfsCode({best});

  while (static_cast<int>(code.size()) < g.edge_count()) {
    const std::vector<int> path = code.rightmost_path();
    have = false;
    for (const Layout& l : layouts) {
      for_each_extension(g, path, l, [&](const DfsEdge& t, int, int) {
        if (!have || extension_less(t, best)) {
          best = t;
          have = true;
        }
      });
    }
    if (target && !(best == (*target)[code.size()])) return false;
    std::vector<Layout> next;
    for (const Layout& l : layouts) {
      for_each_extension(g, path, l, [&](const DfsEdge& t, int edge, int target_node) {
        if (!(t == best)) return;
        Layout grown = l;
        grown.used[edge] = 1;
        if (t.is_forward()) {
          grown.dfs_of[target_node] = static_cast<int>(grown.node_of.size());
          grown.node_of.push_back(target_node);
        }
        next.push_back(std::move(grown));
      });
    }
    layouts = std::move(next);
    code.push_back(best);
  }
  return true;
}

}  // namespace

DfsCode min_code(const LabeledGraph& g) {
  DfsCode code;
  build_min_code(g, code, nullptr);
  return code;
}

bool is_min_code(const DfsCode& code) {
  const LabeledGraph g = graph_from_code(code);
  DfsCode scratch;
  return build_min_code(g, scratch, &code);
}

std::string to_string(const DfsCode& code) {
  std::string out;
  for (std::size_t i = 0; i < code.size(); ++i) {
    const DfsEdge& t = code[i];
    if (i) out += ';';
    out += std::to_string(t.from) + '-' + std::to_string(t.to) + '-' + std::to_string(t.from_label) +
           '-' + std::to_string(t.edge_label) + '-' + std::to_string(t.to_label);
  }
  return out;
}

DfsCode parse_code(std::string_view text) {
  std::vector<DfsEdge> tuples;
  while (!text.empty()) {
    const std::size_t semi = text.find(';');
    std::string_view item = text.substr(0, semi);
    text = semi == std::string_view::npos ? std::string_view{} : text.substr(semi + 1);
    int fields[5];
    for (int f = 0; f < 5; ++f) {
      const std::size_t dash = item.find('-');
      const std::string_view tok = item.substr(0, dash);
      const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), fields[f]);
      if (ec != std::errc{} || ptr != tok.data() + tok.size() || tok.empty() ||
          (f < 4) == (dash == std::string_view::npos)) {
        throw StructuralError("malformed DFS code tuple '" + std::string(item) + "'");
      }
      item = dash == std::string_view::npos ? std::string_view{} : item.substr(dash + 1);
    }
    tuples.push_back({fields[0], fields[1], fields[2], fields[3], fields[4]});
  }
  DfsCode code(std::move(tuples));
  validate(code);
  return code;
}

std::ostream& operator<<(std::ostream& os, const DfsCode& code) { return os << to_string(code); }

}  // namespace ein
