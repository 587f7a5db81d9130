#include "ein/graph.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "ein/errors.hpp"

namespace ein {

LabeledGraph::LabeledGraph(std::vector<Label> node_labels, std::vector<Edge> edges)
    : node_labels_(std::move(node_labels)), edges_(std::move(edges)) {
  const int n = node_count();
  for (Label l : node_labels_) {
    if (l < 0) throw StructuralError("negative node label " + std::to_string(l));
  }
  adjacency_.resize(n);
  for (int e = 0; e < edge_count(); ++e) {
    const Edge& ed = edges_[e];
    if (ed.u < 0 || ed.u >= n || ed.v < 0 || ed.v >= n) {
      throw StructuralError("edge " + std::to_string(e) + " has an endpoint outside [0, " +
                            std::to_string(n) + ")");
    }
    if (ed.u == ed.v) throw StructuralError("self-loop on node " + std::to_string(ed.u));
    if (ed.label < 0) throw StructuralError("negative edge label " + std::to_string(ed.label));
    if (find_edge(ed.u, ed.v) >= 0) {
      throw StructuralError("parallel edge between " + std::to_string(ed.u) + " and " +
                            std::to_string(ed.v));
    }
    adjacency_[ed.u].push_back({ed.v, e});
    adjacency_[ed.v].push_back({ed.u, e});
  }
}

int LabeledGraph::find_edge(int u, int v) const {
  const auto& a = adjacency_[u].size() <= adjacency_[v].size() ? adjacency_[u] : adjacency_[v];
  const int other = adjacency_[u].size() <= adjacency_[v].size() ? v : u;
  for (const Incidence& inc : a) {
    if (inc.neighbor == other) return inc.edge;
  }
  return -1;
}

bool LabeledGraph::is_connected() const {
  if (node_labels_.empty()) return true;
  std::vector<char> seen(node_labels_.size(), 0);
  std::vector<int> stack{0};
  seen[0] = 1;
  int reached = 1;
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    for (const Incidence& inc : adjacency_[v]) {
      if (!seen[inc.neighbor]) {
        seen[inc.neighbor] = 1;
        ++reached;
        stack.push_back(inc.neighbor);
      }
    }
  }
  return reached == node_count();
}

namespace {

// Pattern nodes in BFS order from the highest-degree node; each node keeps its
// already-placed neighbours so the matcher only checks edges backwards.
struct MatchPlan {
  std::vector<int> order;
  std::vector<int> anchor;  // placed neighbour used to generate candidates, or -1
  std::vector<std::vector<std::pair<int, Label>>> back_edges;  // (placed node, edge label)
};

MatchPlan plan_match(const LabeledGraph& h) {
  const int n = h.node_count();
  MatchPlan plan;
  std::vector<int> position(n, -1);
  while (static_cast<int>(plan.order.size()) < n) {
    int start = -1;
    for (int v = 0; v < n; ++v) {
      if (position[v] < 0 && (start < 0 || h.degree(v) > h.degree(start))) start = v;
    }
    std::vector<int> queue{start};
    position[start] = static_cast<int>(plan.order.size());
    plan.order.push_back(start);
    for (std::size_t q = 0; q < queue.size(); ++q) {
      for (const Incidence& inc : h.neighbors(queue[q])) {
        if (position[inc.neighbor] < 0) {
          position[inc.neighbor] = static_cast<int>(plan.order.size());
          plan.order.push_back(inc.neighbor);
          queue.push_back(inc.neighbor);
        }
      }
    }
  }
  plan.anchor.assign(n, -1);
  plan.back_edges.resize(n);
  for (int k = 0; k < n; ++k) {
    const int v = plan.order[k];
    for (const Incidence& inc : h.neighbors(v)) {
      const int pk = position[inc.neighbor];
      if (pk < k) {
        plan.back_edges[k].emplace_back(inc.neighbor, h.edge(inc.edge).label);
        if (plan.anchor[k] < 0 || pk < position[plan.anchor[k]]) plan.anchor[k] = inc.neighbor;
      }
    }
  }
  return plan;
}

class Matcher {
 public:
  Matcher(const LabeledGraph& h, const LabeledGraph& g)
      : h_(h), g_(g), plan_(plan_match(h)), map_(h.node_count(), -1), used_(g.node_count(), 0) {}

  bool run() { return extend(0); }

 private:
  bool feasible(int v, int w) const {
    if (used_[w] || h_.node_label(v) != g_.node_label(w) || g_.degree(w) < h_.degree(v)) {
      return false;
    }
    return true;
  }

  bool edges_match(int k, int w) const {
    for (const auto& [u, label] : plan_.back_edges[k]) {
      const int e = g_.find_edge(map_[u], w);
      if (e < 0 || g_.edge(e).label != label) return false;
    }
    return true;
  }

  bool place(int k, int v, int w) {
    if (!feasible(v, w) || !edges_match(k, w)) return false;
    map_[v] = w;
    used_[w] = 1;
    if (extend(k + 1)) return true;
    map_[v] = -1;
    used_[w] = 0;
    return false;
  }

  bool extend(int k) {
    if (k == h_.node_count()) return true;
    const int v = plan_.order[k];
    const int anchor = plan_.anchor[k];
    if (anchor >= 0) {
      for (const Incidence& inc : g_.neighbors(map_[anchor])) {
        if (place(k, v, inc.neighbor)) return true;
      }
    } else {
      for (int w = 0; w < g_.node_count(); ++w) {
        if (place(k, v, w)) return true;
      }
    }
    return false;
  }

  const LabeledGraph& h_;
  const LabeledGraph& g_;
  MatchPlan plan_;
  std::vector<int> map_;
  std::vector<char> used_;
};

}  // namespace

bool contains_subgraph(const LabeledGraph& h, const LabeledGraph& g) {
  if (h.node_count() > g.node_count() || h.edge_count() > g.edge_count()) return false;
  return Matcher(h, g).run();
}

}  // namespace ein
