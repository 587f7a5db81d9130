#pragma once

#include <compare>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ein {

using Label = int;

struct Edge {
  int u = 0;
  int v = 0;
  Label label = 0;
};

struct Incidence {
  int neighbor = 0;
  int edge = 0;
};

/// Undirected graph with categorical node labels and edge labels.
///
/// Construction validates the invariants (no self-loops, no parallel edges,
/// endpoints in range, non-negative labels) and throws StructuralError.
class LabeledGraph {
 public:
  LabeledGraph() = default;
  LabeledGraph(std::vector<Label> node_labels, std::vector<Edge> edges);

  int node_count() const { return static_cast<int>(node_labels_.size()); }
  int edge_count() const { return static_cast<int>(edges_.size()); }

  Label node_label(int v) const { return node_labels_[v]; }
  const std::vector<Label>& node_labels() const { return node_labels_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const Edge& edge(int e) const { return edges_[e]; }
  std::span<const Incidence> neighbors(int v) const { return adjacency_[v]; }
  int degree(int v) const { return static_cast<int>(adjacency_[v].size()); }

  // Edge id joining u and v, or -1.
  int find_edge(int u, int v) const;
  bool is_connected() const;

  friend bool operator==(const LabeledGraph& a, const LabeledGraph& b) {
    return a.node_labels_ == b.node_labels_ && a.edges_ == b.edges_;
  }

 private:
  std::vector<Label> node_labels_;
  std::vector<Edge> edges_;
  std::vector<std::vector<Incidence>> adjacency_;
};

inline bool operator==(const Edge& a, const Edge& b) {
  return a.u == b.u && a.v == b.v && a.label == b.label;
}

/// One gSpan extension tuple (i, j, l_i, l_e, l_j). Forward when i < j.
struct DfsEdge {
  int from = 0;
  int to = 0;
  Label from_label = 0;
  Label edge_label = 0;
  Label to_label = 0;

  bool is_forward() const { return from < to; }
  friend bool operator==(const DfsEdge&, const DfsEdge&) = default;
};

// gSpan order between two tuples extending the same code prefix: backward
// before forward; backward by (to, edge label); forward from the deepest
// rightmost-path vertex first, then by (edge label, to label). For the first
// tuple this reduces to (from label, edge label, to label).
bool extension_less(const DfsEdge& a, const DfsEdge& b);

class DfsCode {
 public:
  DfsCode() = default;
  explicit DfsCode(std::vector<DfsEdge> edges) : edges_(std::move(edges)) {}

  std::size_t size() const { return edges_.size(); }
  bool empty() const { return edges_.empty(); }
  const DfsEdge& operator[](std::size_t i) const { return edges_[i]; }
  const std::vector<DfsEdge>& edges() const { return edges_; }
  auto begin() const { return edges_.begin(); }
  auto end() const { return edges_.end(); }

  void push_back(const DfsEdge& e) { edges_.push_back(e); }
  void pop_back() { edges_.pop_back(); }

  int node_count() const;
  // DFS indices from the rightmost vertex back to the root.
  std::vector<int> rightmost_path() const;
  // Label of DFS index v; v must occur in the code.
  Label node_label(int v) const;

  friend bool operator==(const DfsCode&, const DfsCode&) = default;

 private:
  std::vector<DfsEdge> edges_;
};

// Total order on codes: shorter prefix first, otherwise the first differing
// tuple decides by extension_less.
std::strong_ordering compare(const DfsCode& a, const DfsCode& b);

struct DfsCodeLess {
  bool operator()(const DfsCode& a, const DfsCode& b) const { return compare(a, b) < 0; }
};

/// Checks tuple indices, label consistency and the rightmost-path discipline.
/// Throws StructuralError.
void validate(const DfsCode& code);

/// Materializes the pattern a code denotes; DFS index k becomes node k.
LabeledGraph graph_from_code(const DfsCode& code);

/// Minimum DFS code of a connected graph with at least one edge.
DfsCode min_code(const LabeledGraph& g);

bool is_min_code(const DfsCode& code);

/// Non-induced subgraph isomorphism test: is there a label-preserving
/// injective map of h into g that keeps every edge and its label?
bool contains_subgraph(const LabeledGraph& h, const LabeledGraph& g);

/// "i-j-li-le-lj" tuples joined by ';'.
std::string to_string(const DfsCode& code);
DfsCode parse_code(std::string_view text);

std::ostream& operator<<(std::ostream& os, const DfsCode& code);

}  // namespace ein
