#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "ein/graph.hpp"
#include "ein/support.hpp"

namespace ein {

inline constexpr std::size_t kDefaultNodeCap = 5'000'000;
// Bytes of cached occurrence lists kept across expansions.
inline constexpr std::size_t kDefaultOccurrenceBudget = std::size_t{1} << 28;

/// Every occurrence of a pattern in the training graphs: graph id plus the
/// graph node hosting each DFS index, `width` nodes per occurrence.
struct OccurrenceList {
  int width = 0;
  std::vector<std::uint32_t> graphs;
  std::vector<std::uint32_t> nodes;

  std::size_t size() const { return graphs.size(); }
  std::span<const std::uint32_t> node_of(std::size_t i) const {
    return {nodes.data() + i * static_cast<std::size_t>(width), static_cast<std::size_t>(width)};
  }
  std::size_t bytes() const { return (graphs.capacity() + nodes.capacity()) * sizeof(std::uint32_t); }
};

class MiningForest;

/// A node of the gSpan enumeration tree.
class PatternNode {
 public:
  PatternNode(std::size_t id, DfsCode code, Support support, PatternNode* parent);

  std::size_t id() const { return id_; }
  const DfsCode& code() const { return code_; }
  // Pattern size in edges.
  std::size_t size() const { return code_.size(); }
  const Support& support() const { return support_; }
  PatternNode* parent() const { return parent_; }

  bool expanded() const { return expanded_; }
  const std::vector<PatternNode*>& children() const { return children_; }
  // Occurrences are held only until the node is expanded or evicted.
  bool cached() const { return cache_ != nullptr; }

  // Group weight; an empty vector stands for the zero vector.
  Eigen::VectorXd beta;

 private:
  friend class MiningForest;

  std::size_t id_;
  DfsCode code_;
  Support support_;
  PatternNode* parent_;
  std::vector<PatternNode*> children_;
  std::unique_ptr<OccurrenceList> cache_;
  bool expanded_ = false;
};

struct MiningStats {
  std::size_t materialized = 0;
  std::size_t expansions = 0;
  std::size_t occurrences_generated = 0;
  std::size_t projections = 0;  // occurrence lists rebuilt from the code
  std::size_t evictions = 0;
};

/// Lazily expanded forest of single-edge roots over a fixed training set.
class MiningForest {
 public:
  MiningForest(std::vector<LabeledGraph> graphs, int maxpat, std::size_t node_cap = kDefaultNodeCap,
               std::size_t occurrence_budget = kDefaultOccurrenceBudget);

  MiningForest(const MiningForest&) = delete;
  MiningForest& operator=(const MiningForest&) = delete;

  std::size_t instance_count() const { return graphs_.size(); }
  int maxpat() const { return maxpat_; }
  std::size_t node_cap() const { return node_cap_; }
  std::size_t occurrence_budget() const { return budget_; }
  std::size_t cached_bytes() const { return cached_bytes_; }
  const std::vector<LabeledGraph>& graphs() const { return graphs_; }
  const std::vector<PatternNode*>& roots() const { return roots_; }
  const MiningStats& stats() const { return stats_; }

  // Materialized node with this canonical code, or nullptr.
  PatternNode* find(const DfsCode& code) const;
  std::size_t materialized() const { return nodes_.size(); }
  const std::vector<std::unique_ptr<PatternNode>>& nodes() const { return nodes_; }

  /// Children of `node` in ascending DFS-code order. Computed once, then
  /// served from the cache. Empty at maxpat.
  const std::vector<PatternNode*>& expand(PatternNode& node);

  /// Expands everything down to maxpat; returns all nodes in DFS preorder.
  std::vector<PatternNode*> enumerate_all();

  /// All occurrences of `code` in the training graphs selected by `where`,
  /// found by matching the code tuple by tuple.
  OccurrenceList project(const DfsCode& code, const Support& where) const;

 private:
  PatternNode* add_node(DfsCode code, Support support, PatternNode* parent);
  void store(PatternNode& node, std::unique_ptr<OccurrenceList> list);
  void drop(PatternNode& node);
  void evict_all(const PatternNode* keep);

  std::vector<LabeledGraph> graphs_;
  int maxpat_;
  std::size_t node_cap_;
  std::size_t budget_;
  int node_labels_ = 0;  // 1 + largest node label
  int edge_labels_ = 0;
  std::size_t cached_bytes_ = 0;
  std::vector<PatternNode*> cached_;
  std::vector<std::unique_ptr<PatternNode>> nodes_;
  std::vector<PatternNode*> roots_;
  std::map<DfsCode, PatternNode*, DfsCodeLess> index_;
  MiningStats stats_;
};

/// Builds the single-edge roots. Throws DomainError on an empty dataset or
/// maxpat < 1.
std::unique_ptr<MiningForest> build_roots(std::vector<LabeledGraph> dataset, int maxpat,
                                          std::size_t node_cap = kDefaultNodeCap);

}  // namespace ein
