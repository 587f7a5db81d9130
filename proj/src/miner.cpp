#include "ein/miner.hpp"

#include <algorithm>
#include <span>
#include <string>

#include "ein/errors.hpp"

namespace ein {

PatternNode::PatternNode(std::size_t id, DfsCode code, Support support, PatternNode* parent)
    : id_(id), code_(std::move(code)), support_(std::move(support)), parent_(parent) {}

namespace {

struct TupleLess {
  bool operator()(const DfsEdge& a, const DfsEdge& b) const { return extension_less(a, b); }
};

struct Extension {
  DfsEdge tuple;
  bool minimal = false;
  Support support;
  std::unique_ptr<OccurrenceList> list;
};

// Depth-first matcher of a DFS code into one graph, tuple by tuple. Each
// embedding is handed to `sink` as the graph node of every code vertex.
template <class Sink>
class Projector {
 public:
  Projector(const DfsCode& code, const LabeledGraph& g, Sink& sink)
      : code_(code), g_(g), sink_(sink), node_of_(code.node_count(), -1), taken_(g.node_count(), 0) {}

  void run() {
    const DfsEdge& first = code_[0];
    for (const Edge& e : g_.edges()) {
      if (e.label != first.edge_label) continue;
      for (const auto& [a, b] : {std::pair{e.u, e.v}, std::pair{e.v, e.u}}) {
        if (g_.node_label(a) != first.from_label || g_.node_label(b) != first.to_label) continue;
        bind(0, a);
        bind(1, b);
        step(1);
        unbind(1);
        unbind(0);
      }
    }
  }

 private:
  void bind(int i, int v) {
    node_of_[i] = v;
    taken_[v] = 1;
  }
  void unbind(int i) {
    taken_[node_of_[i]] = 0;
    node_of_[i] = -1;
  }

  void step(std::size_t k) {
    if (k == code_.size()) {
      sink_(std::span<const int>(node_of_));
      return;
    }
    const DfsEdge& t = code_[k];
    const int x = node_of_[t.from];
    if (!t.is_forward()) {
      const int id = g_.find_edge(x, node_of_[t.to]);
      if (id >= 0 && g_.edge(id).label == t.edge_label) step(k + 1);
      return;
    }
    for (const Incidence& inc : g_.neighbors(x)) {
      if (taken_[inc.neighbor] || g_.node_label(inc.neighbor) != t.to_label ||
          g_.edge(inc.edge).label != t.edge_label) {
        continue;
      }
      bind(t.to, inc.neighbor);
      step(k + 1);
      unbind(t.to);
    }
  }

  const DfsCode& code_;
  const LabeledGraph& g_;
  Sink& sink_;
  std::vector<int> node_of_;
  std::vector<char> taken_;
};

}  // namespace

MiningForest::MiningForest(std::vector<LabeledGraph> graphs, int maxpat, std::size_t node_cap,
                           std::size_t occurrence_budget)
    : graphs_(std::move(graphs)), maxpat_(maxpat), node_cap_(node_cap), budget_(occurrence_budget) {
  if (graphs_.empty()) throw DomainError("cannot mine an empty dataset");
  if (maxpat_ < 1) throw DomainError("maxpat must be at least 1");
  for (const LabeledGraph& g : graphs_) {
    for (Label l : g.node_labels()) node_labels_ = std::max(node_labels_, l + 1);
    for (const Edge& e : g.edges()) edge_labels_ = std::max(edge_labels_, e.label + 1);
  }

  std::map<DfsEdge, Support, TupleLess> groups;
  for (std::size_t gi = 0; gi < graphs_.size(); ++gi) {
    const LabeledGraph& g = graphs_[gi];
    for (const Edge& e : g.edges()) {
      Label a = g.node_label(e.u);
      Label b = g.node_label(e.v);
      if (b < a) std::swap(a, b);
      auto [it, fresh] = groups.try_emplace(DfsEdge{0, 1, a, e.label, b}, graphs_.size());
      it->second.set(gi);
    }
  }
  for (auto& [tuple, support] : groups) {
    roots_.push_back(add_node(DfsCode({tuple}), std::move(support), nullptr));
  }
}

PatternNode* MiningForest::find(const DfsCode& code) const {
  const auto it = index_.find(code);
  return it == index_.end() ? nullptr : it->second;
}

PatternNode* MiningForest::add_node(DfsCode code, Support support, PatternNode* parent) {
  if (nodes_.size() >= node_cap_) {
    throw ResourceError("materialized pattern node cap of " + std::to_string(node_cap_) +
                        " exceeded");
  }
  auto node = std::make_unique<PatternNode>(nodes_.size(), std::move(code), std::move(support), parent);
  PatternNode* raw = node.get();
  const bool inserted = index_.emplace(raw->code(), raw).second;
  if (!inserted) throw Error("duplicate pattern generated: " + to_string(raw->code()));
  nodes_.push_back(std::move(node));
  ++stats_.materialized;
  return raw;
}

OccurrenceList MiningForest::project(const DfsCode& code, const Support& where) const {
  OccurrenceList out;
  out.width = code.node_count();
  for (std::size_t gi = where.find_first(); gi != Support::npos; gi = where.find_next(gi)) {
    const auto sink = [&](std::span<const int> node_of) {
      out.graphs.push_back(static_cast<std::uint32_t>(gi));
      out.nodes.insert(out.nodes.end(), node_of.begin(), node_of.end());
    };
    Projector(code, graphs_[gi], sink).run();
  }
  return out;
}

void MiningForest::store(PatternNode& node, std::unique_ptr<OccurrenceList> list) {
  list->graphs.shrink_to_fit();
  list->nodes.shrink_to_fit();
  cached_bytes_ += list->bytes();
  node.cache_ = std::move(list);
  cached_.push_back(&node);
}

void MiningForest::drop(PatternNode& node) {
  if (!node.cache_) return;
  cached_bytes_ -= node.cache_->bytes();
  node.cache_.reset();
  std::erase(cached_, &node);
}

void MiningForest::evict_all(const PatternNode* keep) {
  for (PatternNode* n : cached_) {
    if (n == keep) continue;
    cached_bytes_ -= n->cache_->bytes();
    n->cache_.reset();
    ++stats_.evictions;
  }
  std::erase_if(cached_, [&](const PatternNode* n) { return n != keep; });
}

const std::vector<PatternNode*>& MiningForest::expand(PatternNode& node) {
  if (node.expanded_) return node.children_;
  if (static_cast<int>(node.size()) >= maxpat_) {
    node.expanded_ = true;
    drop(node);
    return node.children_;
  }
  ++stats_.expansions;

  // Without a cached list the parent's embeddings are regenerated and scanned
  // one at a time.
  std::unique_ptr<OccurrenceList> own = std::move(node.cache_);
  if (own) {
    cached_bytes_ -= own->bytes();
    std::erase(cached_, &node);
  } else {
    ++stats_.projections;
  }

  const DfsCode& code = node.code();
  const std::vector<int> path = code.rightmost_path();
  const int rightmost = path.front();
  const int next = code.node_count();
  const Label min_label = code[0].from_label;
  // Path vertices a backward edge from the rightmost vertex may close on.
  std::vector<char> closable(next, 0);
  for (std::size_t i = 1; i < path.size(); ++i) closable[path[i]] = 1;
  for (const DfsEdge& t : code) {
    if (t.from == rightmost) closable[t.to] = 0;
    if (t.to == rightmost) closable[t.from] = 0;
  }

  // Backward tuples are fixed by (to, edge label), forward ones by
  // (from, edge label, to label); both map to a slot in `groups`.
  const std::size_t backward_slots = static_cast<std::size_t>(next) * edge_labels_;
  std::vector<int> slot(backward_slots + backward_slots * node_labels_, -1);
  std::vector<Extension> groups;
  bool caching = true;
  std::size_t pending = 0;  // occurrence entries gathered for children so far
  const auto extension = [&](const DfsEdge& t) -> Extension* {
    const std::size_t key =
        t.is_forward()
            ? backward_slots +
                  (static_cast<std::size_t>(t.from) * edge_labels_ + t.edge_label) * node_labels_ +
                  t.to_label
            : static_cast<std::size_t>(t.to) * edge_labels_ + t.edge_label;
    if (slot[key] < 0) {
      slot[key] = static_cast<int>(groups.size());
      DfsCode child = code;
      child.push_back(t);
      Extension ext{t, is_min_code(child), Support(graphs_.size()), nullptr};
      if (ext.minimal && caching) {
        ext.list = std::make_unique<OccurrenceList>();
        ext.list->width = t.is_forward() ? next + 1 : next;
      }
      groups.push_back(std::move(ext));
    }
    Extension& ext = groups[slot[key]];
    return ext.minimal ? &ext : nullptr;
  };
  const auto stop_caching = [&] {
    caching = false;
    for (Extension& ext : groups) ext.list.reset();
  };

  std::vector<int> dfs_of;
  const auto scan = [&](std::uint32_t gi, auto node_of) {
    const LabeledGraph& g = graphs_[gi];
    if (dfs_of.size() < static_cast<std::size_t>(g.node_count())) dfs_of.resize(g.node_count(), -1);
    for (int i = 0; i < next; ++i) dfs_of[node_of[i]] = i;

    const auto push = [&](const DfsEdge& t, int new_node) {
      Extension* ext = extension(t);
      if (!ext) return;
      ext->support.set(gi);
      ++stats_.occurrences_generated;
      if (!ext->list) return;
      ext->list->graphs.push_back(gi);
      ext->list->nodes.insert(ext->list->nodes.end(), node_of.begin(), node_of.end());
      if (new_node >= 0) ext->list->nodes.push_back(static_cast<std::uint32_t>(new_node));
      pending += 1 + static_cast<std::size_t>(ext->list->width);
      if (cached_bytes_ + pending * sizeof(std::uint32_t) > budget_) {
        evict_all(nullptr);
        if (pending * sizeof(std::uint32_t) > budget_) stop_caching();
      }
    };

    const int x = static_cast<int>(node_of[rightmost]);
    for (const Incidence& inc : g.neighbors(x)) {
      const int j = dfs_of[inc.neighbor];
      if (j < 0 || !closable[j]) continue;
      push(DfsEdge{rightmost, j, g.node_label(x), g.edge(inc.edge).label, g.node_label(inc.neighbor)},
           -1);
    }
    for (int u : path) {
      const int y = static_cast<int>(node_of[u]);
      for (const Incidence& inc : g.neighbors(y)) {
        const Label target = g.node_label(inc.neighbor);
        if (target < min_label || dfs_of[inc.neighbor] >= 0) continue;
        push(DfsEdge{u, next, g.node_label(y), g.edge(inc.edge).label, target}, inc.neighbor);
      }
    }

    for (int i = 0; i < next; ++i) dfs_of[node_of[i]] = -1;
  };
  if (own) {
    for (std::size_t o = 0; o < own->size(); ++o) scan(own->graphs[o], own->node_of(o));
    own.reset();
  } else {
    const Support& where = node.support();
    for (std::size_t gi = where.find_first(); gi != Support::npos; gi = where.find_next(gi)) {
      const auto sink = [&](std::span<const int> node_of) { scan(static_cast<std::uint32_t>(gi), node_of); };
      Projector(code, graphs_[gi], sink).run();
    }
  }

  std::vector<Extension*> ordered;
  for (Extension& ext : groups) {
    if (ext.minimal && ext.support.any()) ordered.push_back(&ext);
  }
  std::sort(ordered.begin(), ordered.end(),
            [](const Extension* a, const Extension* b) { return extension_less(a->tuple, b->tuple); });
  std::vector<PatternNode*> children;
  for (Extension* ext : ordered) {
    DfsCode child_code = code;
    child_code.push_back(ext->tuple);
    children.push_back(add_node(std::move(child_code), std::move(ext->support), &node));
  }
  for (std::size_t c = 0; c < children.size(); ++c) {
    if (ordered[c]->list && static_cast<int>(children[c]->size()) < maxpat_) {
      store(*children[c], std::move(ordered[c]->list));
    }
  }
  node.children_ = std::move(children);
  node.expanded_ = true;
  return node.children_;
}

std::vector<PatternNode*> MiningForest::enumerate_all() {
  std::vector<PatternNode*> out;
  std::vector<PatternNode*> stack(roots_.rbegin(), roots_.rend());
  while (!stack.empty()) {
    PatternNode* node = stack.back();
    stack.pop_back();
    out.push_back(node);
    const auto& children = expand(*node);
    stack.insert(stack.end(), children.rbegin(), children.rend());
  }
  return out;
}

std::unique_ptr<MiningForest> build_roots(std::vector<LabeledGraph> dataset, int maxpat,
                                          std::size_t node_cap) {
  return std::make_unique<MiningForest>(std::move(dataset), maxpat, node_cap);
}

}  // namespace ein
