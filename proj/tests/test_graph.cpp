#include <gtest/gtest.h>

#include <random>
#include <set>

#include "ein/errors.hpp"
#include "ein/graph.hpp"
#include "oracles.hpp"

using namespace ein;

namespace {

LabeledGraph triangle(Label a = 0) { return LabeledGraph({a, a, a}, {{0, 1, 0}, {1, 2, 0}, {2, 0, 0}}); }

LabeledGraph path(std::vector<Label> labels) {
  std::vector<Edge> edges;
  for (int v = 1; v < static_cast<int>(labels.size()); ++v) edges.push_back({v - 1, v, 0});
  return LabeledGraph(labels, edges);
}

}  // namespace

TEST(LabeledGraph, RejectsSelfLoopsParallelEdgesAndBadEndpoints) {
  EXPECT_THROW(LabeledGraph({0, 0}, {{0, 0, 0}}), StructuralError);
  EXPECT_THROW(LabeledGraph({0, 0}, {{0, 1, 0}, {1, 0, 0}}), StructuralError);
  EXPECT_THROW(LabeledGraph({0, 0}, {{0, 2, 0}}), StructuralError);
  EXPECT_THROW(LabeledGraph({-1, 0}, {{0, 1, 0}}), StructuralError);
  EXPECT_THROW(LabeledGraph({0, 0}, {{0, 1, -2}}), StructuralError);
}

TEST(LabeledGraph, AdjacencyAndConnectivity) {
  const LabeledGraph g({0, 1, 2, 3}, {{0, 1, 0}, {1, 2, 1}});
  EXPECT_EQ(g.degree(1), 2);
  EXPECT_EQ(g.find_edge(2, 1), 1);
  EXPECT_EQ(g.find_edge(0, 2), -1);
  EXPECT_FALSE(g.is_connected());
  EXPECT_TRUE(triangle().is_connected());
}

TEST(GraphFromCode, SingleEdge) {
  const LabeledGraph g = graph_from_code(DfsCode({{0, 1, 3, 0, 5}}));
  EXPECT_EQ(g.node_count(), 2);
  EXPECT_EQ(g.edge_count(), 1);
  EXPECT_EQ(g.node_label(0), 3);
  EXPECT_EQ(g.node_label(1), 5);
}

TEST(GraphFromCode, Triangle) {
  const LabeledGraph g = graph_from_code(DfsCode({{0, 1, 0, 0, 0}, {1, 2, 0, 0, 0}, {2, 0, 0, 0, 0}}));
  EXPECT_EQ(g.node_count(), 3);
  EXPECT_EQ(g.edge_count(), 3);
  EXPECT_TRUE(g.is_connected());
  EXPECT_EQ(oracle::canonical(g), oracle::canonical(triangle()));
}

TEST(GraphFromCode, MalformedCodesThrow) {
  EXPECT_THROW(graph_from_code(DfsCode()), StructuralError);
  EXPECT_THROW(graph_from_code(DfsCode({{1, 2, 0, 0, 0}})), StructuralError);
  EXPECT_THROW(graph_from_code(DfsCode({{0, 1, 0, 0, 0}, {1, 3, 0, 0, 0}})), StructuralError);
  EXPECT_THROW(graph_from_code(DfsCode({{0, 1, 0, 0, 0}, {1, 0, 0, 0, 0}})), StructuralError);
  EXPECT_THROW(graph_from_code(DfsCode({{0, 1, 0, 0, 0}, {1, 2, 1, 0, 0}})), StructuralError);
  EXPECT_THROW(parse_code("0-1-0-0"), StructuralError);
  EXPECT_THROW(parse_code("0-1-0-0-x"), StructuralError);
}

TEST(GraphFromCode, RandomCanonicalCodesRoundTrip) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const LabeledGraph g = oracle::random_connected(rng, 5, 2, 3, 2);
    if (g.edge_count() != 5) continue;
    const DfsCode code = min_code(g);
    ASSERT_EQ(code.size(), 5u);
    EXPECT_EQ(min_code(graph_from_code(code)), code);
    EXPECT_EQ(parse_code(to_string(code)), code);
  }
}

TEST(MinCode, SingleEdgeOrdersLabels) {
  const DfsCode code = min_code(LabeledGraph({4, 2}, {{0, 1, 1}}));
  EXPECT_EQ(code, DfsCode({{0, 1, 2, 1, 4}}));
  EXPECT_EQ(to_string(code), "0-1-2-1-4");
}

TEST(MinCode, RejectsDisconnectedAndEdgeless) {
  EXPECT_THROW(min_code(LabeledGraph({0}, {})), DomainError);
  EXPECT_THROW(min_code(LabeledGraph({0, 0, 0, 0}, {{0, 1, 0}, {2, 3, 0}})), DomainError);
}

TEST(MinCode, RelabeledPathsAgree) {
  const LabeledGraph a = path({1, 2, 3, 1});
  const LabeledGraph b({3, 1, 1, 2}, {{1, 3, 0}, {3, 0, 0}, {0, 2, 0}});
  EXPECT_EQ(min_code(a), min_code(b));
  EXPECT_NE(min_code(a), min_code(path({1, 2, 1, 3})));
}

TEST(MinCode, FourNodeGraphClassesMatchBruteForce) {
  // Every edge subset of K4 touching all four nodes and connected.
  std::vector<Edge> k4;
  for (int u = 0; u < 4; ++u) {
    for (int v = u + 1; v < 4; ++v) k4.push_back({u, v, 0});
  }
  std::set<std::string> classes;
  std::set<std::string> codes;
  for (int mask = 1; mask < 64; ++mask) {
    std::vector<Edge> edges;
    for (int e = 0; e < 6; ++e) {
      if (mask >> e & 1) edges.push_back(k4[e]);
    }
    const LabeledGraph g({0, 0, 0, 0}, edges);
    if (!g.is_connected()) continue;
    classes.insert(oracle::canonical(g));
    codes.insert(to_string(min_code(g)));
  }
  EXPECT_EQ(classes.size(), 6u);
  EXPECT_EQ(codes.size(), classes.size());
}

TEST(MinCode, EqualsMinimumOverAllDfsCodes) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 60; ++trial) {
    const LabeledGraph g = oracle::random_connected(rng, 3 + trial % 4, trial % 4, 2, 2);
    const std::vector<DfsCode> all = oracle::all_dfs_codes(g);
    ASSERT_FALSE(all.empty());
    const DfsCode best = *std::min_element(all.begin(), all.end(), DfsCodeLess{});
    EXPECT_EQ(min_code(g), best) << to_string(min_code(g)) << " vs " << to_string(best);
    for (const DfsCode& c : all) EXPECT_EQ(is_min_code(c), c == best) << to_string(c);
  }
}

TEST(MinCode, InvariantUnderNodePermutation) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    const LabeledGraph g = oracle::random_connected(rng, 7, 4, 3, 2);
    const LabeledGraph p = oracle::permuted(g, rng);
    EXPECT_EQ(min_code(g), min_code(p));
    const LabeledGraph back = graph_from_code(min_code(g));
    EXPECT_EQ(back.node_count(), g.node_count());
    EXPECT_EQ(back.edge_count(), g.edge_count());
    EXPECT_TRUE(contains_subgraph(back, g));
    EXPECT_TRUE(contains_subgraph(g, back));
  }
}

TEST(IsMinCode, Triangle) {
  const DfsCode canonical({{0, 1, 0, 0, 0}, {1, 2, 0, 0, 0}, {2, 0, 0, 0, 0}});
  EXPECT_TRUE(is_min_code(canonical));
  // Labeled triangle A, A, B: starting the traversal at B is not minimal.
  const LabeledGraph g({0, 0, 1}, {{0, 1, 0}, {1, 2, 0}, {2, 0, 0}});
  const DfsCode from_b({{0, 1, 1, 0, 0}, {1, 2, 0, 0, 0}, {2, 0, 0, 0, 1}});
  EXPECT_FALSE(is_min_code(from_b));
  std::set<std::string> distinct;
  std::set<std::string> minimal;
  for (const DfsCode& c : oracle::all_dfs_codes(g)) {
    distinct.insert(to_string(c));
    if (is_min_code(c)) minimal.insert(to_string(c));
  }
  EXPECT_GT(distinct.size(), 1u);
  EXPECT_EQ(minimal.size(), 1u);
}

TEST(ContainsSubgraph, SimpleCases) {
  const LabeledGraph ab({0, 1}, {{0, 1, 0}});
  EXPECT_TRUE(contains_subgraph(ab, LabeledGraph({2, 1, 0}, {{0, 1, 0}, {1, 2, 0}})));
  EXPECT_FALSE(contains_subgraph(ab, LabeledGraph({0, 1}, {{0, 1, 1}})));
  std::mt19937_64 rng(3);
  for (int i = 0; i < 20; ++i) {
    EXPECT_FALSE(contains_subgraph(triangle(), oracle::random_connected(rng, 8, 0, 1, 1)));
  }
  EXPECT_TRUE(contains_subgraph(path({0, 0, 0}), triangle()));
}

TEST(ContainsSubgraph, MatchesExhaustiveInjectionSearch) {
  std::mt19937_64 rng(19);
  int positives = 0;
  for (int trial = 0; trial < 400; ++trial) {
    const int hn = 2 + static_cast<int>(rng() % 4);
    const LabeledGraph h = oracle::random_connected(rng, hn, static_cast<int>(rng() % 2), 2, 2);
    if (h.edge_count() > 4) continue;
    const LabeledGraph g = oracle::random_connected(rng, 5 + static_cast<int>(rng() % 4), 6, 2, 2);
    const bool expected = oracle::contains(h, g);
    positives += expected ? 1 : 0;
    EXPECT_EQ(contains_subgraph(h, g), expected);
  }
  EXPECT_GT(positives, 20);
}

TEST(ContainsSubgraph, ReflexiveAndTransitive) {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 50; ++trial) {
    const LabeledGraph g = oracle::random_connected(rng, 7, 3, 2, 1);
    EXPECT_TRUE(contains_subgraph(g, g));
    const LabeledGraph mid = oracle::edge_subgraph(g, {0, 1, 2, 3});
    const LabeledGraph low = oracle::edge_subgraph(g, {0, 1});
    if (mid.edge_count() == 0 || low.edge_count() == 0) continue;
    ASSERT_TRUE(contains_subgraph(low, mid));
    ASSERT_TRUE(contains_subgraph(mid, g));
    EXPECT_TRUE(contains_subgraph(low, g));
  }
}
