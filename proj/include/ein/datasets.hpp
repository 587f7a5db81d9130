#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "ein/graph.hpp"

namespace ein {

/// Labeled graphs with class ids plus the dictionaries mapping every id back
/// to the token it had in the source file.
struct GraphDataset {
  std::string name;
  std::vector<LabeledGraph> graphs;
  std::vector<int> labels;
  std::vector<std::string> node_tokens;
  std::vector<std::string> edge_tokens;
  std::vector<std::string> class_tokens;

  std::size_t size() const { return graphs.size(); }
  // Same dictionaries, graphs picked by index.
  GraphDataset subset(std::span<const std::size_t> indices) const;
  // Throws DomainError when labels and graphs disagree or an id lacks a token.
  void check() const;

  friend bool operator==(const GraphDataset&, const GraphDataset&) = default;
};

/// TUDataset directory (DS_A.txt, DS_graph_indicator.txt, DS_graph_labels.txt,
/// DS_node_labels.txt, optional DS_edge_labels.txt). Attribute files are
/// ignored and self-loops are skipped.
GraphDataset parse_tud(const std::filesystem::path& directory);

/// gSpan text format: "t # <gid> <class>", "v <id> <label>", "e <u> <v> <label>".
GraphDataset parse_gspan(const std::filesystem::path& file);
GraphDataset parse_gspan(std::istream& in, const std::string& source);
void write_gspan(std::ostream& out, const GraphDataset& dataset);

/// Random connected base graph (label 0) with either H_p (two 8-cycles) or
/// H_n (a 9-cycle and a 7-cycle), all labeled 1, attached; y = 1 iff H_p.
GraphDataset gen_cycle(int n_per_class, std::uint64_t seed);

/// Four presence states of (H_p, H_n), y = XOR, padded with 16-node trees
/// so every graph has exactly 32 nodes labeled 1.
GraphDataset gen_cycle_xor(int n_per_quadrant, std::uint64_t seed);

struct Splits {
  GraphDataset train;
  GraphDataset valid;
  GraphDataset test;
};

/// Stratified 6:2:2 split; per class floor(0.2 n_c) go to valid and to test.
Splits split(const GraphDataset& dataset, std::uint64_t seed);

}  // namespace ein
