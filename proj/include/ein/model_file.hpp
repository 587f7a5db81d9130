#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "ein/model.hpp"

namespace ein {

inline constexpr int kModelFormatVersion = 1;

/// Trained model plus everything needed to read new data with the same
/// label ids. Only patterns with a nonzero group weight are kept.
struct ModelFile {
  EinModel model;
  int k = 0;
  int maxpat = 0;
  std::uint64_t seed = 0;
  std::vector<std::string> class_tokens;  // indexed by class id
  std::vector<std::string> node_tokens;
  std::vector<std::string> edge_tokens;
  double lambda = 0;
  std::string dataset;
  std::uint64_t split_seed = 0;

  // Class token of output unit c.
  const std::string& class_token(int c) const;
};

/// Canonical text: fixed field order, floats with 17 significant digits.
void save_model(std::ostream& out, const ModelFile& file);
void save_model(const std::filesystem::path& path, const ModelFile& file);
/// Throws ParseError on malformed input or non-canonical pattern codes.
ModelFile load_model(std::istream& in, const std::string& source);
ModelFile load_model(const std::filesystem::path& path);

}  // namespace ein
