#include "ein/model.hpp"

#include <algorithm>
#include <random>

namespace ein {

std::string to_string(Activation a) { return a == Activation::sigmoid ? "sigmoid" : "leakyrelu"; }

Activation parse_activation(const std::string& name) {
  if (name == "sigmoid") return Activation::sigmoid;
  if (name == "leakyrelu" || name == "leaky_relu") return Activation::leaky_relu;
  throw DomainError("unknown activation '" + name + "'");
}

Network<double> init_network(Eigen::Index width, Eigen::Index classes, int depth,
                             Activation activation, std::uint64_t seed) {
  if (width < 1 || classes < 2 || depth < 1) {
    throw DomainError("network needs K >= 1, at least two classes and depth >= 1");
  }
  std::mt19937_64 rng(seed);
  Network<double> net;
  net.activation = activation;
  net.gml_bias = Eigen::VectorXd::Zero(width);
  for (int l = 0; l < depth; ++l) {
    const Eigen::Index out = l + 1 == depth ? classes : width;
    const double range = std::sqrt(6.0 / static_cast<double>(width + out));
    std::uniform_real_distribution<double> uniform(-range, range);
    Layer<double> layer{Eigen::MatrixXd(out, width), Eigen::VectorXd::Zero(out)};
    for (Eigen::Index r = 0; r < out; ++r) {
      for (Eigen::Index c = 0; c < width; ++c) layer.weight(r, c) = uniform(rng);
    }
    net.layers.push_back(std::move(layer));
  }
  return net;
}

std::vector<const SelectedPattern*> EinModel::selected() const {
  std::vector<const SelectedPattern*> out;
  for (const SelectedPattern& p : patterns) {
    if (p.beta.size() > 0 && !p.beta.isZero(0.0)) out.push_back(&p);
  }
  return out;
}

int EinModel::class_index(int class_id) const {
  const auto it = std::find(classes.begin(), classes.end(), class_id);
  if (it == classes.end()) throw DomainError("unknown class id " + std::to_string(class_id));
  return static_cast<int>(it - classes.begin());
}

Eigen::MatrixXd pattern_features(std::span<const LabeledGraph> graphs,
                                 std::span<const DfsCode> patterns) {
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(graphs.size()),
                                            static_cast<Eigen::Index>(patterns.size()));
  for (std::size_t p = 0; p < patterns.size(); ++p) {
    const LabeledGraph pattern = graph_from_code(patterns[p]);
    for (std::size_t i = 0; i < graphs.size(); ++i) {
      if (contains_subgraph(pattern, graphs[i])) {
        x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(p)) = 1.0;
      }
    }
  }
  return x;
}

std::vector<Prediction> predict(std::span<const LabeledGraph> graphs, const EinModel& model) {
  std::vector<DfsCode> codes;
  Eigen::MatrixXd weights(static_cast<Eigen::Index>(model.patterns.size()), model.network.width());
  for (std::size_t p = 0; p < model.patterns.size(); ++p) {
    codes.push_back(model.patterns[p].code);
    weights.row(static_cast<Eigen::Index>(p)) = model.patterns[p].beta.transpose();
  }
  const Eigen::MatrixXd features = pattern_features(graphs, codes);
  const std::vector<int> dummy(graphs.size(), 0);
  const ForwardState<double> state = forward(features, weights, model.network, dummy);

  std::vector<Prediction> out;
  out.reserve(graphs.size());
  for (Eigen::Index i = 0; i < state.probabilities.rows(); ++i) {
    Prediction p;
    p.probabilities = state.probabilities.row(i).transpose();
    for (Eigen::Index c = 1; c < p.probabilities.size(); ++c) {
      if (p.probabilities(c) > p.probabilities(p.class_index)) p.class_index = static_cast<int>(c);
    }
    p.class_id = model.classes[p.class_index];
    out.push_back(std::move(p));
  }
  return out;
}

Prediction predict(const LabeledGraph& g, const EinModel& model) {
  return predict(std::span<const LabeledGraph>(&g, 1), model).front();
}

}  // namespace ein
