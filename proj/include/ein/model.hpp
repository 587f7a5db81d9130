#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "ein/errors.hpp"
#include "ein/graph.hpp"
#include "ein/support.hpp"

namespace ein {

enum class Activation { sigmoid, leaky_relu };

inline constexpr double kLeakySlope = 0.01;

std::string to_string(Activation a);
Activation parse_activation(const std::string& name);

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

// Affine map x -> weight * x + bias; weight is (out x in).
template <typename Scalar>
struct Layer {
  Matrix<Scalar> weight;
  Vector<Scalar> bias;
};

/// GML bias b, activation and the FFN parameters. The group weights live
/// with the patterns and enter forward() as a (patterns x K) matrix.
template <typename Scalar>
struct Network {
  Activation activation = Activation::sigmoid;
  Scalar leaky_slope = Scalar(kLeakySlope);
  Vector<Scalar> gml_bias;
  std::vector<Layer<Scalar>> layers;

  Eigen::Index width() const { return gml_bias.size(); }
  Eigen::Index class_count() const { return layers.back().weight.rows(); }
};

template <typename Scalar>
struct ForwardState {
  Matrix<Scalar> h;  // n x K pre-activations
  Matrix<Scalar> a;  // sigma(h)
  std::vector<Matrix<Scalar>> inputs;  // input of each FFN layer; inputs[0] == a
  std::vector<Matrix<Scalar>> hidden;  // pre-activations of hidden FFN layers
  Matrix<Scalar> logits;
  Matrix<Scalar> probabilities;
  Scalar loss = 0;
  Matrix<Scalar> delta;  // d loss / d h, n x K
  std::vector<Layer<Scalar>> ffn_gradients;
};

namespace detail {

template <typename Scalar>
Scalar sigmoid(Scalar x) {
  return x >= 0 ? Scalar(1) / (Scalar(1) + std::exp(-x)) : std::exp(x) / (Scalar(1) + std::exp(x));
}

template <typename Scalar>
Matrix<Scalar> activate(const Matrix<Scalar>& x, Activation act, Scalar slope) {
  if (act == Activation::sigmoid) return x.unaryExpr([](Scalar v) { return sigmoid(v); });
  return x.unaryExpr([slope](Scalar v) { return v > 0 ? v : slope * v; });
}

template <typename Scalar>
Matrix<Scalar> activation_derivative(const Matrix<Scalar>& x, Activation act, Scalar slope) {
  if (act == Activation::sigmoid) {
    return x.unaryExpr([](Scalar v) {
      const Scalar s = sigmoid(v);
      return s * (Scalar(1) - s);
    });
  }
  return x.unaryExpr([slope](Scalar v) { return v > 0 ? Scalar(1) : slope; });
}

template <typename Scalar>
Matrix<Scalar> affine(const Matrix<Scalar>& x, const Layer<Scalar>& layer) {
  Matrix<Scalar> out = x * layer.weight.transpose();
  out.rowwise() += layer.bias.transpose();
  return out;
}

}  // namespace detail

/// Everything downstream of h: FFN, summed cross-entropy, and backprop down
/// to delta = d loss / d h. Labels are output-unit indices.
template <typename Scalar>
ForwardState<Scalar> forward_from_preactivation(Matrix<Scalar> h, const Network<Scalar>& net,
                                                std::span<const int> labels) {
  using detail::activate;
  using detail::activation_derivative;
  const Eigen::Index n = h.rows();
  const Eigen::Index classes = net.class_count();
  if (static_cast<Eigen::Index>(labels.size()) != n) {
    throw DomainError("label count does not match instance count");
  }
  for (int y : labels) {
    if (y < 0 || y >= classes) throw DomainError("unknown class index " + std::to_string(y));
  }

  ForwardState<Scalar> s;
  s.h = std::move(h);
  s.a = activate(s.h, net.activation, net.leaky_slope);
  s.inputs.push_back(s.a);
  const std::size_t depth = net.layers.size();
  for (std::size_t l = 0; l + 1 < depth; ++l) {
    s.hidden.push_back(detail::affine(s.inputs.back(), net.layers[l]));
    s.inputs.push_back(activate(s.hidden.back(), net.activation, net.leaky_slope));
  }
  s.logits = detail::affine(s.inputs.back(), net.layers.back());

  s.probabilities.resize(n, classes);
  Matrix<Scalar> dlogits(n, classes);
  s.loss = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Scalar top = s.logits.row(i).maxCoeff();
    const auto shifted = (s.logits.row(i).array() - top).exp();
    const Scalar total = shifted.sum();
    s.probabilities.row(i) = shifted / total;
    s.loss += top + std::log(total) - s.logits(i, labels[i]);
    dlogits.row(i) = s.probabilities.row(i);
    dlogits(i, labels[i]) -= Scalar(1);
  }
  if (!std::isfinite(static_cast<double>(s.loss))) throw NumericError("non-finite loss");

  s.ffn_gradients.resize(depth);
  Matrix<Scalar> upstream = std::move(dlogits);
  for (std::size_t l = depth; l-- > 0;) {
    s.ffn_gradients[l].weight = upstream.transpose() * s.inputs[l];
    s.ffn_gradients[l].bias = upstream.colwise().sum().transpose();
    Matrix<Scalar> down = upstream * net.layers[l].weight;
    const Matrix<Scalar>& pre = l == 0 ? s.h : s.hidden[l - 1];
    upstream = down.cwiseProduct(activation_derivative(pre, net.activation, net.leaky_slope));
  }
  s.delta = std::move(upstream);
  return s;
}

/// h = features * weights + 1 b^T, then forward_from_preactivation.
/// `features` is (n x patterns) with 0/1 entries, `weights` (patterns x K).
template <typename Scalar, typename FeatureDerived, typename WeightDerived>
ForwardState<Scalar> forward(const Eigen::MatrixBase<FeatureDerived>& features,
                             const Eigen::MatrixBase<WeightDerived>& weights,
                             const Network<Scalar>& net, std::span<const int> labels) {
  Matrix<Scalar> h(features.rows(), net.width());
  if (features.cols() == 0) {
    h.setZero();
  } else {
    h.noalias() = features.template cast<Scalar>() * weights.template cast<Scalar>();
  }
  h.rowwise() += net.gml_bias.transpose();
  return forward_from_preactivation<Scalar>(std::move(h), net, labels);
}

/// (g_H)_k = sum_i delta_ik psi_H(G_i).
template <typename Scalar>
Vector<Scalar> grad_group(const ForwardState<Scalar>& state, const Support& support) {
  Vector<Scalar> g = Vector<Scalar>::Zero(state.delta.cols());
  for (auto i = support.find_first(); i != Support::npos; i = support.find_next(i)) {
    g += state.delta.row(static_cast<Eigen::Index>(i)).transpose();
  }
  return g;
}

template <typename Scalar>
Vector<Scalar> grad_bias(const ForwardState<Scalar>& state) {
  return state.delta.colwise().sum().transpose();
}

template <typename Scalar>
const std::vector<Layer<Scalar>>& grad_ffn(const ForwardState<Scalar>& state) {
  return state.ffn_gradients;
}

/// Glorot-uniform FFN of `depth` affine layers (hidden width K), zero biases.
Network<double> init_network(Eigen::Index width, Eigen::Index classes, int depth,
                             Activation activation, std::uint64_t seed);

struct SelectedPattern {
  DfsCode code;
  Eigen::VectorXd beta;
};

/// Trained predictor: the working-set patterns with their group weights,
/// the network, and the class id carried by each output unit.
struct EinModel {
  std::vector<SelectedPattern> patterns;
  Network<double> network;
  std::vector<int> classes;

  // Patterns with a nonzero group weight.
  std::vector<const SelectedPattern*> selected() const;
  // Output-unit index of a class id; throws DomainError when unknown.
  int class_index(int class_id) const;
};

struct Prediction {
  int class_index = 0;
  int class_id = 0;
  Eigen::VectorXd probabilities;
};

/// Indicator matrix psi(graph, pattern) for the given patterns.
Eigen::MatrixXd pattern_features(std::span<const LabeledGraph> graphs,
                                 std::span<const DfsCode> patterns);

/// Predictions for a batch of graphs; argmax with ties to the lowest index.
std::vector<Prediction> predict(std::span<const LabeledGraph> graphs, const EinModel& model);
Prediction predict(const LabeledGraph& g, const EinModel& model);

}  // namespace ein
