#pragma once

// Fully connected sigmoid networks ANN(j, [k, m], n): j inputs, m hidden
// layers of k units, n outputs, trained by stochastic back-propagation on
// mean square error.

#include "chirp/error.hpp"
#include "chirp/random.hpp"

#include <Eigen/Core>

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace chirp {

struct NetworkSpec {
  std::size_t inputs = 1;         // j
  std::size_t hidden_width = 1;   // k
  std::size_t hidden_layers = 1;  // m
  std::size_t outputs = 2;        // n

  void validate() const {
    if (inputs < 1 || hidden_width < 1 || hidden_layers < 1 || outputs < 1)
      throw InvalidSpec("every layer of " + to_string() + " needs at least one unit");
  }

  /// Units per layer, input layer first.
  std::vector<std::size_t> layer_sizes() const {
    std::vector<std::size_t> sizes{inputs};
    sizes.insert(sizes.end(), hidden_layers, hidden_width);
    sizes.push_back(outputs);
    return sizes;
  }

  /// Weights including one bias per non-input unit.
  std::size_t weight_count() const {
    const auto sizes = layer_sizes();
    std::size_t total = 0;
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) total += (sizes[l] + 1) * sizes[l + 1];
    return total;
  }

  std::string to_string() const {
    return "ANN(" + std::to_string(inputs) + ", [" + std::to_string(hidden_width) + ", " +
           std::to_string(hidden_layers) + "], " + std::to_string(outputs) + ")";
  }

  friend bool operator==(const NetworkSpec&, const NetworkSpec&) = default;
};

template <typename Scalar>
struct BasicNetwork {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  NetworkSpec spec;
  /// One (source + 1) x target matrix per layer pair; row 0 holds biases.
  std::vector<Matrix> weights;
  /// z-score statistics applied to raw inputs.
  Vector input_mean;
  Vector input_std;
  /// Output index -> class name (may be empty for non-classification use).
  std::vector<std::string> labels;
  /// Feature-vector slots that feed the inputs, in input order.
  std::vector<std::size_t> input_slots;

  std::size_t weight_count() const {
    std::size_t total = 0;
    for (const auto& w : weights) total += static_cast<std::size_t>(w.size());
    return total;
  }
};
using Network = BasicNetwork<double>;

inline constexpr double kInitWeightRange = 0.5;
inline constexpr double kMinInputStd = 1e-8;

/// Weights uniform in [-0.5, 0.5]; identity input normalization.
template <typename Scalar = double>
BasicNetwork<Scalar> init_network(const NetworkSpec& spec, std::uint64_t seed) {
  spec.validate();
  using Net = BasicNetwork<Scalar>;
  Net net;
  net.spec = spec;
  Rng rng(seed);
  const auto sizes = spec.layer_sizes();
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    typename Net::Matrix w(static_cast<Eigen::Index>(sizes[l] + 1), static_cast<Eigen::Index>(sizes[l + 1]));
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c)
        w(r, c) = static_cast<Scalar>(rng.uniform(-kInitWeightRange, kInitWeightRange));
    net.weights.push_back(std::move(w));
  }
  const auto j = static_cast<Eigen::Index>(spec.inputs);
  net.input_mean = Net::Vector::Zero(j);
  net.input_std = Net::Vector::Ones(j);
  return net;
}

template <typename Scalar>
Scalar sigmoid(Scalar x) {
  return Scalar(1) / (Scalar(1) + std::exp(-x));
}

namespace detail {

template <typename Scalar, typename Derived>
void check_inputs(const BasicNetwork<Scalar>& net, const Eigen::MatrixBase<Derived>& input) {
  if (static_cast<std::size_t>(input.size()) != net.spec.inputs)
    throw DimensionMismatch(net.spec.to_string() + " expects " + std::to_string(net.spec.inputs) +
                            " inputs, got " + std::to_string(input.size()));
}

/// Fills activations[0..m+1]; activations[0] is the normalized input.
template <typename Scalar, typename Derived>
void forward_pass(const BasicNetwork<Scalar>& net, const Eigen::MatrixBase<Derived>& input,
                  std::vector<typename BasicNetwork<Scalar>::Vector>& activations) {
  activations.resize(net.weights.size() + 1);
  activations[0] = (input.template cast<Scalar>() - net.input_mean).cwiseQuotient(net.input_std);
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    const auto& w = net.weights[l];
    activations[l + 1] = (w.row(0).transpose() + w.bottomRows(w.rows() - 1).transpose() * activations[l])
                             .unaryExpr([](Scalar v) { return sigmoid(v); });
  }
}

}  // namespace detail

/// Output activations for one raw input vector; each lies in (0, 1).
template <typename Scalar, typename Derived>
typename BasicNetwork<Scalar>::Vector forward(const BasicNetwork<Scalar>& net,
                                              const Eigen::MatrixBase<Derived>& input) {
  detail::check_inputs(net, input);
  std::vector<typename BasicNetwork<Scalar>::Vector> activations;
  detail::forward_pass(net, input, activations);
  return std::move(activations.back());
}

/// Index of the largest entry; ties resolve to the lowest index.
template <typename Derived>
std::size_t argmax(const Eigen::MatrixBase<Derived>& v) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i)
    if (v(i) > v(best)) best = i;
  return static_cast<std::size_t>(best);
}

template <typename Scalar>
struct Classification {
  std::size_t index = 0;
  typename BasicNetwork<Scalar>::Vector activations;
};

template <typename Scalar, typename Derived>
Classification<Scalar> classify(const BasicNetwork<Scalar>& net, const Eigen::MatrixBase<Derived>& input) {
  Classification<Scalar> out;
  out.activations = forward(net, input);
  out.index = argmax(out.activations);
  return out;
}

/// Rows are samples. Targets hold one row of n desired outputs per sample.
template <typename Scalar>
struct BasicTrainingSet {
  typename BasicNetwork<Scalar>::Matrix inputs;
  typename BasicNetwork<Scalar>::Matrix targets;

  Eigen::Index size() const { return inputs.rows(); }
};
using TrainingSet = BasicTrainingSet<double>;

template <typename Scalar = double>
typename BasicNetwork<Scalar>::Matrix one_hot(const std::vector<std::size_t>& labels, std::size_t classes) {
  typename BasicNetwork<Scalar>::Matrix t =
      BasicNetwork<Scalar>::Matrix::Zero(static_cast<Eigen::Index>(labels.size()), static_cast<Eigen::Index>(classes));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= classes) throw DimensionMismatch("label " + std::to_string(labels[i]) + " out of range");
    t(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(labels[i])) = Scalar(1);
  }
  return t;
}

template <typename Scalar>
void check_set(const BasicNetwork<Scalar>& net, const BasicTrainingSet<Scalar>& set) {
  if (static_cast<std::size_t>(set.inputs.cols()) != net.spec.inputs ||
      static_cast<std::size_t>(set.targets.cols()) != net.spec.outputs || set.inputs.rows() != set.targets.rows())
    throw DimensionMismatch("training set shape does not match " + net.spec.to_string());
}

/// Fits per-input mean and population standard deviation (floored).
template <typename Scalar>
void fit_input_norm(BasicNetwork<Scalar>& net, const typename BasicNetwork<Scalar>::Matrix& inputs) {
  if (inputs.rows() == 0) throw EmptySet("cannot fit normalization on an empty set");
  net.input_mean = inputs.colwise().mean().transpose();
  const auto centered = inputs.rowwise() - net.input_mean.transpose();
  net.input_std = (centered.array().square().colwise().mean().sqrt().transpose())
                      .max(static_cast<Scalar>(kMinInputStd))
                      .matrix();
}

/// Mean over samples and outputs of the squared output error.
template <typename Scalar>
Scalar mse(const BasicNetwork<Scalar>& net, const BasicTrainingSet<Scalar>& set) {
  check_set(net, set);
  if (set.size() == 0) return Scalar(0);
  std::vector<typename BasicNetwork<Scalar>::Vector> activations;
  Scalar total{};
  for (Eigen::Index i = 0; i < set.size(); ++i) {
    detail::forward_pass(net, set.inputs.row(i).transpose(), activations);
    total += (activations.back() - set.targets.row(i).transpose()).squaredNorm();
  }
  return total / static_cast<Scalar>(set.size() * set.targets.cols());
}

/// Gradient of the single-sample loss (1/n) * sum_k (o_k - t_k)^2 with
/// respect to every weight, shaped like `net.weights`.
template <typename Scalar, typename DerivedX, typename DerivedT>
std::vector<typename BasicNetwork<Scalar>::Matrix> gradient(const BasicNetwork<Scalar>& net,
                                                            const Eigen::MatrixBase<DerivedX>& input,
                                                            const Eigen::MatrixBase<DerivedT>& target) {
  using Vector = typename BasicNetwork<Scalar>::Vector;
  detail::check_inputs(net, input);
  std::vector<Vector> a;
  detail::forward_pass(net, input, a);

  std::vector<typename BasicNetwork<Scalar>::Matrix> grads(net.weights.size());
  const auto n = static_cast<Scalar>(net.spec.outputs);
  Vector delta = (Scalar(2) / n) * (a.back() - target.template cast<Scalar>()).cwiseProduct(
                                       a.back().cwiseProduct((Scalar(1) - a.back().array()).matrix()));
  for (std::size_t l = net.weights.size(); l-- > 0;) {
    auto& g = grads[l];
    g.resize(net.weights[l].rows(), net.weights[l].cols());
    g.row(0) = delta.transpose();
    g.bottomRows(g.rows() - 1) = a[l] * delta.transpose();
    if (l > 0) {
      const auto& w = net.weights[l];
      delta = (w.bottomRows(w.rows() - 1) * delta).cwiseProduct(a[l].cwiseProduct((Scalar(1) - a[l].array()).matrix()));
    }
  }
  return grads;
}

enum class StopReason { TestWorsening, TrainStalled, TargetReached, EpochCap };

constexpr std::string_view stop_reason_name(StopReason r) {
  switch (r) {
    case StopReason::TestWorsening: return "TestWorsening";
    case StopReason::TrainStalled: return "TrainStalled";
    case StopReason::TargetReached: return "TargetReached";
    case StopReason::EpochCap: return "EpochCap";
  }
  return "?";
}

struct TrainingConfig {
  double learning_rate = 0.1;
  double momentum = 0.9;
  std::size_t max_epochs = 10000;
  /// Epochs without a new best test MSE before training stops.
  std::size_t test_patience = 20;
  /// Training stops when train MSE improved by less than `stall_threshold`
  /// over the last `stall_window` epochs.
  std::size_t stall_window = 100;
  double stall_threshold = 1e-6;
  double target_mse = 0.01;
  std::uint64_t seed = 1;

  void validate() const {
    if (!(learning_rate >= 0.0)) throw std::invalid_argument("learning rate must be non-negative");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw std::invalid_argument("momentum must lie in [0, 1)");
    if (test_patience == 0 || stall_window == 0) throw std::invalid_argument("patience and stall window must be positive");
  }
};

template <typename Scalar>
struct TrainingState {
  std::size_t epoch = 0;
  Scalar train_mse{};
  Scalar test_mse{};
  StopReason stop_reason = StopReason::EpochCap;
  /// Epochs actually run; differs from `epoch` when a snapshot is returned.
  std::size_t epochs_run = 0;
};

/// Momentum buffers, shuffle generator and scratch space carried across epochs.
template <typename Scalar>
struct SgdState {
  explicit SgdState(const BasicNetwork<Scalar>& net, std::uint64_t seed) : rng(seed) {
    for (const auto& w : net.weights) velocity.push_back(BasicNetwork<Scalar>::Matrix::Zero(w.rows(), w.cols()));
  }

  std::vector<typename BasicNetwork<Scalar>::Matrix> velocity;
  Rng rng;
  std::vector<Eigen::Index> order;
};

/// One pass of per-sample gradient descent with momentum over a shuffled
/// training set. Returns the training MSE after the pass.
template <typename Scalar>
Scalar train_epoch(BasicNetwork<Scalar>& net, const BasicTrainingSet<Scalar>& set, const TrainingConfig& config,
                   SgdState<Scalar>& state) {
  check_set(net, set);
  if (state.order.size() != static_cast<std::size_t>(set.size())) {
    state.order.resize(static_cast<std::size_t>(set.size()));
    for (std::size_t i = 0; i < state.order.size(); ++i) state.order[i] = static_cast<Eigen::Index>(i);
  }
  state.rng.shuffle(std::span(state.order));

  const auto lr = static_cast<Scalar>(config.learning_rate);
  const auto mom = static_cast<Scalar>(config.momentum);
  for (Eigen::Index i : state.order) {
    const auto grads = gradient(net, set.inputs.row(i).transpose(), set.targets.row(i).transpose());
    for (std::size_t l = 0; l < net.weights.size(); ++l) {
      state.velocity[l] = mom * state.velocity[l] - lr * grads[l];
      net.weights[l] += state.velocity[l];
    }
  }
  return mse(net, set);
}

template <typename Scalar>
struct TrainResult {
  BasicNetwork<Scalar> network;
  TrainingState<Scalar> state;
};

/// Fits input normalization on `train_set`, then runs epochs until the first
/// stopping rule fires: train MSE below target; no new best test MSE for
/// `test_patience` epochs (the best-test snapshot is returned); train MSE
/// stalled; or the epoch cap.
template <typename Scalar>
TrainResult<Scalar> train(BasicNetwork<Scalar> net, const BasicTrainingSet<Scalar>& train_set,
                          const BasicTrainingSet<Scalar>& test_set, const TrainingConfig& config) {
  config.validate();
  if (train_set.size() == 0) throw EmptySet("training set is empty");
  if (test_set.size() == 0) throw EmptySet("test set is empty");
  check_set(net, train_set);
  check_set(net, test_set);

  fit_input_norm(net, train_set.inputs);
  TrainResult<Scalar> result{net, {}};
  result.state.train_mse = mse(net, train_set);
  result.state.test_mse = mse(net, test_set);
  if (config.max_epochs == 0) return result;

  SgdState<Scalar> sgd(net, config.seed);
  BasicNetwork<Scalar> best = net;
  TrainingState<Scalar> best_state = result.state;
  std::size_t since_best = 0;
  std::vector<Scalar> train_history{result.state.train_mse};
  train_history.reserve(config.max_epochs + 1);

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const Scalar train_err = train_epoch(net, train_set, config, sgd);
    const Scalar test_err = mse(net, test_set);
    train_history.push_back(train_err);
    const TrainingState<Scalar> now{epoch, train_err, test_err, StopReason::EpochCap, epoch};

    if (train_err < static_cast<Scalar>(config.target_mse)) {
      result = {std::move(net), now};
      result.state.stop_reason = StopReason::TargetReached;
      return result;
    }
    if (test_err < best_state.test_mse) {
      best = net;
      best_state = now;
      since_best = 0;
    } else if (++since_best >= config.test_patience) {
      result = {std::move(best), best_state};
      result.state.stop_reason = StopReason::TestWorsening;
      result.state.epochs_run = epoch;
      return result;
    }
    if (epoch >= config.stall_window &&
        train_history[epoch - config.stall_window] - train_err < static_cast<Scalar>(config.stall_threshold)) {
      result = {std::move(net), now};
      result.state.stop_reason = StopReason::TrainStalled;
      return result;
    }
    if (epoch == config.max_epochs) result = {net, now};
  }
  result.state.stop_reason = StopReason::EpochCap;
  return result;
}

}  // namespace chirp
