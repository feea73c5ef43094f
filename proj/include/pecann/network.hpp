#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "pecann/errors.hpp"

namespace pecann {

/// Layer sizes of a dense tanh network and the offsets of each layer's
/// parameters inside the flat parameter vector.
///
/// Flat layout is layer-major: for layer k the weight matrix of shape
/// (sizes[k+1], sizes[k]) is stored column-major, immediately followed by
/// its bias of length sizes[k+1].
class NetworkShape {
 public:
  NetworkShape() = default;

  explicit NetworkShape(std::vector<int> layer_sizes) : sizes_(std::move(layer_sizes)) {
    if (sizes_.size() < 2) {
      throw ConfigurationError("network needs at least an input and an output layer");
    }
    for (int s : sizes_) {
      if (s < 1) throw ConfigurationError("layer sizes must be positive");
    }
    std::size_t offset = 0;
    for (std::size_t k = 0; k + 1 < sizes_.size(); ++k) {
      weight_offsets_.push_back(offset);
      offset += static_cast<std::size_t>(sizes_[k + 1]) * sizes_[k];
      bias_offsets_.push_back(offset);
      offset += sizes_[k + 1];
    }
    parameter_count_ = offset;
  }

  const std::vector<int>& layer_sizes() const noexcept { return sizes_; }
  int input_dim() const { return sizes_.front(); }
  int output_dim() const { return sizes_.back(); }
  int layer_count() const { return static_cast<int>(sizes_.size()) - 1; }
  int fan_in(int layer) const { return sizes_[layer]; }
  int fan_out(int layer) const { return sizes_[layer + 1]; }
  std::size_t parameter_count() const noexcept { return parameter_count_; }
  std::size_t weight_offset(int layer) const { return weight_offsets_[layer]; }
  std::size_t bias_offset(int layer) const { return bias_offsets_[layer]; }

  std::string describe() const {
    std::string out;
    for (std::size_t k = 0; k < sizes_.size(); ++k) {
      if (k) out += 'x';
      out += std::to_string(sizes_[k]);
    }
    return out;
  }

  bool operator==(const NetworkShape& other) const { return sizes_ == other.sizes_; }

 private:
  std::vector<int> sizes_;
  std::vector<std::size_t> weight_offsets_;
  std::vector<std::size_t> bias_offsets_;
  std::size_t parameter_count_ = 0;
};

using ConstMatrixMap = Eigen::Map<const Eigen::MatrixXd>;
using ConstVectorMap = Eigen::Map<const Eigen::VectorXd>;
using MatrixMap = Eigen::Map<Eigen::MatrixXd>;
using VectorMap = Eigen::Map<Eigen::VectorXd>;

inline ConstMatrixMap layer_weights(const NetworkShape& shape, std::span<const double> theta, int layer) {
  return ConstMatrixMap(theta.data() + shape.weight_offset(layer), shape.fan_out(layer), shape.fan_in(layer));
}

inline ConstVectorMap layer_bias(const NetworkShape& shape, std::span<const double> theta, int layer) {
  return ConstVectorMap(theta.data() + shape.bias_offset(layer), shape.fan_out(layer));
}

/// Multilayer perceptron with tanh hidden layers and a linear output layer.
/// Parameters live in a single flat vector (see NetworkShape for the order).
class DenseNetwork {
 public:
  DenseNetwork() = default;

  /// All parameters zero.
  explicit DenseNetwork(NetworkShape shape)
      : shape_(std::move(shape)), parameters_(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(shape_.parameter_count()))) {}

  DenseNetwork(NetworkShape shape, Eigen::VectorXd parameters) : shape_(std::move(shape)) {
    unflatten(parameters);
  }

  const NetworkShape& shape() const noexcept { return shape_; }
  int input_dim() const { return shape_.input_dim(); }
  int output_dim() const { return shape_.output_dim(); }
  std::size_t parameter_count() const { return shape_.parameter_count(); }

  std::span<const double> parameters() const {
    return {parameters_.data(), static_cast<std::size_t>(parameters_.size())};
  }

  Eigen::VectorXd flatten() const { return parameters_; }

  void unflatten(const Eigen::VectorXd& flat) {
    if (static_cast<std::size_t>(flat.size()) != shape_.parameter_count()) {
      throw ConfigurationError("parameter vector length " + std::to_string(flat.size()) +
                               " does not match network " + shape_.describe());
    }
    if (!flat.allFinite()) throw EvaluationError("non-finite network parameter");
    parameters_ = flat;
  }

  ConstMatrixMap weights(int layer) const { return layer_weights(shape_, parameters(), layer); }
  ConstVectorMap bias(int layer) const { return layer_bias(shape_, parameters(), layer); }

  MatrixMap mutable_weights(int layer) {
    return MatrixMap(parameters_.data() + shape_.weight_offset(layer), shape_.fan_out(layer), shape_.fan_in(layer));
  }
  VectorMap mutable_bias(int layer) {
    return VectorMap(parameters_.data() + shape_.bias_offset(layer), shape_.fan_out(layer));
  }

 private:
  NetworkShape shape_;
  Eigen::VectorXd parameters_;
};

/// Glorot-uniform weights, zero biases. Deterministic for a given seed.
inline DenseNetwork init_network(std::vector<int> layer_sizes, std::uint64_t seed) {
  DenseNetwork net{NetworkShape(std::move(layer_sizes))};
  std::mt19937_64 rng(seed);
  for (int k = 0; k < net.shape().layer_count(); ++k) {
    const int fan_in = net.shape().fan_in(k);
    const int fan_out = net.shape().fan_out(k);
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    auto w = net.mutable_weights(k);
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
      for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = dist(rng);
    }
    net.mutable_bias(k).setZero();
  }
  return net;
}

}  // namespace pecann
