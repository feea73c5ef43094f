#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <span>
#include <vector>

#include "pecann/errors.hpp"
#include "pecann/network.hpp"

namespace pecann {

/// Elementwise tanh through the vectorized exponential. Absolute error is
/// at rounding level; saturates exactly to +-1.
template <class Derived>
Eigen::ArrayXXd tanh_array(const Eigen::ArrayBase<Derived>& z) {
  const Eigen::ArrayXXd e = (2.0 * z).exp();
  return 1.0 - 2.0 / (e + 1.0);
}

/// Which input derivatives to propagate. `order[i]` is 0, 1 (first
/// derivative in input i) or 2 (first and pure second derivative).
///
/// Channels are laid out as: value, then one first-derivative channel per
/// input with order >= 1 (ascending input index), then one second-derivative
/// channel per input with order == 2.
class JetRequest {
 public:
  JetRequest() = default;

  explicit JetRequest(std::vector<int> order) : order_(std::move(order)) {
    d1_.assign(order_.size(), -1);
    d2_.assign(order_.size(), -1);
    int channel = 1;
    for (std::size_t i = 0; i < order_.size(); ++i) {
      if (order_[i] < 0 || order_[i] > 2) throw ConfigurationError("derivative order must be 0, 1 or 2");
      if (order_[i] >= 1) d1_[i] = channel++;
    }
    for (std::size_t i = 0; i < order_.size(); ++i) {
      if (order_[i] == 2) d2_[i] = channel++;
    }
    channels_ = channel;
  }

  static JetRequest value_only(int input_dim) { return JetRequest(std::vector<int>(input_dim, 0)); }
  static JetRequest full(int input_dim) { return JetRequest(std::vector<int>(input_dim, 2)); }

  int input_dim() const { return static_cast<int>(order_.size()); }
  int channels() const { return channels_; }
  int order(int dim) const { return order_[dim]; }
  /// Channel index of d/dx_dim, or -1 when not requested.
  int d1_channel(int dim) const { return d1_[dim]; }
  /// Channel index of d^2/dx_dim^2, or -1 when not requested.
  int d2_channel(int dim) const { return d2_[dim]; }

  /// Elementwise maximum of two requests over the same inputs.
  JetRequest merged(const JetRequest& other) const {
    std::vector<int> out(order_);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::max(out[i], other.order_[i]);
    return JetRequest(std::move(out));
  }

 private:
  std::vector<int> order_;
  std::vector<int> d1_;
  std::vector<int> d2_;
  int channels_ = 1;
};

/// Forward propagation of values and input derivatives through a tanh MLP
/// for a batch of points, keeping what the reverse pass needs.
///
/// All matrices are stacked by channel: a layer with n units evaluated at N
/// points with c channels is an n x (N*c) matrix whose columns
/// [ch*N, (ch+1)*N) hold channel ch.
class JetTape {
 public:
  /// `points` is input_dim x N.
  void forward(const NetworkShape& shape, std::span<const double> theta, const Eigen::MatrixXd& points,
               const JetRequest& request) {
    if (points.rows() != shape.input_dim() || request.input_dim() != shape.input_dim()) {
      throw ConfigurationError("point dimension does not match network input");
    }
    if (!points.allFinite()) throw EvaluationError("non-finite network input");
    shape_ = &shape;
    request_ = request;
    points_ = static_cast<int>(points.cols());
    const int n = points_;
    const int c = request.channels();
    const int layers = shape.layer_count();
    inputs_.resize(layers);
    pre_.resize(layers - 1);

    Eigen::MatrixXd& x0 = inputs_[0];
    x0.setZero(shape.input_dim(), static_cast<Eigen::Index>(n) * c);
    x0.leftCols(n) = points;
    for (int i = 0; i < shape.input_dim(); ++i) {
      const int ch = request.d1_channel(i);
      if (ch >= 0) x0.block(i, static_cast<Eigen::Index>(ch) * n, 1, n).setOnes();
    }

    for (int k = 0; k < layers; ++k) {
      const auto w = layer_weights(shape, theta, k);
      const auto b = layer_bias(shape, theta, k);
      Eigen::MatrixXd z = w * inputs_[k];
      z.leftCols(n).colwise() += b;
      if (k + 1 == layers) {
        output_ = std::move(z);
        break;
      }
      Eigen::MatrixXd a(z.rows(), z.cols());
      a.leftCols(n) = tanh_array(z.leftCols(n).array()).matrix();
      const auto av = a.leftCols(n).array();
      const Eigen::ArrayXXd s = 1.0 - av.square();
      for (int i = 0; i < shape.input_dim(); ++i) {
        const int c1 = request.d1_channel(i);
        if (c1 < 0) continue;
        const auto z1 = z.middleCols(static_cast<Eigen::Index>(c1) * n, n).array();
        a.middleCols(static_cast<Eigen::Index>(c1) * n, n) = (s * z1).matrix();
        const int c2 = request.d2_channel(i);
        if (c2 < 0) continue;
        const auto z2 = z.middleCols(static_cast<Eigen::Index>(c2) * n, n).array();
        a.middleCols(static_cast<Eigen::Index>(c2) * n, n) = (s * z2 - 2.0 * av * s * z1.square()).matrix();
      }
      pre_[k] = std::move(z);
      inputs_[k + 1] = std::move(a);
    }
  }

  int points() const { return points_; }
  const JetRequest& request() const { return request_; }

  /// output_dim x (N*channels), stacked by channel.
  const Eigen::MatrixXd& output() const { return output_; }

  double value(int out, int point) const { return output_(out, point); }
  double channel(int out, int ch, int point) const {
    return output_(out, static_cast<Eigen::Index>(ch) * points_ + point);
  }

  /// Reverse pass. `adjoint` has the layout of output() and holds
  /// d(loss)/d(output entry); the parameter gradient is added to `grad`.
  void backward(std::span<const double> theta, const Eigen::MatrixXd& adjoint, std::span<double> grad) const {
    const NetworkShape& shape = *shape_;
    if (adjoint.rows() != output_.rows() || adjoint.cols() != output_.cols()) {
      throw ConfigurationError("adjoint shape does not match jet output");
    }
    const int n = points_;
    Eigen::MatrixXd g = adjoint;
    for (int k = shape.layer_count() - 1; k >= 0; --k) {
      MatrixMap gw(grad.data() + shape.weight_offset(k), shape.fan_out(k), shape.fan_in(k));
      VectorMap gb(grad.data() + shape.bias_offset(k), shape.fan_out(k));
      gw.noalias() += g * inputs_[k].transpose();
      gb += g.leftCols(n).rowwise().sum();
      if (k == 0) break;

      const Eigen::MatrixXd ga = layer_weights(shape, theta, k).transpose() * g;
      const Eigen::MatrixXd& z = pre_[k - 1];
      const auto av = inputs_[k].leftCols(n).array();
      const Eigen::ArrayXXd s = 1.0 - av.square();
      const Eigen::ArrayXXd ds = -2.0 * av * s;                      // d tanh' / dz
      const Eigen::ArrayXXd dds = -2.0 * s.square() + 4.0 * av.square() * s;  // d tanh'' / dz

      g.resize(ga.rows(), ga.cols());
      Eigen::ArrayXXd gval = ga.leftCols(n).array() * s;
      for (int i = 0; i < shape.input_dim(); ++i) {
        const int c1 = request_.d1_channel(i);
        if (c1 < 0) continue;
        const auto z1 = z.middleCols(static_cast<Eigen::Index>(c1) * n, n).array();
        const auto ga1 = ga.middleCols(static_cast<Eigen::Index>(c1) * n, n).array();
        Eigen::ArrayXXd g1 = ga1 * s;
        gval += ga1 * z1 * ds;
        const int c2 = request_.d2_channel(i);
        if (c2 >= 0) {
          const auto z2 = z.middleCols(static_cast<Eigen::Index>(c2) * n, n).array();
          const auto ga2 = ga.middleCols(static_cast<Eigen::Index>(c2) * n, n).array();
          g1 += ga2 * (-4.0 * av * s * z1);
          gval += ga2 * (z2 * ds + z1.square() * dds);
          g.middleCols(static_cast<Eigen::Index>(c2) * n, n) = (ga2 * s).matrix();
        }
        g.middleCols(static_cast<Eigen::Index>(c1) * n, n) = g1.matrix();
      }
      g.leftCols(n) = gval.matrix();
    }
  }

 private:
  const NetworkShape* shape_ = nullptr;
  JetRequest request_;
  int points_ = 0;
  std::vector<Eigen::MatrixXd> inputs_;
  std::vector<Eigen::MatrixXd> pre_;
  Eigen::MatrixXd output_;
};

/// Value and input derivatives of every output at one point.
struct InputJet {
  Eigen::VectorXd value;  ///< output_dim
  Eigen::MatrixXd d1;     ///< output_dim x input_dim, dy_j/dx_i
  Eigen::MatrixXd d2;     ///< output_dim x input_dim, d^2y_j/dx_i^2
};

inline InputJet forward_jet(const DenseNetwork& net, std::span<const double> x) {
  if (static_cast<int>(x.size()) != net.input_dim()) {
    throw ConfigurationError("input length does not match network input dimension");
  }
  const Eigen::MatrixXd point = ConstVectorMap(x.data(), static_cast<Eigen::Index>(x.size()));
  const JetRequest request = JetRequest::full(net.input_dim());
  JetTape tape;
  tape.forward(net.shape(), net.parameters(), point, request);
  InputJet jet;
  const int outs = net.output_dim();
  const int ins = net.input_dim();
  jet.value = tape.output().col(0);
  jet.d1.resize(outs, ins);
  jet.d2.resize(outs, ins);
  for (int i = 0; i < ins; ++i) {
    for (int j = 0; j < outs; ++j) {
      jet.d1(j, i) = tape.channel(j, request.d1_channel(i), 0);
      jet.d2(j, i) = tape.channel(j, request.d2_channel(i), 0);
    }
  }
  return jet;
}

/// Network outputs at a batch of points (input_dim x N), no derivatives.
inline Eigen::MatrixXd evaluate_network(const DenseNetwork& net, const Eigen::MatrixXd& points) {
  if (points.rows() != net.input_dim()) throw ConfigurationError("point dimension does not match network input");
  const auto& shape = net.shape();
  Eigen::MatrixXd a = points;
  for (int k = 0; k < shape.layer_count(); ++k) {
    Eigen::MatrixXd z = net.weights(k) * a;
    z.colwise() += net.bias(k);
    if (k + 1 < shape.layer_count()) {
      a = tanh_array(z.array()).matrix();
    } else {
      a = std::move(z);
    }
  }
  return a;
}

}  // namespace pecann
