#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "pecann/collocation.hpp"
#include "pecann/jet.hpp"
#include "pecann/network.hpp"
#include "pecann/problems.hpp"

using namespace pecann;

namespace {

DenseNetwork random_network(std::vector<int> sizes, std::uint64_t seed) {
  DenseNetwork net = init_network(std::move(sizes), seed);
  // nonzero biases so every path is exercised
  std::mt19937_64 rng(seed + 99);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (int k = 0; k < net.shape().layer_count(); ++k) {
    for (Eigen::Index i = 0; i < net.bias(k).size(); ++i) net.mutable_bias(k)[i] = u(rng);
  }
  return net;
}

double rel_err(const Eigen::VectorXd& a, const Eigen::VectorXd& b) { return (a - b).norm() / (a.norm() + 1e-12); }

}  // namespace

TEST(Network, GlorotInitShapesAndZeroBias) {
  const DenseNetwork net = init_network({2, 30, 30, 30, 2}, 5);
  EXPECT_EQ(net.shape().describe(), "2x30x30x30x2");
  for (int k = 0; k < net.shape().layer_count(); ++k) {
    EXPECT_EQ(net.weights(k).rows(), net.shape().fan_out(k));
    EXPECT_EQ(net.weights(k).cols(), net.shape().fan_in(k));
    EXPECT_TRUE((net.bias(k).array() == 0.0).all());
    const double limit = std::sqrt(6.0 / (net.shape().fan_in(k) + net.shape().fan_out(k)));
    EXPECT_LE(net.weights(k).cwiseAbs().maxCoeff(), limit);
  }
}

TEST(Network, WaveShape) {
  const DenseNetwork net = init_network({2, 50, 1}, 0);
  EXPECT_EQ(net.shape().layer_count(), 2);
  EXPECT_EQ(net.parameter_count(), 2u * 50 + 50 + 50 + 1);
}

TEST(Network, DeterministicForSeed) {
  const auto a = init_network({2, 10, 1}, 42).flatten();
  const auto b = init_network({2, 10, 1}, 42).flatten();
  const auto c = init_network({2, 10, 1}, 43).flatten();
  EXPECT_EQ(0, std::memcmp(a.data(), b.data(), sizeof(double) * a.size()));
  EXPECT_NE(a, c);
}

TEST(Network, RejectsBadSizes) {
  EXPECT_THROW(init_network({}, 0), ConfigurationError);
  EXPECT_THROW(init_network({2}, 0), ConfigurationError);
  EXPECT_THROW(init_network({2, 0, 1}, 0), ConfigurationError);
  EXPECT_THROW(init_network({2, -3, 1}, 0), ConfigurationError);
}

TEST(Network, FlattenRoundTripIsExact) {
  DenseNetwork net = random_network({3, 7, 5, 2}, 1);
  const Eigen::VectorXd flat = net.flatten();
  DenseNetwork other(net.shape());
  other.unflatten(flat);
  const Eigen::VectorXd again = other.flatten();
  EXPECT_EQ(0, std::memcmp(flat.data(), again.data(), sizeof(double) * flat.size()));
  EXPECT_THROW(other.unflatten(Eigen::VectorXd::Zero(3)), ConfigurationError);
  Eigen::VectorXd bad = flat;
  bad[0] = std::nan("");
  EXPECT_THROW(other.unflatten(bad), EvaluationError);
}

TEST(ForwardJet, ZeroLastLayerGivesConstant) {
  DenseNetwork net = random_network({2, 10, 3}, 2);
  const int last = net.shape().layer_count() - 1;
  net.mutable_weights(last).setZero();
  const std::vector<double> x{0.3, -0.2};
  const InputJet jet = forward_jet(net, x);
  EXPECT_TRUE(jet.value.isApprox(net.bias(last)));
  EXPECT_TRUE((jet.d1.array() == 0.0).all());
  EXPECT_TRUE((jet.d2.array() == 0.0).all());
}

TEST(ForwardJet, LinearLayer) {
  DenseNetwork net = random_network({3, 2}, 3);
  const std::vector<double> x{0.1, 0.2, 0.3};
  const InputJet jet = forward_jet(net, x);
  EXPECT_TRUE(jet.d1.isApprox(net.weights(0)));
  EXPECT_TRUE((jet.d2.array() == 0.0).all());
}

TEST(ForwardJet, MatchesFiniteDifferences) {
  const DenseNetwork net = random_network({2, 10, 1}, 4);
  const std::vector<double> x{0.3, 0.7};
  const InputJet jet = forward_jet(net, x);
  const double h = 1e-4;
  for (int i = 0; i < 2; ++i) {
    std::vector<double> up = x, down = x;
    up[i] += h;
    down[i] -= h;
    const double fp = forward_jet(net, up).value[0];
    const double fm = forward_jet(net, down).value[0];
    const double f0 = jet.value[0];
    const double d1 = (fp - fm) / (2 * h);
    const double d2 = (fp - 2 * f0 + fm) / (h * h);
    EXPECT_LE(std::abs(jet.d1(0, i) - d1) / (std::abs(jet.d1(0, i)) + 1e-12), 1e-6);
    EXPECT_LE(std::abs(jet.d2(0, i) - d2) / (std::abs(jet.d2(0, i)) + 1e-12), 1e-6);
  }
}

TEST(ForwardJet, DeepNetworkSecondDerivatives) {
  // d2 checked by central differences of the analytic d1, which avoids the
  // h^-2 rounding amplification of a three-point second difference
  const DenseNetwork net = random_network({3, 8, 8, 8, 2}, 5);
  const std::vector<double> x{0.2, -0.4, 0.9};
  const InputJet jet = forward_jet(net, x);
  const double h = 1e-4;
  for (int i = 0; i < 3; ++i) {
    std::vector<double> up = x, down = x;
    up[i] += h;
    down[i] -= h;
    const InputJet jp = forward_jet(net, up);
    const InputJet jm = forward_jet(net, down);
    for (int o = 0; o < 2; ++o) {
      const double d1 = (jp.value[o] - jm.value[o]) / (2 * h);
      const double d2 = (jp.d1(o, i) - jm.d1(o, i)) / (2 * h);
      EXPECT_LE(std::abs(jet.d1(o, i) - d1) / (std::abs(jet.d1(o, i)) + 1e-12), 1e-6);
      EXPECT_LE(std::abs(jet.d2(o, i) - d2) / (std::abs(jet.d2(o, i)) + 1e-12), 1e-6) << "o=" << o << " i=" << i;
    }
  }
}

TEST(ForwardJet, ScalingLastLayerScalesEverything) {
  DenseNetwork net = random_network({2, 6, 6, 1}, 6);
  const int last = net.shape().layer_count() - 1;
  net.mutable_bias(last).setZero();
  const std::vector<double> x{0.25, 0.5};
  const InputJet a = forward_jet(net, x);
  net.mutable_weights(last) *= 4.0;  // power of two keeps the scaling exact
  const InputJet b = forward_jet(net, x);
  EXPECT_EQ(b.value[0], 4.0 * a.value[0]);
  EXPECT_EQ(b.d1(0, 0), 4.0 * a.d1(0, 0));
  EXPECT_EQ(b.d2(0, 1), 4.0 * a.d2(0, 1));
}

TEST(ForwardJet, RejectsNonFiniteInput) {
  const DenseNetwork net = random_network({2, 4, 1}, 7);
  const std::vector<double> x{std::nan(""), 0.0};
  EXPECT_THROW(forward_jet(net, x), EvaluationError);
  const std::vector<double> wrong{0.0};
  EXPECT_THROW(forward_jet(net, wrong), ConfigurationError);
}

TEST(ForwardJet, BatchTapeAgreesWithEvaluate) {
  const DenseNetwork net = random_network({2, 12, 12, 2}, 8);
  Eigen::MatrixXd pts = Eigen::MatrixXd::Random(2, 37);
  JetTape tape;
  tape.forward(net.shape(), net.parameters(), pts, JetRequest::full(2));
  const Eigen::MatrixXd direct = evaluate_network(net, pts);
  EXPECT_LE((tape.output().leftCols(37) - direct).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(TanhArray, MatchesStdTanh) {
  const Eigen::ArrayXXd z = Eigen::ArrayXd::LinSpaced(2001, -30.0, 30.0);
  const Eigen::ArrayXXd t = tanh_array(z);
  for (Eigen::Index i = 0; i < z.size(); ++i) EXPECT_NEAR(t(i), std::tanh(z(i)), 4e-16);
  Eigen::ArrayXXd huge(1, 2);
  huge << 1e4, -1e4;
  const Eigen::ArrayXXd s = tanh_array(huge);
  EXPECT_EQ(s(0), 1.0);
  EXPECT_EQ(s(1), -1.0);
}

// ---------------------------------------------------------------------------
// parameter gradients

namespace {

/// Sum of squares of all jet channels at a few points, through the tape.
ParameterLoss jet_energy(const NetworkShape& shape, Eigen::MatrixXd pts, JetRequest req) {
  ParameterLoss loss;
  loss.evaluate = [shape, pts, req](const Eigen::VectorXd& theta, Eigen::VectorXd* grad) {
    JetTape tape;
    const std::span<const double> th(theta.data(), theta.size());
    tape.forward(shape, th, pts, req);
    const Eigen::MatrixXd& out = tape.output();
    if (grad) {
      grad->setZero(theta.size());
      const Eigen::MatrixXd adj = 2.0 * out;
      tape.backward(th, adj, std::span<double>(grad->data(), grad->size()));
    }
    return out.squaredNorm();
  };
  return loss;
}

}  // namespace

TEST(LossGradient, ZeroLastLayerIsStationaryInLastBias) {
  DenseNetwork net = random_network({2, 5, 2}, 9);
  const int last = net.shape().layer_count() - 1;
  net.mutable_weights(last).setZero();
  net.mutable_bias(last).setZero();
  Eigen::MatrixXd x0(2, 1);
  x0 << 0.3, 0.4;
  const Eigen::VectorXd g = loss_gradient(net, jet_energy(net.shape(), x0, JetRequest::value_only(2)));
  const auto off = net.shape().bias_offset(last);
  EXPECT_EQ(g[off], 0.0);
  EXPECT_EQ(g[off + 1], 0.0);
}

TEST(LossGradient, LinearRegressionNormalEquations) {
  // y = W x + b, loss = sum_j (y_j - t_j)^2; gradient 2 (Wx+b-t) x', 2 (Wx+b-t)
  DenseNetwork net = random_network({3, 1}, 10);
  Eigen::MatrixXd x = Eigen::MatrixXd::Random(3, 6);
  Eigen::RowVectorXd t = Eigen::RowVectorXd::Random(6);
  const NetworkShape shape = net.shape();
  ParameterLoss loss;
  loss.evaluate = [&](const Eigen::VectorXd& theta, Eigen::VectorXd* grad) {
    JetTape tape;
    const std::span<const double> th(theta.data(), theta.size());
    tape.forward(shape, th, x, JetRequest::value_only(3));
    const Eigen::RowVectorXd r = tape.output().row(0) - t;
    if (grad) {
      grad->setZero(theta.size());
      tape.backward(th, 2.0 * r, std::span<double>(grad->data(), grad->size()));
    }
    return r.squaredNorm();
  };
  const Eigen::VectorXd g = loss_gradient(net, loss);
  const Eigen::RowVectorXd r = net.weights(0) * x + Eigen::RowVectorXd::Constant(6, net.bias(0)[0]) - t;
  const Eigen::RowVectorXd gw = 2.0 * r * x.transpose();
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(g[shape.weight_offset(0) + i], gw[i], 1e-12);
  EXPECT_NEAR(g[shape.bias_offset(0)], 2.0 * r.sum(), 1e-12);
}

TEST(LossGradient, ThroughSecondDerivativeChannels) {
  const DenseNetwork net = random_network({2, 7, 7, 2}, 11);
  const Eigen::MatrixXd pts = Eigen::MatrixXd::Random(2, 5);
  for (const JetRequest& req : {JetRequest::full(2), JetRequest({1, 2}), JetRequest({2, 0}), JetRequest({1, 1})}) {
    const ParameterLoss loss = jet_energy(net.shape(), pts, req);
    const Eigen::VectorXd g = loss_gradient(net, loss);
    const Eigen::VectorXd fd = fd_gradient_oracle(net, loss, 1e-5);
    EXPECT_LE(rel_err(g, fd), 1e-6);
  }
}

TEST(LossGradient, NonFiniteLossIsAnError) {
  const DenseNetwork net = random_network({1, 2, 1}, 12);
  ParameterLoss loss;
  loss.evaluate = [](const Eigen::VectorXd&, Eigen::VectorXd* grad) {
    if (grad) grad->setZero(1);
    return std::numeric_limits<double>::infinity();
  };
  EXPECT_THROW(loss_gradient(net, loss), EvaluationError);
}

TEST(FdOracle, ConstantAndQuadratic) {
  const DenseNetwork net = random_network({1, 2, 1}, 13);
  ParameterLoss constant;
  constant.evaluate = [](const Eigen::VectorXd&, Eigen::VectorXd*) { return 3.0; };
  EXPECT_EQ(fd_gradient_oracle(net, constant, 1e-4).norm(), 0.0);

  Eigen::VectorXd e1 = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(net.parameter_count()));
  e1[0] = 1.0;
  DenseNetwork at_e1(net.shape(), e1);
  ParameterLoss square;
  square.evaluate = [](const Eigen::VectorXd& th, Eigen::VectorXd*) { return th.squaredNorm(); };
  const Eigen::VectorXd g = fd_gradient_oracle(at_e1, square, 1e-4);
  EXPECT_NEAR(g[0], 2.0, 1e-8);
  EXPECT_NEAR(g.tail(g.size() - 1).norm(), 0.0, 1e-10);

  EXPECT_THROW(fd_gradient_oracle(net, square, 1e-2), ConfigurationError);
  EXPECT_THROW(fd_gradient_oracle(net, square, 1e-9), ConfigurationError);
}

namespace {

double problem_gradient_error(const std::string& name, alm::ConstraintMode mode) {
  const problems::ProblemSpec spec = problems::find_problem(name);
  problems::BuildOptions opts = spec.default_options();
  for (auto& [k, v] : opts.points) v = 5;
  opts.mode = mode;
  const DenseNetwork net = random_network(spec.layer_sizes({10}), 21);
  CollocationModel model(net.shape(), [&](int e) { return spec.terms(opts, 3, e); });
  alm::AlmConfig config;
  auto groups = alm::make_groups(model.constraint_layout(), config);
  double v = 0.4;
  for (auto& g : groups) {
    for (auto& l : g.multiplier) l = (v += 0.3);
    for (auto& m : g.penalty) m = (v += 0.5);
  }
  const ParameterLoss loss = lagrangian_loss(model, groups);
  const Eigen::VectorXd g = loss_gradient(net, loss);
  const Eigen::VectorXd fd = fd_gradient_oracle(net, loss, 1e-5);
  return rel_err(g, fd);
}

}  // namespace

class ProblemGradient : public ::testing::TestWithParam<std::string> {};

TEST_P(ProblemGradient, MatchesFiniteDifferences) {
  EXPECT_LE(problem_gradient_error(GetParam(), alm::ConstraintMode::expectation), 1e-6);
}

TEST_P(ProblemGradient, PointwiseMatchesFiniteDifferences) {
  EXPECT_LE(problem_gradient_error(GetParam(), alm::ConstraintMode::pointwise), 1e-6);
}

INSTANTIATE_TEST_SUITE_P(AllProblems, ProblemGradient,
                         ::testing::Values("composite_heat", "wave", "cavity_re100", "inverse_boundary",
                                           "inverse_source", "convection", "mixing"));
