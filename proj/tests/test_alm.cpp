#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "pecann/alm.hpp"
#include "pecann/collocation.hpp"
#include "pecann/qp.hpp"

using namespace pecann;
using alm::AlmConfig;
using alm::ConstraintGroup;
using alm::ConstraintMode;
using alm::Strategy;

namespace {

ConstraintGroup scalar_group(std::string name, double lambda, double mu) {
  ConstraintGroup g;
  g.name = std::move(name);
  g.multiplier = {lambda};
  g.penalty = {mu};
  g.square_average = {0.0};
  return g;
}

// u(x) - target on `n` copies of the same point, on a small 1-input network.
TermSet repeated_point_terms(int n, ConstraintMode mode) {
  PointSet p;
  p.coords = Eigen::MatrixXd::Constant(1, n, 0.3);
  p.targets = Eigen::MatrixXd::Constant(1, n, 0.8);
  Term t;
  t.name = "data";
  t.sets = {p};
  t.requests = {JetRequest({0})};
  t.residual = [](const PointView& v, ResidualBuffer& r) { r.push(v.u(0, 0) - Dual(v.target(0, 0))); };
  t.mode = mode;
  TermSet ts;
  ts.constraints.push_back(t);
  return ts;
}

// Model whose constraint values follow a scripted sequence, one per epoch.
class ScriptedModel : public alm::ConstrainedModel {
 public:
  explicit ScriptedModel(std::vector<std::vector<double>> per_epoch) : script_(std::move(per_epoch)) {}
  std::size_t parameter_count() const override { return 1; }
  std::vector<alm::GroupLayout> constraint_layout() const override {
    std::vector<alm::GroupLayout> out;
    for (std::size_t i = 0; i < script_.front().size(); ++i) out.push_back({"g" + std::to_string(i), "g", {}, {}, 1});
    return out;
  }
  alm::Evaluation evaluate(const Eigen::VectorXd& x, std::span<const ConstraintGroup> groups, bool grad) override {
    alm::Evaluation e;
    e.objective = 0.5 * x.squaredNorm();
    for (double c : script_[std::min<std::size_t>(epoch_, script_.size() - 1)]) e.constraints.push_back({c});
    e.lagrangian = alm::lagrangian_value(e.objective, groups, e.constraints);
    if (grad) e.gradient = x;
    return e;
  }
  void begin_epoch(int epoch) override { epoch_ = static_cast<std::size_t>(epoch); }

 private:
  std::vector<std::vector<double>> script_;
  std::size_t epoch_ = 0;
};

}  // namespace

TEST(Lagrangian, UnconstrainedLimit) {
  std::vector<ConstraintGroup> groups{scalar_group("a", 0.0, 0.0), scalar_group("b", 0.0, 0.0)};
  EXPECT_EQ(alm::lagrangian_value(1.25, groups, {{0.7}, {-3.0}}), 1.25);
}

TEST(Lagrangian, HandEvaluation) {
  std::vector<ConstraintGroup> groups{scalar_group("bc", 1.0, 2.0)};
  EXPECT_DOUBLE_EQ(alm::lagrangian_value(0.0, groups, {{0.5}}), 0.75);
}

TEST(Lagrangian, PointwiseMatchesExpectationOnIdenticalPoints) {
  const int n = 3;
  const DenseNetwork net = init_network({1, 4, 1}, 2);
  const double lambda = 1.7, mu = 0.6;

  CollocationModel expect(net.shape(), [&](int) { return repeated_point_terms(n, ConstraintMode::expectation); });
  std::vector<ConstraintGroup> ge{scalar_group("data", lambda, mu)};
  const auto e = expect.evaluate(net.flatten(), ge, true);

  CollocationModel point(net.shape(), [&](int) { return repeated_point_terms(n, ConstraintMode::pointwise); });
  ConstraintGroup gp;
  gp.name = "data";
  gp.mode = ConstraintMode::pointwise;
  gp.multiplier.assign(n, lambda / n);
  gp.penalty.assign(n, mu / n);
  gp.square_average.assign(n, 0.0);
  std::vector<ConstraintGroup> gps{gp};
  const auto p = point.evaluate(net.flatten(), gps, true);

  // brute force: C = (u - 0.8)^2 at the single distinct point
  const double u = evaluate_network(net, Eigen::MatrixXd::Constant(1, 1, 0.3))(0, 0);
  const double c = (u - 0.8) * (u - 0.8);
  EXPECT_NEAR(e.lagrangian, lambda * c + 0.5 * mu * c * c, 1e-14);
  EXPECT_NEAR(p.lagrangian, e.lagrangian, 1e-14);
  EXPECT_LE((p.gradient - e.gradient).norm(), 1e-13 * e.gradient.norm());
  ASSERT_EQ(p.constraints[0].size(), 3u);
  for (double v : p.constraints[0]) EXPECT_NEAR(v, c, 1e-15);
}

TEST(Lagrangian, NonFiniteResidualNamesGroup) {
  const DenseNetwork net = init_network({1, 3, 1}, 0);
  auto builder = [](int) {
    TermSet ts = repeated_point_terms(2, ConstraintMode::expectation);
    ts.constraints[0].name = "flux";
    ts.constraints[0].residual = [](const PointView&, ResidualBuffer& r) { r.push(Dual(std::nan(""))); };
    return ts;
  };
  CollocationModel model(net.shape(), builder);
  std::vector<ConstraintGroup> groups{scalar_group("flux", 1.0, 1.0)};
  try {
    model.evaluate(net.flatten(), groups, false);
    FAIL() << "expected an evaluation error";
  } catch (const EvaluationError& err) {
    EXPECT_EQ(err.term(), "flux");
  }
}

TEST(Mpu, HandUpdate) {
  std::vector<ConstraintGroup> groups{scalar_group("a", 1.0, 1.0)};
  alm::dual_update_mpu(groups, {{0.5}}, AlmConfig{});
  EXPECT_DOUBLE_EQ(groups[0].multiplier[0], 1.5);
  EXPECT_DOUBLE_EQ(groups[0].penalty[0], 2.0);
}

TEST(Mpu, ZeroResidual) {
  std::vector<ConstraintGroup> groups{scalar_group("a", 1.0, 1.0), scalar_group("b", 3.0, 1.0)};
  alm::dual_update_mpu(groups, {{0.0}, {0.0}}, AlmConfig{});
  EXPECT_EQ(groups[0].multiplier[0], 1.0);
  EXPECT_EQ(groups[1].multiplier[0], 3.0);
  EXPECT_EQ(groups[0].penalty[0], 2.0);
  EXPECT_EQ(groups[1].penalty[0], 2.0);
}

TEST(Mpu, ClampAfterFourteenEpochs) {
  std::vector<ConstraintGroup> groups{scalar_group("a", 1.0, 1.0)};
  const AlmConfig cfg;
  for (int k = 1; k <= 14; ++k) {
    alm::dual_update_mpu(groups, {{0.1}}, cfg);
    if (k == 13) EXPECT_EQ(groups[0].penalty[0], 8192.0);
  }
  EXPECT_EQ(groups[0].penalty[0], 1e4);
  alm::dual_update_mpu(groups, {{0.1}}, cfg);
  EXPECT_EQ(groups[0].penalty[0], 1e4);
}

TEST(Cpu, FirstEpochTakesMultiplierBranch) {
  alm::TrainerState state;
  ASSERT_TRUE(std::isinf(state.eta));
  std::vector<ConstraintGroup> groups{scalar_group("a", 0.0, 1.0)};
  alm::dual_update_cpu(groups, {{1e6}}, state, AlmConfig{});
  EXPECT_EQ(groups[0].multiplier[0], 1e6);
  EXPECT_EQ(groups[0].penalty[0], 1.0);
  EXPECT_EQ(state.eta, 1e6);
}

TEST(Cpu, GrowingNormDoublesPenalty) {
  alm::TrainerState state;
  state.eta = 0.1;
  std::vector<ConstraintGroup> groups{scalar_group("a", 0.4, 1.0)};
  alm::dual_update_cpu(groups, {{0.2}}, state, AlmConfig{});
  EXPECT_EQ(groups[0].multiplier[0], 0.4);
  EXPECT_EQ(groups[0].penalty[0], 2.0);
  EXPECT_EQ(state.eta, 0.2);
}

TEST(Cpu, DecreasingNormKeepsPenalty) {
  alm::TrainerState state;
  std::vector<ConstraintGroup> groups{scalar_group("a", 0.0, 1.0), scalar_group("b", 0.0, 1.0)};
  double c = 1.0;
  for (int k = 0; k < 30; ++k, c *= 0.8) {
    alm::dual_update_cpu(groups, {{c}, {-0.5 * c}}, state, AlmConfig{});
    EXPECT_EQ(groups[0].penalty[0], 1.0);
    EXPECT_EQ(groups[1].penalty[0], 1.0);
  }
}

TEST(Cpu, NormConcatenatesGroups) {
  EXPECT_DOUBLE_EQ(alm::constraint_norm({{3.0}, {4.0}}), 5.0);
  EXPECT_DOUBLE_EQ(alm::constraint_norm({{1.0, 2.0}, {2.0}}), 3.0);
}

TEST(Apu, HandUpdate) {
  std::vector<ConstraintGroup> groups{scalar_group("a", 1.0, 1.0)};
  alm::dual_update_apu(groups, {{0.1}}, AlmConfig{});
  EXPECT_NEAR(groups[0].square_average[0], 1e-4, 1e-18);
  EXPECT_NEAR(groups[0].penalty[0], 1e-2 / (1e-2 + 1e-8), 1e-15);
  EXPECT_NEAR(groups[0].penalty[0], 0.999999, 1e-6);
  EXPECT_NEAR(groups[0].multiplier[0], 1.1, 1e-6);
}

TEST(Apu, ZeroResidual) {
  std::vector<ConstraintGroup> groups{scalar_group("a", 1.0, 1.0)};
  const AlmConfig cfg;
  groups[0].square_average[0] = 0.04;
  groups[0].penalty[0] = 1e-2 / (0.2 + 1e-8);
  double prev_mu = groups[0].penalty[0];
  for (int k = 0; k < 5; ++k) {
    const double prev_v = groups[0].square_average[0];
    alm::dual_update_apu(groups, {{0.0}}, cfg);
    EXPECT_NEAR(groups[0].square_average[0], 0.99 * prev_v, 1e-17);
    EXPECT_EQ(groups[0].multiplier[0], 1.0);
    EXPECT_GT(groups[0].penalty[0], prev_mu);
    prev_mu = groups[0].penalty[0];
  }
}

TEST(Apu, SmallResidualGetsLargerPenalty) {
  std::vector<ConstraintGroup> groups{scalar_group("small", 1.0, 1.0), scalar_group("large", 1.0, 1.0)};
  alm::dual_update_apu(groups, {{1e-3}, {1.0}}, AlmConfig{});
  EXPECT_GT(groups[0].penalty[0], groups[1].penalty[0]);
}

TEST(Apu, SmoothingOneIsFixedRate) {
  AlmConfig cfg;
  cfg.smoothing = 1.0;
  std::vector<ConstraintGroup> groups{scalar_group("a", 1.0, 1.0)};
  for (double c : {0.3, -2.0, 1e-3}) {
    alm::dual_update_apu(groups, {{c}}, cfg);
    EXPECT_EQ(groups[0].square_average[0], 0.0);
    EXPECT_EQ(groups[0].penalty[0], cfg.learning_rate / cfg.stability);
  }
}

TEST(Apu, PointwiseMatchesExpectationForIdenticalResiduals) {
  const double c = 0.037;
  std::vector<ConstraintGroup> e{scalar_group("a", 1.0, 1.0)};
  alm::dual_update_apu(e, {{c}}, AlmConfig{});
  ConstraintGroup p;
  p.mode = ConstraintMode::pointwise;
  p.multiplier.assign(5, 1.0);
  p.penalty.assign(5, 1.0);
  p.square_average.assign(5, 0.0);
  std::vector<ConstraintGroup> ps{p};
  alm::dual_update_apu(ps, {std::vector<double>(5, c)}, AlmConfig{});
  for (double l : ps[0].multiplier) EXPECT_EQ(l, e[0].multiplier[0]);
}

TEST(DualUpdate, MultiplierMovesWithConstraintSign) {
  for (Strategy s : {Strategy::mpu, Strategy::cpu, Strategy::apu}) {
    AlmConfig cfg;
    cfg.strategy = s;
    alm::TrainerState state;
    std::vector<ConstraintGroup> groups{scalar_group("p", 0.5, 1.0), scalar_group("n", 0.5, 1.0),
                                        scalar_group("z", 0.5, 1.0)};
    alm::dual_update(groups, {{0.2}, {-0.3}, {0.0}}, state, cfg);
    EXPECT_GT(groups[0].multiplier[0], 0.5) << alm::to_string(s);
    EXPECT_LT(groups[1].multiplier[0], 0.5) << alm::to_string(s);
    EXPECT_EQ(groups[2].multiplier[0], 0.5) << alm::to_string(s);
  }
}

TEST(DualUpdate, PenaltyBounds) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(0.0, 1.0);
  for (Strategy s : {Strategy::mpu, Strategy::cpu, Strategy::apu}) {
    AlmConfig cfg;
    cfg.strategy = s;
    alm::TrainerState state;
    std::vector<ConstraintGroup> groups{scalar_group("a", 1.0, 1.0), scalar_group("b", 1.0, 1.0)};
    for (int k = 0; k < 200; ++k) {
      const double scale = std::pow(10.0, -6.0 * k / 200.0);
      alm::dual_update(groups, {{scale * n(rng)}, {k % 7 == 0 ? 0.0 : n(rng)}}, state, cfg);
      for (const auto& g : groups) {
        EXPECT_GT(g.penalty[0], 0.0);
        if (s == Strategy::apu) {
          EXPECT_LE(g.penalty[0], cfg.learning_rate / cfg.stability);
          EXPECT_GE(g.square_average[0], 0.0);
        } else {
          EXPECT_LE(g.penalty[0], cfg.max_penalty);
        }
      }
    }
  }
}

TEST(AlmConfig, DefaultMultiplierPerStrategy) {
  AlmConfig cfg;
  cfg.strategy = Strategy::mpu;
  EXPECT_EQ(cfg.lambda0(), 1.0);
  cfg.strategy = Strategy::apu;
  EXPECT_EQ(cfg.lambda0(), 1.0);
  cfg.strategy = Strategy::cpu;
  EXPECT_EQ(cfg.lambda0(), 0.0);
  cfg.initial_multiplier = 2.5;
  EXPECT_EQ(cfg.lambda0(), 2.5);
}

TEST(AlmConfig, Validation) {
  AlmConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.growth = 1.0;
  EXPECT_THROW(cfg.validate(), ConfigurationError);
  cfg = AlmConfig{};
  cfg.learning_rate = 0.0;
  EXPECT_THROW(cfg.validate(), ConfigurationError);
  cfg = AlmConfig{};
  cfg.max_penalty = 0.5;
  EXPECT_THROW(cfg.validate(), ConfigurationError);
  EXPECT_THROW(alm::parse_strategy("adam"), ConfigurationError);
  EXPECT_EQ(alm::parse_strategy("APU"), Strategy::apu);
  EXPECT_EQ(alm::parse_mode("pointwise"), ConstraintMode::pointwise);
}

TEST(Train, QuadraticProgramKkt) {
  EqualityQp qp = EqualityQp::unit_simplex_norm();
  AlmConfig cfg;
  cfg.epochs = 500;
  lbfgs::LbfgsConfig lc;
  const auto r = alm::train(qp, Eigen::VectorXd::Zero(2), cfg, lc);
  ASSERT_FALSE(r.failure);
  EXPECT_NEAR(r.theta[0], 0.5, 1e-6);
  EXPECT_NEAR(r.theta[1], 0.5, 1e-6);
  const double lambda = r.groups[0].multiplier[0];
  EXPECT_NEAR(lambda, -1.0, 1e-4);
  EXPECT_LE(qp.kkt_residual(r.theta, Eigen::VectorXd::Constant(1, lambda)).norm(), 1e-5);
  EXPECT_LE(std::abs(qp.constraint(r.theta)[0]), 1e-6);
}

TEST(Train, ThreeVariableKkt) {
  // min 1/2 x'Qx + c'x  s.t. two linear equalities; KKT solved densely as the oracle
  Eigen::MatrixXd q(3, 3);
  q << 3, 1, 0, 1, 2, 0.5, 0, 0.5, 1.5;
  Eigen::VectorXd c(3);
  c << -1, 0.5, 2;
  Eigen::MatrixXd a(2, 3);
  a << 1, 1, 1, 1, -1, 2;
  Eigen::VectorXd b(2);
  b << 1, 0.5;
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(5, 5);
  k.topLeftCorner(3, 3) = q;
  k.topRightCorner(3, 2) = a.transpose();
  k.bottomLeftCorner(2, 3) = a;
  Eigen::VectorXd rhs(5);
  rhs << -c, b;
  const Eigen::VectorXd sol = k.fullPivLu().solve(rhs);

  EqualityQp qp(q, c, a, b);
  AlmConfig cfg;
  cfg.epochs = 2000;
  const auto r = alm::train(qp, Eigen::VectorXd::Zero(3), cfg, lbfgs::LbfgsConfig{});
  Eigen::VectorXd lambda(2);
  lambda << r.groups[0].multiplier[0], r.groups[1].multiplier[0];
  EXPECT_LE(qp.kkt_residual(r.theta, lambda).norm(), 1e-5);
  EXPECT_LE(qp.constraint(r.theta).cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_LE((r.theta - sol.head(3)).norm(), 1e-5);
}

TEST(Train, NoGroupsIsPlainMinimization) {
  class Bowl : public alm::ConstrainedModel {
   public:
    std::size_t parameter_count() const override { return 2; }
    std::vector<alm::GroupLayout> constraint_layout() const override { return {}; }
    alm::Evaluation evaluate(const Eigen::VectorXd& x, std::span<const ConstraintGroup>, bool grad) override {
      alm::Evaluation e;
      const Eigen::Vector2d a(0.3, -1.1);
      e.objective = e.lagrangian = (x - a).squaredNorm();
      if (grad) e.gradient = 2.0 * (x - a);
      return e;
    }
  } bowl;
  AlmConfig cfg;
  cfg.epochs = 3;
  const auto r = alm::train(bowl, Eigen::VectorXd::Zero(2), cfg, lbfgs::LbfgsConfig{});
  EXPECT_TRUE(r.groups.empty());
  EXPECT_NEAR(r.theta[0], 0.3, 1e-10);
  EXPECT_NEAR(r.theta[1], -1.1, 1e-10);
  EXPECT_EQ(r.state.history.size(), 3u);
}

TEST(Train, HistoryLengthAndInitialRecord) {
  ScriptedModel model({{0.5, 0.2}, {0.4, 0.1}, {0.3, 0.05}});
  AlmConfig cfg;
  cfg.epochs = 2;
  const auto r = alm::train(model, Eigen::VectorXd::Ones(1), cfg, lbfgs::LbfgsConfig{});
  EXPECT_EQ(r.initial.epoch, 0);
  EXPECT_EQ(r.initial.multiplier[0], 1.0);
  ASSERT_EQ(r.state.history.size(), 2u);
  EXPECT_EQ(r.state.history[1].epoch, 2);
  EXPECT_DOUBLE_EQ(r.state.history[0].constraint[0], 0.4);
}

TEST(Train, CpuPenaltyFollowsBranchLogic) {
  AlmConfig cfg;
  cfg.strategy = Strategy::cpu;
  cfg.epochs = 4;
  ScriptedModel model({{0.0}, {0.1}, {0.2}, {0.15}, {0.3}});
  const auto r = alm::train(model, Eigen::VectorXd::Ones(1), cfg, lbfgs::LbfgsConfig{});
  // epoch norms 0.1 (< inf), 0.2 (grow), 0.15 (< 0.2), 0.3 (grow)
  EXPECT_EQ(r.state.history[0].penalty[0], 1.0);
  EXPECT_NEAR(r.state.history[0].multiplier[0], 0.1, 1e-15);
  EXPECT_EQ(r.state.history[1].penalty[0], 2.0);
  EXPECT_NEAR(r.state.history[1].multiplier[0], 0.1, 1e-15);
  EXPECT_EQ(r.state.history[2].penalty[0], 2.0);
  EXPECT_NEAR(r.state.history[2].multiplier[0], 0.4, 1e-15);
  EXPECT_EQ(r.state.history[3].penalty[0], 4.0);
}

TEST(Train, ZeroEpochsRecordsInitialOnly) {
  EqualityQp qp = EqualityQp::unit_simplex_norm();
  AlmConfig cfg;
  cfg.epochs = 0;
  const auto r = alm::train(qp, Eigen::VectorXd::Zero(2), cfg, lbfgs::LbfgsConfig{});
  EXPECT_TRUE(r.state.history.empty());
  EXPECT_DOUBLE_EQ(r.initial.constraint[0], -1.0);
  EXPECT_EQ(r.theta, Eigen::VectorXd::Zero(2));
}

TEST(Train, NonFiniteAbortRecordsContext) {
  const DenseNetwork net = init_network({1, 3, 1}, 0);
  auto builder = [](int epoch) {
    TermSet ts = repeated_point_terms(2, ConstraintMode::expectation);
    ts.constraints[0].name = "ic";
    if (epoch >= 2) {
      ts.constraints[0].residual = [](const PointView&, ResidualBuffer& r) { r.push(Dual(INFINITY)); };
    }
    return ts;
  };
  CollocationModel model(net.shape(), builder, true);
  AlmConfig cfg;
  cfg.strategy = Strategy::mpu;
  cfg.epochs = 5;
  const auto r = alm::train(model, net.flatten(), cfg, lbfgs::LbfgsConfig{});
  ASSERT_TRUE(r.failure);
  EXPECT_EQ(r.failure->epoch, 2);
  EXPECT_EQ(r.failure->group, "ic");
  EXPECT_EQ(r.failure->strategy, Strategy::mpu);
  EXPECT_EQ(r.state.history.size(), 1u);
  EXPECT_TRUE(r.theta.allFinite());
}

TEST(Train, MiniBatchesRunOneDualUpdatePerEpoch) {
  const DenseNetwork net = init_network({1, 3, 1}, 0);
  auto builder = [](int) {
    PointSet p = uniform_box(10, Box({0.0}, {1.0}), 3);
    p.targets = p.coords.array().square().matrix();
    TermSet ts;
    Term t;
    t.name = "data";
    t.sets = {p};
    t.requests = {JetRequest({0})};
    t.residual = [](const PointView& v, ResidualBuffer& r) { r.push(v.u(0, 0) - Dual(v.target(0, 0))); };
    ts.constraints.push_back(t);
    return ts;
  };
  CollocationModel model(net.shape(), builder, false, 4, 11);
  EXPECT_EQ(model.batch_count(), 3);
  AlmConfig cfg;
  cfg.epochs = 3;
  const auto a = alm::train(model, net.flatten(), cfg, lbfgs::LbfgsConfig{});
  EXPECT_EQ(a.state.history.size(), 3u);
  CollocationModel again(net.shape(), builder, false, 4, 11);
  const auto b = alm::train(again, net.flatten(), cfg, lbfgs::LbfgsConfig{});
  EXPECT_EQ(a.theta, b.theta);
  EXPECT_THROW(CollocationModel(net.shape(),
                                [](int) { return repeated_point_terms(3, ConstraintMode::pointwise); }, false, 2),
               ConfigurationError);
}

TEST(Multipliers, ExpectationGroupCannotBeExported) {
  std::vector<ConstraintGroup> groups{scalar_group("bc", 1.0, 1.0)};
  EXPECT_THROW(alm::export_multiplier_distribution(groups), ConfigurationError);
}

TEST(Multipliers, FreshGroupAndIdenticalResiduals) {
  AlmConfig cfg;
  auto groups = alm::make_groups({{"bc", "bc", ConstraintMode::pointwise, {}, 6}}, cfg);
  auto d = alm::export_multiplier_distribution(groups);
  for (double l : d[0].values) EXPECT_EQ(l, cfg.lambda0());
  alm::dual_update_apu(groups, {std::vector<double>(6, 0.02)}, cfg);
  d = alm::export_multiplier_distribution(groups);
  EXPECT_EQ(d[0].stddev, 0.0);
  EXPECT_GT(d[0].mean, 1.0);
}

TEST(Multipliers, CsvLayout) {
  alm::MultiplierDistribution d{"ic", {1.0, 3.0}, 2.0, std::sqrt(2.0)};
  std::ostringstream out;
  alm::write_multiplier_csv(out, {d});
  EXPECT_EQ(out.str(),
            "group,index,lambda\n"
            "ic,0,1\n"
            "ic,1,3\n"
            "ic,mean,2\n"
            "ic,stddev,1.4142135623730951\n");
}

TEST(MetricsCsv, HeaderAndSignificantDigits) {
  alm::TrainResult r;
  r.groups = {scalar_group("bc", 1.0, 1.0), scalar_group("ic", 1.0, 1.0)};
  r.initial = {0, 0.1, 0.0, {0.5, 0.25}, {1.0, 1.0}, {1.0, 1.0}};
  r.state.history.push_back({1, 1.0 / 3.0, 0.0, {0.125, 2.0}, {1.5, 1.25}, {2.0, 4.0}});
  std::ostringstream out;
  alm::write_metrics_csv(out, r);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "epoch,J,C_bc,C_ic,lambda_bc,lambda_ic,mu_bc,mu_ic");
  std::getline(in, line);
  EXPECT_EQ(line.substr(0, 2), "0,");
  std::getline(in, line);
  EXPECT_EQ(line.substr(0, 26), "1,3.3333333333333331e-01,1");
  EXPECT_NE(line.find("4.0000000000000000e+00"), std::string::npos);
  EXPECT_FALSE(std::getline(in, line));
}
