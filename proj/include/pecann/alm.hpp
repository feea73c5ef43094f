#pragma once

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pecann/errors.hpp"
#include "pecann/lbfgs.hpp"

namespace pecann::alm {

/// Penalty update strategy: monotonically increasing shared penalty,
/// conditionally increasing shared penalty, or adaptive per-constraint
/// penalties driven by a running average of squared constraint values.
enum class Strategy { mpu, cpu, apu };

inline std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::mpu: return "mpu";
    case Strategy::cpu: return "cpu";
    case Strategy::apu: return "apu";
  }
  return "unknown";
}

inline Strategy parse_strategy(std::string_view name) {
  if (name == "mpu" || name == "MPU") return Strategy::mpu;
  if (name == "cpu" || name == "CPU") return Strategy::cpu;
  if (name == "apu" || name == "APU") return Strategy::apu;
  throw ConfigurationError("unknown strategy '" + std::string(name) + "' (expected mpu, cpu or apu)");
}

/// expectation: one multiplier constrains the mean distance over a group's
/// points. pointwise: one multiplier per point.
enum class ConstraintMode { expectation, pointwise };

inline std::string to_string(ConstraintMode m) { return m == ConstraintMode::expectation ? "expectation" : "pointwise"; }

inline ConstraintMode parse_mode(std::string_view name) {
  if (name == "expectation") return ConstraintMode::expectation;
  if (name == "pointwise") return ConstraintMode::pointwise;
  throw ConfigurationError("unknown constraint mode '" + std::string(name) + "'");
}

/// Distance applied to residuals before they enter a constraint.
/// quadratic: squared (Euclidean) norm of the residual components.
/// identity: the raw scalar residual, for analytic equality constraints.
enum class Distance { quadratic, identity };

/// Multiplier state of one constraint family. The vectors have one entry
/// in expectation mode and one entry per point in pointwise mode.
struct ConstraintGroup {
  std::string name;
  std::string residual_id;
  ConstraintMode mode = ConstraintMode::expectation;
  Distance distance = Distance::quadratic;
  std::vector<double> multiplier;
  std::vector<double> penalty;
  std::vector<double> square_average;

  std::size_t size() const { return multiplier.size(); }
};

/// What a model reports about each of its constraint groups.
struct GroupLayout {
  std::string name;
  std::string residual_id;
  ConstraintMode mode = ConstraintMode::expectation;
  Distance distance = Distance::quadratic;
  std::size_t entries = 1;
};

struct AlmConfig {
  Strategy strategy = Strategy::apu;
  double learning_rate = 1e-2;  ///< global dual learning rate (APU)
  double smoothing = 0.99;      ///< square-average smoothing constant (APU)
  double stability = 1e-8;      ///< denominator floor (APU)
  double growth = 2.0;          ///< penalty growth factor (MPU, CPU)
  double max_penalty = 1e4;     ///< penalty safeguard (MPU, CPU)
  /// Unset: 1 for MPU and APU, 0 for CPU.
  std::optional<double> initial_multiplier;
  double initial_penalty = 1.0;
  int epochs = 1000;
  /// Mini-batch size over constraint points (expectation mode only).
  std::optional<int> batch_size;

  double lambda0() const {
    if (initial_multiplier) return *initial_multiplier;
    return strategy == Strategy::cpu ? 0.0 : 1.0;
  }

  void validate() const {
    if (!(learning_rate > 0.0)) throw ConfigurationError("learning rate must be > 0");
    // smoothing = 1 is the degenerate fixed-rate limit and is allowed.
    if (!(smoothing > 0.0 && smoothing <= 1.0)) throw ConfigurationError("smoothing must be in (0, 1]");
    if (!(stability > 0.0)) throw ConfigurationError("stability floor must be > 0");
    if (!(growth > 1.0)) throw ConfigurationError("penalty growth factor must be > 1");
    if (!(initial_penalty > 0.0) || !(max_penalty >= initial_penalty)) {
      throw ConfigurationError("penalties must satisfy max_penalty >= initial_penalty > 0");
    }
    if (epochs < 0) throw ConfigurationError("epochs must be >= 0");
    if (batch_size && *batch_size < 1) throw ConfigurationError("batch size must be >= 1");
  }
};

inline std::vector<ConstraintGroup> make_groups(const std::vector<GroupLayout>& layout, const AlmConfig& config) {
  std::vector<ConstraintGroup> groups;
  for (const auto& l : layout) {
    ConstraintGroup g;
    g.name = l.name;
    g.residual_id = l.residual_id;
    g.mode = l.mode;
    g.distance = l.distance;
    g.multiplier.assign(l.entries, config.lambda0());
    g.penalty.assign(l.entries, config.initial_penalty);
    g.square_average.assign(l.entries, 0.0);
    groups.push_back(std::move(g));
  }
  return groups;
}

/// Constraint values C per group, shaped like the groups' multipliers.
using ConstraintValues = std::vector<std::vector<double>>;

struct Evaluation {
  double objective = 0.0;
  ConstraintValues constraints;
  double lagrangian = 0.0;
  Eigen::VectorXd gradient;  ///< gradient of the Lagrangian (when requested)
};

/// L = J + sum_i lambda_i C_i + 1/2 sum_i mu_i C_i^2, summed over every
/// entry of every group.
inline double lagrangian_value(double objective, std::span<const ConstraintGroup> groups,
                               const ConstraintValues& values) {
  double l = objective;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    const auto& g = groups[i];
    for (std::size_t j = 0; j < g.size(); ++j) {
      const double c = values[i][j];
      l += g.multiplier[j] * c + 0.5 * g.penalty[j] * c * c;
    }
  }
  return l;
}

/// dL/dC for one entry: lambda + mu C.
inline double lagrangian_sensitivity(const ConstraintGroup& group, std::size_t entry, double value) {
  return group.multiplier[entry] + group.penalty[entry] * value;
}

/// Something whose parameters are trained under equality constraints.
class ConstrainedModel {
 public:
  virtual ~ConstrainedModel() = default;

  virtual std::size_t parameter_count() const = 0;
  virtual std::vector<GroupLayout> constraint_layout() const = 0;

  /// Objective, constraint values and Lagrangian at `theta` for the given
  /// multiplier state; the gradient of the Lagrangian when requested.
  /// Throws EvaluationError naming the term when a value is not finite.
  virtual Evaluation evaluate(const Eigen::VectorXd& theta, std::span<const ConstraintGroup> groups,
                              bool with_gradient) = 0;

  /// Called before each epoch (1-based); models that resample points do it here.
  virtual void begin_epoch(int /*epoch*/) {}
  virtual int batch_count() const { return 1; }
  virtual void select_batch(int /*epoch*/, int /*batch*/) {}
};

/// The scalar loss minimized in the primal step, as an L-BFGS objective.
/// Evaluation failures surface as NaN (so line searches back off); the
/// failing term is written to `last_failure` when given.
inline lbfgs::Objective assemble_lagrangian(ConstrainedModel& model, std::span<const ConstraintGroup> groups,
                                            std::string* last_failure = nullptr) {
  return [&model, groups, last_failure](const Eigen::VectorXd& theta, Eigen::VectorXd& grad) {
    try {
      Evaluation e = model.evaluate(theta, groups, true);
      grad = std::move(e.gradient);
      return e.lagrangian;
    } catch (const EvaluationError& err) {
      if (last_failure) *last_failure = err.term().empty() ? err.what() : err.term();
      grad = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(theta.size()),
                                       std::numeric_limits<double>::quiet_NaN());
      return std::numeric_limits<double>::quiet_NaN();
    }
  };
}

struct MetricsRecord {
  int epoch = 0;
  double objective = 0.0;
  double lagrangian = 0.0;
  /// Per group; pointwise groups report the mean over their entries.
  std::vector<double> constraint;
  std::vector<double> multiplier;
  std::vector<double> penalty;
};

struct TrainerState {
  int epoch = 0;
  /// Previous constraint norm (CPU); +inf before the first epoch so that
  /// the first update always takes the multiplier branch.
  double eta = std::numeric_limits<double>::infinity();
  std::vector<MetricsRecord> history;
  lbfgs::LbfgsState lbfgs;
  long function_evaluations = 0;
  int line_search_failures = 0;
};

inline double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

inline MetricsRecord make_record(int epoch, const Evaluation& e, std::span<const ConstraintGroup> groups) {
  MetricsRecord r;
  r.epoch = epoch;
  r.objective = e.objective;
  r.lagrangian = e.lagrangian;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    r.constraint.push_back(mean_of(e.constraints[i]));
    r.multiplier.push_back(mean_of(groups[i].multiplier));
    r.penalty.push_back(mean_of(groups[i].penalty));
  }
  return r;
}

/// lambda_i += mu C_i, then mu <- min(beta mu, mu_max) (one shared mu).
inline void dual_update_mpu(std::span<ConstraintGroup> groups, const ConstraintValues& values,
                            const AlmConfig& config) {
  for (std::size_t i = 0; i < groups.size(); ++i) {
    auto& g = groups[i];
    for (std::size_t j = 0; j < g.size(); ++j) g.multiplier[j] += g.penalty[j] * values[i][j];
  }
  for (auto& g : groups) {
    for (auto& mu : g.penalty) mu = std::min(config.growth * mu, config.max_penalty);
  }
}

/// Euclidean norm of all constraint entries concatenated.
inline double constraint_norm(const ConstraintValues& values) {
  double s = 0.0;
  for (const auto& v : values) {
    for (double c : v) s += c * c;
  }
  return std::sqrt(s);
}

/// When ||C|| < eta: lambda_i += mu C_i with mu fixed; otherwise mu grows
/// (capped at mu_max) with lambda fixed. Then eta <- ||C||.
inline void dual_update_cpu(std::span<ConstraintGroup> groups, const ConstraintValues& values, TrainerState& state,
                            const AlmConfig& config) {
  const double norm = constraint_norm(values);
  if (norm < state.eta) {
    for (std::size_t i = 0; i < groups.size(); ++i) {
      auto& g = groups[i];
      for (std::size_t j = 0; j < g.size(); ++j) g.multiplier[j] += g.penalty[j] * values[i][j];
    }
  } else {
    for (auto& g : groups) {
      for (auto& mu : g.penalty) mu = std::min(config.growth * mu, config.max_penalty);
    }
  }
  state.eta = norm;
}

/// Per entry, in this order:
///   v <- alpha v + (1 - alpha) C^2
///   mu <- gamma / (sqrt(v) + eps)
///   lambda <- lambda + mu C
inline void dual_update_apu(std::span<ConstraintGroup> groups, const ConstraintValues& values,
                            const AlmConfig& config) {
  const double alpha = config.smoothing;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    auto& g = groups[i];
    for (std::size_t j = 0; j < g.size(); ++j) {
      const double c = values[i][j];
      g.square_average[j] = alpha * g.square_average[j] + (1.0 - alpha) * c * c;
      g.penalty[j] = config.learning_rate / (std::sqrt(g.square_average[j]) + config.stability);
      g.multiplier[j] += g.penalty[j] * c;
    }
  }
}

inline void dual_update(std::span<ConstraintGroup> groups, const ConstraintValues& values, TrainerState& state,
                        const AlmConfig& config) {
  switch (config.strategy) {
    case Strategy::mpu: dual_update_mpu(groups, values, config); break;
    case Strategy::cpu: dual_update_cpu(groups, values, state, config); break;
    case Strategy::apu: dual_update_apu(groups, values, config); break;
  }
}

struct TrainFailure {
  int epoch = 0;
  std::string group;
  Strategy strategy = Strategy::apu;
  std::string message;
};

struct TrainResult {
  Eigen::VectorXd theta;
  std::vector<ConstraintGroup> groups;
  TrainerState state;
  MetricsRecord initial;
  std::optional<TrainFailure> failure;
  double seconds = 0.0;
};

using EpochCallback =
    std::function<void(const MetricsRecord&, std::span<const ConstraintGroup>, const Eigen::VectorXd& theta)>;

/// Alternates a primal L-BFGS minimization of the Lagrangian with a dual
/// update per epoch. Curvature pairs persist across epochs. On a
/// non-finite evaluation, training stops and the parameters of the last
/// completed epoch are returned together with the failure.
inline TrainResult train(ConstrainedModel& model, Eigen::VectorXd theta, const AlmConfig& config,
                         const lbfgs::LbfgsConfig& lbfgs_config, const EpochCallback& on_epoch = {}) {
  config.validate();
  lbfgs_config.validate();
  if (static_cast<std::size_t>(theta.size()) != model.parameter_count()) {
    throw ConfigurationError("initial parameters do not match the model");
  }
  const auto start = std::chrono::steady_clock::now();
  TrainResult result;
  result.groups = make_groups(model.constraint_layout(), config);
  auto& groups = result.groups;
  auto& state = result.state;

  auto fail = [&](int epoch, std::string group, std::string message) {
    result.failure = TrainFailure{epoch, std::move(group), config.strategy, std::move(message)};
  };

  try {
    const Evaluation e0 = model.evaluate(theta, groups, false);
    result.initial = make_record(0, e0, groups);
  } catch (const EvaluationError& err) {
    fail(0, err.term(), err.what());
    result.theta = std::move(theta);
    return result;
  }

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    Eigen::VectorXd candidate = theta;
    std::string failed_term;
    try {
      model.begin_epoch(epoch);
      const int batches = model.batch_count();
      for (int b = 0; b < batches; ++b) {
        model.select_batch(epoch, b);
        const auto objective = assemble_lagrangian(model, groups, &failed_term);
        lbfgs::MinimizeResult step = lbfgs::minimize(objective, std::move(candidate), lbfgs_config, &state.lbfgs);
        state.function_evaluations += step.evaluations;
        state.line_search_failures += step.line_search_failures;
        candidate = std::move(step.x);
      }
      const Evaluation e = model.evaluate(candidate, groups, false);
      theta = std::move(candidate);
      dual_update(groups, e.constraints, state, config);
      state.epoch = epoch;
      MetricsRecord record = make_record(epoch, e, groups);
      state.history.push_back(record);
      if (on_epoch) on_epoch(record, groups, theta);
    } catch (const EvaluationError& err) {
      fail(epoch, err.term().empty() ? failed_term : err.term(), err.what());
      break;
    }
  }
  result.theta = std::move(theta);
  result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

/// Header `epoch,J,C_<name>...,lambda_<name>...,mu_<name>...`.
inline void write_metrics_header(std::ostream& out, std::span<const ConstraintGroup> groups) {
  out << "epoch,J";
  for (const char* prefix : {"C_", "lambda_", "mu_"}) {
    for (const auto& g : groups) out << ',' << prefix << g.name;
  }
  out << '\n';
}

inline void write_metrics_row(std::ostream& out, const MetricsRecord& r) {
  char buf[64];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.16e", v);
    out << ',' << buf;
  };
  out << r.epoch;
  put(r.objective);
  for (const auto* column : {&r.constraint, &r.multiplier, &r.penalty}) {
    for (double v : *column) put(v);
  }
  out << '\n';
}

/// The initial record followed by every completed epoch.
inline void write_metrics_csv(std::ostream& out, const TrainResult& result) {
  write_metrics_header(out, result.groups);
  write_metrics_row(out, result.initial);
  for (const auto& r : result.state.history) write_metrics_row(out, r);
}

/// Multipliers of pointwise groups with their mean and standard deviation.
struct MultiplierDistribution {
  std::string group;
  std::vector<double> values;
  double mean = 0.0;
  double stddev = 0.0;
};

inline std::vector<MultiplierDistribution> export_multiplier_distribution(std::span<const ConstraintGroup> groups) {
  std::vector<MultiplierDistribution> out;
  for (const auto& g : groups) {
    if (g.mode != ConstraintMode::pointwise) {
      throw ConfigurationError("group '" + g.name + "' uses expectation mode; it has a single multiplier");
    }
    MultiplierDistribution d;
    d.group = g.name;
    d.values = g.multiplier;
    d.mean = mean_of(d.values);
    double ss = 0.0;
    for (double v : d.values) ss += (v - d.mean) * (v - d.mean);
    d.stddev = d.values.size() > 1 ? std::sqrt(ss / static_cast<double>(d.values.size() - 1)) : 0.0;
    out.push_back(std::move(d));
  }
  return out;
}

/// CSV with columns group,index,lambda followed by one summary row per
/// group (index "mean" and "stddev").
inline void write_multiplier_csv(std::ostream& out, const std::vector<MultiplierDistribution>& dists) {
  char buf[64];
  out << "group,index,lambda\n";
  for (const auto& d : dists) {
    for (std::size_t j = 0; j < d.values.size(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", d.values[j]);
      out << d.group << ',' << j << ',' << buf << '\n';
    }
  }
  for (const auto& d : dists) {
    std::snprintf(buf, sizeof buf, "%.17g", d.mean);
    out << d.group << ",mean," << buf << '\n';
    std::snprintf(buf, sizeof buf, "%.17g", d.stddev);
    out << d.group << ",stddev," << buf << '\n';
  }
}

}  // namespace pecann::alm
