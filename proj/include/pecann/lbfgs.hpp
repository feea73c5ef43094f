#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "pecann/errors.hpp"

namespace pecann::lbfgs {

struct LbfgsConfig {
  int history_size = 10;
  /// Quasi-Newton iterations per call to minimize().
  int max_inner_iterations = 5;
  /// Objective evaluations per call; 0 means 5/4 of max_inner_iterations.
  int max_function_evaluations = 0;
  double wolfe_c1 = 1e-4;
  double wolfe_c2 = 0.9;
  int max_line_search_evals = 25;
  /// Stop when max |g_i| falls to this value.
  double grad_tolerance = 1e-9;
  /// Stop when the step, the change in objective or the directional
  /// derivative falls below this value. Off by default: an absolute
  /// threshold stalls problems whose gradients are legitimately small.
  double change_tolerance = 0.0;
  /// Clear the correction pairs when a line search fails. When false the
  /// lowest point found is taken and the iteration continues.
  bool reset_on_failure = true;
  /// Store each pair one iteration late, so the pair of the last step of a
  /// call is completed with the gradient at the start of the next call
  /// (which may be a different objective).
  bool defer_last_pair = false;

  void validate() const {
    if (history_size < 1) throw ConfigurationError("history_size must be >= 1");
    if (max_inner_iterations < 1) throw ConfigurationError("max_inner_iterations must be >= 1");
    if (max_function_evaluations < 0) throw ConfigurationError("max_function_evaluations must be >= 0");
    if (!(wolfe_c1 > 0.0 && wolfe_c1 < wolfe_c2 && wolfe_c2 < 1.0)) {
      throw ConfigurationError("Wolfe constants must satisfy 0 < c1 < c2 < 1");
    }
    if (max_line_search_evals < 1) throw ConfigurationError("max_line_search_evals must be >= 1");
    if (!(grad_tolerance >= 0.0) || !(change_tolerance >= 0.0)) throw ConfigurationError("tolerances must be >= 0");
  }

  int evaluation_budget() const {
    return max_function_evaluations > 0 ? max_function_evaluations : max_inner_iterations * 5 / 4;
  }
};

/// The behaviour of torch.optim.LBFGS with line_search_fn="strong_wolfe"
/// and otherwise default arguments.
inline LbfgsConfig pytorch_defaults() {
  LbfgsConfig c;
  c.history_size = 100;
  c.max_inner_iterations = 20;
  c.grad_tolerance = 1e-7;
  c.change_tolerance = 1e-9;
  c.reset_on_failure = false;
  c.defer_last_pair = true;
  return c;
}

enum class Status { converged_gradient, max_iterations, max_evaluations, no_progress, line_search_failed };

inline std::string to_string(Status s) {
  switch (s) {
    case Status::converged_gradient: return "converged by gradient tolerance";
    case Status::max_iterations: return "maximum iterations";
    case Status::max_evaluations: return "maximum function evaluations";
    case Status::no_progress: return "no progress";
    case Status::line_search_failed: return "line search failed";
  }
  return "unknown";
}

struct CorrectionPair {
  Eigen::VectorXd s;
  Eigen::VectorXd y;
  double rho = 0.0;  ///< 1 / (s'y)
};

/// Correction pairs kept between calls to minimize(), so a sequence of
/// related minimizations (one per training epoch) shares curvature history.
struct LbfgsState {
  std::deque<CorrectionPair> pairs;
  double gamma = 1.0;  ///< initial inverse-Hessian scaling s'y / y'y of the newest pair
  long total_iterations = 0;
  /// Step and starting gradient of a pair not yet stored (defer_last_pair).
  Eigen::VectorXd pending_s;
  Eigen::VectorXd pending_g;

  void reset() {
    pairs.clear();
    gamma = 1.0;
    pending_s.resize(0);
    pending_g.resize(0);
  }
};

/// Stores (s, y) when s'y is safely positive; returns whether it was kept.
inline bool push_pair(LbfgsState& state, Eigen::VectorXd s, Eigen::VectorXd y, int history_size) {
  const double sy = s.dot(y);
  if (!(sy > 1e-10) || !std::isfinite(sy)) return false;
  const double yy = y.squaredNorm();
  if (static_cast<int>(state.pairs.size()) == history_size) state.pairs.pop_front();
  state.pairs.push_back(CorrectionPair{std::move(s), std::move(y), 1.0 / sy});
  state.gamma = sy / yy;
  return true;
}

/// Two-loop recursion: returns -H g for the limited-memory inverse Hessian
/// approximation H built from the stored pairs with H0 = gamma * I.
inline Eigen::VectorXd two_loop_direction(const LbfgsState& state, const Eigen::VectorXd& g) {
  const std::size_t m = state.pairs.size();
  std::vector<double> alpha(m);
  Eigen::VectorXd q = -g;
  for (std::size_t k = m; k-- > 0;) {
    const auto& p = state.pairs[k];
    alpha[k] = p.rho * p.s.dot(q);
    q -= alpha[k] * p.y;
  }
  q *= state.gamma;
  for (std::size_t k = 0; k < m; ++k) {
    const auto& p = state.pairs[k];
    const double beta = p.rho * p.y.dot(q);
    q += (alpha[k] - beta) * p.s;
  }
  return q;
}

/// f(x) with its gradient written into `grad` (resized by the callee).
using Objective = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd& grad)>;

struct LineSearchResult {
  double step = 0.0;
  double value = 0.0;
  Eigen::VectorXd gradient;
  int evaluations = 0;
  /// Armijo and strong curvature conditions both hold at `step`.
  bool satisfied = false;
};

namespace detail {

struct Sample {
  double t = 0.0;
  double f = 0.0;
  Eigen::VectorXd g;
  double gtd = 0.0;
};

// Minimizer of the cubic interpolating (x1,f1,g1), (x2,f2,g2), clamped to [lo, hi].
inline double cubic_minimizer(double x1, double f1, double g1, double x2, double f2, double g2, double lo,
                              double hi) {
  const double d1 = g1 + g2 - 3.0 * (f1 - f2) / (x1 - x2);
  const double d2_square = d1 * d1 - g1 * g2;
  if (d2_square >= 0.0 && std::isfinite(d2_square)) {
    const double d2 = std::sqrt(d2_square);
    double t;
    if (x1 <= x2) {
      t = x2 - (x2 - x1) * ((g2 + d2 - d1) / (g2 - g1 + 2.0 * d2));
    } else {
      t = x1 - (x1 - x2) * ((g1 + d2 - d1) / (g1 - g2 + 2.0 * d2));
    }
    if (std::isfinite(t)) return std::clamp(t, lo, hi);
  }
  return 0.5 * (lo + hi);
}

inline double cubic_minimizer(const Sample& a, const Sample& b) {
  if (!std::isfinite(a.f) || !std::isfinite(b.f)) return 0.5 * (a.t + b.t);
  return cubic_minimizer(a.t, a.f, a.gtd, b.t, b.f, b.gtd, std::min(a.t, b.t), std::max(a.t, b.t));
}

}  // namespace detail

/// Line search along `direction` from `x` for a step satisfying the strong
/// Wolfe conditions
///   f(x + a d) <= f0 + c1 a g0'd   and   |g(x + a d)'d| <= c2 |g0'd|.
/// Bracketing with cubic extrapolation, then cubic-interpolation zoom.
/// Non-finite trial values are treated as failing sufficient decrease.
/// When no acceptable step is found within max_line_search_evals the
/// lowest point seen is returned with `satisfied == false`.
inline LineSearchResult strong_wolfe_search(const Objective& objective, const Eigen::VectorXd& x, double f0,
                                            const Eigen::VectorXd& g0, const Eigen::VectorXd& direction,
                                            double initial_step, const LbfgsConfig& config) {
  using detail::Sample;
  const double gtd0 = g0.dot(direction);
  if (!(gtd0 < 0.0)) throw ConfigurationError("line search direction is not a descent direction");
  const double c1 = config.wolfe_c1;
  const double c2 = config.wolfe_c2;
  const double d_norm = direction.cwiseAbs().maxCoeff();

  int evaluations = 0;
  Eigen::VectorXd trial(x.size());
  auto evaluate = [&](double t) {
    Sample s;
    s.t = t;
    trial = x + t * direction;
    s.f = objective(trial, s.g);
    ++evaluations;
    if (!std::isfinite(s.f) || !s.g.allFinite()) {
      s.f = std::numeric_limits<double>::infinity();
      s.gtd = std::numeric_limits<double>::quiet_NaN();
    } else {
      s.gtd = s.g.dot(direction);
    }
    return s;
  };
  auto armijo_fails = [&](const Sample& s) { return !(s.f <= f0 + c1 * s.t * gtd0); };
  auto curvature_holds = [&](const Sample& s) { return std::abs(s.gtd) <= -c2 * gtd0; };

  const Sample start{0.0, f0, g0, gtd0};
  Sample prev = start;
  Sample cur = evaluate(initial_step);
  Sample lo, hi;
  bool done = false;
  bool bracketed = false;
  int iter = 0;

  while (iter < config.max_line_search_evals) {
    if (armijo_fails(cur) || (iter > 1 && cur.f >= prev.f)) {
      lo = prev;
      hi = cur;
      bracketed = true;
      break;
    }
    if (curvature_holds(cur)) {
      lo = cur;
      done = true;
      break;
    }
    if (cur.gtd >= 0.0) {
      lo = prev;
      hi = cur;
      bracketed = true;
      break;
    }
    if (evaluations >= config.max_line_search_evals) break;
    const double min_step = cur.t + 0.01 * (cur.t - prev.t);
    const double max_step = cur.t * 10.0;
    const double next = detail::cubic_minimizer(prev.t, prev.f, prev.gtd, cur.t, cur.f, cur.gtd, min_step, max_step);
    prev = std::move(cur);
    cur = evaluate(next);
    ++iter;
  }
  if (!done && !bracketed) {
    lo = start;
    hi = cur;
    bracketed = true;
  }
  if (bracketed && hi.f < lo.f) std::swap(lo, hi);

  bool insufficient_progress = false;
  while (!done && evaluations < config.max_line_search_evals) {
    if (std::abs(hi.t - lo.t) * d_norm < config.change_tolerance) break;
    const double b_min = std::min(lo.t, hi.t);
    const double b_max = std::max(lo.t, hi.t);
    double t = detail::cubic_minimizer(lo, hi);
    const double eps = 0.1 * (b_max - b_min);
    if (std::min(b_max - t, t - b_min) < eps) {
      if (insufficient_progress || t >= b_max || t <= b_min) {
        t = std::abs(t - b_max) < std::abs(t - b_min) ? b_max - eps : b_min + eps;
        insufficient_progress = false;
      } else {
        insufficient_progress = true;
      }
    } else {
      insufficient_progress = false;
    }
    Sample s = evaluate(t);
    if (armijo_fails(s) || s.f >= lo.f) {
      hi = std::move(s);
      if (hi.f < lo.f) std::swap(lo, hi);
    } else {
      if (curvature_holds(s)) {
        done = true;
      } else if (s.gtd * (hi.t - lo.t) >= 0.0) {
        hi = lo;
      }
      lo = std::move(s);
    }
  }

  LineSearchResult result;
  result.evaluations = evaluations;
  result.step = lo.t;
  result.value = lo.f;
  result.gradient = std::move(lo.g);
  result.satisfied = done && lo.t > 0.0;
  return result;
}

struct MinimizeResult {
  Eigen::VectorXd x;
  double value = 0.0;
  Eigen::VectorXd gradient;
  int iterations = 0;
  int evaluations = 0;
  Status status = Status::max_iterations;
  /// Line searches that ended without meeting the Wolfe conditions.
  int line_search_failures = 0;
  /// Objective value at the start and after each accepted step.
  std::vector<double> accepted_values;
};

/// Limited-memory BFGS with strong Wolfe line search.
///
/// When `state` is given its correction pairs seed the first direction and
/// the pairs gathered here are left in it. A failed line search moves to the
/// lowest point it found (if lower), clears the pairs and returns.
inline MinimizeResult minimize(const Objective& objective, Eigen::VectorXd x0, const LbfgsConfig& config,
                               LbfgsState* state = nullptr) {
  config.validate();
  LbfgsState local;
  LbfgsState& st = state ? *state : local;

  MinimizeResult r;
  r.x = std::move(x0);
  r.value = objective(r.x, r.gradient);
  r.evaluations = 1;
  if (!std::isfinite(r.value) || !r.gradient.allFinite()) {
    throw EvaluationError("non-finite objective at the starting point");
  }
  r.accepted_values.push_back(r.value);
  if (r.gradient.cwiseAbs().maxCoeff() <= config.grad_tolerance) {
    r.status = Status::converged_gradient;
    return r;
  }

  const int budget = config.evaluation_budget();
  r.status = Status::max_iterations;
  for (int iter = 0; iter < config.max_inner_iterations; ++iter) {
    if (st.pending_s.size() > 0) {
      Eigen::VectorXd y = r.gradient - st.pending_g;
      push_pair(st, std::move(st.pending_s), std::move(y), config.history_size);
      st.pending_s.resize(0);
      st.pending_g.resize(0);
    }
    const bool fresh = st.pairs.empty();
    Eigen::VectorXd d = fresh ? Eigen::VectorXd(-r.gradient) : two_loop_direction(st, r.gradient);
    double gtd = r.gradient.dot(d);
    if (!(gtd < 0.0) && !fresh) {
      // Stale curvature from an earlier objective; fall back to steepest descent.
      st.reset();
      d = -r.gradient;
      gtd = r.gradient.dot(d);
    }
    if (gtd > -config.change_tolerance) {
      r.status = Status::no_progress;
      break;
    }
    const double t0 = st.pairs.empty() ? std::min(1.0, 1.0 / r.gradient.lpNorm<1>()) : 1.0;
    LineSearchResult ls = strong_wolfe_search(objective, r.x, r.value, r.gradient, d, t0, config);
    r.evaluations += ls.evaluations;

    const bool improved = ls.step > 0.0 && ls.value < r.value;
    if (!ls.satisfied) ++r.line_search_failures;
    if (!ls.satisfied && (config.reset_on_failure || !improved)) {
      if (improved) {
        r.x += ls.step * d;
        r.value = ls.value;
        r.gradient = std::move(ls.gradient);
        r.accepted_values.push_back(r.value);
        ++r.iterations;
        ++st.total_iterations;
      }
      if (config.reset_on_failure) st.reset();
      r.status = Status::line_search_failed;
      break;
    }

    Eigen::VectorXd s = ls.step * d;
    const double previous = r.value;
    const double step_size = s.cwiseAbs().maxCoeff();
    r.x += s;
    if (config.defer_last_pair) {
      st.pending_s = std::move(s);
      st.pending_g = r.gradient;
      r.gradient = std::move(ls.gradient);
    } else {
      Eigen::VectorXd y = ls.gradient - r.gradient;
      r.gradient = std::move(ls.gradient);
      push_pair(st, std::move(s), std::move(y), config.history_size);
    }
    r.value = ls.value;
    r.accepted_values.push_back(r.value);
    ++r.iterations;
    ++st.total_iterations;

    if (r.gradient.cwiseAbs().maxCoeff() <= config.grad_tolerance) {
      r.status = Status::converged_gradient;
      break;
    }
    if (iter + 1 == config.max_inner_iterations) break;
    if (r.evaluations >= budget) {
      r.status = Status::max_evaluations;
      break;
    }
    if (step_size <= config.change_tolerance || std::abs(r.value - previous) < config.change_tolerance) {
      r.status = Status::no_progress;
      break;
    }
  }
  return r;
}

}  // namespace pecann::lbfgs
