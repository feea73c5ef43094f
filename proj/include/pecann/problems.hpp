#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "pecann/alm.hpp"
#include "pecann/collocation.hpp"
#include "pecann/errors.hpp"
#include "pecann/jet.hpp"
#include "pecann/metrics.hpp"
#include "pecann/network.hpp"
#include "pecann/sampling.hpp"
#include "pecann/taylor.hpp"

#ifndef PECANN_DATA_DIR
#define PECANN_DATA_DIR "data"
#endif

namespace pecann::problems {

inline constexpr double kPi = std::numbers::pi;

/// Point counts by group name; faces count per face.
using PointCounts = std::map<std::string, int>;

struct BuildOptions {
  PointCounts points;
  alm::ConstraintMode mode = alm::ConstraintMode::expectation;
  /// Extra clean samples used as an equality constraint (cavity).
  std::optional<PointSet> data;
};

/// A closed-form field: values of every output at a point.
using Field = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
/// Values and pure input derivatives of every output at a point.
using FieldJet = std::function<InputJet(const Eigen::VectorXd&)>;

/// Two axes of a regular evaluation grid; remaining inputs are held at `base`.
struct GridSpec {
  int axis0 = 0;
  int axis1 = 1;
  int n0 = 256;
  int n1 = 101;
  Eigen::VectorXd base;
};

struct ProblemReport {
  metrics::MetricsSummary primary;  ///< errors of the first output on the evaluation grid
  std::map<std::string, double> extra;
};

struct ProblemSpec {
  std::string name;
  std::string title;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  Box domain;
  double final_time = 0.0;

  std::vector<int> hidden;
  PointCounts points;
  /// Groups whose count is drawn once per face or sensor.
  PointCounts point_copies;
  int epochs = 1000;
  lbfgs::LbfgsConfig optimizer;
  bool resample_each_epoch = false;
  std::vector<std::string> groups;  ///< constraint groups in training order

  /// Terms for a given sampling seed and epoch.
  std::function<TermSet(const BuildOptions&, std::uint64_t seed, int epoch)> terms;
  std::optional<Field> exact;
  std::optional<FieldJet> exact_jet;
  /// Constraint groups the closed-form field is not expected to satisfy.
  std::vector<std::string> exact_exempt;
  GridSpec grid;
  /// Errors of a trained network; `grid` sets the evaluation resolution.
  std::function<ProblemReport(const DenseNetwork&, const GridSpec&)> report;
  /// Human-readable notes on fixed choices (manufactured solutions, noise).
  std::map<std::string, std::string> notes;

  int input_dim() const { return static_cast<int>(inputs.size()); }
  int output_dim() const { return static_cast<int>(outputs.size()); }

  std::vector<int> layer_sizes(const std::vector<int>& hidden_override = {}) const {
    std::vector<int> sizes{input_dim()};
    for (int h : hidden_override.empty() ? hidden : hidden_override) sizes.push_back(h);
    sizes.push_back(output_dim());
    return sizes;
  }

  BuildOptions default_options() const { return BuildOptions{points, alm::ConstraintMode::expectation, std::nullopt}; }
};

// ---------------------------------------------------------------------------
// closed-form fields

namespace detail {

template <int D, int M, class F>
Field make_field(F f) {
  return [f](const Eigen::VectorXd& x) {
    std::array<double, D> in{};
    for (int i = 0; i < D; ++i) in[i] = x[i];
    const std::array<double, M> out = f(in);
    Eigen::VectorXd y(M);
    for (int o = 0; o < M; ++o) y[o] = out[o];
    return y;
  };
}

template <int D, int M, class F>
FieldJet make_field_jet(F f) {
  return [f](const Eigen::VectorXd& x) {
    InputJet jet;
    jet.value.resize(M);
    jet.d1.resize(M, D);
    jet.d2.resize(M, D);
    for (int i = 0; i < D; ++i) {
      std::array<Taylor2, D> in{};
      for (int k = 0; k < D; ++k) in[k] = Taylor2(x[k]);
      in[i] = Taylor2::seed(x[i]);
      const std::array<Taylor2, M> out = f(in);
      for (int o = 0; o < M; ++o) {
        jet.value[o] = out[o].v;
        jet.d1(o, i) = out[o].d;
        jet.d2(o, i) = out[o].dd;
      }
    }
    return jet;
  };
}

inline double value_of(double x) { return x; }
inline double value_of(const Taylor2& x) { return x.v; }

inline Term make_term(std::string name, PointSet points, JetRequest request, ResidualFn residual,
                      alm::ConstraintMode mode = alm::ConstraintMode::expectation) {
  Term t;
  t.name = std::move(name);
  t.sets.push_back(std::move(points));
  t.requests.push_back(std::move(request));
  t.residual = std::move(residual);
  t.mode = mode;
  return t;
}

inline int count(const BuildOptions& o, const std::string& key) {
  const auto it = o.points.find(key);
  if (it == o.points.end()) throw ConfigurationError("missing point count '" + key + "'");
  if (it->second < 1) throw ConfigurationError("point count '" + key + "' must be >= 1");
  return it->second;
}

/// Per-group sampling seed: fixed across epochs unless the problem resamples.
inline std::uint64_t group_seed(std::uint64_t seed, int epoch, std::uint64_t salt) {
  return derive_seed(derive_seed(seed, static_cast<std::uint64_t>(epoch)), salt);
}

/// Rows of `points` filled with a field's first output as targets.
inline PointSet with_targets(PointSet points, const Field& f, int outputs = 1) {
  points.targets.resize(outputs, points.size());
  for (int j = 0; j < points.size(); ++j) points.targets.col(j) = f(points.coords.col(j)).head(outputs);
  return points;
}

inline Eigen::MatrixXd grid_points(const Box& domain, const GridSpec& g) {
  Eigen::MatrixXd pts(domain.dim(), static_cast<Eigen::Index>(g.n0) * g.n1);
  Eigen::Index col = 0;
  for (int j = 0; j < g.n1; ++j) {
    for (int i = 0; i < g.n0; ++i) {
      Eigen::VectorXd x = g.base;
      x[g.axis0] = domain.lo[g.axis0] + domain.width(g.axis0) * i / (g.n0 - 1);
      x[g.axis1] = domain.lo[g.axis1] + domain.width(g.axis1) * j / (g.n1 - 1);
      pts.col(col++) = x;
    }
  }
  return pts;
}

/// Errors of output `out` on the problem grid.
inline metrics::MetricsSummary grid_errors(const DenseNetwork& net, const Box& domain, const GridSpec& g,
                                           const Field& exact, int out) {
  const Eigen::MatrixXd pts = grid_points(domain, g);
  const Eigen::MatrixXd pred = evaluate_network(net, pts);
  std::vector<double> p(pts.cols()), e(pts.cols());
  for (Eigen::Index j = 0; j < pts.cols(); ++j) {
    p[j] = pred(out, j);
    e[j] = exact(pts.col(j))[out];
  }
  return metrics::summarize(p, e);
}

inline bool on_interface(const Eigen::VectorXd& x) { return x[0] == 0.0; }

}  // namespace detail

// ---------------------------------------------------------------------------
// noisy data

struct NoisyDataset {
  PointSet points;
  Eigen::VectorXd clean;
  Eigen::VectorXd noisy;
  double fraction = 0.0;
};

inline double sample_stddev(const Eigen::VectorXd& v) {
  if (v.size() < 2) return 0.0;
  const double mean = v.mean();
  return std::sqrt((v.array() - mean).square().sum() / static_cast<double>(v.size() - 1));
}

/// Adds Gaussian noise with standard deviation `fraction` times the sample
/// standard deviation of the clean values.
inline NoisyDataset make_noisy(PointSet points, const Eigen::VectorXd& clean, double fraction, std::uint64_t seed) {
  if (!(fraction >= 0.0)) throw ConfigurationError("noise fraction must be >= 0");
  if (clean.size() != points.size()) throw ConfigurationError("clean values do not match points");
  if (fraction > 0.0 && clean.size() < 2) throw ConfigurationError("noise needs at least two samples");
  NoisyDataset out;
  out.points = std::move(points);
  out.clean = clean;
  out.noisy = clean;
  out.fraction = fraction;
  const double sd = fraction * sample_stddev(clean);
  if (sd > 0.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, sd);
    for (Eigen::Index j = 0; j < out.noisy.size(); ++j) out.noisy[j] += normal(rng);
  }
  out.points.targets = out.noisy.transpose();
  return out;
}

// ---------------------------------------------------------------------------
// composite-medium heat conduction, outputs (u, sigma) over (x, t)

struct Heat {
  static constexpr double kRight = 3.0 * kPi;

  template <class T>
  static T kappa(const T& x) {
    return detail::value_of(x) < 0.0 ? T(1.0) : T(kRight);
  }

  template <class T>
  static std::array<T, 2> solution(const std::array<T, 2>& in) {
    const T& x = in[0];
    const T& t = in[1];
    if (detail::value_of(x) < 0.0) {
      return {sin(3.0 * kPi * x) * t, T(3.0 * kPi) * cos(3.0 * kPi * x) * t};
    }
    return {t * x, T(kRight) * t};
  }

  /// s = u_t - (kappa u_x)_x for the solution above.
  static double source(double x, double t) {
    if (x < 0.0) return std::sin(3.0 * kPi * x) * (1.0 + 9.0 * kPi * kPi * t);
    return x;
  }
};

inline ProblemSpec composite_heat() {
  ProblemSpec p;
  p.name = "composite_heat";
  p.title = "heat conduction in a two-material rod, first-order flux form";
  p.inputs = {"x", "t"};
  p.outputs = {"u", "sigma"};
  p.domain = Box({-1.0, 0.0}, {1.0, 2.0});
  p.final_time = 2.0;
  p.hidden = {30, 30, 30};
  p.points = {{"pde", 10000}, {"bc", 5000}, {"ic", 5000}};
  p.point_copies = {{"bc", 2}};
  p.epochs = 1000;
  p.optimizer.max_inner_iterations = 5;
  p.groups = {"bc", "ic", "flux"};
  p.exact = detail::make_field<2, 2>([](const auto& in) { return Heat::solution(in); });
  p.exact_jet = detail::make_field_jet<2, 2>([](const auto& in) { return Heat::solution(in); });
  p.notes = {{"source", "s = u_t - (kappa u_x)_x of the closed-form solution; residual u_t - sigma_x - s"}};
  const Box domain = p.domain;
  const Field exact = *p.exact;
  p.terms = [domain, exact](const BuildOptions& o, std::uint64_t seed, int epoch) {
    const int nf = detail::count(o, "pde");
    PointSet interior = uniform_box(nf, domain, detail::group_seed(seed, epoch, 1), PointRole::interior,
                                    detail::on_interface);
    TermSet ts;
    const JetRequest first({1, 1});
    ts.objective = detail::make_term("pde", interior, first, [](const PointView& v, ResidualBuffer& r) {
      r.push(v.d1(0, 0, 1) - v.d1(0, 1, 0) - Dual(Heat::source(v.coord(0, 0), v.coord(0, 1))));
    });

    const int nb = detail::count(o, "bc");
    Box time_part = domain;
    time_part.lo[1] = 0.0;
    PointSet left = boundary_trace(domain, Face{0, false}, nb, detail::group_seed(seed, epoch, 2));
    PointSet right = boundary_trace(domain, Face{0, true}, nb, detail::group_seed(seed, epoch, 3));
    PointSet bc = detail::with_targets(concatenate({left, right}), exact);
    ts.constraints.push_back(detail::make_term(
        "bc", bc, JetRequest({0, 0}),
        [](const PointView& v, ResidualBuffer& r) { r.push(v.u(0, 0) - Dual(v.target(0, 0))); }, o.mode));

    const int ni = detail::count(o, "ic");
    Box initial = domain;
    initial.hi[1] = 0.0;
    PointSet ic = uniform_box(ni, initial, detail::group_seed(seed, epoch, 4), PointRole::initial,
                              detail::on_interface);
    ic = detail::with_targets(ic, exact);
    ts.constraints.push_back(detail::make_term(
        "ic", ic, JetRequest({0, 0}),
        [](const PointView& v, ResidualBuffer& r) { r.push(v.u(0, 0) - Dual(v.target(0, 0))); }, o.mode));

    ts.constraints.push_back(detail::make_term(
        "flux", interior, JetRequest({1, 0}),
        [](const PointView& v, ResidualBuffer& r) {
          r.push(v.u(0, 1) - Heat::kappa(v.coord(0, 0)) * v.d1(0, 0, 0));
        },
        o.mode));
    return ts;
  };
  p.grid = GridSpec{0, 1, 256, 101, Eigen::VectorXd::Zero(2)};
  p.report = [domain, exact](const DenseNetwork& net, const GridSpec& grid) {
    ProblemReport rep;
    rep.primary = detail::grid_errors(net, domain, grid, exact, 0);
    rep.extra["rel_l2_flux"] = detail::grid_errors(net, domain, grid, exact, 1).rel_l2;
    return rep;
  };
  return p;
}

// ---------------------------------------------------------------------------
// 1D wave equation u_tt = 4 u_xx on (0,1) x (0,1)

struct Wave {
  template <class T>
  static std::array<T, 1> solution(const std::array<T, 2>& in) {
    const T& x = in[0];
    const T& t = in[1];
    return {sin(kPi * x) * cos(2.0 * kPi * t) + 0.5 * sin(4.0 * kPi * x) * cos(8.0 * kPi * t)};
  }
};

inline ProblemSpec wave() {
  ProblemSpec p;
  p.name = "wave";
  p.title = "1D wave equation with two standing modes";
  p.inputs = {"x", "t"};
  p.outputs = {"u"};
  p.domain = Box({0.0, 0.0}, {1.0, 1.0});
  p.final_time = 1.0;
  p.hidden = {50};
  p.points = {{"pde", 300}, {"bc", 300}, {"ic", 300}};
  p.epochs = 10000;
  p.optimizer = lbfgs::pytorch_defaults();
  p.groups = {"bc", "ic_value", "ic_velocity"};
  p.exact = detail::make_field<2, 1>([](const auto& in) { return Wave::solution(in); });
  p.exact_jet = detail::make_field_jet<2, 1>([](const auto& in) { return Wave::solution(in); });
  const Box domain = p.domain;
  p.terms = [domain](const BuildOptions& o, std::uint64_t seed, int epoch) {
    TermSet ts;
    PointSet interior = uniform_box(detail::count(o, "pde"), domain, detail::group_seed(seed, epoch, 1));
    ts.objective = detail::make_term("pde", interior, JetRequest({2, 2}), [](const PointView& v, ResidualBuffer& r) {
      r.push(v.d2(0, 0, 1) - 4.0 * v.d2(0, 0, 0));
    });

    // boundary points split between the two ends, t uniform
    const int nb = detail::count(o, "bc");
    Box edge({0.0, 0.0}, {0.0, 1.0});
    PointSet bc = uniform_box(nb, edge, detail::group_seed(seed, epoch, 2), PointRole::boundary);
    for (int j = 0; j < nb; ++j) bc.coords(0, j) = (j % 2 == 0) ? 0.0 : 1.0;
    ts.constraints.push_back(detail::make_term(
        "bc", bc, JetRequest({0, 0}), [](const PointView& v, ResidualBuffer& r) { r.push(v.u(0, 0)); }, o.mode));

    Box initial = domain;
    initial.hi[1] = 0.0;
    PointSet ic = uniform_box(detail::count(o, "ic"), initial, detail::group_seed(seed, epoch, 3), PointRole::initial);
    ts.constraints.push_back(detail::make_term(
        "ic_value", ic, JetRequest({0, 0}),
        [](const PointView& v, ResidualBuffer& r) {
          const double x = v.coord(0, 0);
          r.push(v.u(0, 0) - Dual(std::sin(kPi * x) + 0.5 * std::sin(4.0 * kPi * x)));
        },
        o.mode));
    ts.constraints.push_back(detail::make_term(
        "ic_velocity", ic, JetRequest({0, 1}),
        [](const PointView& v, ResidualBuffer& r) { r.push(v.d1(0, 0, 1)); }, o.mode));
    return ts;
  };
  p.grid = GridSpec{0, 1, 256, 101, Eigen::VectorXd::Zero(2)};
  const Field exact = *p.exact;
  p.report = [domain, exact](const DenseNetwork& net, const GridSpec& grid) {
    ProblemReport rep;
    rep.primary = detail::grid_errors(net, domain, grid, exact, 0);
    return rep;
  };
  return p;
}

// ---------------------------------------------------------------------------
// lid-driven cavity, outputs (u, v, p) over (x, y)

struct Centerline {
  std::vector<double> coord;
  std::vector<double> value;
};

inline std::filesystem::path data_dir() {
  if (const char* env = std::getenv("PECANN_DATA_DIR")) return env;
  return PECANN_DATA_DIR;
}

inline Centerline read_centerline(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigurationError("cannot open reference table " + path.string());
  Centerline c;
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    double a = 0.0, b = 0.0;
    char comma = 0;
    if (!(row >> a >> comma >> b) || comma != ',') throw ConfigurationError("malformed row in " + path.string());
    c.coord.push_back(a);
    c.value.push_back(b);
  }
  return c;
}

/// Benchmark centerline velocities: `component` 'u' gives u(0.5, y) against
/// y, 'v' gives v(x, 0.5) against x.
inline Centerline ghia_centerline(int re, char component) {
  if (re != 100 && re != 400 && re != 1000) throw ConfigurationError("no reference table for Re=" + std::to_string(re));
  if (component != 'u' && component != 'v') throw ConfigurationError("component must be 'u' or 'v'");
  const std::string file = "re" + std::to_string(re) + "_" + component + ".csv";
  return read_centerline(data_dir() / "ghia" / file);
}

/// CSV `x,y,u,v` of velocity samples; targets hold (u, v).
inline PointSet read_velocity_samples(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigurationError("cannot open velocity samples " + path.string());
  std::string line;
  std::getline(in, line);
  std::vector<std::array<double, 4>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::array<double, 4> r{};
    std::istringstream s(line);
    for (int k = 0; k < 4; ++k) {
      std::string cell;
      if (!std::getline(s, cell, ',')) throw ConfigurationError("malformed row in " + path.string());
      r[k] = std::stod(cell);
    }
    rows.push_back(r);
  }
  if (rows.empty()) throw ConfigurationError("no velocity samples in " + path.string());
  PointSet out;
  out.role = PointRole::data;
  out.descriptor = {"table", 0, 0};
  out.coords.resize(2, static_cast<Eigen::Index>(rows.size()));
  out.targets.resize(2, static_cast<Eigen::Index>(rows.size()));
  for (std::size_t j = 0; j < rows.size(); ++j) {
    out.coords.col(j) << rows[j][0], rows[j][1];
    out.targets.col(j) << rows[j][2], rows[j][3];
  }
  return out;
}

/// `n` samples drawn without replacement (seeded) from interior rows.
inline PointSet pick_samples(const PointSet& table, int n, std::uint64_t seed) {
  std::vector<int> idx;
  for (int j = 0; j < table.size(); ++j) {
    const double x = table.coords(0, j), y = table.coords(1, j);
    if (x > 0.0 && x < 1.0 && y > 0.0 && y < 1.0) idx.push_back(j);
  }
  if (static_cast<int>(idx.size()) < n) throw ConfigurationError("not enough interior velocity samples");
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(n);
  return table.subset(idx);
}

inline ProblemSpec lid_driven_cavity(int re) {
  if (re < 1) throw ConfigurationError("Reynolds number must be positive");
  ProblemSpec p;
  p.name = "cavity_re" + std::to_string(re);
  p.title = "steady lid-driven cavity, primitive variables, Re=" + std::to_string(re);
  p.inputs = {"x", "y"};
  p.outputs = {"u", "v", "p"};
  p.domain = Box({0.0, 0.0}, {1.0, 1.0});
  p.hidden = {30, 30, 30, 30};
  p.points = {{"pde", 10000}, {"bc", 64}};
  p.point_copies = {{"bc", 4}};
  p.epochs = 2000;
  p.optimizer = lbfgs::pytorch_defaults();
  p.groups = {"continuity", "walls", "lid", "anchor"};
  p.notes = {{"corners", "lid value applies at (0,1) and (1,1)"}, {"anchor", "p(0.5,0) = 0"}};
  const double inv_re = 1.0 / re;
  p.terms = [inv_re](const BuildOptions& o, std::uint64_t seed, int epoch) {
    const Box unit({0.0, 0.0}, {1.0, 1.0});
    TermSet ts;
    PointSet interior = uniform_box(detail::count(o, "pde"), unit, detail::group_seed(seed, epoch, 1));
    ts.objective =
        detail::make_term("momentum", interior, JetRequest({2, 2}), [inv_re](const PointView& v, ResidualBuffer& r) {
          const Dual& u = v.u(0, 0);
          const Dual& w = v.u(0, 1);
          r.push(u * v.d1(0, 0, 0) + w * v.d1(0, 0, 1) + v.d1(0, 2, 0) -
                 inv_re * (v.d2(0, 0, 0) + v.d2(0, 0, 1)));
          r.push(u * v.d1(0, 1, 0) + w * v.d1(0, 1, 1) + v.d1(0, 2, 1) -
                 inv_re * (v.d2(0, 1, 0) + v.d2(0, 1, 1)));
        });
    ts.constraints.push_back(detail::make_term(
        "continuity", interior, JetRequest({1, 1}),
        [](const PointView& v, ResidualBuffer& r) { r.push(v.d1(0, 0, 0) + v.d1(0, 1, 1)); }, o.mode));

    // no-slip walls on evenly spaced points; side walls stop short of both
    // corners, the bottom includes its corners
    const int nb = detail::count(o, "bc");
    PointSet walls;
    walls.role = PointRole::boundary;
    walls.descriptor = {"face-grid", 0, 0};
    walls.coords.resize(2, 3 * nb);
    for (int j = 0; j < nb; ++j) {
      const double s = static_cast<double>(j + 1) / (nb + 1);
      walls.coords.col(j) << 0.0, s;
      walls.coords.col(nb + j) << 1.0, s;
      walls.coords.col(2 * nb + j) << (nb == 1 ? 0.5 : static_cast<double>(j) / (nb - 1)), 0.0;
    }
    ts.constraints.push_back(detail::make_term(
        "walls", walls, JetRequest({0, 0}),
        [](const PointView& v, ResidualBuffer& r) {
          r.push(v.u(0, 0));
          r.push(v.u(0, 1));
        },
        o.mode));
    PointSet lid = boundary_trace(unit, Face{1, true}, nb, 0, FaceSpacing::grid);
    ts.constraints.push_back(detail::make_term(
        "lid", lid, JetRequest({0, 0}),
        [](const PointView& v, ResidualBuffer& r) {
          r.push(v.u(0, 0) - Dual(1.0));
          r.push(v.u(0, 1));
        },
        o.mode));
    Eigen::VectorXd anchor_at(2);
    anchor_at << 0.5, 0.0;
    ts.constraints.push_back(detail::make_term(
        "anchor", fixed_point(anchor_at), JetRequest({0, 0}),
        [](const PointView& v, ResidualBuffer& r) { r.push(v.u(0, 2)); }, o.mode));
    if (o.data) {
      ts.constraints.push_back(detail::make_term(
          "data", *o.data, JetRequest({0, 0}),
          [](const PointView& v, ResidualBuffer& r) {
            r.push(v.u(0, 0) - Dual(v.target(0, 0)));
            r.push(v.u(0, 1) - Dual(v.target(0, 1)));
          },
          o.mode));
    }
    return ts;
  };
  p.grid = GridSpec{0, 1, 257, 257, Eigen::VectorXd::Zero(2)};
  if (re == 100 || re == 400 || re == 1000) {
    p.report = [re](const DenseNetwork& net, const GridSpec&) {
      const Centerline cu = ghia_centerline(re, 'u');
      const Centerline cv = ghia_centerline(re, 'v');
      const int n = static_cast<int>(cu.coord.size() + cv.coord.size());
      Eigen::MatrixXd pts(2, n);
      for (std::size_t k = 0; k < cu.coord.size(); ++k) pts.col(k) << 0.5, cu.coord[k];
      for (std::size_t k = 0; k < cv.coord.size(); ++k) pts.col(cu.coord.size() + k) << cv.coord[k], 0.5;
      const Eigen::MatrixXd pred = evaluate_network(net, pts);
      std::vector<double> pu, pv, pall, eall;
      for (std::size_t k = 0; k < cu.coord.size(); ++k) pu.push_back(pred(0, k));
      for (std::size_t k = 0; k < cv.coord.size(); ++k) pv.push_back(pred(1, cu.coord.size() + k));
      pall = pu;
      pall.insert(pall.end(), pv.begin(), pv.end());
      eall = cu.value;
      eall.insert(eall.end(), cv.value.begin(), cv.value.end());
      ProblemReport rep;
      rep.primary = metrics::summarize(pall, eall);
      rep.extra["rms_u_centerline"] = metrics::rms(pu, cu.value);
      rep.extra["rms_v_centerline"] = metrics::rms(pv, cv.value);
      return rep;
    };
  }
  return p;
}

// ---------------------------------------------------------------------------
// inverse problem: unknown boundary temperature at x = 0

struct InverseBoundary {
  template <class T>
  static std::array<T, 1> solution(const std::array<T, 2>& in) {
    return {cos(kPi * in[0]) * exp(-kPi * kPi * in[1])};
  }
  static constexpr std::array<double, 2> kSensors{0.2, 0.6};
  static constexpr double kNoise = 0.1;
};

inline ProblemSpec inverse_boundary() {
  ProblemSpec p;
  p.name = "inverse_boundary";
  p.title = "recover an unknown boundary temperature from two noisy sensors";
  p.inputs = {"x", "t"};
  p.outputs = {"u"};
  p.domain = Box({0.0, 0.0}, {1.0, 1.0});
  p.final_time = 1.0;
  p.hidden = {30, 30, 30};
  p.points = {{"pde", 512}, {"bc", 64}, {"ic", 64}, {"data", 128}};
  p.point_copies = {{"data", 2}};
  p.epochs = 5000;
  p.optimizer = lbfgs::pytorch_defaults();
  p.groups = {"pde", "bc", "ic"};
  p.exact = detail::make_field<2, 1>([](const auto& in) { return InverseBoundary::solution(in); });
  p.exact_jet = detail::make_field_jet<2, 1>([](const auto& in) { return InverseBoundary::solution(in); });
  p.notes = {{"truth", "u = cos(pi x) exp(-pi^2 t), kappa = 1"},
             {"sensors", "x = 0.2 and x = 0.6, 10% Gaussian noise"}};
  const Box domain = p.domain;
  const Field exact = *p.exact;
  p.terms = [domain, exact](const BuildOptions& o, std::uint64_t seed, int epoch) {
    TermSet ts;
    const int nm = detail::count(o, "data");
    Box line({0.0, 0.0}, {0.0, 1.0});
    std::vector<PointSet> sensors;
    for (std::size_t k = 0; k < InverseBoundary::kSensors.size(); ++k) {
      PointSet s = uniform_box(nm, line, detail::group_seed(seed, epoch, 10 + k), PointRole::data);
      s.coords.row(0).setConstant(InverseBoundary::kSensors[k]);
      sensors.push_back(std::move(s));
    }
    PointSet data = concatenate(sensors);
    Eigen::VectorXd clean(data.size());
    for (int j = 0; j < data.size(); ++j) clean[j] = exact(data.coords.col(j))[0];
    NoisyDataset noisy =
        make_noisy(std::move(data), clean, InverseBoundary::kNoise, detail::group_seed(seed, epoch, 20));
    ts.objective = detail::make_term("data", noisy.points, JetRequest({0, 0}),
                                     [](const PointView& v, ResidualBuffer& r) { r.push(v.u(0, 0) - Dual(v.target(0, 0))); });

    PointSet interior = uniform_box(detail::count(o, "pde"), domain, detail::group_seed(seed, epoch, 1));
    ts.constraints.push_back(detail::make_term(
        "pde", interior, JetRequest({2, 1}),
        [](const PointView& v, ResidualBuffer& r) { r.push(v.d1(0, 0, 1) - v.d2(0, 0, 0)); }, o.mode));
    PointSet bc = boundary_trace(domain, Face{0, true}, detail::count(o, "bc"), detail::group_seed(seed, epoch, 2));
    bc = detail::with_targets(bc, exact);
    ts.constraints.push_back(detail::make_term(
        "bc", bc, JetRequest({0, 0}),
        [](const PointView& v, ResidualBuffer& r) { r.push(v.u(0, 0) - Dual(v.target(0, 0))); }, o.mode));
    Box initial = domain;
    initial.hi[1] = 0.0;
    PointSet ic = uniform_box(detail::count(o, "ic"), initial, detail::group_seed(seed, epoch, 3), PointRole::initial);
    ic = detail::with_targets(ic, exact);
    ts.constraints.push_back(detail::make_term(
        "ic", ic, JetRequest({0, 0}),
        [](const PointView& v, ResidualBuffer& r) { r.push(v.u(0, 0) - Dual(v.target(0, 0))); }, o.mode));
    return ts;
  };
  p.grid = GridSpec{0, 1, 256, 101, Eigen::VectorXd::Zero(2)};
  p.report = [domain, exact](const DenseNetwork& net, const GridSpec& grid) {
    ProblemReport rep;
    rep.primary = detail::grid_errors(net, domain, grid, exact, 0);
    Eigen::MatrixXd pts(2, grid.n1);
    for (int j = 0; j < grid.n1; ++j) pts.col(j) << 0.0, static_cast<double>(j) / (grid.n1 - 1);
    const Eigen::MatrixXd pred = evaluate_network(net, pts);
    std::vector<double> pv(grid.n1), ev(grid.n1);
    for (int j = 0; j < grid.n1; ++j) {
      pv[j] = pred(0, j);
      ev[j] = exact(pts.col(j))[0];
    }
    rep.extra["rel_l2_boundary"] = metrics::relative_l2(pv, ev);
    return rep;
  };
  return p;
}

// ---------------------------------------------------------------------------
// inverse problem: unknown heat source, outputs (u, s)

struct InverseSource {
  template <class T>
  static std::array<T, 2> solution(const std::array<T, 2>& in) {
    const T& x = in[0];
    const T& t = in[1];
    const T sx = sin(kPi * x);
    const T u = (1.0 + t * t) * sx;
    const T s = 2.0 * t * sx + kPi * kPi * (1.0 + t * t) * sx;
    return {u, s};
  }
  static constexpr double kNoise = 0.1;
};

inline ProblemSpec inverse_source() {
  ProblemSpec p;
  p.name = "inverse_source";
  p.title = "recover temperature and a space-time heat source from noisy samples";
  p.inputs = {"x", "t"};
  p.outputs = {"u", "s"};
  p.domain = Box({0.0, 0.0}, {1.0, 1.0});
  p.final_time = 1.0;
  p.hidden = {30, 30, 30};
  p.points = {{"pde", 4096}, {"bc", 128}, {"ic", 128}, {"data", 512}};
  p.point_copies = {{"bc", 2}};
  p.epochs = 5000;
  p.optimizer = lbfgs::pytorch_defaults();
  p.groups = {"pde", "bc", "ic"};
  p.exact = detail::make_field<2, 2>([](const auto& in) { return InverseSource::solution(in); });
  p.exact_jet = detail::make_field_jet<2, 2>([](const auto& in) { return InverseSource::solution(in); });
  p.notes = {{"truth", "u = (1+t^2) sin(pi x), s = 2t sin(pi x) + pi^2 (1+t^2) sin(pi x), kappa = 1"},
             {"data", "512 interior samples of u, 10% Gaussian noise"}};
  const Box domain = p.domain;
  const Field exact = *p.exact;
  p.terms = [domain, exact](const BuildOptions& o, std::uint64_t seed, int epoch) {
    TermSet ts;
    PointSet data = uniform_box(detail::count(o, "data"), domain, detail::group_seed(seed, epoch, 10), PointRole::data);
    Eigen::VectorXd clean(data.size());
    for (int j = 0; j < data.size(); ++j) clean[j] = exact(data.coords.col(j))[0];
    NoisyDataset noisy =
        make_noisy(std::move(data), clean, InverseSource::kNoise, detail::group_seed(seed, epoch, 20));
    ts.objective = detail::make_term("data", noisy.points, JetRequest({0, 0}),
                                     [](const PointView& v, ResidualBuffer& r) { r.push(v.u(0, 0) - Dual(v.target(0, 0))); });

    PointSet interior = uniform_box(detail::count(o, "pde"), domain, detail::group_seed(seed, epoch, 1));
    ts.constraints.push_back(detail::make_term(
        "pde", interior, JetRequest({2, 1}),
        [](const PointView& v, ResidualBuffer& r) { r.push(v.d1(0, 0, 1) - v.d2(0, 0, 0) - v.u(0, 1)); }, o.mode));
    const int nb = detail::count(o, "bc");
    PointSet left = boundary_trace(domain, Face{0, false}, nb, detail::group_seed(seed, epoch, 2));
    PointSet right = boundary_trace(domain, Face{0, true}, nb, detail::group_seed(seed, epoch, 3));
    ts.constraints.push_back(detail::make_term(
        "bc", concatenate({left, right}), JetRequest({0, 0}),
        [](const PointView& v, ResidualBuffer& r) { r.push(v.u(0, 0)); }, o.mode));
    Box initial = domain;
    initial.hi[1] = 0.0;
    PointSet ic = uniform_box(detail::count(o, "ic"), initial, detail::group_seed(seed, epoch, 4), PointRole::initial);
    ts.constraints.push_back(detail::make_term(
        "ic", ic, JetRequest({0, 0}),
        [](const PointView& v, ResidualBuffer& r) { r.push(v.u(0, 0) - Dual(std::sin(kPi * v.coord(0, 0)))); },
        o.mode));
    return ts;
  };
  p.grid = GridSpec{0, 1, 256, 101, Eigen::VectorXd::Zero(2)};
  p.report = [domain, exact](const DenseNetwork& net, const GridSpec& grid) {
    ProblemReport rep;
    rep.primary = detail::grid_errors(net, domain, grid, exact, 0);
    rep.extra["rel_l2_source"] = detail::grid_errors(net, domain, grid, exact, 1).rel_l2;
    return rep;
  };
  return p;
}

// ---------------------------------------------------------------------------
// periodic linear convection xi_t + 40 xi_x = 0

struct Convection {
  static constexpr double kSpeed = 40.0;
  template <class T>
  static std::array<T, 1> solution(const std::array<T, 2>& in) {
    return {sin(in[0] - kSpeed * in[1])};
  }
};

inline ProblemSpec convection() {
  ProblemSpec p;
  p.name = "convection";
  p.title = "periodic linear convection with speed 40";
  p.inputs = {"x", "t"};
  p.outputs = {"xi"};
  p.domain = Box({0.0, 0.0}, {2.0 * kPi, 1.0});
  p.final_time = 1.0;
  p.hidden = {50, 50, 50, 50};
  p.points = {{"pde", 512}, {"bc", 512}, {"ic", 512}};
  p.epochs = 5000;
  p.optimizer = lbfgs::pytorch_defaults();
  p.resample_each_epoch = true;
  p.groups = {"periodic", "ic"};
  p.exact = detail::make_field<2, 1>([](const auto& in) { return Convection::solution(in); });
  p.exact_jet = detail::make_field_jet<2, 1>([](const auto& in) { return Convection::solution(in); });
  const Box domain = p.domain;
  p.terms = [domain](const BuildOptions& o, std::uint64_t seed, int epoch) {
    TermSet ts;
    PointSet interior = uniform_box(detail::count(o, "pde"), domain, detail::group_seed(seed, epoch, 1));
    ts.objective = detail::make_term("pde", interior, JetRequest({1, 1}), [](const PointView& v, ResidualBuffer& r) {
      r.push(v.d1(0, 0, 1) + Convection::kSpeed * v.d1(0, 0, 0));
    });
    auto pairs = periodic_pairs(domain, 0, detail::count(o, "bc"), detail::group_seed(seed, epoch, 2));
    Term periodic;
    periodic.name = "periodic";
    periodic.sets = {pairs[0], pairs[1]};
    periodic.requests = {JetRequest({0, 0}), JetRequest({0, 0})};
    periodic.residual = [](const PointView& v, ResidualBuffer& r) { r.push(v.u(0, 0) - v.u(1, 0)); };
    periodic.mode = o.mode;
    ts.constraints.push_back(std::move(periodic));
    Box initial = domain;
    initial.hi[1] = 0.0;
    PointSet ic = uniform_box(detail::count(o, "ic"), initial, detail::group_seed(seed, epoch, 3), PointRole::initial);
    ts.constraints.push_back(detail::make_term(
        "ic", ic, JetRequest({0, 0}),
        [](const PointView& v, ResidualBuffer& r) { r.push(v.u(0, 0) - Dual(std::sin(v.coord(0, 0)))); }, o.mode));
    return ts;
  };
  p.grid = GridSpec{0, 1, 256, 101, Eigen::VectorXd::Zero(2)};
  const Field exact = *p.exact;
  p.report = [domain, exact](const DenseNetwork& net, const GridSpec& grid) {
    ProblemReport rep;
    rep.primary = detail::grid_errors(net, domain, grid, exact, 0);
    return rep;
  };
  return p;
}

// ---------------------------------------------------------------------------
// mixing of warm and cold fronts in a rotating vortex, xi over (x, y, t)

struct Mixing {
  static constexpr double kVtMax = 0.385;
  static constexpr double kHalfWidth = 4.0;
  static constexpr double kFinalTime = 4.0;

  /// Angular velocity nu_t / (r nu_t,max) with its r -> 0 limit.
  template <class T>
  static T omega(const T& x, const T& y) {
    const T r2 = x * x + y * y;
    if (detail::value_of(r2) < 1e-12) return (1.0 - (4.0 / 3.0) * r2) / kVtMax;
    const T r = sqrt(r2);
    const T c = 1.0 / cosh_of(r);
    return c * c * tanh(r) / (r * kVtMax);
  }

  template <class T>
  static std::array<T, 1> solution(const std::array<T, 3>& in) {
    const T& x = in[0];
    const T& y = in[1];
    const T& t = in[2];
    const T w = omega(x, y);
    return {-tanh(0.5 * y * cos(w * t) - 0.5 * x * sin(w * t))};
  }

 private:
  static double cosh_of(double r) { return std::cosh(r); }
  static Taylor2 cosh_of(const Taylor2& r) {
    return chain(r, std::cosh(r.v), std::sinh(r.v), std::cosh(r.v));
  }
};

inline ProblemSpec mixing_fronts() {
  ProblemSpec p;
  p.name = "mixing";
  p.title = "warm and cold fronts mixed by a steady vortex";
  p.inputs = {"x", "y", "t"};
  p.outputs = {"xi"};
  const double a = Mixing::kHalfWidth;
  p.domain = Box({-a, -a, 0.0}, {a, a, Mixing::kFinalTime});
  p.final_time = Mixing::kFinalTime;
  p.hidden = {30, 30, 30, 30};
  p.points = {{"pde", 10000}, {"bc", 512}, {"ic", 512}};
  p.point_copies = {{"bc", 4}};
  p.epochs = 5000;
  p.optimizer = lbfgs::pytorch_defaults();
  p.groups = {"flux", "ic"};
  p.exact = detail::make_field<3, 1>([](const auto& in) { return Mixing::solution(in); });
  p.exact_jet = detail::make_field_jet<3, 1>([](const auto& in) { return Mixing::solution(in); });
  p.exact_exempt = {"flux"};
  p.notes = {{"omega_origin", "1/0.385"}, {"sampling", "Sobol, plain"}};
  const Box domain = p.domain;
  p.terms = [domain](const BuildOptions& o, std::uint64_t seed, int epoch) {
    TermSet ts;
    const auto origin = [](const Eigen::VectorXd& x) { return x[0] == 0.0 && x[1] == 0.0; };
    PointSet interior = sobol_box(detail::count(o, "pde"), domain, detail::group_seed(seed, epoch, 1), false,
                                  PointRole::interior, origin);
    ts.objective = detail::make_term("pde", interior, JetRequest({1, 1, 1}), [](const PointView& v, ResidualBuffer& r) {
      const double x = v.coord(0, 0);
      const double y = v.coord(0, 1);
      const double w = Mixing::omega(x, y);
      r.push(v.d1(0, 0, 2) + (-w * y) * v.d1(0, 0, 0) + (w * x) * v.d1(0, 0, 1));
    });

    // zero normal flux on the four side faces; targets hold the outward normal
    const int nb = detail::count(o, "bc");
    std::vector<PointSet> faces;
    std::uint64_t salt = 2;
    for (int dim = 0; dim < 2; ++dim) {
      for (bool upper : {false, true}) {
        Box slab = domain;
        const double fixed = upper ? domain.hi[dim] : domain.lo[dim];
        slab.lo[dim] = slab.hi[dim] = fixed;
        PointSet f = sobol_box(nb, slab, detail::group_seed(seed, epoch, salt++), false, PointRole::boundary);
        f.targets = Eigen::MatrixXd::Zero(2, nb);
        f.targets.row(dim).setConstant(upper ? 1.0 : -1.0);
        faces.push_back(std::move(f));
      }
    }
    ts.constraints.push_back(detail::make_term(
        "flux", concatenate(faces), JetRequest({1, 1, 0}),
        [](const PointView& v, ResidualBuffer& r) {
          r.push(v.target(0, 0) * v.d1(0, 0, 0) + v.target(0, 1) * v.d1(0, 0, 1));
        },
        o.mode));
    Box initial = domain;
    initial.hi[2] = 0.0;
    PointSet ic = sobol_box(detail::count(o, "ic"), initial, detail::group_seed(seed, epoch, 9), false,
                            PointRole::initial);
    ts.constraints.push_back(detail::make_term(
        "ic", ic, JetRequest({0, 0, 0}),
        [](const PointView& v, ResidualBuffer& r) { r.push(v.u(0, 0) + Dual(std::tanh(0.5 * v.coord(0, 1)))); },
        o.mode));
    return ts;
  };
  Eigen::VectorXd base(3);
  base << 0.0, 0.0, Mixing::kFinalTime;
  p.grid = GridSpec{0, 1, 64, 64, base};
  const Field exact = *p.exact;
  p.report = [domain, exact](const DenseNetwork& net, const GridSpec& grid) {
    ProblemReport rep;
    rep.primary = detail::grid_errors(net, domain, grid, exact, 0);
    for (int n : {16, 32, 64}) {
      GridSpec g = grid;
      g.n0 = g.n1 = n;
      rep.extra["rms_grid_" + std::to_string(n)] = detail::grid_errors(net, domain, g, exact, 0).rms_standard;
    }
    return rep;
  };
  return p;
}

// ---------------------------------------------------------------------------
// registry

inline std::vector<ProblemSpec> registry() {
  return {composite_heat(),      wave(),           lid_driven_cavity(100), lid_driven_cavity(400),
          lid_driven_cavity(1000), inverse_boundary(), inverse_source(),     convection(),
          mixing_fronts()};
}

inline std::vector<std::string> registered_names() {
  std::vector<std::string> names;
  for (const auto& p : registry()) names.push_back(p.name);
  return names;
}

inline ProblemSpec find_problem(const std::string& name) {
  for (auto& p : registry()) {
    if (p.name == name) return p;
  }
  std::string list;
  for (const auto& n : registered_names()) list += (list.empty() ? "" : ", ") + n;
  throw ConfigurationError("unknown problem '" + name + "' (registered: " + list + ")");
}

}  // namespace pecann::problems
