// Acceptance checks: one PASS/FAIL/SKIP line per criterion on stdout,
// progress on stderr. Exit status 1 when any criterion fails.
//
//   acceptance [--allow-long] [--only 1,3,9] [--artifacts DIR]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "pecann/experiment.hpp"
#include "pecann/metrics.hpp"
#include "pecann/qp.hpp"

#ifdef __GLIBC__
#include <malloc.h>
#endif

using namespace pecann;
namespace fs = std::filesystem;

namespace {

struct Options {
  bool allow_long = false;
  std::set<int> only;
  std::optional<fs::path> artifacts;
};

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void note(const std::string& s) { std::cerr << "  " << s << std::endl; }

ExperimentResult train_logged(const Experiment& e, const Options& opt, const std::string& tag) {
  ExperimentResult r = run_experiment(e);
  std::ostringstream line;
  line << tag << ": " << r.train.state.epoch << " epochs, " << r.train.seconds << " s";
  if (r.report) line << ", rel_l2 " << sci(r.report->primary.rel_l2);
  if (r.train.failure) line << ", FAILED: " << r.train.failure->message;
  note(line.str());
  if (opt.artifacts) {
    fs::create_directories(*opt.artifacts);
    std::ofstream out(*opt.artifacts / (tag + "_metrics.csv"));
    alm::write_metrics_csv(out, r.train);
  }
  return r;
}

double relative_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return (a - b).norm() / std::max(b.norm(), 1e-300);
}

// 1: Lagrangian gradient against central differences on a small network.
Verdict gradient_check(const Options&) {
  double worst = 0.0;
  std::string worst_name;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> mult(0.2, 2.0);
  for (const char* name :
       {"composite_heat", "wave", "cavity_re100", "inverse_boundary", "inverse_source", "convection", "mixing"}) {
    const problems::ProblemSpec spec = problems::find_problem(name);
    problems::BuildOptions opts = spec.default_options();
    for (auto& [k, v] : opts.points) v = 5;
    DenseNetwork net = init_network(spec.layer_sizes({10}), 1);
    Eigen::VectorXd theta = net.flatten();
    for (Eigen::Index i = 0; i < theta.size(); ++i) theta[i] += 0.1 * mult(rng);
    net = DenseNetwork(net.shape(), theta);
    CollocationModel model(net.shape(), [&](int e) { return spec.terms(opts, 2, e); });
    alm::AlmConfig config;
    auto groups = alm::make_groups(model.constraint_layout(), config);
    for (auto& g : groups) {
      for (auto& l : g.multiplier) l = mult(rng);
      for (auto& m : g.penalty) m = mult(rng);
    }
    const ParameterLoss loss = lagrangian_loss(model, groups);
    const double err = relative_error(loss_gradient(net, loss), fd_gradient_oracle(net, loss, 1e-5));
    if (err > worst) {
      worst = err;
      worst_name = name;
    }
  }
  return {worst <= 1e-6, "worst relative gradient error " + sci(worst) + " (" + worst_name + ") <= 1e-6 over 7 problems"};
}

// 2: APU on min x^2 + y^2 subject to x + y = 1.
Verdict qp_check(const Options&) {
  EqualityQp qp = EqualityQp::unit_simplex_norm();
  alm::AlmConfig config;
  config.strategy = alm::Strategy::apu;
  config.epochs = 500;
  const alm::TrainResult r = alm::train(qp, Eigen::VectorXd::Zero(2), config, lbfgs::LbfgsConfig{});
  const double ex = std::abs(r.theta[0] - 0.5), ey = std::abs(r.theta[1] - 0.5);
  const double el = std::abs(r.groups[0].multiplier[0] + 1.0);
  const bool pass = !r.failure && ex <= 1e-6 && ey <= 1e-6 && el <= 1e-4;
  return {pass, "|x-0.5|=" + sci(ex) + " |y-0.5|=" + sci(ey) + " (<= 1e-6), |lambda+1|=" + sci(el) +
                    " (<= 1e-4) after 500 epochs"};
}

// 3: wave equation, ten seeds.
Verdict wave_check(const Options& opt) {
  std::vector<double> errs;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Experiment e = make_experiment(problems::wave(), alm::Strategy::apu, seed);
    const ExperimentResult r = train_logged(e, opt, "wave_apu_seed" + std::to_string(seed));
    errs.push_back(r.train.failure || !r.report ? std::nan("") : r.report->primary.rel_l2);
  }
  double mean = 0.0;
  for (double v : errs) mean += v;
  mean /= static_cast<double>(errs.size());
  double ss = 0.0;
  for (double v : errs) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(errs.size() - 1));
  const auto [lo, hi] = std::minmax_element(errs.begin(), errs.end());
  return {mean <= 2e-2, "mean rel_l2 " + sci(mean) + " +- " + sci(sd) + " over 10 seeds (<= 2e-2), range [" +
                            sci(*lo) + ", " + sci(*hi) + "]"};
}

// 4: convection with per-epoch resampling.
Verdict convection_check(const Options& opt) {
  const Experiment e = make_experiment(problems::convection(), alm::Strategy::apu, 0);
  const ExperimentResult r = train_logged(e, opt, "convection_apu");
  if (r.train.failure) return {false, "training aborted: " + r.train.failure->message};
  const auto& m = r.report->primary;
  return {m.rel_l2 <= 1e-2 && m.mae <= 1e-2, "rel_l2 " + sci(m.rel_l2) + " (<= 1e-2), mae " + sci(m.mae) + " (<= 1e-2)"};
}

problems::BuildOptions reduced_heat_points(const problems::ProblemSpec& p) {
  problems::BuildOptions o = p.default_options();
  o.points = {{"pde", 2000}, {"bc", 500}, {"ic", 500}};
  return o;
}

// 5: composite heat, the three strategies under one budget.
Verdict heat_ordering_check(const Options& opt) {
  std::map<alm::Strategy, ExperimentResult> runs;
  for (alm::Strategy s : {alm::Strategy::mpu, alm::Strategy::cpu, alm::Strategy::apu}) {
    Experiment e = make_experiment(problems::composite_heat(), s, 0);
    runs.emplace(s, train_logged(e, opt, "heat_" + alm::to_string(s)));
    if (opt.artifacts) {
      std::ofstream out(*opt.artifacts / ("heat_" + alm::to_string(s) + "_penalties.csv"));
      out << "epoch";
      for (const auto& g : runs.at(s).train.groups) out << ",mu_" << g.name;
      out << '\n';
      for (const auto& rec : runs.at(s).train.state.history) {
        out << rec.epoch;
        for (double mu : rec.penalty) out << ',' << mu;
        out << '\n';
      }
    }
  }
  for (const auto& [s, r] : runs) {
    if (r.train.failure) return {false, alm::to_string(s) + " aborted: " + r.train.failure->message};
  }
  const alm::AlmConfig defaults;
  const double apu = runs.at(alm::Strategy::apu).report->primary.rel_l2;
  const double mpu = runs.at(alm::Strategy::mpu).report->primary.rel_l2;
  const double cpu = runs.at(alm::Strategy::cpu).report->primary.rel_l2;
  const bool accurate = apu <= 5e-2;
  const bool ordered = std::min(mpu, cpu) >= 10.0 * apu;

  auto peak_penalty = [](const alm::TrainResult& t) {
    double m = 0.0;
    for (const auto& rec : t.state.history)
      for (double mu : rec.penalty) m = std::max(m, mu);
    return m;
  };
  const double mpu_peak = peak_penalty(runs.at(alm::Strategy::mpu).train);
  const double cpu_peak = peak_penalty(runs.at(alm::Strategy::cpu).train);
  const bool saturated = mpu_peak >= defaults.max_penalty && cpu_peak >= defaults.max_penalty;
  const double apu_peak = peak_penalty(runs.at(alm::Strategy::apu).train);
  const bool bounded = apu_peak <= defaults.learning_rate / defaults.stability;

  const auto& final_mu = runs.at(alm::Strategy::apu).train.state.history.back().penalty;
  double min_ratio = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < final_mu.size(); ++i)
    for (std::size_t j = i + 1; j < final_mu.size(); ++j) {
      const double a = final_mu[i], b = final_mu[j];
      min_ratio = std::min(min_ratio, std::max(a, b) / std::min(a, b));
    }
  const bool distinct = min_ratio >= 2.0;

  std::string d = "APU rel_l2 " + sci(apu) + " (<= 5e-2); MPU " + sci(mpu) + ", CPU " + sci(cpu) +
                  " (>= 10x APU: " + (ordered ? "yes" : "no") + "); MPU/CPU peak mu " + sci(mpu_peak) + "/" +
                  sci(cpu_peak) + " (reach 1e4); APU peak mu " + sci(apu_peak) + " (<= 1e6); APU final mu ";
  for (std::size_t i = 0; i < final_mu.size(); ++i) d += (i ? "/" : "") + sci(final_mu[i]);
  d += ", closest pair ratio " + sci(min_ratio) + " (>= 2)";
  return {accurate && ordered && saturated && bounded && distinct, d};
}

// 6: per-point multipliers in the composite heat problem.
Verdict heat_pointwise_check(const Options& opt) {
  Experiment e = make_experiment(problems::composite_heat(), alm::Strategy::apu, 0);
  e.build = reduced_heat_points(e.problem);
  e.build.mode = alm::ConstraintMode::pointwise;
  const ExperimentResult r = train_logged(e, opt, "heat_apu_pointwise");
  if (r.train.failure) return {false, "training aborted: " + r.train.failure->message};
  const auto dists = alm::export_multiplier_distribution(r.train.groups);
  if (opt.artifacts) {
    std::ofstream out(*opt.artifacts / "heat_lambda_hist.csv");
    alm::write_multiplier_csv(out, dists);
  }
  bool pass = true;
  std::string d;
  for (const auto& g : dists) {
    // 20 equal bins between the extremes; non-degenerate means at least
    // two bins hold samples
    const auto [lo, hi] = std::minmax_element(g.values.begin(), g.values.end());
    std::vector<int> bins(20, 0);
    const double width = (*hi - *lo) / 20.0;
    for (double v : g.values) {
      const int b = width > 0.0 ? std::min(19, static_cast<int>((v - *lo) / width)) : 0;
      ++bins[b];
    }
    const int occupied = static_cast<int>(std::count_if(bins.begin(), bins.end(), [](int c) { return c > 0; }));
    const bool ok = std::isfinite(g.stddev) && g.stddev > 0.0 && std::abs(g.mean) > 0.0 && occupied >= 2;
    pass = pass && ok;
    d += (d.empty() ? "" : "; ") + g.group + " mean " + sci(g.mean) + " stddev " + sci(g.stddev) + " bins " +
         std::to_string(occupied) + "/20";
  }
  return {pass, d};
}

// 7: mixing fronts.
Verdict mixing_check(const Options& opt) {
  const Experiment e = make_experiment(problems::mixing_fronts(), alm::Strategy::apu, 0);
  const ExperimentResult r = train_logged(e, opt, "mixing_apu");
  if (r.train.failure) return {false, "training aborted: " + r.train.failure->message};
  const auto& x = r.report->extra;
  const double r16 = x.at("rms_grid_16"), r32 = x.at("rms_grid_32"), r64 = x.at("rms_grid_64");
  const double spread = std::max({r16, r32, r64}) / std::min({r16, r32, r64});
  return {r64 <= 2e-2 && spread < 2.0, "rms_standard 64x64 " + sci(r64) + " (<= 2e-2); 16/32/64 " + sci(r16) + "/" +
                                          sci(r32) + "/" + sci(r64) + " spread " + sci(spread) + " (< 2)"};
}

// 8: lid-driven cavity at Re=100 against the benchmark centerlines.
Verdict cavity_check(const Options& opt) {
  std::map<alm::Strategy, double> err;
  for (alm::Strategy s : {alm::Strategy::apu, alm::Strategy::mpu, alm::Strategy::cpu}) {
    const Experiment e = make_experiment(problems::lid_driven_cavity(100), s, 0);
    const ExperimentResult r = train_logged(e, opt, "cavity_re100_" + alm::to_string(s));
    err[s] = r.train.failure ? std::numeric_limits<double>::infinity() : r.report->primary.rms_standard;
  }
  const double apu = err[alm::Strategy::apu];
  const bool pass = apu <= 7.5e-2 && err[alm::Strategy::mpu] >= 2.0 * apu && err[alm::Strategy::cpu] >= 2.0 * apu;
  return {pass, "APU centerline rms " + sci(apu) + " (<= 7.5e-2); MPU " + sci(err[alm::Strategy::mpu]) + ", CPU " +
                    sci(err[alm::Strategy::cpu]) + " (>= 2x APU)"};
}

// 9: the two inverse problems.
Verdict inverse_check(const Options& opt) {
  const ExperimentResult b =
      train_logged(make_experiment(problems::inverse_boundary(), alm::Strategy::apu, 0), opt, "inverse_boundary_apu");
  const ExperimentResult s =
      train_logged(make_experiment(problems::inverse_source(), alm::Strategy::apu, 0), opt, "inverse_source_apu");
  if (b.train.failure || s.train.failure) return {false, "training aborted"};
  const double eb = b.report->extra.at("rel_l2_boundary");
  const double es = s.report->extra.at("rel_l2_source");
  return {eb <= 1e-1 && es <= 1.5e-1,
          "boundary u(0,t) rel_l2 " + sci(eb) + " (<= 1e-1); source rel_l2 " + sci(es) + " (<= 1.5e-1)"};
}

// 10: metrics on hand-computed vectors and the printed/standard RMS relation.
Verdict metrics_check(const Options&) {
  using namespace metrics;
  bool pass = true;
  const std::vector<double> p{3.0, 4.0}, z{0.0, 0.0};
  pass = pass && l_inf(p, z) == 4.0 && rms(p, z, RmsConvention::printed) == 2.5 &&
         rms(p, z, RmsConvention::standard) == std::sqrt(12.5) && mae(p, z) == 3.5;
  const std::vector<double> e{1.0, 2.0, 3.0};
  const std::vector<double> twice{2.0, 4.0, 6.0};
  pass = pass && relative_l2(e, e) == 0.0 && relative_l2(twice, e) == 1.0;
  const std::vector<double> one{3.0}, zero{1.0};
  pass = pass && rms(one, zero, RmsConvention::printed) == 2.0 && rms(one, zero, RmsConvention::standard) == 2.0 &&
         mae(one, zero) == 2.0;
  const bool hand = pass;

  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int> len(1, 1000);
  std::normal_distribution<double> n(0.0, 1.0);
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    const int size = len(rng);
    std::vector<double> a(size), b(size);
    for (int i = 0; i < size; ++i) {
      a[i] = n(rng);
      b[i] = n(rng);
    }
    const double standard = rms(a, b, RmsConvention::standard);
    const double printed = rms(a, b, RmsConvention::printed);
    worst = std::max(worst, std::abs(printed - standard / std::sqrt(static_cast<double>(size))) / standard);
  }
  const bool prop = worst <= 1e-14;
  return {hand && prop, std::string("hand examples ") + (hand ? "exact" : "WRONG") +
                            "; rms_printed vs rms_standard/sqrt(n) worst relative gap " + sci(worst) +
                            " over 100 vectors"};
}

struct Criterion {
  int id;
  std::string name;
  bool long_running;
  std::function<Verdict(const Options&)> check;
};

}  // namespace

int main(int argc, char** argv) {
#ifdef __GLIBC__
  mallopt(M_MMAP_THRESHOLD, 1 << 30);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
  mallopt(M_TOP_PAD, 256 << 20);
#endif
  Options opt;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--allow-long") {
      opt.allow_long = true;
    } else if (a == "--only" && i + 1 < argc) {
      std::stringstream s(argv[++i]);
      std::string id;
      while (std::getline(s, id, ',')) opt.only.insert(std::stoi(id));
    } else if (a == "--artifacts" && i + 1 < argc) {
      opt.artifacts = argv[++i];
    } else {
      std::cerr << "usage: acceptance [--allow-long] [--only 1,2,...] [--artifacts DIR]\n";
      return 2;
    }
  }

  const std::vector<Criterion> criteria{
      {1, "gradient", false, gradient_check},
      {2, "kkt", false, qp_check},
      {3, "wave", false, wave_check},
      {4, "convection", false, convection_check},
      {5, "heat-ordering", false, heat_ordering_check},
      {6, "heat-pointwise", false, heat_pointwise_check},
      {7, "mixing", true, mixing_check},
      {8, "cavity-re100", true, cavity_check},
      {9, "inverse", false, inverse_check},
      {10, "metrics", false, metrics_check},
  };

  int failed = 0;
  for (const auto& c : criteria) {
    if (!opt.only.empty() && !opt.only.contains(c.id)) continue;
    char head[64];
    if (c.long_running && !opt.allow_long) {
      std::snprintf(head, sizeof head, "SKIP %2d %-15s", c.id, c.name.c_str());
      std::cout << head << "long-running (--allow-long)" << std::endl;
      continue;
    }
    std::cerr << "criterion " << c.id << " (" << c.name << ")" << std::endl;
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.check(opt);
    } catch (const std::exception& e) {
      v = {false, std::string("error: ") + e.what()};
    }
    std::snprintf(head, sizeof head, "%s %2d %-15s", v.pass ? "PASS" : "FAIL", c.id, c.name.c_str());
    char tail[32];
    std::snprintf(tail, sizeof tail, " [%.1f s]", seconds_since(t0));
    std::cout << head << v.detail << tail << std::endl;
    failed += v.pass ? 0 : 1;
  }
  return failed == 0 ? 0 : 1;
}
