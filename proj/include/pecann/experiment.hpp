#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pecann/alm.hpp"
#include "pecann/collocation.hpp"
#include "pecann/lbfgs.hpp"
#include "pecann/network.hpp"
#include "pecann/problems.hpp"

namespace pecann {

/// One training run: a problem with its resolved settings.
struct Experiment {
  problems::ProblemSpec problem;
  problems::BuildOptions build;
  std::vector<int> hidden;  ///< empty: problem default
  alm::AlmConfig alm;
  lbfgs::LbfgsConfig lbfgs;
  std::uint64_t seed = 0;

  std::vector<int> layer_sizes() const { return problem.layer_sizes(hidden); }
};

/// Problem defaults for epochs, points and optimizer.
inline Experiment make_experiment(problems::ProblemSpec problem, alm::Strategy strategy, std::uint64_t seed) {
  Experiment e;
  e.build = problem.default_options();
  e.alm.strategy = strategy;
  e.alm.epochs = problem.epochs;
  e.lbfgs = problem.optimizer;
  e.seed = seed;
  e.problem = std::move(problem);
  return e;
}

struct ExperimentResult {
  alm::TrainResult train;
  DenseNetwork network;
  std::optional<problems::ProblemReport> report;
};

inline ExperimentResult run_experiment(const Experiment& e, const alm::EpochCallback& on_epoch = {}) {
  const DenseNetwork init = init_network(e.layer_sizes(), e.seed);
  const problems::ProblemSpec& p = e.problem;
  const problems::BuildOptions build = e.build;
  const std::uint64_t seed = e.seed;
  CollocationModel model(
      init.shape(), [&p, build, seed](int epoch) { return p.terms(build, seed, epoch); }, p.resample_each_epoch,
      e.alm.batch_size, derive_seed(seed, 7));
  alm::TrainResult trained = alm::train(model, init.flatten(), e.alm, e.lbfgs, on_epoch);
  DenseNetwork net(init.shape(), trained.theta);
  std::optional<problems::ProblemReport> report;
  if (p.report) report = p.report(net, p.grid);
  return {std::move(trained), std::move(net), std::move(report)};
}

}  // namespace pecann
