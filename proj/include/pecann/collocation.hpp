#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <memory>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "pecann/alm.hpp"
#include "pecann/dual.hpp"
#include "pecann/errors.hpp"
#include "pecann/jet.hpp"
#include "pecann/network.hpp"
#include "pecann/sampling.hpp"

namespace pecann {

inline constexpr int kMaxResidualComponents = 4;

/// Residual components at one point; each is a dual over the jet entries
/// the residual reads.
struct ResidualBuffer {
  std::array<Dual, kMaxResidualComponents> r;
  int count = 0;

  void push(const Dual& value) {
    if (count == kMaxResidualComponents) throw ConfigurationError("too many residual components");
    r[count++] = value;
  }
};

/// Everything a residual can read at point j of a term: coordinates and
/// targets of each point set, and network outputs with their input
/// derivatives as duals.
class PointView {
 public:
  double coord(int set, int dim) const { return sets_[set].coords->coeff(dim, point_); }
  double target(int set, int row) const { return sets_[set].targets->coeff(row, point_); }

  const Dual& u(int set, int out) const { return entry(set, out, 0); }
  const Dual& d1(int set, int out, int dim) const { return entry(set, out, sets_[set].request->d1_channel(dim)); }
  const Dual& d2(int set, int out, int dim) const { return entry(set, out, sets_[set].request->d2_channel(dim)); }

 private:
  friend class TermEvaluator;

  struct SetView {
    const Eigen::MatrixXd* coords = nullptr;
    const Eigen::MatrixXd* targets = nullptr;
    const JetRequest* request = nullptr;
    int base = 0;
  };

  const Dual& entry(int set, int out, int channel) const {
    if (channel < 0) throw ConfigurationError("residual reads a derivative that was not requested");
    const auto& s = sets_[set];
    return jets_[s.base + out * s.request->channels() + channel];
  }

  std::vector<SetView> sets_;
  std::array<Dual, kMaxJetEntries> jets_{};
  int point_ = 0;
};

using ResidualFn = std::function<void(const PointView&, ResidualBuffer&)>;

/// One loss or constraint term: a residual over one or more point sets of
/// equal size (two sets for periodic pairs).
struct Term {
  std::string name;
  std::vector<PointSet> sets;
  std::vector<JetRequest> requests;
  ResidualFn residual;
  alm::ConstraintMode mode = alm::ConstraintMode::expectation;
  alm::Distance distance = alm::Distance::quadratic;

  int size() const { return sets.empty() ? 0 : sets.front().size(); }

  void validate(const NetworkShape& shape) const {
    if (sets.empty() || sets.size() != requests.size()) throw ConfigurationError("term '" + name + "' is malformed");
    int entries = 0;
    for (std::size_t s = 0; s < sets.size(); ++s) {
      if (sets[s].size() != sets.front().size()) throw ConfigurationError("term '" + name + "' has unequal point sets");
      if (sets[s].dim() != shape.input_dim()) throw ConfigurationError("term '" + name + "' has wrong point dimension");
      entries += requests[s].channels() * shape.output_dim();
    }
    if (entries > kMaxJetEntries) throw ConfigurationError("term '" + name + "' reads too many jet entries");
    if (size() < 1) throw ConfigurationError("term '" + name + "' has no points");
  }

  Term subset(const std::vector<int>& indices) const {
    Term out = *this;
    for (auto& s : out.sets) s = s.subset(indices);
    return out;
  }
};

/// phi(residual) for every point of a term, and optionally its gradient
/// with respect to the network parameters for given per-point weights.
class TermEvaluator {
 public:
  /// Per-point distances phi_j. When `weight` is given, w(j, phi_j) dphi_j
  /// is accumulated into the output adjoints for a following backward().
  std::vector<double> run(const Term& term, const NetworkShape& shape, std::span<const double> theta,
                          const std::function<double(int, double)>* weight) {
    const int n = term.size();
    const int outs = shape.output_dim();
    const std::size_t nsets = term.sets.size();
    tapes_.resize(nsets);
    adjoints_.resize(nsets);
    PointView view;
    view.sets_.resize(nsets);
    int base = 0;
    for (std::size_t s = 0; s < nsets; ++s) {
      tapes_[s].forward(shape, theta, term.sets[s].coords, term.requests[s]);
      if (weight) adjoints_[s].setZero(outs, static_cast<Eigen::Index>(n) * term.requests[s].channels());
      view.sets_[s] = {&term.sets[s].coords, &term.sets[s].targets, &term.requests[s], base};
      base += outs * term.requests[s].channels();
    }
    const int entries = base;

    std::vector<double> phi(n);
    ResidualBuffer buffer;
    std::array<double, kMaxJetEntries> dphi{};
    for (int j = 0; j < n; ++j) {
      view.point_ = j;
      for (std::size_t s = 0; s < nsets; ++s) {
        const int c = term.requests[s].channels();
        for (int o = 0; o < outs; ++o) {
          for (int ch = 0; ch < c; ++ch) {
            const int e = view.sets_[s].base + o * c + ch;
            view.jets_[e] = Dual::variable(tapes_[s].channel(o, ch, j), e);
          }
        }
      }
      buffer.count = 0;
      term.residual(view, buffer);
      double value = 0.0;
      std::fill(dphi.begin(), dphi.begin() + entries, 0.0);
      if (term.distance == alm::Distance::identity) {
        if (buffer.count != 1) throw ConfigurationError("identity distance needs a scalar residual");
        value = buffer.r[0].v;
        for (int e = 0; e < entries; ++e) dphi[e] = buffer.r[0].d[e];
      } else {
        for (int k = 0; k < buffer.count; ++k) {
          const Dual& r = buffer.r[k];
          value += r.v * r.v;
          for (int e = 0; e < entries; ++e) dphi[e] += 2.0 * r.v * r.d[e];
        }
      }
      if (!std::isfinite(value)) throw EvaluationError("non-finite residual in '" + term.name + "'", term.name);
      phi[j] = value;
      if (!weight) continue;
      const double w = (*weight)(j, value);
      for (std::size_t s = 0; s < nsets; ++s) {
        const int c = term.requests[s].channels();
        for (int o = 0; o < outs; ++o) {
          for (int ch = 0; ch < c; ++ch) {
            adjoints_[s](o, static_cast<Eigen::Index>(ch) * n + j) += w * dphi[view.sets_[s].base + o * c + ch];
          }
        }
      }
    }
    return phi;
  }

  /// Largest residual component magnitude at each point of `term` when the
  /// network is replaced by a known field (value and input derivatives).
  static std::vector<double> field_residuals(const Term& term, int outputs,
                                             const std::function<InputJet(const Eigen::VectorXd&)>& field) {
    const std::size_t nsets = term.sets.size();
    PointView view;
    view.sets_.resize(nsets);
    int base = 0;
    for (std::size_t s = 0; s < nsets; ++s) {
      view.sets_[s] = {&term.sets[s].coords, &term.sets[s].targets, &term.requests[s], base};
      base += outputs * term.requests[s].channels();
    }
    std::vector<double> out(term.size());
    ResidualBuffer buffer;
    for (int j = 0; j < term.size(); ++j) {
      view.point_ = j;
      for (std::size_t s = 0; s < nsets; ++s) {
        const JetRequest& req = term.requests[s];
        const InputJet jet = field(term.sets[s].coords.col(j));
        const int c = req.channels();
        const int b = view.sets_[s].base;
        for (int o = 0; o < outputs; ++o) {
          view.jets_[b + o * c] = Dual(jet.value[o]);
          for (int i = 0; i < req.input_dim(); ++i) {
            if (req.d1_channel(i) >= 0) view.jets_[b + o * c + req.d1_channel(i)] = Dual(jet.d1(o, i));
            if (req.d2_channel(i) >= 0) view.jets_[b + o * c + req.d2_channel(i)] = Dual(jet.d2(o, i));
          }
        }
      }
      buffer.count = 0;
      term.residual(view, buffer);
      double m = 0.0;
      for (int k = 0; k < buffer.count; ++k) m = std::max(m, std::abs(buffer.r[k].v));
      out[j] = m;
    }
    return out;
  }

  /// Adds the accumulated adjoints of the last run() to `grad`, scaled.
  void backward(std::span<const double> theta, double scale, std::span<double> grad) {
    for (std::size_t s = 0; s < tapes_.size(); ++s) {
      if (scale != 1.0) adjoints_[s] *= scale;
      tapes_[s].backward(theta, adjoints_[s], grad);
    }
  }

 private:
  std::vector<JetTape> tapes_;
  std::vector<Eigen::MatrixXd> adjoints_;
};

/// Objective and constraint terms of a problem. `objective` may be empty
/// (no points) for pure feasibility problems.
struct TermSet {
  std::optional<Term> objective;
  std::vector<Term> constraints;
};

/// Builds the terms for an epoch (called with epoch 0 once, and again each
/// epoch when resampling).
using TermBuilder = std::function<TermSet(int epoch)>;

/// Collocation training of a dense network: J is the mean squared objective
/// residual, each constraint group is a term.
class CollocationModel : public alm::ConstrainedModel {
 public:
  CollocationModel(NetworkShape shape, TermBuilder builder, bool resample_each_epoch = false,
                   std::optional<int> batch_size = std::nullopt, std::uint64_t batch_seed = 0)
      : shape_(std::move(shape)),
        builder_(std::move(builder)),
        resample_(resample_each_epoch),
        batch_size_(batch_size),
        batch_seed_(batch_seed) {
    full_ = builder_(0);
    check_terms(full_);
    for (const auto& t : full_.constraints) {
      if (resample_ && t.mode == alm::ConstraintMode::pointwise) {
        throw ConfigurationError("pointwise multipliers cannot follow resampled points ('" + t.name + "')");
      }
      if (batch_size_ && t.mode == alm::ConstraintMode::pointwise) {
        throw ConfigurationError("mini-batches are only supported in expectation mode");
      }
    }
    active_ = full_;
  }

  const NetworkShape& shape() const { return shape_; }
  const TermSet& terms() const { return active_; }

  std::size_t parameter_count() const override { return shape_.parameter_count(); }

  std::vector<alm::GroupLayout> constraint_layout() const override {
    std::vector<alm::GroupLayout> out;
    for (const auto& t : full_.constraints) {
      const std::size_t entries = t.mode == alm::ConstraintMode::pointwise ? static_cast<std::size_t>(t.size()) : 1;
      out.push_back({t.name, t.name, t.mode, t.distance, entries});
    }
    return out;
  }

  void begin_epoch(int epoch) override {
    if (resample_) {
      full_ = builder_(epoch);
      check_terms(full_);
      active_ = full_;
    }
    if (batch_size_) make_permutations(epoch);
  }

  int batch_count() const override {
    if (!batch_size_) return 1;
    int most = 1;
    for (const auto& t : full_.constraints) most = std::max(most, (t.size() + *batch_size_ - 1) / *batch_size_);
    return most;
  }

  void select_batch(int /*epoch*/, int batch) override {
    if (!batch_size_) return;
    const int bs = *batch_size_;
    for (std::size_t i = 0; i < full_.constraints.size(); ++i) {
      const auto& t = full_.constraints[i];
      const auto& perm = permutations_[i];
      const int batches = (t.size() + bs - 1) / bs;
      const int b = batch % batches;
      const int lo = b * bs;
      const int hi = std::min(t.size(), lo + bs);
      std::vector<int> idx(perm.begin() + lo, perm.begin() + hi);
      active_.constraints[i] = t.subset(idx);
    }
  }

  alm::Evaluation evaluate(const Eigen::VectorXd& theta, std::span<const alm::ConstraintGroup> groups,
                           bool with_gradient) override {
    if (static_cast<std::size_t>(theta.size()) != shape_.parameter_count()) {
      throw ConfigurationError("parameter vector does not match the network");
    }
    if (!theta.allFinite()) throw EvaluationError("non-finite parameters", "parameters");
    const std::span<const double> th(theta.data(), static_cast<std::size_t>(theta.size()));
    alm::Evaluation e;
    if (with_gradient) e.gradient = Eigen::VectorXd::Zero(theta.size());
    const std::span<double> grad = with_gradient ? std::span<double>(e.gradient.data(), e.gradient.size())
                                                 : std::span<double>();

    if (active_.objective) {
      const Term& t = *active_.objective;
      const double inv_n = 1.0 / t.size();
      const std::function<double(int, double)> w = [inv_n](int, double) { return inv_n; };
      const auto phi = evaluator_.run(t, shape_, th, with_gradient ? &w : nullptr);
      e.objective = sum(phi) * inv_n;
      if (with_gradient) evaluator_.backward(th, 1.0, grad);
    }
    e.lagrangian = e.objective;

    if (groups.size() != active_.constraints.size()) throw ConfigurationError("multiplier groups do not match terms");
    for (std::size_t i = 0; i < groups.size(); ++i) {
      const Term& t = active_.constraints[i];
      const auto& g = groups[i];
      if (t.mode == alm::ConstraintMode::expectation) {
        const double inv_n = 1.0 / t.size();
        const std::function<double(int, double)> w = [inv_n](int, double) { return inv_n; };
        const auto phi = evaluator_.run(t, shape_, th, with_gradient ? &w : nullptr);
        const double c = sum(phi) * inv_n;
        e.constraints.push_back({c});
        e.lagrangian += g.multiplier[0] * c + 0.5 * g.penalty[0] * c * c;
        if (with_gradient) evaluator_.backward(th, alm::lagrangian_sensitivity(g, 0, c), grad);
      } else {
        if (g.size() != static_cast<std::size_t>(t.size())) throw ConfigurationError("pointwise group size mismatch");
        const std::function<double(int, double)> w = [&g](int j, double c) {
          return alm::lagrangian_sensitivity(g, static_cast<std::size_t>(j), c);
        };
        auto phi = evaluator_.run(t, shape_, th, with_gradient ? &w : nullptr);
        for (std::size_t j = 0; j < phi.size(); ++j) {
          e.lagrangian += g.multiplier[j] * phi[j] + 0.5 * g.penalty[j] * phi[j] * phi[j];
        }
        e.constraints.push_back(std::move(phi));
        if (with_gradient) evaluator_.backward(th, 1.0, grad);
      }
    }
    if (!std::isfinite(e.lagrangian)) throw EvaluationError("non-finite Lagrangian", "lagrangian");
    return e;
  }

 private:
  static double sum(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

  void check_terms(const TermSet& set) const {
    if (set.objective) set.objective->validate(shape_);
    for (const auto& t : set.constraints) t.validate(shape_);
    if (!full_.constraints.empty() && set.constraints.size() != full_.constraints.size()) {
      throw ConfigurationError("resampling changed the constraint groups");
    }
  }

  void make_permutations(int epoch) {
    permutations_.resize(full_.constraints.size());
    std::mt19937_64 rng(derive_seed(batch_seed_, static_cast<std::uint64_t>(epoch)));
    for (std::size_t i = 0; i < full_.constraints.size(); ++i) {
      auto& p = permutations_[i];
      p.resize(full_.constraints[i].size());
      std::iota(p.begin(), p.end(), 0);
      std::shuffle(p.begin(), p.end(), rng);
    }
  }

  NetworkShape shape_;
  TermBuilder builder_;
  bool resample_ = false;
  std::optional<int> batch_size_;
  std::uint64_t batch_seed_ = 0;
  TermSet full_;
  TermSet active_;
  std::vector<std::vector<int>> permutations_;
  TermEvaluator evaluator_;
};

/// Scalar loss of the parameters, with its exact gradient.
struct ParameterLoss {
  std::function<double(const Eigen::VectorXd& theta, Eigen::VectorXd* grad)> evaluate;
};

/// Gradient of `loss` at the network's parameters. Throws EvaluationError
/// when the loss is not finite.
inline Eigen::VectorXd loss_gradient(const DenseNetwork& net, const ParameterLoss& loss) {
  Eigen::VectorXd grad;
  const double value = loss.evaluate(net.flatten(), &grad);
  if (!std::isfinite(value)) throw EvaluationError("non-finite loss", "loss");
  return grad;
}

/// Central-difference gradient of `loss`; a test oracle.
inline Eigen::VectorXd fd_gradient_oracle(const DenseNetwork& net, const ParameterLoss& loss, double h) {
  if (!(h >= 1e-7 && h <= 1e-3)) throw ConfigurationError("finite-difference step must be in [1e-7, 1e-3]");
  Eigen::VectorXd theta = net.flatten();
  Eigen::VectorXd grad(theta.size());
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    const double keep = theta[i];
    theta[i] = keep + h;
    const double up = loss.evaluate(theta, nullptr);
    theta[i] = keep - h;
    const double down = loss.evaluate(theta, nullptr);
    theta[i] = keep;
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

/// The Lagrangian of a model at fixed multipliers, as a parameter loss.
inline ParameterLoss lagrangian_loss(alm::ConstrainedModel& model, std::vector<alm::ConstraintGroup> groups) {
  auto shared = std::make_shared<std::vector<alm::ConstraintGroup>>(std::move(groups));
  ParameterLoss loss;
  loss.evaluate = [&model, shared](const Eigen::VectorXd& theta, Eigen::VectorXd* grad) {
    alm::Evaluation e = model.evaluate(theta, *shared, grad != nullptr);
    if (grad) *grad = std::move(e.gradient);
    return e.lagrangian;
  };
  return loss;
}

}  // namespace pecann
