#pragma once

#include <Eigen/Dense>

#include <span>
#include <string>
#include <vector>

#include "pecann/alm.hpp"
#include "pecann/errors.hpp"

namespace pecann {

/// min 1/2 x'Qx + c'x  subject to  Ax = b, with the raw coordinates as the
/// trainable parameters. Each row of A is one expectation-mode group with
/// the identity distance, so its multiplier is the classical one.
class EqualityQp : public alm::ConstrainedModel {
 public:
  EqualityQp(Eigen::MatrixXd q, Eigen::VectorXd c, Eigen::MatrixXd a, Eigen::VectorXd b)
      : q_(std::move(q)), c_(std::move(c)), a_(std::move(a)), b_(std::move(b)) {
    const auto n = q_.rows();
    if (q_.cols() != n || c_.size() != n || a_.cols() != n || b_.size() != a_.rows()) {
      throw ConfigurationError("inconsistent quadratic program dimensions");
    }
  }

  /// min x^2 + y^2 subject to x + y = 1.
  static EqualityQp unit_simplex_norm() {
    Eigen::MatrixXd a(1, 2);
    a << 1.0, 1.0;
    return EqualityQp(2.0 * Eigen::MatrixXd::Identity(2, 2), Eigen::VectorXd::Zero(2), a, Eigen::VectorXd::Ones(1));
  }

  std::size_t parameter_count() const override { return static_cast<std::size_t>(q_.rows()); }

  std::vector<alm::GroupLayout> constraint_layout() const override {
    std::vector<alm::GroupLayout> out;
    for (Eigen::Index i = 0; i < a_.rows(); ++i) {
      out.push_back({"c" + std::to_string(i), "linear", alm::ConstraintMode::expectation, alm::Distance::identity, 1});
    }
    return out;
  }

  alm::Evaluation evaluate(const Eigen::VectorXd& x, std::span<const alm::ConstraintGroup> groups,
                           bool with_gradient) override {
    if (!x.allFinite()) throw EvaluationError("non-finite parameters", "parameters");
    alm::Evaluation e;
    e.objective = 0.5 * x.dot(q_ * x) + c_.dot(x);
    const Eigen::VectorXd r = a_ * x - b_;
    for (Eigen::Index i = 0; i < r.size(); ++i) e.constraints.push_back({r[i]});
    e.lagrangian = alm::lagrangian_value(e.objective, groups, e.constraints);
    if (with_gradient) {
      e.gradient = q_ * x + c_;
      for (Eigen::Index i = 0; i < r.size(); ++i) {
        e.gradient += alm::lagrangian_sensitivity(groups[i], 0, r[i]) * a_.row(i).transpose();
      }
    }
    return e;
  }

  /// grad J + A' lambda.
  Eigen::VectorXd kkt_residual(const Eigen::VectorXd& x, const Eigen::VectorXd& lambda) const {
    return q_ * x + c_ + a_.transpose() * lambda;
  }

  Eigen::VectorXd constraint(const Eigen::VectorXd& x) const { return a_ * x - b_; }

 private:
  Eigen::MatrixXd q_;
  Eigen::VectorXd c_;
  Eigen::MatrixXd a_;
  Eigen::VectorXd b_;
};

}  // namespace pecann
