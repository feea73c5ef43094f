#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <span>

#include "pecann/errors.hpp"

namespace pecann::metrics {

enum class RmsConvention {
  printed,   ///< (1/n) sqrt(sum d^2)
  standard,  ///< sqrt(sum d^2 / n)
};

struct MetricsSummary {
  double rel_l2 = 0.0;
  double l_inf = 0.0;
  double rms_printed = 0.0;
  double rms_standard = 0.0;
  double mae = 0.0;
};

namespace detail {
inline void check(std::span<const double> pred, std::span<const double> exact) {
  if (pred.size() != exact.size()) throw ConfigurationError("prediction and reference lengths differ");
  if (pred.empty()) throw ConfigurationError("empty prediction vector");
}
}  // namespace detail

inline double relative_l2(std::span<const double> pred, std::span<const double> exact) {
  detail::check(pred, exact);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    num += (pred[i] - exact[i]) * (pred[i] - exact[i]);
    den += exact[i] * exact[i];
  }
  if (!(den > 0.0)) throw ConfigurationError("relative error undefined for a zero reference");
  return std::sqrt(num / den);
}

inline double l_inf(std::span<const double> pred, std::span<const double> exact) {
  detail::check(pred, exact);
  double m = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) m = std::max(m, std::abs(pred[i] - exact[i]));
  return m;
}

inline double rms(std::span<const double> pred, std::span<const double> exact,
                  RmsConvention convention = RmsConvention::standard) {
  detail::check(pred, exact);
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) sum += (pred[i] - exact[i]) * (pred[i] - exact[i]);
  const double n = static_cast<double>(pred.size());
  return convention == RmsConvention::printed ? std::sqrt(sum) / n : std::sqrt(sum / n);
}

inline double mae(std::span<const double> pred, std::span<const double> exact) {
  detail::check(pred, exact);
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) sum += std::abs(pred[i] - exact[i]);
  return sum / static_cast<double>(pred.size());
}

/// All measures; rel_l2 is left at NaN when the reference is identically zero.
inline MetricsSummary summarize(std::span<const double> pred, std::span<const double> exact) {
  MetricsSummary s;
  double den = 0.0;
  for (double e : exact) den += e * e;
  s.rel_l2 = den > 0.0 ? relative_l2(pred, exact) : std::nan("");
  s.l_inf = l_inf(pred, exact);
  s.rms_printed = rms(pred, exact, RmsConvention::printed);
  s.rms_standard = rms(pred, exact, RmsConvention::standard);
  s.mae = mae(pred, exact);
  return s;
}

inline std::span<const double> as_span(const Eigen::VectorXd& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

}  // namespace pecann::metrics
