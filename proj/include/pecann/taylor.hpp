#pragma once

#include <cmath>

namespace pecann {

/// Second-order univariate Taylor number: value, first and second
/// derivative along one seeded input. Used to differentiate closed-form
/// reference solutions.
struct Taylor2 {
  double v = 0.0;
  double d = 0.0;
  double dd = 0.0;

  constexpr Taylor2() = default;
  constexpr Taylor2(double value) : v(value) {}  // NOLINT: constants promote implicitly
  constexpr Taylor2(double value, double first, double second) : v(value), d(first), dd(second) {}

  static constexpr Taylor2 seed(double value) { return {value, 1.0, 0.0}; }
};

inline Taylor2 operator+(const Taylor2& a, const Taylor2& b) { return {a.v + b.v, a.d + b.d, a.dd + b.dd}; }
inline Taylor2 operator-(const Taylor2& a, const Taylor2& b) { return {a.v - b.v, a.d - b.d, a.dd - b.dd}; }
inline Taylor2 operator-(const Taylor2& a) { return {-a.v, -a.d, -a.dd}; }
inline Taylor2 operator*(const Taylor2& a, const Taylor2& b) {
  return {a.v * b.v, a.d * b.v + a.v * b.d, a.dd * b.v + 2.0 * a.d * b.d + a.v * b.dd};
}
inline Taylor2 operator/(const Taylor2& a, const Taylor2& b) {
  const double q = a.v / b.v;
  const double dq = (a.d - q * b.d) / b.v;
  const double ddq = (a.dd - 2.0 * dq * b.d - q * b.dd) / b.v;
  return {q, dq, ddq};
}

/// f(a) given f, f', f'' at a.v.
inline Taylor2 chain(const Taylor2& a, double f, double df, double ddf) {
  return {f, df * a.d, ddf * a.d * a.d + df * a.dd};
}

inline Taylor2 sin(const Taylor2& a) { return chain(a, std::sin(a.v), std::cos(a.v), -std::sin(a.v)); }
inline Taylor2 cos(const Taylor2& a) { return chain(a, std::cos(a.v), -std::sin(a.v), -std::cos(a.v)); }
inline Taylor2 exp(const Taylor2& a) {
  const double e = std::exp(a.v);
  return chain(a, e, e, e);
}
inline Taylor2 tanh(const Taylor2& a) {
  const double t = std::tanh(a.v);
  const double s = 1.0 - t * t;
  return chain(a, t, s, -2.0 * t * s);
}
inline Taylor2 sqrt(const Taylor2& a) {
  const double r = std::sqrt(a.v);
  return chain(a, r, 0.5 / r, -0.25 / (r * a.v));
}

using std::cos;
using std::exp;
using std::sin;
using std::sqrt;
using std::tanh;

}  // namespace pecann
