#pragma once

#include <array>

namespace pecann {

/// Upper bound on jet entries a residual can depend on
/// (point sets x outputs x derivative channels).
inline constexpr int kMaxJetEntries = 24;

/// Forward-mode dual number carrying the value of a residual and its
/// partial derivatives with respect to the jet entries it reads.
struct Dual {
  double v = 0.0;
  std::array<double, kMaxJetEntries> d{};

  constexpr Dual() = default;
  constexpr Dual(double value) : v(value) {}  // NOLINT: constants promote implicitly

  static Dual variable(double value, int index) {
    Dual out(value);
    out.d[index] = 1.0;
    return out;
  }

  Dual& operator+=(const Dual& o) {
    v += o.v;
    for (int i = 0; i < kMaxJetEntries; ++i) d[i] += o.d[i];
    return *this;
  }
  Dual& operator-=(const Dual& o) {
    v -= o.v;
    for (int i = 0; i < kMaxJetEntries; ++i) d[i] -= o.d[i];
    return *this;
  }
  Dual& operator*=(double s) {
    v *= s;
    for (int i = 0; i < kMaxJetEntries; ++i) d[i] *= s;
    return *this;
  }
};

inline Dual operator+(Dual a, const Dual& b) { return a += b; }
inline Dual operator-(Dual a, const Dual& b) { return a -= b; }
inline Dual operator-(Dual a) { return a *= -1.0; }
inline Dual operator*(Dual a, double s) { return a *= s; }
inline Dual operator*(double s, Dual a) { return a *= s; }
inline Dual operator/(Dual a, double s) { return a *= 1.0 / s; }

inline Dual operator*(const Dual& a, const Dual& b) {
  Dual out(a.v * b.v);
  for (int i = 0; i < kMaxJetEntries; ++i) out.d[i] = a.d[i] * b.v + a.v * b.d[i];
  return out;
}

}  // namespace pecann
