#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "pecann/errors.hpp"

namespace pecann {

/// Axis-aligned box [lo_i, hi_i] in each coordinate.
struct Box {
  std::vector<double> lo;
  std::vector<double> hi;

  Box() = default;
  Box(std::vector<double> lower, std::vector<double> upper) : lo(std::move(lower)), hi(std::move(upper)) {
    if (lo.size() != hi.size() || lo.empty()) throw ConfigurationError("box bounds must have equal, non-zero length");
    for (std::size_t i = 0; i < lo.size(); ++i) {
      if (!(hi[i] >= lo[i])) throw ConfigurationError("box upper bound below lower bound");
    }
  }

  int dim() const { return static_cast<int>(lo.size()); }
  double width(int i) const { return hi[i] - lo[i]; }
  bool degenerate() const {
    for (int i = 0; i < dim(); ++i) {
      if (!(hi[i] > lo[i])) return true;
    }
    return false;
  }
  bool contains(const Eigen::VectorXd& x, double tol = 0.0) const {
    for (int i = 0; i < dim(); ++i) {
      if (x[i] < lo[i] - tol || x[i] > hi[i] + tol) return false;
    }
    return true;
  }
};

enum class PointRole { interior, boundary, initial, data, anchor };

inline std::string to_string(PointRole r) {
  switch (r) {
    case PointRole::interior: return "interior";
    case PointRole::boundary: return "boundary";
    case PointRole::initial: return "initial";
    case PointRole::data: return "data";
    case PointRole::anchor: return "anchor";
  }
  return "unknown";
}

struct GeneratorDescriptor {
  std::string kind;  ///< "uniform", "sobol", "grid", "face", "fixed", ...
  std::uint64_t seed = 0;
  int epoch = 0;
};

/// N points in d dimensions stored as a d x N matrix, with optional
/// per-point target values (m x N) for data-fitting terms.
struct PointSet {
  Eigen::MatrixXd coords;
  Eigen::MatrixXd targets;
  PointRole role = PointRole::interior;
  GeneratorDescriptor descriptor;

  int size() const { return static_cast<int>(coords.cols()); }
  int dim() const { return static_cast<int>(coords.rows()); }

  PointSet subset(const std::vector<int>& indices) const {
    PointSet out;
    out.role = role;
    out.descriptor = descriptor;
    out.coords.resize(coords.rows(), static_cast<Eigen::Index>(indices.size()));
    if (targets.rows() > 0) out.targets.resize(targets.rows(), static_cast<Eigen::Index>(indices.size()));
    for (std::size_t j = 0; j < indices.size(); ++j) {
      out.coords.col(static_cast<Eigen::Index>(j)) = coords.col(indices[j]);
      if (targets.rows() > 0) out.targets.col(static_cast<Eigen::Index>(j)) = targets.col(indices[j]);
    }
    return out;
  }
};

/// Mixes a base seed with an epoch index (splitmix64 finalizer), so every
/// epoch draws a different but reproducible point set.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t salt) {
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

using ExclusionFn = std::function<bool(const Eigen::VectorXd&)>;

/// i.i.d. uniform points in `box`. Points for which `exclude` returns true
/// are rejected and redrawn (used for measure-zero lines such as an
/// interface or a singular point).
inline PointSet uniform_box(int n, const Box& box, std::uint64_t seed, PointRole role = PointRole::interior,
                            const ExclusionFn& exclude = {}) {
  if (n < 1) throw ConfigurationError("point count must be >= 1");
  if (role == PointRole::interior && box.degenerate()) {
    throw ConfigurationError("degenerate box for interior sampling");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  PointSet out;
  out.role = role;
  out.descriptor = {"uniform", seed, 0};
  out.coords.resize(box.dim(), n);
  Eigen::VectorXd x(box.dim());
  for (int j = 0; j < n; ++j) {
    for (int attempt = 0;; ++attempt) {
      for (int i = 0; i < box.dim(); ++i) x[i] = box.lo[i] + box.width(i) * unit(rng);
      if (!exclude || !exclude(x)) break;
      if (attempt > 1000) throw ConfigurationError("exclusion rejects the whole box");
    }
    out.coords.col(j) = x;
  }
  return out;
}

namespace detail {

// Primitive polynomial degree s, coefficients a and initial direction
// integers m_1..m_s for Sobol dimensions 2..8 (Joe & Kuo, new-joe-kuo-6.21201).
struct SobolPolynomial {
  int degree;
  unsigned coeffs;
  std::array<unsigned, 5> m;
};

inline constexpr std::array<SobolPolynomial, 7> kSobolPolynomials{{
    {1, 0, {1, 0, 0, 0, 0}},
    {2, 1, {1, 3, 0, 0, 0}},
    {3, 1, {1, 3, 1, 0, 0}},
    {3, 2, {1, 1, 1, 0, 0}},
    {4, 1, {1, 1, 3, 3, 0}},
    {4, 4, {1, 3, 5, 13, 0}},
    {5, 2, {1, 1, 5, 5, 17}},
}};

inline constexpr int kSobolBits = 32;

inline std::vector<std::array<std::uint32_t, kSobolBits>> sobol_directions(int dim) {
  std::vector<std::array<std::uint32_t, kSobolBits>> v(dim);
  for (int k = 0; k < kSobolBits; ++k) v[0][k] = std::uint32_t{1} << (kSobolBits - 1 - k);
  for (int j = 1; j < dim; ++j) {
    const auto& poly = kSobolPolynomials[j - 1];
    const int s = poly.degree;
    for (int k = 0; k < s; ++k) v[j][k] = poly.m[k] << (kSobolBits - 1 - k);
    for (int k = s; k < kSobolBits; ++k) {
      std::uint32_t value = v[j][k - s] ^ (v[j][k - s] >> s);
      for (int b = 1; b < s; ++b) {
        if ((poly.coeffs >> (s - 1 - b)) & 1U) value ^= v[j][k - b];
      }
      v[j][k] = value;
    }
  }
  return v;
}

}  // namespace detail

inline constexpr int kMaxSobolDim = 8;

/// Unit-cube Sobol points in Gray-code order, starting after the all-zero
/// point (so the first point is (0.5, ..., 0.5)). With `scramble` a random
/// digital shift drawn from `seed` is applied.
inline Eigen::MatrixXd sobol_unit(int n, int dim, std::uint64_t seed = 0, bool scramble = false) {
  if (dim < 1 || dim > kMaxSobolDim) {
    throw ConfigurationError("Sobol sequence supports 1 to " + std::to_string(kMaxSobolDim) + " dimensions");
  }
  if (n < 1) throw ConfigurationError("point count must be >= 1");
  const auto v = detail::sobol_directions(dim);
  std::vector<std::uint32_t> shift(dim, 0);
  if (scramble) {
    std::mt19937_64 rng(seed);
    for (auto& s : shift) s = static_cast<std::uint32_t>(rng() >> 32);
  }
  std::vector<std::uint32_t> x(dim, 0);
  Eigen::MatrixXd out(dim, n);
  constexpr double scale = 1.0 / 4294967296.0;
  for (std::uint32_t index = 0; index < static_cast<std::uint32_t>(n); ++index) {
    // Gray-code step: flip the direction of the lowest zero bit of index.
    int c = 0;
    while ((index >> c) & 1U) ++c;
    for (int j = 0; j < dim; ++j) {
      x[j] ^= v[j][c];
      out(j, index) = static_cast<double>(x[j] ^ shift[j]) * scale;
    }
  }
  return out;
}

inline PointSet sobol_box(int n, const Box& box, std::uint64_t seed = 0, bool scramble = false,
                          PointRole role = PointRole::interior, const ExclusionFn& exclude = {}) {
  if (role == PointRole::interior && box.degenerate()) throw ConfigurationError("degenerate box for interior sampling");
  // Draw a few extra points so exclusions do not shorten the set.
  const int extra = exclude ? 16 : 0;
  const Eigen::MatrixXd unit = sobol_unit(n + extra, box.dim(), seed, scramble);
  PointSet out;
  out.role = role;
  out.descriptor = {scramble ? "sobol-scrambled" : "sobol", seed, 0};
  out.coords.resize(box.dim(), n);
  Eigen::VectorXd x(box.dim());
  int filled = 0;
  for (int j = 0; j < unit.cols() && filled < n; ++j) {
    for (int i = 0; i < box.dim(); ++i) x[i] = box.lo[i] + box.width(i) * unit(i, j);
    if (exclude && exclude(x)) continue;
    out.coords.col(filled++) = x;
  }
  if (filled < n) throw ConfigurationError("exclusion rejected too many Sobol points");
  return out;
}

/// One face of a box: coordinate `dim` fixed at its lower or upper bound.
struct Face {
  int dim = 0;
  bool upper = false;
};

enum class FaceSpacing { random, grid };

/// Points on a face of `box`. Free coordinates are uniform random, or for a
/// face with a single free coordinate optionally an evenly spaced grid
/// including both endpoints.
inline PointSet boundary_trace(const Box& box, Face face, int n, std::uint64_t seed,
                               FaceSpacing spacing = FaceSpacing::random, PointRole role = PointRole::boundary) {
  if (face.dim < 0 || face.dim >= box.dim()) throw ConfigurationError("face outside box");
  if (n < 1) throw ConfigurationError("point count must be >= 1");
  Box slab = box;
  const double fixed = face.upper ? box.hi[face.dim] : box.lo[face.dim];
  slab.lo[face.dim] = slab.hi[face.dim] = fixed;
  PointSet out;
  if (spacing == FaceSpacing::grid) {
    if (box.dim() != 2) throw ConfigurationError("grid face spacing needs a two-dimensional box");
    const int free_dim = 1 - face.dim;
    out.coords.resize(2, n);
    for (int j = 0; j < n; ++j) {
      const double s = n == 1 ? 0.5 : static_cast<double>(j) / (n - 1);
      out.coords(face.dim, j) = fixed;
      out.coords(free_dim, j) = box.lo[free_dim] + s * box.width(free_dim);
    }
    out.descriptor = {"face-grid", seed, 0};
  } else {
    out = uniform_box(n, slab, seed, role);
    out.descriptor.kind = "face";
  }
  out.role = role;
  return out;
}

/// Matched points on the two faces x_dim = lo and x_dim = hi that share all
/// other coordinates, for periodicity constraints.
inline std::array<PointSet, 2> periodic_pairs(const Box& box, int dim, int n, std::uint64_t seed) {
  PointSet low = boundary_trace(box, Face{dim, false}, n, seed);
  PointSet high = low;
  high.coords.row(dim).setConstant(box.hi[dim]);
  low.descriptor.kind = high.descriptor.kind = "periodic-pair";
  return {std::move(low), std::move(high)};
}

/// A single fixed point (anchors).
inline PointSet fixed_point(const Eigen::VectorXd& x, PointRole role = PointRole::anchor) {
  PointSet out;
  out.coords = x;
  out.role = role;
  out.descriptor = {"fixed", 0, 0};
  return out;
}

/// Concatenates point sets of equal dimension; role and descriptor of the first.
inline PointSet concatenate(const std::vector<PointSet>& parts) {
  if (parts.empty()) throw ConfigurationError("nothing to concatenate");
  PointSet out;
  out.role = parts.front().role;
  out.descriptor = parts.front().descriptor;
  Eigen::Index total = 0;
  for (const auto& p : parts) total += p.coords.cols();
  out.coords.resize(parts.front().coords.rows(), total);
  const Eigen::Index trows = parts.front().targets.rows();
  if (trows > 0) out.targets.resize(trows, total);
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    out.coords.middleCols(at, p.coords.cols()) = p.coords;
    if (trows > 0) out.targets.middleCols(at, p.coords.cols()) = p.targets;
    at += p.coords.cols();
  }
  return out;
}

/// Writes `names` as header then one row per point, 17 significant digits.
inline void write_points_csv(std::ostream& out, const PointSet& points, const std::vector<std::string>& names) {
  if (static_cast<int>(names.size()) != points.dim()) throw ConfigurationError("column names do not match dimension");
  for (std::size_t i = 0; i < names.size(); ++i) out << (i ? "," : "") << names[i];
  out << '\n';
  char buf[64];
  for (int j = 0; j < points.size(); ++j) {
    for (int i = 0; i < points.dim(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", points.coords(i, j));
      out << (i ? "," : "") << buf;
    }
    out << '\n';
  }
}

}  // namespace pecann
