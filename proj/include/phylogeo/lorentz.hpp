// Copyright 2026 phylogeo project contributors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <vector>

#include "phylogeo/common.hpp"
#include "phylogeo/dual.hpp"

// Lorentz-model hyperbolic geometry on the hyperboloid
// H^d = { x in R^{d+1} : <x,x>_L = -1, x0 > 0 } with curvature -1.
// Everything is templated over the scalar so the same formulas evaluate in
// plain doubles or in forward-mode Duals for parameter gradients. Points and
// tangents are (d+1)-vectors; tangents at mu satisfy <mu,u>_L = 0.

namespace phylogeo {

template <typename T>
T LorentzInner(const std::vector<T>& u, const std::vector<T>& v) {
  Assert(u.size() == v.size() && !u.empty(), "Lorentz inner dimension mismatch");
  T sum = -(u[0] * v[0]);
  for (size_t j = 1; j < u.size(); ++j) {
    sum += u[j] * v[j];
  }
  return sum;
}

inline std::vector<double> LorentzOrigin(int dim) {
  std::vector<double> origin(dim + 1, 0.0);
  origin[0] = 1.0;
  return origin;
}

// Lifts a spatial vector in R^d to the tangent space at the origin, where
// tangency just means a zero time component.
template <typename T>
std::vector<T> PadZero(const std::vector<T>& spatial) {
  std::vector<T> padded(spatial.size() + 1, T(0.0));
  for (size_t j = 0; j < spatial.size(); ++j) {
    padded[j + 1] = spatial[j];
  }
  return padded;
}

// Pulls a point drifting off the hyperboloid back onto it by recomputing the
// time component from the spatial ones.
inline void RenormalizeLorentz(std::vector<double>& point) {
  double spatial_sq = 0.0;
  for (size_t j = 1; j < point.size(); ++j) {
    spatial_sq += point[j] * point[j];
  }
  const double self = -point[0] * point[0] + spatial_sq;
  if (std::abs(self + 1.0) > 1e-12) {
    point[0] = std::sqrt(1.0 + spatial_sq);
  }
}

namespace detail {

// cosh(sqrt(s)) and sinh(sqrt(s))/sqrt(s) as entire functions of s = r^2,
// with series below s = 1e-8 (r < 1e-4) so the r -> 0 limit is smooth.
template <typename T>
T CoshOfSqrt(const T& s) {
  if (ScalarValue(s) < 1e-8) {
    return T(1.0) + s * 0.5 + s * s * (1.0 / 24.0);
  }
  using std::cosh;
  using std::sqrt;
  return cosh(sqrt(s));
}

template <typename T>
T SinhcOfSqrt(const T& s) {
  if (ScalarValue(s) < 1e-8) {
    return T(1.0) + s * (1.0 / 6.0) + s * s * (1.0 / 120.0);
  }
  using std::sinh;
  using std::sqrt;
  const T r = sqrt(s);
  return sinh(r) / r;
}

// acosh(alpha)/sqrt(alpha^2 - 1) = r/sinh(r) at alpha = cosh(r), extended
// smoothly through alpha = 1 (covers slightly-below-1 roundoff too).
template <typename T>
T InverseSinhcOfAlpha(const T& alpha) {
  const T e = alpha - 1.0;
  if (ScalarValue(e) < 1e-8) {
    return T(1.0) - e * (1.0 / 3.0) + e * e * (2.0 / 15.0);
  }
  using std::acosh;
  using std::sqrt;
  return acosh(alpha) / sqrt(alpha * alpha - 1.0);
}

}  // namespace detail

// Geodesic distance; the acosh argument is clamped to >= 1 against roundoff
// at nearly coincident points, and equal points return exactly zero.
inline double LorentzDistance(const std::vector<double>& nu,
                              const std::vector<double>& mu) {
  if (nu == mu) return 0.0;
  const double alpha = -LorentzInner(nu, mu);
  return std::acosh(std::max(alpha, 1.0));
}

template <typename T>
std::vector<T> ExpMap(const std::vector<T>& mu, const std::vector<T>& u) {
  T s = LorentzInner(u, u);
  if (ScalarValue(s) < 0.0) s = T(0.0);  // tangent norms are nonnegative
  const T cosh_r = detail::CoshOfSqrt(s);
  const T sinhc_r = detail::SinhcOfSqrt(s);
  std::vector<T> result(mu.size());
  for (size_t j = 0; j < mu.size(); ++j) {
    result[j] = cosh_r * mu[j] + sinhc_r * u[j];
  }
  if constexpr (std::is_same_v<T, double>) {
    RenormalizeLorentz(result);
  }
  return result;
}

template <typename T>
std::vector<T> LogMap(const std::vector<T>& mu, const std::vector<T>& nu) {
  const T alpha = -LorentzInner(nu, mu);
  const T coefficient = detail::InverseSinhcOfAlpha(alpha);
  std::vector<T> result(mu.size());
  for (size_t j = 0; j < mu.size(); ++j) {
    result[j] = coefficient * (nu[j] - alpha * mu[j]);
  }
  return result;
}

template <typename T>
std::vector<T> ParallelTransport(const std::vector<T>& from,
                                 const std::vector<T>& to,
                                 const std::vector<T>& v) {
  const T alpha = -LorentzInner(from, to);
  // coefficient = <to - alpha*from, v>_L / (alpha + 1)
  std::vector<T> direction(from.size());
  for (size_t j = 0; j < from.size(); ++j) {
    direction[j] = to[j] - alpha * from[j];
  }
  const T coefficient = LorentzInner(direction, v) / (alpha + 1.0);
  std::vector<T> result(v.size());
  for (size_t j = 0; j < v.size(); ++j) {
    result[j] = v[j] + coefficient * (from[j] + to[j]);
  }
  if constexpr (std::is_same_v<T, double>) {
    // Re-project onto the tangent space at the target. Roundoff injects a
    // small component along the target point, and repeated transports amplify
    // it by a factor of alpha per hop if left in place.
    const double overlap = LorentzInner(result, to);
    for (size_t j = 0; j < v.size(); ++j) {
      result[j] += overlap * to[j];
    }
  }
  return result;
}

// Weighted Lorentzian centroid: normalize the weighted sum back onto the
// hyperboloid.
inline std::vector<double> LorentzianCentroid(
    const std::vector<std::vector<double>>& points,
    const std::vector<double>& weights) {
  Assert(!points.empty() && points.size() == weights.size(),
         "centroid needs matching nonempty points and weights");
  std::vector<double> sum(points[0].size(), 0.0);
  for (size_t i = 0; i < points.size(); ++i) {
    Assert(weights[i] > 0.0, "centroid weights must be positive");
    for (size_t j = 0; j < sum.size(); ++j) {
      sum[j] += weights[i] * points[i][j];
    }
  }
  const double norm_sq = -LorentzInner(sum, sum);
  const double scale = 1.0 / std::sqrt(std::max(norm_sq, 1e-300));
  for (double& component : sum) component *= scale;
  RenormalizeLorentz(sum);
  return sum;
}

// Poincare-ball projection of a hyperboloid point (for plotting exports).
inline std::vector<double> PoincareProject(const std::vector<double>& z) {
  std::vector<double> projected(z.size() - 1);
  for (size_t k = 1; k < z.size(); ++k) {
    projected[k - 1] = z[k] / (1.0 + z[0]);
  }
  return projected;
}

}  // namespace phylogeo
