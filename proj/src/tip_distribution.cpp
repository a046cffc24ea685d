// Copyright 2026 phylogeo project contributors.
// SPDX-License-Identifier: Apache-2.0

#include "phylogeo/tip_distribution.hpp"

#include <cmath>

#include "phylogeo/common.hpp"
#include "phylogeo/lorentz.hpp"

namespace phylogeo {

namespace {

template <typename T>
std::vector<T> ToScalars(const std::vector<double>& values) {
  return std::vector<T>(values.begin(), values.end());
}

template <typename T>
std::vector<T> OriginPoint(int dim) {
  std::vector<T> origin(dim + 1, T(0.0));
  origin[0] = T(1.0);
  return origin;
}

// mu = exp_origin(pad0(v)) for an unconstrained tangent seed v.
template <typename T>
std::vector<T> LocationFromSeed(const std::vector<T>& v) {
  return ExpMap(OriginPoint<T>(static_cast<int>(v.size())), PadZero(v));
}

// ln(sinh r / r) as a smooth function of s = r^2.
template <typename T>
T LnSinhcOfSquare(const T& s) {
  if (ScalarValue(s) < 1e-8) {
    return s * (1.0 / 6.0) - s * s * (1.0 / 180.0);
  }
  using std::log;
  using std::sinh;
  using std::sqrt;
  const T r = sqrt(s);
  return log(sinh(r) / r);
}

// (coth r - 1/r) / r as a smooth function of s = r^2.
double CothRatioOfSquare(double s) {
  if (s < 1e-8) {
    return 1.0 / 3.0 - s / 45.0 + 2.0 * s * s / 945.0;
  }
  const double r = std::sqrt(s);
  return (1.0 / std::tanh(r) - 1.0 / r) / r;
}

// The wrapping chain evaluated in T arithmetic: the residual u in the
// origin's tangent space (spatial part) for a fixed observed z, with the
// location possibly carrying derivative seeds.
template <typename T>
std::vector<T> WrappedResidual(const std::vector<T>& mu,
                               const std::vector<double>& z, int dim) {
  const std::vector<T> z_t = ToScalars<T>(z);
  const std::vector<T> at_mu = LogMap(mu, z_t);
  const std::vector<T> at_origin =
      ParallelTransport(mu, OriginPoint<T>(dim), at_mu);
  std::vector<T> spatial(dim);
  for (int j = 0; j < dim; ++j) {
    spatial[j] = at_origin[j + 1];
  }
  return spatial;
}

template <typename T>
T WnLogDensityCore(CovType cov, int dim, const std::vector<T>& mu,
                   const std::vector<double>& z, const double* scale) {
  const std::vector<T> w = WrappedResidual(mu, z, dim);
  T s(0.0);
  for (const T& component : w) {
    s += component * component;
  }
  return GaussianLogDensityResidual(cov, dim, scale, w) -
         LnSinhcOfSquare(s) * static_cast<double>(dim - 1);
}

std::vector<double> EuclideanResidual(const TipDistSpec& spec, const double* p,
                                      const double* z) {
  std::vector<double> u(spec.dim);
  for (int j = 0; j < spec.dim; ++j) {
    u[j] = z[j] - p[j];
  }
  return u;
}

}  // namespace

std::vector<double> SampleTip(const TipDistSpec& spec, const double* p,
                              const double* eps) {
  const double* scale = p + spec.dim;
  const std::vector<double> u =
      ScaleMultiply(spec.cov, spec.dim, scale, eps);
  if (spec.space == Space::kEuclidean) {
    std::vector<double> x(spec.dim);
    for (int j = 0; j < spec.dim; ++j) {
      x[j] = p[j] + u[j];
    }
    return x;
  }
  const std::vector<double> v(p, p + spec.dim);
  const std::vector<double> mu = LocationFromSeed(v);
  const std::vector<double> at_mu =
      ParallelTransport(OriginPoint<double>(spec.dim), mu, PadZero(u));
  return ExpMap(mu, at_mu);
}

double TipLogDensity(const TipDistSpec& spec, const double* p,
                     const double* z) {
  const double* scale = p + spec.dim;
  if (spec.space == Space::kEuclidean) {
    return GaussianLogDensityResidual(spec.cov, spec.dim, scale,
                                      EuclideanResidual(spec, p, z));
  }
  const std::vector<double> v(p, p + spec.dim);
  const std::vector<double> mu = LocationFromSeed(v);
  const std::vector<double> z_vec(z, z + spec.dim + 1);
  return WnLogDensityCore(spec.cov, spec.dim, mu, z_vec, scale);
}

double TipSelfLogDensity(const TipDistSpec& spec, const double* p,
                         const double* eps) {
  const double* scale = p + spec.dim;
  double eps_sq = 0.0;
  for (int j = 0; j < spec.dim; ++j) {
    eps_sq += eps[j] * eps[j];
  }
  double result = -0.5 * spec.dim * std::log(2.0 * M_PI) -
                  ScaleLogDiagSum(spec.cov, spec.dim, scale) - 0.5 * eps_sq;
  if (spec.space == Space::kHyperbolic) {
    const std::vector<double> u =
        ScaleMultiply(spec.cov, spec.dim, scale, eps);
    double s = 0.0;
    for (double component : u) s += component * component;
    result -= static_cast<double>(spec.dim - 1) * LnSinhcOfSquare(s);
  }
  return result;
}

void TipScoreAdd(const TipDistSpec& spec, const double* p, const double* z,
                 double weight, double* grad) {
  const double* scale = p + spec.dim;
  const int ns = spec.ScaleCount();
  std::vector<double> scale_grad(ns, 0.0);
  if (spec.space == Space::kEuclidean) {
    const std::vector<double> u = EuclideanResidual(spec, p, z);
    const std::vector<double> du =
        GaussianScoreResidual(spec.cov, spec.dim, scale, u);
    for (int j = 0; j < spec.dim; ++j) {
      grad[j] += weight * (-du[j]);  // du/dm = -I
    }
    GaussianScoreScale(spec.cov, spec.dim, scale, u, scale_grad.data());
    for (int a = 0; a < ns; ++a) {
      grad[spec.dim + a] += weight * scale_grad[a];
    }
    return;
  }
  // Location part: push Duals seeded on the tangent seed v through the
  // exp/log/transport chain.
  std::vector<Dual> v(spec.dim);
  for (int j = 0; j < spec.dim; ++j) {
    v[j] = Dual::Seed(p[j], spec.dim, j);
  }
  const std::vector<Dual> mu = LocationFromSeed(v);
  const std::vector<double> z_vec(z, z + spec.dim + 1);
  const Dual density = WnLogDensityCore(spec.cov, spec.dim, mu, z_vec, scale);
  if (density.HasGrad()) {
    for (int j = 0; j < spec.dim; ++j) {
      grad[j] += weight * density.grad()(j);
    }
  }
  // Scale part: closed form at the fixed recovered residual.
  const std::vector<double> mu_values = LocationFromSeed(
      std::vector<double>(p, p + spec.dim));
  const std::vector<double> w =
      WrappedResidual(mu_values, z_vec, spec.dim);
  GaussianScoreScale(spec.cov, spec.dim, scale, w, scale_grad.data());
  for (int a = 0; a < ns; ++a) {
    grad[spec.dim + a] += weight * scale_grad[a];
  }
}

void TipPathwiseAdd(const TipDistSpec& spec, const double* p,
                    const double* eps, double weight, double* grad) {
  const double* scale = p + spec.dim;
  // d ln q(h(eps)) / d location = 0: the recovered residual is location-free.
  if (spec.space == Space::kEuclidean) {
    if (spec.cov == CovType::kDiag) {
      for (int i = 0; i < spec.dim; ++i) {
        grad[spec.dim + i] -= weight;
      }
    } else {
      for (int i = 0; i < spec.dim; ++i) {
        grad[spec.dim + LowerIndex(i, i)] -= weight;
      }
    }
    return;
  }
  const std::vector<double> u = ScaleMultiply(spec.cov, spec.dim, scale, eps);
  double s = 0.0;
  for (double component : u) s += component * component;
  const double wrap = static_cast<double>(spec.dim - 1) * CothRatioOfSquare(s);
  if (spec.cov == CovType::kDiag) {
    for (int i = 0; i < spec.dim; ++i) {
      const double dr = u[i] * eps[i] * std::exp(scale[i]);
      grad[spec.dim + i] += weight * (-1.0 - wrap * dr);
    }
  } else {
    for (int i = 0; i < spec.dim; ++i) {
      for (int j = 0; j < i; ++j) {
        grad[spec.dim + LowerIndex(i, j)] += weight * (-wrap * u[i] * eps[j]);
      }
      const double dr = u[i] * eps[i] * std::exp(scale[LowerIndex(i, i)]);
      grad[spec.dim + LowerIndex(i, i)] += weight * (-1.0 - wrap * dr);
    }
  }
}

void TipSurrogateInput(const TipDistSpec& spec, const double* p,
                       const double* eps, Eigen::VectorXd& x,
                       Eigen::MatrixXd& jac) {
  const int n = spec.ParamCount();
  x.setZero(spec.dim);
  jac.setZero(spec.dim, n);
  if (spec.space == Space::kEuclidean) {
    const double* scale = p + spec.dim;
    const std::vector<double> u =
        ScaleMultiply(spec.cov, spec.dim, scale, eps);
    for (int j = 0; j < spec.dim; ++j) {
      x(j) = p[j] + u[j];
      jac(j, j) = 1.0;
    }
    ScaleJacobianTimesEps(spec.cov, spec.dim, scale, eps, jac, spec.dim);
    return;
  }
  std::vector<Dual> v(spec.dim), scale(spec.ScaleCount());
  for (int j = 0; j < spec.dim; ++j) {
    v[j] = Dual::Seed(p[j], n, j);
  }
  for (int a = 0; a < spec.ScaleCount(); ++a) {
    scale[a] = Dual::Seed(p[spec.dim + a], n, spec.dim + a);
  }
  const std::vector<Dual> u =
      ScaleMultiply(spec.cov, spec.dim, scale.data(), eps);
  const std::vector<Dual> mu = LocationFromSeed(v);
  const std::vector<Dual> origin = OriginPoint<Dual>(spec.dim);
  const std::vector<Dual> at_mu = ParallelTransport(origin, mu, PadZero(u));
  const std::vector<Dual> z = ExpMap(mu, at_mu);
  const std::vector<Dual> tangent = LogMap(origin, z);
  for (int j = 0; j < spec.dim; ++j) {
    x(j) = tangent[j + 1].value();
    if (tangent[j + 1].HasGrad()) {
      jac.row(j) = tangent[j + 1].grad().transpose();
    }
  }
}

}  // namespace phylogeo
