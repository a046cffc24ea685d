// Copyright 2026 phylogeo project contributors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <vector>

#include "phylogeo/common.hpp"
#include "phylogeo/dual.hpp"

// Unconstrained parameterizations of Gaussian scale: either a diagonal
// log-std vector or a dense lower-triangular Cholesky factor whose diagonal
// is stored as log. All gradients below are with respect to these
// unconstrained parameters.

namespace phylogeo {

enum class CovType { kDiag, kFull };

inline int ScaleParamCount(CovType cov, int dim) {
  return cov == CovType::kDiag ? dim : dim * (dim + 1) / 2;
}

// Row-major lower-triangle index of entry (i, j), j <= i.
inline int LowerIndex(int i, int j) { return i * (i + 1) / 2 + j; }

// u = L eps.
template <typename T>
std::vector<T> ScaleMultiply(CovType cov, int dim, const T* scale,
                             const double* eps) {
  std::vector<T> u(dim, T(0.0));
  using std::exp;
  if (cov == CovType::kDiag) {
    for (int i = 0; i < dim; ++i) {
      u[i] = exp(scale[i]) * eps[i];
    }
  } else {
    for (int i = 0; i < dim; ++i) {
      T sum = exp(scale[LowerIndex(i, i)]) * eps[i];
      for (int j = 0; j < i; ++j) {
        sum += scale[LowerIndex(i, j)] * eps[j];
      }
      u[i] = sum;
    }
  }
  return u;
}

// Solves L y = u by forward substitution (L from double-valued scale params,
// right-hand side possibly Dual).
template <typename T>
std::vector<T> ScaleSolveLower(CovType cov, int dim, const double* scale,
                               const std::vector<T>& u) {
  std::vector<T> y(dim, T(0.0));
  if (cov == CovType::kDiag) {
    for (int i = 0; i < dim; ++i) {
      y[i] = u[i] * std::exp(-scale[i]);
    }
  } else {
    for (int i = 0; i < dim; ++i) {
      T sum = u[i];
      for (int j = 0; j < i; ++j) {
        sum -= scale[LowerIndex(i, j)] * y[j];
      }
      y[i] = sum * std::exp(-scale[LowerIndex(i, i)]);
    }
  }
  return y;
}

inline double ScaleLogDiagSum(CovType cov, int dim, const double* scale) {
  double sum = 0.0;
  for (int i = 0; i < dim; ++i) {
    sum += (cov == CovType::kDiag) ? scale[i] : scale[LowerIndex(i, i)];
  }
  return sum;
}

// log N(u; 0, L L^T) for a residual u.
template <typename T>
T GaussianLogDensityResidual(CovType cov, int dim, const double* scale,
                             const std::vector<T>& u) {
  const std::vector<T> y = ScaleSolveLower(cov, dim, scale, u);
  T quadratic(0.0);
  for (int i = 0; i < dim; ++i) {
    quadratic += y[i] * y[i];
  }
  const double constant =
      -0.5 * dim * std::log(2.0 * M_PI) - ScaleLogDiagSum(cov, dim, scale);
  return T(constant) - quadratic * 0.5;
}

// d log N(u; 0, Sigma) / d(scale params), at fixed residual u.
void GaussianScoreScale(CovType cov, int dim, const double* scale,
                        const std::vector<double>& u, double* grad);

// d log N(u; 0, Sigma) / du.
std::vector<double> GaussianScoreResidual(CovType cov, int dim,
                                          const double* scale,
                                          const std::vector<double>& u);

// Columns d(L eps)/d(scale param a), written into jac(:, column_offset + a).
void ScaleJacobianTimesEps(CovType cov, int dim, const double* scale,
                           const double* eps, Eigen::MatrixXd& jac,
                           int column_offset);

// 0.5 * ln det(2 pi e Sigma).
inline double GaussianEntropy(CovType cov, int dim, const double* scale) {
  return 0.5 * dim * (std::log(2.0 * M_PI) + 1.0) +
         ScaleLogDiagSum(cov, dim, scale);
}

}  // namespace phylogeo
