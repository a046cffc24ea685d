// Copyright 2026 phylogeo project contributors.
// SPDX-License-Identifier: Apache-2.0

#include "phylogeo/gaussian.hpp"

namespace phylogeo {

namespace {

// Backward substitution for L^T a = y.
std::vector<double> SolveUpperFromLower(CovType cov, int dim,
                                        const double* scale,
                                        const std::vector<double>& y) {
  std::vector<double> a(dim, 0.0);
  if (cov == CovType::kDiag) {
    for (int i = 0; i < dim; ++i) {
      a[i] = y[i] * std::exp(-scale[i]);
    }
  } else {
    for (int i = dim - 1; i >= 0; --i) {
      double sum = y[i];
      for (int k = i + 1; k < dim; ++k) {
        sum -= scale[LowerIndex(k, i)] * a[k];
      }
      a[i] = sum * std::exp(-scale[LowerIndex(i, i)]);
    }
  }
  return a;
}

}  // namespace

void GaussianScoreScale(CovType cov, int dim, const double* scale,
                        const std::vector<double>& u, double* grad) {
  const std::vector<double> y = ScaleSolveLower(cov, dim, scale, u);
  if (cov == CovType::kDiag) {
    for (int i = 0; i < dim; ++i) {
      grad[i] = y[i] * y[i] - 1.0;
    }
    return;
  }
  const std::vector<double> a = SolveUpperFromLower(cov, dim, scale, y);
  for (int i = 0; i < dim; ++i) {
    for (int j = 0; j < i; ++j) {
      grad[LowerIndex(i, j)] = a[i] * y[j];
    }
    grad[LowerIndex(i, i)] =
        a[i] * y[i] * std::exp(scale[LowerIndex(i, i)]) - 1.0;
  }
}

std::vector<double> GaussianScoreResidual(CovType cov, int dim,
                                          const double* scale,
                                          const std::vector<double>& u) {
  const std::vector<double> y = ScaleSolveLower(cov, dim, scale, u);
  std::vector<double> a = SolveUpperFromLower(cov, dim, scale, y);
  for (double& component : a) component = -component;
  return a;
}

void ScaleJacobianTimesEps(CovType cov, int dim, const double* scale,
                           const double* eps, Eigen::MatrixXd& jac,
                           int column_offset) {
  if (cov == CovType::kDiag) {
    for (int i = 0; i < dim; ++i) {
      jac(i, column_offset + i) = std::exp(scale[i]) * eps[i];
    }
    return;
  }
  for (int i = 0; i < dim; ++i) {
    for (int j = 0; j < i; ++j) {
      jac(i, column_offset + LowerIndex(i, j)) = eps[j];
    }
    jac(i, column_offset + LowerIndex(i, i)) =
        std::exp(scale[LowerIndex(i, i)]) * eps[i];
  }
}

}  // namespace phylogeo
