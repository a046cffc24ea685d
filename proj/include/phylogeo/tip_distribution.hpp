// Copyright 2026 phylogeo project contributors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <vector>

#include "phylogeo/gaussian.hpp"

// Per-tip coordinate distributions: a d-dimensional normal in Euclidean
// space, or a wrapped normal on the Lorentz hyperboloid H^d. Hyperbolic
// locations are parameterized by an unconstrained tangent seed v with
// mu = exp_origin(pad0(v)), so every trainable parameter lives in R^n and
// plain Adam applies. A tip's parameter slice is laid out [location | scale].

namespace phylogeo {

enum class Space { kEuclidean, kHyperbolic };

struct TipDistSpec {
  Space space = Space::kEuclidean;
  CovType cov = CovType::kDiag;
  int dim = 2;

  int LocationCount() const { return dim; }
  int ScaleCount() const { return ScaleParamCount(cov, dim); }
  int ParamCount() const { return dim + ScaleCount(); }
  // Coordinates per tip as stored: hyperboloid points carry a time component.
  int AmbientDim() const { return space == Space::kHyperbolic ? dim + 1 : dim; }

  bool operator==(const TipDistSpec&) const = default;
};

// Tip coordinates for a whole tree, one row per tip.
struct TipCoordinates {
  Space space = Space::kEuclidean;
  int dim = 0;
  Eigen::MatrixXd rows;  // N x AmbientDim
};

// z = h_p(eps): the reparameterized sample for one tip.
std::vector<double> SampleTip(const TipDistSpec& spec, const double* p,
                              const double* eps);

// ln q_p(z) at an arbitrary coordinate z (ambient layout).
double TipLogDensity(const TipDistSpec& spec, const double* p,
                     const double* z);

// ln q_p(h_p(eps)) evaluated without reconstructing z: reduces to the
// standard-normal density of eps plus the log-det and wrapping corrections.
double TipSelfLogDensity(const TipDistSpec& spec, const double* p,
                         const double* eps);

// grad += weight * d ln q_p(z) / dp at fixed z (the score function).
void TipScoreAdd(const TipDistSpec& spec, const double* p, const double* z,
                 double weight, double* grad);

// grad += weight * d ln q_p(h_p(eps)) / dp, the total derivative through
// both the sample path and the density parameters. Location components are
// exactly zero for every family here; scale components are closed form.
void TipPathwiseAdd(const TipDistSpec& spec, const double* p,
                    const double* eps, double weight, double* grad);

// Surrogate network input for this tip and its Jacobian w.r.t. the tip's
// parameters: x in R^d (the sample itself, mapped to the origin's tangent
// space in the hyperbolic case), jac is d x ParamCount().
void TipSurrogateInput(const TipDistSpec& spec, const double* p,
                       const double* eps, Eigen::VectorXd& x,
                       Eigen::MatrixXd& jac);

}  // namespace phylogeo
