// Copyright 2026 phylogeo project contributors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>

#include "phylogeo/seqdata.hpp"
#include "phylogeo/tip_distribution.hpp"

// Initial tip coordinates from a pairwise distance matrix: classical MDS for
// Euclidean space, and a Lorentzian-Gram variant for the hyperboloid with a
// Euclidean-lift fallback, keeping whichever candidate distorts the input
// distances less.

namespace phylogeo {

// Classical MDS: double-centered Gram eigendecomposition, top-dim
// components, eigenvector signs fixed so each column's largest-magnitude
// entry is positive. Requires dim <= N-1.
TipCoordinates MdsInit(const DistanceMatrix& distances, int dim);

// Hyperbolic MDS: the spatial part recovered from the most negative
// eigenvalues of cosh(D), lifted exactly onto the hyperboloid.
TipCoordinates HmdsInit(const DistanceMatrix& distances, int dim);

// Sum of squared differences between the input distances and the pairwise
// distances realized by the coordinates.
double EmbeddingStress(const DistanceMatrix& distances,
                       const TipCoordinates& coords);

// N x dim plotting coordinates of the location parameters: Euclidean
// locations as-is, hyperbolic ones mapped to the Poincare ball.
Eigen::MatrixXd PlotCoordinates(const TipDistSpec& spec,
                                const Eigen::VectorXd& params, int tip_count);

}  // namespace phylogeo
