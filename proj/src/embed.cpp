// Copyright 2026 phylogeo project contributors.
// SPDX-License-Identifier: Apache-2.0

#include "phylogeo/embed.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "phylogeo/common.hpp"
#include "phylogeo/lorentz.hpp"

namespace phylogeo {

namespace {

// Deterministic eigenvector orientation: the largest-magnitude entry is made
// positive, first index winning ties.
void FixSign(Eigen::VectorXd& v) {
  int pivot = 0;
  for (int i = 1; i < v.size(); ++i) {
    if (std::abs(v[i]) > std::abs(v[pivot])) {
      pivot = i;
    }
  }
  if (v[pivot] < 0.0) {
    v = -v;
  }
}

void ValidateInput(const DistanceMatrix& distances, int dim) {
  Assert(distances.rows() == distances.cols() && distances.rows() >= 2,
         "distance matrix must be square with at least two rows");
  Assert(dim >= 1 && dim <= static_cast<int>(distances.rows()) - 1,
         "embedding dimension must be between 1 and N-1");
}

std::vector<double> RowVector(const Eigen::MatrixXd& rows, int i) {
  std::vector<double> out(rows.cols());
  for (int j = 0; j < rows.cols(); ++j) {
    out[j] = rows(i, j);
  }
  return out;
}

}  // namespace

TipCoordinates MdsInit(const DistanceMatrix& distances, int dim) {
  ValidateInput(distances, dim);
  const int n = static_cast<int>(distances.rows());
  const Eigen::MatrixXd squared = distances.cwiseProduct(distances);
  const Eigen::VectorXd row_mean = squared.rowwise().mean();
  const double grand_mean = squared.mean();
  Eigen::MatrixXd gram(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      gram(i, j) =
          -0.5 * (squared(i, j) - row_mean[i] - row_mean[j] + grand_mean);
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(gram);
  Assert(solver.info() == Eigen::Success, "MDS eigendecomposition failed");

  TipCoordinates coords{Space::kEuclidean, dim,
                        Eigen::MatrixXd::Zero(n, dim)};
  // Eigenvalues come sorted ascending; use the top `dim`, clamping the
  // negatives a non-Euclidean input produces.
  for (int j = 0; j < dim; ++j) {
    const int index = n - 1 - j;
    const double value = std::max(solver.eigenvalues()[index], 0.0);
    Eigen::VectorXd axis = solver.eigenvectors().col(index);
    FixSign(axis);
    coords.rows.col(j) = std::sqrt(value) * axis;
  }
  return coords;
}

TipCoordinates HmdsInit(const DistanceMatrix& distances, int dim) {
  ValidateInput(distances, dim);
  const int n = static_cast<int>(distances.rows());
  // For points on the hyperboloid, cosh of the distance matrix equals the
  // negated Lorentz Gram matrix, whose spatial part carries the negative
  // eigenvalues. The time component is recomputed from the spatial norm, so
  // every output row satisfies the hyperboloid constraint exactly.
  const Eigen::MatrixXd lorentz_gram = distances.array().cosh().matrix();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(lorentz_gram);
  Assert(solver.info() == Eigen::Success, "hMDS eigendecomposition failed");
  Eigen::MatrixXd spatial = Eigen::MatrixXd::Zero(n, dim);
  for (int j = 0; j < dim && j < n; ++j) {
    const double value = solver.eigenvalues()[j];
    if (value >= 0.0) {
      break;  // ascending order: no more negative eigenvalues
    }
    Eigen::VectorXd axis = solver.eigenvectors().col(j);
    FixSign(axis);
    spatial.col(j) = std::sqrt(-value) * axis;
  }
  TipCoordinates direct{Space::kHyperbolic, dim,
                        Eigen::MatrixXd::Zero(n, dim + 1)};
  for (int i = 0; i < n; ++i) {
    direct.rows(i, 0) = std::sqrt(1.0 + spatial.row(i).squaredNorm());
    direct.rows.row(i).tail(dim) = spatial.row(i);
  }

  // Fallback candidate: Euclidean MDS coordinates read as tangent vectors at
  // the origin. Dominates when the spectrum gives no usable negative part.
  const TipCoordinates mds = MdsInit(distances, dim);
  TipCoordinates lifted{Space::kHyperbolic, dim,
                        Eigen::MatrixXd::Zero(n, dim + 1)};
  for (int i = 0; i < n; ++i) {
    const std::vector<double> point =
        ExpMap(LorentzOrigin(dim), PadZero(RowVector(mds.rows, i)));
    for (int j = 0; j <= dim; ++j) {
      lifted.rows(i, j) = point[j];
    }
  }
  return EmbeddingStress(distances, direct) <=
                 EmbeddingStress(distances, lifted)
             ? direct
             : lifted;
}

double EmbeddingStress(const DistanceMatrix& distances,
                       const TipCoordinates& coords) {
  Assert(distances.rows() == coords.rows.rows(),
         "stress needs matching distance and coordinate counts");
  double stress = 0.0;
  for (int i = 0; i < coords.rows.rows(); ++i) {
    for (int j = i + 1; j < coords.rows.rows(); ++j) {
      double realized;
      if (coords.space == Space::kEuclidean) {
        realized = (coords.rows.row(i) - coords.rows.row(j)).norm();
      } else {
        realized = LorentzDistance(RowVector(coords.rows, i),
                                   RowVector(coords.rows, j));
      }
      const double gap = realized - distances(i, j);
      stress += gap * gap;
    }
  }
  return stress;
}

Eigen::MatrixXd PlotCoordinates(const TipDistSpec& spec,
                                const Eigen::VectorXd& params,
                                int tip_count) {
  Assert(params.size() == tip_count * spec.ParamCount(),
         "plot coordinates parameter size mismatch");
  Eigen::MatrixXd out(tip_count, spec.dim);
  for (int tip = 0; tip < tip_count; ++tip) {
    const double* location = params.data() + tip * spec.ParamCount();
    if (spec.space == Space::kEuclidean) {
      for (int j = 0; j < spec.dim; ++j) {
        out(tip, j) = location[j];
      }
    } else {
      std::vector<double> seed(location, location + spec.dim);
      const std::vector<double> point =
          ExpMap(LorentzOrigin(spec.dim), PadZero(seed));
      const std::vector<double> ball = PoincareProject(point);
      for (int j = 0; j < spec.dim; ++j) {
        out(tip, j) = ball[j];
      }
    }
  }
  return out;
}

}  // namespace phylogeo
