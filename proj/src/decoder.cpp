// Copyright 2026 phylogeo project contributors.
// SPDX-License-Identifier: Apache-2.0

#include "phylogeo/decoder.hpp"

#include <limits>
#include <numeric>
#include <vector>

#include "phylogeo/common.hpp"
#include "phylogeo/lorentz.hpp"

namespace phylogeo {

DistanceMatrix DistanceMatrixFromCoords(const TipCoordinates& z) {
  const int n = static_cast<int>(z.rows.rows());
  Assert(n >= 3, "need at least 3 tip coordinates");
  DistanceMatrix d = DistanceMatrix::Zero(n, n);
  std::vector<double> a(z.rows.cols()), b(z.rows.cols());
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      double dist;
      if (z.space == Space::kEuclidean) {
        dist = (z.rows.row(i) - z.rows.row(j)).norm();
      } else {
        Eigen::VectorXd::Map(a.data(), a.size()) = z.rows.row(i);
        Eigen::VectorXd::Map(b.data(), b.size()) = z.rows.row(j);
        dist = LorentzDistance(a, b);
      }
      d(i, j) = dist;
      d(j, i) = dist;
    }
  }
  return d;
}

namespace {

// Position pair minimizing `criterion`, scanning i<j in ascending order so the
// first strict minimum is the lexicographically smallest active-id pair.
// Starts from (0, 1) so a NaN-poisoned criterion still yields a valid pair;
// overflowed coordinates then decode to some topology whose non-finite
// objective the caller rejects, instead of indexing out of bounds here.
template <typename Criterion>
std::pair<int, int> ArgminPair(int n, const Criterion& criterion) {
  double best = std::numeric_limits<double>::infinity();
  std::pair<int, int> arg{0, 1};
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double value = criterion(i, j);
      if (value < best) {
        best = value;
        arg = {i, j};
      }
    }
  }
  return arg;
}

}  // namespace

Topology NeighborJoin(const DistanceMatrix& input) {
  const int tip_count = static_cast<int>(input.rows());
  Assert(tip_count >= 3, "neighbor joining needs at least 3 tips");
  const int node_count = 2 * tip_count - 2;
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(node_count, node_count);
  d.topLeftCorner(tip_count, tip_count) = input;

  std::vector<int> active(tip_count);
  std::iota(active.begin(), active.end(), 0);
  std::vector<std::pair<int, int>> edges;
  int next_id = tip_count;

  while (static_cast<int>(active.size()) > 3) {
    const int n = static_cast<int>(active.size());
    std::vector<double> row_sum(n, 0.0);
    for (int i = 0; i < n; ++i) {
      for (int k = 0; k < n; ++k) row_sum[i] += d(active[i], active[k]);
    }
    const auto [i, j] = ArgminPair(n, [&](int a, int b) {
      return (n - 2) * d(active[a], active[b]) - row_sum[a] - row_sum[b];
    });
    const int node_i = active[i];
    const int node_j = active[j];
    const int merged = next_id++;
    for (int k = 0; k < n; ++k) {
      if (k == i || k == j) continue;
      const double to_merged =
          0.5 * (d(node_i, active[k]) + d(node_j, active[k]) - d(node_i, node_j));
      d(merged, active[k]) = to_merged;
      d(active[k], merged) = to_merged;
    }
    edges.emplace_back(node_i, merged);
    edges.emplace_back(node_j, merged);
    active.erase(active.begin() + j);
    active.erase(active.begin() + i);
    active.push_back(merged);
  }

  const int center = next_id++;
  for (int id : active) edges.emplace_back(id, center);
  return Topology(static_cast<size_t>(tip_count), std::move(edges));
}

Topology Upgma(const DistanceMatrix& input) {
  const int tip_count = static_cast<int>(input.rows());
  Assert(tip_count >= 3, "UPGMA needs at least 3 tips");
  const int node_count = 2 * tip_count - 2;
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(node_count, node_count);
  d.topLeftCorner(tip_count, tip_count) = input;

  std::vector<int> active(tip_count);
  std::iota(active.begin(), active.end(), 0);
  std::vector<double> cluster_size(node_count, 1.0);
  std::vector<std::pair<int, int>> edges;
  int next_id = tip_count;

  while (static_cast<int>(active.size()) > 2) {
    const int n = static_cast<int>(active.size());
    const auto [i, j] =
        ArgminPair(n, [&](int a, int b) { return d(active[a], active[b]); });
    const int node_i = active[i];
    const int node_j = active[j];
    const int merged = next_id++;
    const double size_i = cluster_size[node_i];
    const double size_j = cluster_size[node_j];
    cluster_size[merged] = size_i + size_j;
    for (int k = 0; k < n; ++k) {
      if (k == i || k == j) continue;
      const double to_merged =
          (size_i * d(node_i, active[k]) + size_j * d(node_j, active[k])) /
          (size_i + size_j);
      d(merged, active[k]) = to_merged;
      d(active[k], merged) = to_merged;
    }
    edges.emplace_back(node_i, merged);
    edges.emplace_back(node_j, merged);
    active.erase(active.begin() + j);
    active.erase(active.begin() + i);
    active.push_back(merged);
  }

  // The final merge would create a degree-2 root; connect its children
  // directly instead.
  edges.emplace_back(active[0], active[1]);
  return Topology(static_cast<size_t>(tip_count), std::move(edges));
}

Topology Link(const TipCoordinates& z, LinkMethod method) {
  const DistanceMatrix d = DistanceMatrixFromCoords(z);
  return method == LinkMethod::kNeighborJoining ? NeighborJoin(d) : Upgma(d);
}

}  // namespace phylogeo
