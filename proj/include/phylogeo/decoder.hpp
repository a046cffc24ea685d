// Copyright 2026 phylogeo project contributors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "phylogeo/seqdata.hpp"
#include "phylogeo/tip_distribution.hpp"
#include "phylogeo/tree.hpp"

// The deterministic link function tau(z): pairwise geodesic distances between
// tip coordinates, then agglomeration into an unrooted binary topology. The
// agglomerators keep only the topology; their estimated branch lengths are
// discarded. Ties in the merge criterion are broken by the lexicographically
// smallest pair of active node ids, so tau is a total function and repeated
// calls are bit-identical.

namespace phylogeo {

enum class LinkMethod { kNeighborJoining, kUpgma };

// Symmetric zero-diagonal matrix of Euclidean or Lorentz distances.
DistanceMatrix DistanceMatrixFromCoords(const TipCoordinates& z);

// O(N^3) neighbor joining with the standard Q-criterion.
Topology NeighborJoin(const DistanceMatrix& d);

// Average-linkage agglomeration; the degree-2 root is suppressed.
Topology Upgma(const DistanceMatrix& d);

Topology Link(const TipCoordinates& z, LinkMethod method);

}  // namespace phylogeo
