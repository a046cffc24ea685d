// Copyright 2026 phylogeo project contributors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace phylogeo {

// One side of a tip bipartition, canonicalized to the side that does NOT
// contain tip 0, so equal splits compare equal regardless of orientation.
class Split {
 public:
  explicit Split(size_t tip_count);

  size_t TipCount() const { return tip_count_; }
  void Set(size_t tip);
  bool Test(size_t tip) const;
  size_t Count() const;

  // Flips to the complement if tip 0 is currently included.
  void Canonicalize();

  // Trivial splits (pendant edges) separate a single tip; canonically these
  // have Count() == 1 or Count() == N-1 (the pendant edge of tip 0).
  bool IsTrivial() const {
    const size_t count = Count();
    return count <= 1 || count >= tip_count_ - 1;
  }

  // Two canonical splits are compatible iff disjoint or nested.
  bool CompatibleWith(const Split& other) const;
  bool ContainsAll(const Split& other) const;
  bool DisjointFrom(const Split& other) const;
  void UnionWith(const Split& other);
  size_t LowestSetTip() const;

  // Hex serialization of the tip bitset, lowest tips in the rightmost digit.
  std::string ToHex() const;
  static Split FromHex(const std::string& hex, size_t tip_count);

  bool operator==(const Split& other) const = default;
  bool operator<(const Split& other) const;

 private:
  size_t tip_count_;
  std::vector<uint64_t> words_;
};

// Branch lengths in expected substitutions per site, indexed by edge id.
using BranchLengths = std::vector<double>;

// Unrooted binary tree on N tips: nodes 0..2N-3 where 0..N-1 are tips of
// degree 1 and the rest are internal nodes of degree 3. Edge ids index the
// construction-ordered edge list and are what BranchLengths refer to.
class Topology {
 public:
  Topology(size_t tip_count, std::vector<std::pair<int, int>> edges);

  size_t TipCount() const { return tip_count_; }
  size_t NodeCount() const { return 2 * tip_count_ - 2; }
  size_t EdgeCount() const { return edges_.size(); }
  const std::vector<std::pair<int, int>>& Edges() const { return edges_; }

  // Per node, the (neighbor, edge id) arcs in insertion order.
  const std::vector<std::vector<std::pair<int, int>>>& Adjacency() const {
    return adjacency_;
  }

  // Canonical split cut by each edge, indexed by edge id.
  std::vector<Split> EdgeSplits() const;

  // The N-3 internal-edge splits, sorted. This is the topology's identity.
  std::vector<Split> NontrivialSplits() const;

  // Split-set equality, invariant to node numbering.
  bool operator==(const Topology& other) const;

 private:
  size_t tip_count_;
  std::vector<std::pair<int, int>> edges_;
  std::vector<std::vector<std::pair<int, int>>> adjacency_;
};

struct NewickTree {
  Topology topology;
  std::optional<BranchLengths> lengths;
  std::vector<std::string> taxa;
};

// Parses one Newick string. Rooted inputs (degree-2 root) are accepted and
// the root is suppressed, summing the two incident lengths. Lengths are
// returned only when every edge carries one. When `reference_taxa` is given,
// labels are mapped to its indices and unknown labels are an error;
// otherwise tips are indexed by order of first appearance.
NewickTree ParseNewick(const std::string& text);
NewickTree ParseNewick(const std::string& text,
                       const std::vector<std::string>& reference_taxa);

// Deterministic Newick writer: rendered from the internal node adjacent to
// tip 0, children ordered by smallest contained tip, lengths to 12 decimals.
std::string WriteNewick(const Topology& topology,
                        const std::vector<std::string>& taxa,
                        const BranchLengths* lengths = nullptr);

// One tree per non-empty line, skipping '#' comment lines; later lines are
// parsed against the first line's taxa.
std::vector<NewickTree> ParseNewickLines(const std::string& text);

// A tree reduced to its sorted nontrivial splits. Unlike Topology this
// accepts multifurcating input, which consensus trees usually are.
struct SplitTree {
  size_t tip_count = 0;
  std::vector<Split> splits;
  std::vector<std::string> taxa;
};

SplitTree ParseNewickSplits(const std::string& text);
SplitTree ParseNewickSplits(const std::string& text,
                            const std::vector<std::string>& reference_taxa);

std::vector<Split> NontrivialSplits(const Topology& topology);

// Symmetric difference of nontrivial split sets (raw count; max 2(N-3)).
size_t RfDistance(const Topology& t1, const Topology& t2);
size_t RfDistance(const std::vector<Split>& s1, const std::vector<Split>& s2);

// Majority-rule consensus: exactly the splits with frequency strictly > 1/2,
// which are mutually compatible, assembled into a possibly multifurcating
// tree.
struct ConsensusTree {
  size_t tip_count = 0;
  std::vector<Split> splits;
  std::vector<double> frequencies;

  std::string ToNewick(const std::vector<std::string>& taxa) const;
};

ConsensusTree MajorityConsensus(const std::vector<Topology>& samples);

// Occurrence frequency of every nontrivial split seen in the samples,
// sorted by descending frequency (ties by split order).
std::vector<std::pair<Split, double>> BipartitionFrequencies(
    const std::vector<Topology>& samples);

// 1 - sum of squared frequencies over distinct topologies.
double SimpsonDiversity(const std::vector<Topology>& samples);

}  // namespace phylogeo
