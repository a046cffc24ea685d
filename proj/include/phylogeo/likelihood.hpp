// Copyright 2026 phylogeo project contributors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>
#include <atomic>
#include <cstdint>
#include <string>
#include <vector>

#include "phylogeo/seqdata.hpp"
#include "phylogeo/tree.hpp"

// Jukes-Cantor sequence likelihood via Felsenstein pruning with per-pattern
// underflow scaling, analytic branch-length gradients from a two-pass
// (downward partials, upward outer partials) sweep, the uniform-topology plus
// Exp(10) branch prior, and forward simulation for test data.

namespace phylogeo {

// P(t) for JC69: diagonal 1/4 + (3/4)e^{-4t/3}, off-diagonal 1/4 - (1/4)e^{-4t/3}.
Eigen::Matrix4d Jc69Transition(double t);

// ln((2N-5)!!) evaluated as a sum of logs of odd integers.
double LogOddDoubleFactorial(int n);

// ln P(tau, B): -ln((2N-5)!!) + sum_e (ln 10 - 10 b_e).
double LogPrior(const Topology& topology, const BranchLengths& lengths);

// Draws an alignment from the Markov process along the tree, root state
// uniform over the four bases. Deterministic given the seed.
Alignment SimulateAlignment(const Topology& topology,
                            const BranchLengths& lengths,
                            const std::vector<std::string>& taxa,
                            size_t site_count, uint64_t seed);

// Pruning evaluator bound to one pattern alignment. Tip partial vectors are
// cached at construction; evaluations are pure and safe to run concurrently.
class PruningEngine {
 public:
  explicit PruningEngine(PatternAlignment patterns);

  const PatternAlignment& Patterns() const { return patterns_; }

  // root_override picks the virtual root (any internal node); the default -1
  // uses the internal node adjacent to tip 0. The value is root-invariant.
  double LogLikelihood(const Topology& topology, const BranchLengths& lengths,
                       int root_override = -1) const;

  // Log-likelihood and its exact gradient w.r.t. every branch length.
  std::pair<double, BranchLengths> LogLikelihoodWithGradients(
      const Topology& topology, const BranchLengths& lengths) const;

  // Number of likelihood evaluations so far; a gradient pass counts as one.
  int64_t EvaluationCount() const { return evaluations_.load(); }

 private:
  struct Traversal;
  void DownwardPass(const Topology& topology, const BranchLengths& lengths,
                    Traversal& traversal, int root_override) const;

  PatternAlignment patterns_;
  // Cached 4xP 0/1 tip partials, one block per tip.
  std::vector<Eigen::MatrixXd> tip_partials_;
  mutable std::atomic<int64_t> evaluations_{0};
};

}  // namespace phylogeo
