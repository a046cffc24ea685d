// Copyright 2026 phylogeo project contributors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <map>
#include <vector>

#include "phylogeo/tip_distribution.hpp"
#include "phylogeo/tree.hpp"

// The three variational families: a product of per-tip coordinate
// distributions (used for both Q_theta and the encoder R_psi), and the
// split-indexed lognormal branch model Q_phi. Branch parameters are keyed by
// the canonical split an edge induces, so any two topologies sharing a split
// share its parameters; unseen splits fall back to defaults and are inserted
// lazily during the serialized phase of a training step.

namespace phylogeo {

// Branch defaults for unseen splits: lognormal location ln 0.1 (the Exp(10)
// prior mean) and scale 0.5.
inline constexpr double kDefaultBranchM = -2.302585092994046;
inline constexpr double kDefaultBranchLogSigma = -0.6931471805599453;

// Independent per-tip distributions with one flat parameter vector laid out
// tip-major, [location | scale] within each tip.
class TipDistributionSet {
 public:
  TipDistributionSet(TipDistSpec spec, int tip_count);

  const TipDistSpec& Spec() const { return spec_; }
  int TipCount() const { return tip_count_; }
  int ParamCount() const { return tip_count_ * spec_.ParamCount(); }
  Eigen::VectorXd& Params() { return params_; }
  const Eigen::VectorXd& Params() const { return params_; }
  const double* TipParams(int tip) const {
    return params_.data() + tip * spec_.ParamCount();
  }

  // z = h(eps) for all tips; eps is tip-major N*dim.
  TipCoordinates Sample(const Eigen::VectorXd& eps) const;

  double LogDensity(const TipCoordinates& z) const;

  // grad += weight * score at fixed z.
  void ScoreAdd(const TipCoordinates& z, double weight,
                Eigen::VectorXd& grad) const;

  // ln q(h(eps)) without rebuilding z.
  double SelfLogDensity(const Eigen::VectorXd& eps) const;

  // grad += weight * total derivative of ln q(h(eps)): the pathwise
  // (negative entropy) term of the ELBO gradient.
  void PathwiseAdd(const Eigen::VectorXd& eps, double weight,
                   Eigen::VectorXd& grad) const;

  // Surrogate features x (tip-major N*dim) and per-tip Jacobian blocks
  // dim x ParamCount, evaluated at the same eps as Sample.
  void SurrogateInput(const Eigen::VectorXd& eps, Eigen::VectorXd& x,
                      std::vector<Eigen::MatrixXd>& jacobians) const;

 private:
  TipDistSpec spec_;
  int tip_count_;
  Eigen::VectorXd params_;
};

// Lognormal branch lengths b_e = exp(m_s + sigma_s * eps_e), with one
// (m, log sigma) pair per split s. Pendant-edge slots exist from
// construction; internal-split slots are created on first resolution.
class SplitBranchModel {
 public:
  SplitBranchModel(size_t tip_count, double default_m,
                   double default_log_sigma);

  size_t TipCount() const { return tip_count_; }
  size_t SlotCount() const { return params_.size() / 2; }
  // Flat parameters, [m, log sigma] interleaved per slot.
  std::vector<double>& Params() { return params_; }
  const std::vector<double>& Params() const { return params_; }

  // Slot of each edge of tau, inserting new split parameters as needed.
  // Mutating; call only from the serialized phase.
  std::vector<int> ResolveEdges(const Topology& tau);

  // Known internal splits in deterministic (split-order) sequence, for
  // serialization. Pendant slots are 0..N-1 (slot = tip index).
  std::vector<std::pair<Split, int>> InternalSlots() const;

  // Sets a serialized internal split's parameters, inserting its slot first
  // if needed. Slot numbering follows insertion order and is internal.
  void RestoreInternalSplit(const Split& split, double m, double log_sigma);

  BranchLengths SampleBranches(const std::vector<int>& slots,
                               const Eigen::VectorXd& eps) const;

  double LogDensity(const std::vector<int>& slots,
                    const BranchLengths& lengths) const;

  // grad += weight * d/dphi [sum_e df_db[e] "through" b_e - ln q_phi(B|tau)]
  // at fixed eps: the reparameterized phi chain including the score and
  // entropy parts of -ln q_phi.
  void ChainGradientAdd(const std::vector<int>& slots,
                        const BranchLengths& lengths,
                        const Eigen::VectorXd& eps,
                        const std::vector<double>& df_db, double weight,
                        Eigen::VectorXd& grad) const;

 private:
  size_t tip_count_;
  double default_m_;
  double default_log_sigma_;
  std::vector<double> params_;
  std::map<Split, int> internal_slots_;
};

}  // namespace phylogeo
