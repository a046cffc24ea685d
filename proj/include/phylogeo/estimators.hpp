// Copyright 2026 phylogeo project contributors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "phylogeo/decoder.hpp"
#include "phylogeo/likelihood.hpp"
#include "phylogeo/surrogate.hpp"
#include "phylogeo/variational.hpp"

// The stochastic objective: draw tip coordinates, decode a topology, draw
// branch lengths, evaluate f(z, B), and assemble the gradient estimators.
// Everything is keyed by (seed, step, sample) counter streams, so any draw
// can be reproduced independently of thread count or evaluation order.

namespace phylogeo {

enum class EstimatorKind { kPlain, kLoo, kLax, kLooLax, kIw, kVimco };

// Maps the CLI spellings plain/loo/lax/loo_lax/iw/vimco.
EstimatorKind ParseEstimatorKind(const std::string& name);
std::string EstimatorKindName(EstimatorKind kind);

// Whether the estimator centers the score weights with other samples' f
// values and therefore needs at least two samples per step.
bool NeedsMultipleSamples(EstimatorKind kind);

// One evaluated Monte Carlo sample with every component of f kept apart.
struct SampleEval {
  Eigen::VectorXd eps_z;
  TipCoordinates z;
  Topology tau;
  std::vector<int> slots;
  Eigen::VectorXd eps_b;
  BranchLengths lengths;
  double log_likelihood;          // unannealed ln P(Y | tau, B)
  BranchLengths likelihood_db;    // d ln P(Y | tau, B) / d b_e
  double log_prior;               // ln P(tau) + ln P(B)
  double log_q_phi;               // ln Q_phi(B | tau)
  double log_r_psi;               // ln R_psi(z | tau)
  double log_q_theta;             // ln Q_theta(z)
  double f;                       // beta * LL + prior + lnR - lnQphi
  std::vector<double> df_db;      // beta * dLL/db - 10, per edge
  double beta;

  // ln F' = f - ln Q_theta(z), the single-sample bound value.
  double BoundValue() const { return f - log_q_theta; }
};

// Normalized importance weights w_k = F'_k / sum F' and the K-sample bound
// value ell = ln mean F'. The weights sum to 1 exactly.
struct IwWeightSet {
  std::vector<double> weights;
  double bound;
};
IwWeightSet ComputeIwWeights(const std::vector<double>& ln_f_prime);

// VIMCO holdout bounds: ell_bar_k = ln mean of the other F' values with the
// k-th replaced by their geometric mean. Depends only on samples != k.
std::vector<double> VimcoHoldouts(const std::vector<double>& ln_f_prime);

struct GradEstimate {
  Eigen::VectorXd theta;
  Eigen::VectorXd phi;
  Eigen::VectorXd psi;
  Eigen::VectorXd chi;           // filled only by the LAX family
  double elbo = 0.0;             // mean of ln F' over the batch
  double theta_sq_mean = 0.0;    // <g_theta^2>, the LAX training objective
  std::vector<double> f_values;
};

struct StepContext {
  uint64_t seed = 0;
  uint64_t step = 0;
  double beta = 1.0;
  int threads = 1;
};

class EstimatorEngine {
 public:
  // The surrogate may be null for estimators outside the LAX family.
  EstimatorEngine(const PruningEngine& likelihood,
                  TipDistributionSet& q_theta, SplitBranchModel& q_phi,
                  TipDistributionSet& r_psi, LinkMethod link,
                  Surrogate* surrogate = nullptr);

  // Draws sample k of a step from its counter streams and evaluates it.
  // Exactly one likelihood evaluation; gradients add no extra evaluation.
  SampleEval DrawSample(const StepContext& context, int k,
                        bool with_gradients = true);

  // The same evaluation from externally fixed noise.
  SampleEval EvaluateSample(const Eigen::VectorXd& eps_z,
                            const Eigen::VectorXd& eps_b, double beta,
                            bool with_gradients = true);

  // K samples in sample order; split resolution and reduction stay
  // deterministic for any thread count.
  std::vector<SampleEval> GatherSamples(const StepContext& context, int count,
                                        bool with_gradients = true);

  // Assembles one estimator from already-evaluated samples. Pure in the
  // parameters; exposed separately so estimators can share common draws.
  GradEstimate Assemble(EstimatorKind kind,
                        const std::vector<SampleEval>& samples,
                        bool lax_drop_entropy = false) const;

  GradEstimate Estimate(EstimatorKind kind, int sample_count,
                        const StepContext& context,
                        bool lax_drop_entropy = false);

  // Mean of ln F' over K fresh samples, the single/multi-sample ELBO.
  double ElboEstimate(int sample_count, const StepContext& context);

  // ln mean exp of K fresh ln F' values, the importance-weighted bound.
  // Coincides with ElboEstimate sample-for-sample at K = 1.
  double IwElbo(int sample_count, const StepContext& context);

  const PruningEngine& Likelihood() const { return *likelihood_; }
  TipDistributionSet& QTheta() { return *q_theta_; }
  SplitBranchModel& QPhi() { return *q_phi_; }
  TipDistributionSet& RPsi() { return *r_psi_; }
  Surrogate* SurrogateNet() { return surrogate_; }
  LinkMethod Link() const { return link_; }

 private:
  void DrawNoise(const StepContext& context, int k, Eigen::VectorXd& eps_z,
                 Eigen::VectorXd& eps_b) const;
  // Decoding and split resolution; mutating, so call in sample order.
  SampleEval PrepareSample(const Eigen::VectorXd& eps_z,
                           const Eigen::VectorXd& eps_b, double beta);
  // Likelihood, densities, and f; pure, safe to run concurrently.
  void FinishSample(SampleEval& sample, bool with_gradients) const;

  const PruningEngine* likelihood_;
  TipDistributionSet* q_theta_;
  SplitBranchModel* q_phi_;
  TipDistributionSet* r_psi_;
  LinkMethod link_;
  Surrogate* surrogate_;
};

}  // namespace phylogeo
