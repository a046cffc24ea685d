// Copyright 2026 phylogeo project contributors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "phylogeo/checkpoint.hpp"
#include "phylogeo/estimators.hpp"
#include "phylogeo/seqdata.hpp"
#include "phylogeo/tree.hpp"

// The training loop: distance-based initialization, stochastic gradient
// ascent on the bound with Adam, likelihood annealing, learning-rate decay,
// and the end-of-run artifacts (topology samples, consensus, marginal
// likelihood estimate).

namespace phylogeo {

struct TrainConfig {
  Space space = Space::kEuclidean;
  CovType cov = CovType::kDiag;
  int dim = 2;
  EstimatorKind estimator = EstimatorKind::kLoo;
  bool lax_drop_entropy = false;
  int sample_count = 2;  // K Monte Carlo samples per step
  LinkMethod link = LinkMethod::kNeighborJoining;
  double lr = 0.001;
  double lr_decay = 0.75;
  int64_t lr_decay_every = 200000;  // steps between decays
  double beta_start = 0.001;
  int64_t anneal_samples = 100000;  // likelihood evaluations to reach 1
  int64_t nle_budget = 1000000;
  uint64_t seed = 0;
  int64_t trace_every = 1000;  // steps between trace rows
  int threads = 1;
  int mll_samples = 1000;
  int mll_reps = 1;
  int topology_sample_count = 1000;
  int surrogate_hidden_multiplier = 10;
  double theta_scale_init = 0.1;
  double psi_scale_init = 1.0;
};

struct TraceRow {
  int64_t step = 0;  // completed steps
  int64_t nle = 0;   // likelihood evaluations so far, step * K
  double elbo = 0.0;
  double beta = 0.0;
  double lr = 0.0;
  int64_t wall_ms = 0;
};

struct MllReport {
  double mean = 0.0;
  double std_dev = 0.0;
  int reps = 0;
};

struct RunTrace {
  std::vector<TraceRow> rows;
  int64_t steps = 0;
  int64_t nle_count = 0;
  int64_t skipped_steps = 0;
  MllReport mll;
  std::vector<Topology> topology_samples;
  ConsensusTree consensus;
};

struct TrainResult {
  VariationalState state;
  RunTrace trace;
};

// Inverse-temperature schedule: linear from beta_start to exactly 1.0 at
// anneal_samples likelihood evaluations, constant afterwards.
double AnnealedBeta(const TrainConfig& config, int64_t nle_count);

// Step-count decay: lr * decay^(step / decay_every), integer division.
double DecayedLearningRate(const TrainConfig& config, int64_t step);

// Distance-based starting point: tip locations from classical or hyperbolic
// MDS on the Hamming matrix, sampler scales at theta_scale_init, encoder
// locations copied from the sampler with scales at psi_scale_init, branch
// model at its defaults, and a freshly initialized surrogate for the LAX
// estimators.
VariationalState InitializeState(const TrainConfig& config,
                                 const Alignment& alignment);

TrainResult Train(const TrainConfig& config, const Alignment& alignment);

// Importance-weighted bound, `reps` independent estimates at beta = 1; each
// repetition draws through its own derived seed.
MllReport EstimateMll(VariationalState& state, const PruningEngine& pruning,
                      int sample_count, int reps, uint64_t seed, int threads);

// Decoded topologies of fresh coordinate samples; no likelihood involved.
std::vector<Topology> SampleTopologies(const VariationalState& state,
                                       int count, uint64_t seed);

// CSV serialization with the header step,nle,elbo,beta,lr,wall_ms.
std::string TraceCsv(const std::vector<TraceRow>& rows);

}  // namespace phylogeo
