// Copyright 2026 phylogeo project contributors.
// SPDX-License-Identifier: Apache-2.0

#include "phylogeo/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <utility>

#include "phylogeo/embed.hpp"
#include "phylogeo/lorentz.hpp"
#include "phylogeo/optim.hpp"
#include "phylogeo/rng.hpp"

namespace phylogeo {

namespace {

void ValidateConfig(const TrainConfig& config, const Alignment& alignment) {
  Assert(alignment.TaxonCount() >= 3, "training needs at least 3 taxa");
  Assert(alignment.SiteCount() >= 1, "training needs at least 1 site");
  Assert(config.dim >= 1, "dim must be positive");
  Assert(config.dim <= static_cast<int>(alignment.TaxonCount()) - 1,
         "dim must be at most the taxon count minus 1");
  Assert(config.sample_count >= 1, "sample count must be positive");
  Assert(!NeedsMultipleSamples(config.estimator) || config.sample_count >= 2,
         "estimator " + EstimatorKindName(config.estimator) +
             " needs at least 2 samples per step");
  Assert(config.lr > 0.0, "learning rate must be positive");
  Assert(config.lr_decay > 0.0 && config.lr_decay <= 1.0,
         "learning rate decay must be in (0, 1]");
  Assert(config.lr_decay_every > 0, "decay interval must be positive");
  Assert(config.beta_start > 0.0 && config.beta_start <= 1.0,
         "beta start must be in (0, 1]");
  Assert(config.nle_budget >= config.sample_count,
         "evaluation budget below one step");
  Assert(config.trace_every >= 1, "trace interval must be positive");
  Assert(config.threads >= 1, "thread count must be positive");
  Assert(config.theta_scale_init > 0.0 && config.psi_scale_init > 0.0,
         "initial scales must be positive");
  Assert(config.surrogate_hidden_multiplier >= 1,
         "surrogate hidden multiplier must be positive");
}

// Location seeds per tip: MDS coordinates directly in the Euclidean case,
// tangent coordinates at the origin (time component dropped) in the
// hyperbolic case, so that exp_origin(pad0(seed)) reproduces the embedding.
Eigen::MatrixXd LocationSeeds(const TrainConfig& config,
                              const DistanceMatrix& distances) {
  const int tip_count = static_cast<int>(distances.rows());
  if (config.space == Space::kEuclidean) {
    return MdsInit(distances, config.dim).rows;
  }
  const TipCoordinates coords = HmdsInit(distances, config.dim);
  const std::vector<double> origin = LorentzOrigin(config.dim);
  Eigen::MatrixXd seeds(tip_count, config.dim);
  std::vector<double> point(config.dim + 1);
  for (int tip = 0; tip < tip_count; ++tip) {
    for (int a = 0; a <= config.dim; ++a) {
      point[a] = coords.rows(tip, a);
    }
    const std::vector<double> tangent = LogMap(origin, point);
    for (int a = 0; a < config.dim; ++a) {
      seeds(tip, a) = tangent[a + 1];
    }
  }
  return seeds;
}

void FillTipParams(const TipDistSpec& spec, const Eigen::MatrixXd& seeds,
                   double log_scale, Eigen::VectorXd& params) {
  const int tip_count = static_cast<int>(seeds.rows());
  for (int tip = 0; tip < tip_count; ++tip) {
    const int base = tip * spec.ParamCount();
    for (int a = 0; a < spec.dim; ++a) {
      params[base + a] = seeds(tip, a);
    }
    for (int s = 0; s < spec.ScaleCount(); ++s) {
      params[base + spec.dim + s] = 0.0;
    }
    for (int a = 0; a < spec.dim; ++a) {
      const int slot =
          spec.cov == CovType::kDiag ? a : LowerIndex(a, a);
      params[base + spec.dim + slot] = log_scale;
    }
  }
}

bool FiniteGradients(const GradEstimate& grads) {
  if (!std::isfinite(grads.elbo)) {
    return false;
  }
  if (!grads.theta.allFinite() || !grads.psi.allFinite()) {
    return false;
  }
  if (grads.phi.size() > 0 && !grads.phi.allFinite()) {
    return false;
  }
  if (grads.chi.size() > 0 && !grads.chi.allFinite()) {
    return false;
  }
  return true;
}

}  // namespace

double AnnealedBeta(const TrainConfig& config, int64_t nle_count) {
  if (config.anneal_samples <= 0 || nle_count >= config.anneal_samples) {
    return 1.0;
  }
  const double fraction = static_cast<double>(nle_count) /
                          static_cast<double>(config.anneal_samples);
  return config.beta_start + (1.0 - config.beta_start) * fraction;
}

double DecayedLearningRate(const TrainConfig& config, int64_t step) {
  Assert(config.lr_decay_every > 0, "decay interval must be positive");
  const int64_t decays = step / config.lr_decay_every;
  return config.lr * std::pow(config.lr_decay, static_cast<double>(decays));
}

VariationalState InitializeState(const TrainConfig& config,
                                 const Alignment& alignment) {
  ValidateConfig(config, alignment);
  const TipDistSpec spec{config.space, config.cov, config.dim};
  VariationalState state(spec, alignment.taxa, config.link);
  const DistanceMatrix distances = HammingDistanceMatrix(alignment);
  const Eigen::MatrixXd seeds = LocationSeeds(config, distances);
  FillTipParams(spec, seeds, std::log(config.theta_scale_init),
                state.q_theta.Params());
  FillTipParams(spec, seeds, std::log(config.psi_scale_init),
                state.r_psi.Params());
  if (config.estimator == EstimatorKind::kLax ||
      config.estimator == EstimatorKind::kLooLax) {
    state.AddSurrogate(config.surrogate_hidden_multiplier, config.seed);
  }
  return state;
}

TrainResult Train(const TrainConfig& config, const Alignment& alignment) {
  VariationalState state = InitializeState(config, alignment);
  const PatternAlignment patterns = CompressSitePatterns(alignment);
  const PruningEngine pruning(patterns);
  Surrogate* surrogate = state.surrogate ? &*state.surrogate : nullptr;
  EstimatorEngine engine(pruning, state.q_theta, state.q_phi, state.r_psi,
                         state.link, surrogate);

  AdamOptimizer opt_theta;
  AdamOptimizer opt_phi;
  AdamOptimizer opt_psi;
  AdamOptimizer opt_chi;

  RunTrace trace;
  int consecutive_bad = 0;
  int64_t step = 0;
  const auto start = std::chrono::steady_clock::now();
  while (pruning.EvaluationCount() < config.nle_budget) {
    const double beta = AnnealedBeta(config, pruning.EvaluationCount());
    const double lr = DecayedLearningRate(config, step);
    const StepContext context{config.seed, static_cast<uint64_t>(step), beta,
                              config.threads};
    const GradEstimate grads = engine.Estimate(
        config.estimator, config.sample_count, context,
        config.lax_drop_entropy);
    if (FiniteGradients(grads)) {
      opt_theta.Step(state.q_theta.Params(), -grads.theta, lr);
      opt_phi.Step(state.q_phi.Params(), -grads.phi, lr);
      opt_psi.Step(state.r_psi.Params(), -grads.psi, lr);
      if (surrogate != nullptr) {
        // The surrogate head descends on the gradient-variance proxy.
        opt_chi.Step(surrogate->Params(), grads.chi, lr);
      }
      consecutive_bad = 0;
    } else {
      ++trace.skipped_steps;
      ++consecutive_bad;
      if (consecutive_bad >= 100) {
        throw TrainingError("aborting: 100 consecutive non-finite gradient "
                            "steps, last at step " +
                            std::to_string(step));
      }
    }
    ++step;
    if (step % config.trace_every == 0 ||
        pruning.EvaluationCount() >= config.nle_budget) {
      const auto now = std::chrono::steady_clock::now();
      const int64_t wall_ms =
          std::chrono::duration_cast<std::chrono::milliseconds>(now - start)
              .count();
      trace.rows.push_back(
          {step, pruning.EvaluationCount(), grads.elbo, beta, lr, wall_ms});
    }
  }
  trace.steps = step;
  trace.nle_count = pruning.EvaluationCount();
  trace.topology_samples =
      SampleTopologies(state, config.topology_sample_count, config.seed);
  trace.consensus = MajorityConsensus(trace.topology_samples);
  trace.mll = EstimateMll(state, pruning, config.mll_samples, config.mll_reps,
                          config.seed, config.threads);
  return TrainResult{std::move(state), std::move(trace)};
}

MllReport EstimateMll(VariationalState& state, const PruningEngine& pruning,
                      int sample_count, int reps, uint64_t seed, int threads) {
  Assert(sample_count >= 1, "importance sample count must be positive");
  Assert(reps >= 1, "repetition count must be positive");
  Surrogate* surrogate = state.surrogate ? &*state.surrogate : nullptr;
  EstimatorEngine engine(pruning, state.q_theta, state.q_phi, state.r_psi,
                         state.link, surrogate);
  std::vector<double> values(reps);
  for (int rep = 0; rep < reps; ++rep) {
    const uint64_t sub_seed =
        CounterRng(seed, static_cast<uint64_t>(rep), 0,
                   RngStream::kMllImportance)
            .NextU64();
    const StepContext context{sub_seed, 0, 1.0, threads};
    values[rep] = engine.IwElbo(sample_count, context);
  }
  double sum = 0.0;
  for (double value : values) {
    sum += value;
  }
  const double mean = sum / reps;
  double sq_sum = 0.0;
  for (double value : values) {
    sq_sum += (value - mean) * (value - mean);
  }
  const double std_dev = reps > 1 ? std::sqrt(sq_sum / (reps - 1)) : 0.0;
  return MllReport{mean, std_dev, reps};
}

std::vector<Topology> SampleTopologies(const VariationalState& state,
                                       int count, uint64_t seed) {
  Assert(count >= 1, "topology sample count must be positive");
  const int noise_dim = state.TipCount() * state.spec.dim;
  std::vector<Topology> result;
  result.reserve(count);
  Eigen::VectorXd eps(noise_dim);
  for (int i = 0; i < count; ++i) {
    CounterRng rng(seed, 0, static_cast<uint64_t>(i),
                   RngStream::kTopologySample);
    for (int a = 0; a < noise_dim; ++a) {
      eps[a] = rng.NextGaussian();
    }
    result.push_back(Link(state.q_theta.Sample(eps), state.link));
  }
  return result;
}

std::string TraceCsv(const std::vector<TraceRow>& rows) {
  std::string out = "step,nle,elbo,beta,lr,wall_ms\n";
  char buffer[192];
  for (const TraceRow& row : rows) {
    std::snprintf(buffer, sizeof buffer, "%lld,%lld,%.17g,%.17g,%.17g,%lld\n",
                  static_cast<long long>(row.step),
                  static_cast<long long>(row.nle), row.elbo, row.beta, row.lr,
                  static_cast<long long>(row.wall_ms));
    out += buffer;
  }
  return out;
}

}  // namespace phylogeo
