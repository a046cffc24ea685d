// Copyright 2026 phylogeo project contributors.
// SPDX-License-Identifier: Apache-2.0

#include "phylogeo/estimators.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>
#include <utility>

#include "phylogeo/common.hpp"
#include "phylogeo/rng.hpp"

namespace phylogeo {

EstimatorKind ParseEstimatorKind(const std::string& name) {
  if (name == "plain") {
    return EstimatorKind::kPlain;
  }
  if (name == "loo") {
    return EstimatorKind::kLoo;
  }
  if (name == "lax") {
    return EstimatorKind::kLax;
  }
  if (name == "loo_lax") {
    return EstimatorKind::kLooLax;
  }
  if (name == "iw") {
    return EstimatorKind::kIw;
  }
  if (name == "vimco") {
    return EstimatorKind::kVimco;
  }
  Failwith("unknown estimator: " + name);
}

std::string EstimatorKindName(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::kPlain:
      return "plain";
    case EstimatorKind::kLoo:
      return "loo";
    case EstimatorKind::kLax:
      return "lax";
    case EstimatorKind::kLooLax:
      return "loo_lax";
    case EstimatorKind::kIw:
      return "iw";
    case EstimatorKind::kVimco:
      return "vimco";
  }
  Failwith("unreachable estimator kind");
}

bool NeedsMultipleSamples(EstimatorKind kind) {
  return kind == EstimatorKind::kLoo || kind == EstimatorKind::kLooLax ||
         kind == EstimatorKind::kVimco;
}

IwWeightSet ComputeIwWeights(const std::vector<double>& ln_f_prime) {
  const int count = static_cast<int>(ln_f_prime.size());
  Assert(count >= 1, "importance weights need at least one sample");
  const double top = *std::max_element(ln_f_prime.begin(), ln_f_prime.end());
  std::vector<double> shifted(count);
  double total = 0.0;
  for (int k = 0; k < count; ++k) {
    shifted[k] = std::exp(ln_f_prime[k] - top);
    total += shifted[k];
  }
  IwWeightSet out;
  out.weights.resize(count);
  int argmax = 0;
  for (int k = 0; k < count; ++k) {
    out.weights[k] = shifted[k] / total;
    if (out.weights[k] > out.weights[argmax]) {
      argmax = k;
    }
  }
  // Softmax rounding can leave the sum one ulp off; pin it by assigning the
  // largest weight its complement so the weights sum to 1 exactly.
  double others = 0.0;
  for (int k = 0; k < count; ++k) {
    if (k != argmax) {
      others += out.weights[k];
    }
  }
  out.weights[argmax] = 1.0 - others;
  out.bound = top + std::log(total) - std::log(static_cast<double>(count));
  return out;
}

std::vector<double> VimcoHoldouts(const std::vector<double>& ln_f_prime) {
  const int count = static_cast<int>(ln_f_prime.size());
  Assert(count >= 2, "holdout bounds need at least two samples");
  const double top = *std::max_element(ln_f_prime.begin(), ln_f_prime.end());
  std::vector<double> shifted(count);
  double total_shifted = 0.0;
  double total_ln = 0.0;
  for (int k = 0; k < count; ++k) {
    shifted[k] = std::exp(ln_f_prime[k] - top);
    total_shifted += shifted[k];
    total_ln += ln_f_prime[k];
  }
  std::vector<double> out(count);
  for (int k = 0; k < count; ++k) {
    // The k-th value is imputed by the geometric mean of the others.
    const double held_ln = (total_ln - ln_f_prime[k]) / (count - 1);
    const double mix = total_shifted - shifted[k] + std::exp(held_ln - top);
    out[k] = top + std::log(mix) - std::log(static_cast<double>(count));
  }
  return out;
}

EstimatorEngine::EstimatorEngine(const PruningEngine& likelihood,
                                 TipDistributionSet& q_theta,
                                 SplitBranchModel& q_phi,
                                 TipDistributionSet& r_psi, LinkMethod link,
                                 Surrogate* surrogate)
    : likelihood_(&likelihood),
      q_theta_(&q_theta),
      q_phi_(&q_phi),
      r_psi_(&r_psi),
      link_(link),
      surrogate_(surrogate) {
  Assert(q_theta.TipCount() == static_cast<int>(q_phi.TipCount()) &&
             q_theta.TipCount() == r_psi.TipCount(),
         "variational families disagree on the tip count");
  Assert(q_theta.Spec() == r_psi.Spec(),
         "sampler and encoder must share the coordinate family");
  if (surrogate != nullptr) {
    Assert(surrogate->InputDim() == q_theta.TipCount() * q_theta.Spec().dim,
           "surrogate input dimension does not match the tip coordinates");
  }
}

void EstimatorEngine::DrawNoise(const StepContext& context, int k,
                                Eigen::VectorXd& eps_z,
                                Eigen::VectorXd& eps_b) const {
  const int tip_count = q_theta_->TipCount();
  eps_z.resize(tip_count * q_theta_->Spec().dim);
  CounterRng tip_rng(context.seed, context.step, static_cast<uint64_t>(k),
                     RngStream::kTipNoise);
  for (int i = 0; i < eps_z.size(); ++i) {
    eps_z[i] = tip_rng.NextGaussian();
  }
  eps_b.resize(2 * tip_count - 3);
  CounterRng branch_rng(context.seed, context.step, static_cast<uint64_t>(k),
                        RngStream::kBranchNoise);
  for (int e = 0; e < eps_b.size(); ++e) {
    eps_b[e] = branch_rng.NextGaussian();
  }
}

SampleEval EstimatorEngine::PrepareSample(const Eigen::VectorXd& eps_z,
                                          const Eigen::VectorXd& eps_b,
                                          double beta) {
  TipCoordinates z = q_theta_->Sample(eps_z);
  Topology tau = phylogeo::Link(z, link_);
  Assert(static_cast<size_t>(eps_b.size()) == tau.Edges().size(),
         "branch noise dimension does not match the edge count");
  std::vector<int> slots = q_phi_->ResolveEdges(tau);
  BranchLengths lengths = q_phi_->SampleBranches(slots, eps_b);
  return SampleEval{eps_z,
                    std::move(z),
                    std::move(tau),
                    std::move(slots),
                    eps_b,
                    std::move(lengths),
                    0.0,
                    {},
                    0.0,
                    0.0,
                    0.0,
                    0.0,
                    0.0,
                    {},
                    beta};
}

void EstimatorEngine::FinishSample(SampleEval& sample,
                                   bool with_gradients) const {
  if (with_gradients) {
    auto [value, gradients] =
        likelihood_->LogLikelihoodWithGradients(sample.tau, sample.lengths);
    sample.log_likelihood = value;
    sample.likelihood_db = std::move(gradients);
    sample.df_db.resize(sample.likelihood_db.size());
    for (size_t e = 0; e < sample.df_db.size(); ++e) {
      // Slope of the annealed likelihood plus the Exp(10) branch prior.
      sample.df_db[e] = sample.beta * sample.likelihood_db[e] - 10.0;
    }
  } else {
    sample.log_likelihood =
        likelihood_->LogLikelihood(sample.tau, sample.lengths);
  }
  sample.log_prior = LogPrior(sample.tau, sample.lengths);
  sample.log_q_phi = q_phi_->LogDensity(sample.slots, sample.lengths);
  sample.log_r_psi = r_psi_->LogDensity(sample.z);
  sample.log_q_theta = q_theta_->SelfLogDensity(sample.eps_z);
  sample.f = sample.beta * sample.log_likelihood + sample.log_prior +
             sample.log_r_psi - sample.log_q_phi;
}

SampleEval EstimatorEngine::DrawSample(const StepContext& context, int k,
                                       bool with_gradients) {
  Eigen::VectorXd eps_z;
  Eigen::VectorXd eps_b;
  DrawNoise(context, k, eps_z, eps_b);
  return EvaluateSample(eps_z, eps_b, context.beta, with_gradients);
}

SampleEval EstimatorEngine::EvaluateSample(const Eigen::VectorXd& eps_z,
                                           const Eigen::VectorXd& eps_b,
                                           double beta, bool with_gradients) {
  SampleEval sample = PrepareSample(eps_z, eps_b, beta);
  FinishSample(sample, with_gradients);
  return sample;
}

std::vector<SampleEval> EstimatorEngine::GatherSamples(
    const StepContext& context, int count, bool with_gradients) {
  Assert(count >= 1, "sample count must be positive");
  std::vector<SampleEval> samples;
  samples.reserve(count);
  // Split resolution mutates shared state, so decoding runs in sample order.
  for (int k = 0; k < count; ++k) {
    Eigen::VectorXd eps_z;
    Eigen::VectorXd eps_b;
    DrawNoise(context, k, eps_z, eps_b);
    samples.push_back(PrepareSample(eps_z, eps_b, context.beta));
  }
  const int threads = std::min(std::max(1, context.threads), count);
  if (threads == 1) {
    for (SampleEval& sample : samples) {
      FinishSample(sample, with_gradients);
    }
  } else {
    // Samples are finished independently and in place, so the result is
    // identical for any thread count.
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        for (int k = next.fetch_add(1); k < count; k = next.fetch_add(1)) {
          FinishSample(samples[k], with_gradients);
        }
      });
    }
    for (std::thread& worker : pool) {
      worker.join();
    }
  }
  return samples;
}

GradEstimate EstimatorEngine::Assemble(EstimatorKind kind,
                                       const std::vector<SampleEval>& samples,
                                       bool lax_drop_entropy) const {
  const int count = static_cast<int>(samples.size());
  Assert(count >= 1, "gradient assembly needs at least one sample");
  Assert(!NeedsMultipleSamples(kind) || count >= 2,
         EstimatorKindName(kind) + " needs at least two samples per step");
  const bool uses_surrogate =
      kind == EstimatorKind::kLax || kind == EstimatorKind::kLooLax;
  Assert(!uses_surrogate || surrogate_ != nullptr,
         EstimatorKindName(kind) + " requires a surrogate network");
  const int theta_count = q_theta_->ParamCount();
  const int tip_count = q_theta_->TipCount();
  const int dim = q_theta_->Spec().dim;
  const int tip_params = q_theta_->Spec().ParamCount();

  GradEstimate out;
  out.theta = Eigen::VectorXd::Zero(theta_count);
  out.phi = Eigen::VectorXd::Zero(2 * static_cast<int>(q_phi_->SlotCount()));
  out.psi = Eigen::VectorXd::Zero(r_psi_->ParamCount());
  out.f_values.reserve(count);
  std::vector<double> ln_f_prime(count);
  double f_total = 0.0;
  for (int k = 0; k < count; ++k) {
    Assert(!samples[k].df_db.empty(),
           "gradient assembly needs samples evaluated with gradients");
    out.f_values.push_back(samples[k].f);
    ln_f_prime[k] = samples[k].BoundValue();
    f_total += samples[k].f;
    out.elbo += ln_f_prime[k] / count;
  }

  std::vector<Eigen::VectorXd> scores(count);
  for (int k = 0; k < count; ++k) {
    scores[k] = Eigen::VectorXd::Zero(theta_count);
    q_theta_->ScoreAdd(samples[k].z, 1.0, scores[k]);
  }
  std::vector<Eigen::VectorXd> features(count);
  std::vector<Eigen::VectorXd> feature_grads(count);
  std::vector<std::vector<Eigen::MatrixXd>> jacobians(count);
  std::vector<double> surrogate_values(count, 0.0);
  if (uses_surrogate) {
    for (int k = 0; k < count; ++k) {
      q_theta_->SurrogateInput(samples[k].eps_z, features[k], jacobians[k]);
      feature_grads[k] = surrogate_->InputGradient(features[k]);
      surrogate_values[k] = surrogate_->Value(features[k]);
    }
  }

  // Score weights multiply the fixed-z score of each sample; sample weights
  // multiply its reparameterized phi chain and psi score.
  std::vector<double> score_weight(count);
  std::vector<double> sample_weight(count);
  bool entropy_term = true;
  const double inv = 1.0 / count;
  switch (kind) {
    case EstimatorKind::kPlain:
      for (int k = 0; k < count; ++k) {
        score_weight[k] = samples[k].f * inv;
        sample_weight[k] = inv;
      }
      break;
    case EstimatorKind::kLoo:
      for (int k = 0; k < count; ++k) {
        const double held = (f_total - samples[k].f) / (count - 1);
        score_weight[k] = (samples[k].f - held) * inv;
        sample_weight[k] = inv;
      }
      break;
    case EstimatorKind::kLax:
      for (int k = 0; k < count; ++k) {
        score_weight[k] = (samples[k].f - surrogate_values[k]) * inv;
        sample_weight[k] = inv;
      }
      entropy_term = !lax_drop_entropy;
      break;
    case EstimatorKind::kLooLax:
      for (int k = 0; k < count; ++k) {
        const double held = (f_total - samples[k].f) / (count - 1);
        score_weight[k] = (samples[k].f - held - surrogate_values[k]) * inv;
        sample_weight[k] = inv;
      }
      entropy_term = !lax_drop_entropy;
      break;
    case EstimatorKind::kIw: {
      const IwWeightSet iw = ComputeIwWeights(ln_f_prime);
      for (int k = 0; k < count; ++k) {
        score_weight[k] = iw.bound - iw.weights[k];
        sample_weight[k] = iw.weights[k];
      }
      entropy_term = false;
      break;
    }
    case EstimatorKind::kVimco: {
      const IwWeightSet iw = ComputeIwWeights(ln_f_prime);
      const std::vector<double> holdouts = VimcoHoldouts(ln_f_prime);
      for (int k = 0; k < count; ++k) {
        score_weight[k] = iw.bound - holdouts[k] - iw.weights[k];
        sample_weight[k] = iw.weights[k];
      }
      entropy_term = false;
      break;
    }
  }

  for (int k = 0; k < count; ++k) {
    out.theta += score_weight[k] * scores[k];
    if (uses_surrogate) {
      // Reparameterized surrogate term: d s(h_theta(eps)) / d theta.
      for (int tip = 0; tip < tip_count; ++tip) {
        out.theta.segment(tip * tip_params, tip_params) +=
            sample_weight[k] * jacobians[k][tip].transpose() *
            feature_grads[k].segment(tip * dim, dim);
      }
    }
    if (entropy_term) {
      q_theta_->PathwiseAdd(samples[k].eps_z, -inv, out.theta);
    }
    q_phi_->ChainGradientAdd(samples[k].slots, samples[k].lengths,
                             samples[k].eps_b, samples[k].df_db,
                             sample_weight[k], out.phi);
    r_psi_->ScoreAdd(samples[k].z, sample_weight[k], out.psi);
  }
  out.theta_sq_mean = out.theta.squaredNorm() / theta_count;

  if (uses_surrogate) {
    // Gradient of the mean squared theta gradient in the surrogate
    // parameters: at fixed noise this is an exact derivative, with one term
    // from each score weight and one from the reparameterized surrogate term.
    out.chi = Eigen::VectorXd::Zero(surrogate_->ParamCount());
    const double scale = 2.0 / (static_cast<double>(theta_count) * count);
    Eigen::VectorXd back(tip_count * dim);
    for (int k = 0; k < count; ++k) {
      surrogate_->ValueParamGradientAdd(
          features[k], -scale * out.theta.dot(scores[k]), out.chi);
      for (int tip = 0; tip < tip_count; ++tip) {
        back.segment(tip * dim, dim) =
            jacobians[k][tip] *
            out.theta.segment(tip * tip_params, tip_params);
      }
      surrogate_->MixedParamGradientAdd(features[k], back, scale, out.chi);
    }
  }
  return out;
}

GradEstimate EstimatorEngine::Estimate(EstimatorKind kind, int sample_count,
                                       const StepContext& context,
                                       bool lax_drop_entropy) {
  const std::vector<SampleEval> samples =
      GatherSamples(context, sample_count, true);
  return Assemble(kind, samples, lax_drop_entropy);
}

double EstimatorEngine::ElboEstimate(int sample_count,
                                     const StepContext& context) {
  const std::vector<SampleEval> samples =
      GatherSamples(context, sample_count, false);
  double total = 0.0;
  for (const SampleEval& sample : samples) {
    total += sample.BoundValue();
  }
  return total / sample_count;
}

double EstimatorEngine::IwElbo(int sample_count, const StepContext& context) {
  const std::vector<SampleEval> samples =
      GatherSamples(context, sample_count, false);
  std::vector<double> ln_f_prime;
  ln_f_prime.reserve(samples.size());
  for (const SampleEval& sample : samples) {
    ln_f_prime.push_back(sample.BoundValue());
  }
  return ComputeIwWeights(ln_f_prime).bound;
}

}  // namespace phylogeo
