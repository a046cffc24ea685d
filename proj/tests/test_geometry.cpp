// Copyright 2026 phylogeo project contributors.
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "phylogeo/lorentz.hpp"
#include "phylogeo/tip_distribution.hpp"

using namespace phylogeo;

namespace {

std::vector<double> RandomSpatial(int dim, std::mt19937_64& rng, double scale) {
  std::normal_distribution<double> normal(0.0, scale);
  std::vector<double> v(dim);
  for (double& component : v) component = normal(rng);
  return v;
}

std::vector<double> RandomPoint(int dim, std::mt19937_64& rng, double scale) {
  return ExpMap(LorentzOrigin(dim), PadZero(RandomSpatial(dim, rng, scale)));
}

// Projects an arbitrary ambient vector onto the tangent space at mu.
std::vector<double> RandomTangent(const std::vector<double>& mu,
                                  std::mt19937_64& rng, double scale) {
  std::vector<double> w =
      RandomSpatial(static_cast<int>(mu.size()), rng, scale);
  const double overlap = LorentzInner(w, mu);
  for (size_t j = 0; j < w.size(); ++j) {
    w[j] += overlap * mu[j];
  }
  return w;
}

double MaxAbsDiff(const std::vector<double>& a, const std::vector<double>& b) {
  double worst = 0.0;
  for (size_t j = 0; j < a.size(); ++j) {
    worst = std::max(worst, std::abs(a[j] - b[j]));
  }
  return worst;
}

std::vector<double> RandomParams(const TipDistSpec& spec,
                                 std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 0.7);
  std::vector<double> p(spec.ParamCount());
  for (int j = 0; j < spec.dim; ++j) p[j] = normal(rng);
  for (int a = 0; a < spec.ScaleCount(); ++a) {
    p[spec.dim + a] = 0.4 * normal(rng);
  }
  if (spec.cov == CovType::kDiag) return p;
  // Keep log-diagonals moderate so full-Cholesky test factors stay
  // well-conditioned for finite differences.
  for (int i = 0; i < spec.dim; ++i) {
    p[spec.dim + LowerIndex(i, i)] = 0.3 * normal(rng);
  }
  return p;
}

}  // namespace

TEST_CASE("Lorentz inner product") {
  const std::vector<double> origin = LorentzOrigin(3);
  CHECK(LorentzInner(origin, origin) == doctest::Approx(-1.0));
  const std::vector<double> e1 = {0.0, 1.0, 0.0, 0.0};
  CHECK(LorentzInner(e1, e1) == doctest::Approx(1.0));

  std::mt19937_64 rng(1);
  for (int rep = 0; rep < 20; ++rep) {
    const auto u = RandomSpatial(4, rng, 1.0);
    const auto v = RandomSpatial(4, rng, 1.0);
    double direct = -u[0] * v[0];
    for (int j = 1; j < 4; ++j) direct += u[j] * v[j];
    CHECK(LorentzInner(u, v) == doctest::Approx(direct));
  }
}

TEST_CASE("Lorentz distance") {
  std::mt19937_64 rng(2);
  for (int dim : {1, 2, 3, 4}) {
    const auto mu = RandomPoint(dim, rng, 0.8);
    CHECK(LorentzDistance(mu, mu) == 0.0);
    for (int rep = 0; rep < 10; ++rep) {
      const auto nu = RandomPoint(dim, rng, 0.8);
      CHECK(LorentzDistance(mu, nu) == doctest::Approx(LorentzDistance(nu, mu)));
      CHECK(LorentzDistance(mu, nu) >= 0.0);
    }
    // Geodesic property at the origin: distance equals tangent norm.
    const auto origin = LorentzOrigin(dim);
    const auto u = PadZero(RandomSpatial(dim, rng, 1.2));
    const double norm = std::sqrt(LorentzInner(u, u));
    CHECK(LorentzDistance(origin, ExpMap(origin, u)) ==
          doctest::Approx(norm).epsilon(1e-9));
  }
}

TEST_CASE("exp and log maps are inverse up to 1e-9") {
  std::mt19937_64 rng(3);
  for (int dim : {1, 2, 3, 5}) {
    for (int rep = 0; rep < 50; ++rep) {
      const auto mu = RandomPoint(dim, rng, 0.7);
      auto u = RandomTangent(mu, rng, 1.0);
      // Rescale so tangent norms sweep (0, 5].
      const double target = 5.0 * (rep + 1) / 50.0;
      const double norm = std::sqrt(std::max(LorentzInner(u, u), 1e-300));
      for (auto& c : u) c *= target / norm;

      const auto point = ExpMap(mu, u);
      CHECK(std::abs(LorentzInner(point, point) + 1.0) < 1e-9);
      const auto back = LogMap(mu, point);
      CHECK(MaxAbsDiff(back, u) < 1e-9 * std::max(1.0, target));
      CHECK(std::abs(LorentzInner(back, mu)) < 1e-9);
      // Tangent norm equals geodesic distance.
      CHECK(std::sqrt(LorentzInner(back, back)) ==
            doctest::Approx(LorentzDistance(mu, point)).epsilon(1e-9));
    }
    const auto mu = RandomPoint(dim, rng, 0.5);
    const std::vector<double> zero(dim + 1, 0.0);
    CHECK(MaxAbsDiff(ExpMap(mu, zero), mu) < 1e-12);
    CHECK(MaxAbsDiff(LogMap(mu, mu), zero) < 1e-12);
  }
}

TEST_CASE("parallel transport is an isometry") {
  std::mt19937_64 rng(4);
  for (int dim : {1, 2, 3}) {
    for (int rep = 0; rep < 30; ++rep) {
      const auto nu = RandomPoint(dim, rng, 0.8);
      const auto mu = RandomPoint(dim, rng, 0.8);
      const auto v = RandomTangent(nu, rng, 1.0);
      const auto w = RandomTangent(nu, rng, 1.0);
      const auto tv = ParallelTransport(nu, mu, v);
      const auto tw = ParallelTransport(nu, mu, w);
      // Transported vectors are tangent at the target and keep inner products.
      CHECK(std::abs(LorentzInner(tv, mu)) < 1e-9);
      CHECK(LorentzInner(tv, tw) ==
            doctest::Approx(LorentzInner(v, w)).epsilon(1e-9));
      const auto round_trip = ParallelTransport(mu, nu, tv);
      CHECK(MaxAbsDiff(round_trip, v) < 1e-9);
      CHECK(MaxAbsDiff(ParallelTransport(nu, nu, v), v) < 1e-12);
    }
  }
}

TEST_CASE("hyperboloid constraint survives 1e4 chained operations") {
  std::mt19937_64 rng(5);
  const int dim = 3;
  std::vector<double> point = RandomPoint(dim, rng, 0.5);
  std::vector<double> carried = RandomTangent(point, rng, 0.5);
  // Hop between random waypoints within a bounded region; every hop chains a
  // log map, an exp map, and a parallel transport on the running state.
  int ops = 0;
  while (ops < 10000) {
    const auto waypoint = RandomPoint(dim, rng, 0.8);
    const auto u = LogMap(point, waypoint);
    ++ops;
    const auto next = ExpMap(point, u);
    ++ops;
    carried = ParallelTransport(point, next, carried);
    ++ops;
    point = next;
    CHECK(std::abs(LorentzInner(point, point) + 1.0) < 1e-9);
  }
  CHECK(std::abs(LorentzInner(carried, point)) < 1e-6);
}

TEST_CASE("Lorentzian centroid") {
  std::mt19937_64 rng(6);
  const auto mu = RandomPoint(2, rng, 0.8);
  CHECK(MaxAbsDiff(LorentzianCentroid({mu}, {1.0}), mu) < 1e-12);
  CHECK(MaxAbsDiff(LorentzianCentroid({mu, mu}, {0.4, 2.0}), mu) < 1e-12);
  // A pair symmetric about the time axis has its centroid on the axis.
  const std::vector<double> left = ExpMap(LorentzOrigin(2), {0.0, -0.9, 0.3});
  const std::vector<double> right = ExpMap(LorentzOrigin(2), {0.0, 0.9, -0.3});
  const auto center = LorentzianCentroid({left, right}, {1.0, 1.0});
  CHECK(std::abs(center[1]) < 1e-12);
  CHECK(std::abs(center[2]) < 1e-12);
  CHECK(center[0] == doctest::Approx(1.0));
}

TEST_CASE("Poincare projection") {
  const auto origin = LorentzOrigin(3);
  const auto projected_origin = PoincareProject(origin);
  for (double c : projected_origin) CHECK(c == 0.0);

  std::mt19937_64 rng(7);
  for (int rep = 0; rep < 30; ++rep) {
    const auto z = RandomPoint(3, rng, 1.5);
    const auto ball = PoincareProject(z);
    double norm_sq = 0.0;
    for (double c : ball) norm_sq += c * c;
    CHECK(norm_sq < 1.0);
    // Closed-form inverse recovers the hyperboloid point.
    const double denom = 1.0 - norm_sq;
    std::vector<double> back(4);
    back[0] = (1.0 + norm_sq) / denom;
    for (int k = 0; k < 3; ++k) back[k + 1] = 2.0 * ball[k] / denom;
    CHECK(MaxAbsDiff(back, z) < 1e-9);
  }
}

TEST_CASE("wrapped normal sampling") {
  std::mt19937_64 rng(8);
  const TipDistSpec spec{Space::kHyperbolic, CovType::kDiag, 3};
  const auto p = RandomParams(spec, rng);
  const std::vector<double> zero_eps(spec.dim, 0.0);
  const auto at_mean = SampleTip(spec, p.data(), zero_eps.data());
  const auto mu =
      ExpMap(LorentzOrigin(3), PadZero(std::vector<double>(p.begin(), p.begin() + 3)));
  CHECK(MaxAbsDiff(at_mean, mu) < 1e-12);

  SUBCASE("transport at the origin is the identity") {
    std::vector<double> origin_params(spec.ParamCount(), 0.0);
    origin_params[3] = -0.2;
    origin_params[4] = 0.1;
    origin_params[5] = 0.3;
    const std::vector<double> eps = {0.4, -1.1, 0.7};
    const auto z = SampleTip(spec, origin_params.data(), eps.data());
    const auto direct = ExpMap(
        LorentzOrigin(3),
        PadZero(ScaleMultiply(CovType::kDiag, 3, origin_params.data() + 3,
                              eps.data())));
    CHECK(MaxAbsDiff(z, direct) < 1e-12);
  }

  SUBCASE("Monte Carlo centroid of a tight distribution sits at mu") {
    TipDistSpec tight{Space::kHyperbolic, CovType::kDiag, 2};
    std::vector<double> params = {0.6, -0.4, std::log(0.05), std::log(0.05)};
    const auto location = ExpMap(LorentzOrigin(2), PadZero(std::vector<double>{0.6, -0.4}));
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<std::vector<double>> samples;
    samples.reserve(100000);
    for (int s = 0; s < 100000; ++s) {
      const std::vector<double> eps = {normal(rng), normal(rng)};
      samples.push_back(SampleTip(tight, params.data(), eps.data()));
    }
    const auto centroid =
        LorentzianCentroid(samples, std::vector<double>(samples.size(), 1.0));
    CHECK(LorentzDistance(centroid, location) < 2e-3);
  }
}

TEST_CASE("wrapped normal log density") {
  SUBCASE("standard value at the origin") {
    for (int dim : {1, 2, 3}) {
      const TipDistSpec spec{Space::kHyperbolic, CovType::kDiag, dim};
      std::vector<double> p(spec.ParamCount(), 0.0);
      const auto origin = LorentzOrigin(dim);
      CHECK(TipLogDensity(spec, p.data(), origin.data()) ==
            doctest::Approx(-0.5 * dim * std::log(2.0 * M_PI)).epsilon(1e-12));
    }
  }

  SUBCASE("self log density matches density at the sampled point") {
    std::mt19937_64 rng(9);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (const CovType cov : {CovType::kDiag, CovType::kFull}) {
      for (int dim : {1, 2, 3}) {
        const TipDistSpec spec{Space::kHyperbolic, cov, dim};
        for (int rep = 0; rep < 25; ++rep) {
          const auto p = RandomParams(spec, rng);
          std::vector<double> eps(dim);
          for (double& e : eps) e = normal(rng);
          const auto z = SampleTip(spec, p.data(), eps.data());
          const double direct = TipLogDensity(spec, p.data(), z.data());
          const double self = TipSelfLogDensity(spec, p.data(), eps.data());
          CHECK(direct == doctest::Approx(self).epsilon(1e-8));
        }
      }
    }
  }

  SUBCASE("importance-sampled normalization at d=2") {
    std::mt19937_64 rng(10);
    std::normal_distribution<double> normal(0.0, 1.0);
    const TipDistSpec spec{Space::kHyperbolic, CovType::kFull, 2};
    // Target with correlated full covariance away from the origin.
    std::vector<double> target = {0.5, -0.3, std::log(0.9), 0.4, std::log(0.7)};
    // Broader proposal centered at the same location.
    std::vector<double> proposal = {0.5, -0.3, std::log(1.6), 0.0, std::log(1.6)};
    const int samples = 100000;
    double sum = 0.0, sum_sq = 0.0;
    for (int s = 0; s < samples; ++s) {
      const std::vector<double> eps = {normal(rng), normal(rng)};
      const auto z = SampleTip(spec, proposal.data(), eps.data());
      const double ratio =
          std::exp(TipLogDensity(spec, target.data(), z.data()) -
                   TipLogDensity(spec, proposal.data(), z.data()));
      sum += ratio;
      sum_sq += ratio * ratio;
    }
    const double mean = sum / samples;
    const double variance = (sum_sq / samples - mean * mean) / samples;
    const double stderr_mc = std::sqrt(variance);
    CHECK(std::abs(mean - 1.0) < 3.0 * stderr_mc);
    CHECK(stderr_mc < 0.02);
  }

  SUBCASE("d=1 sampling matches the density via KS on the residual") {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> normal(0.0, 1.0);
    const TipDistSpec spec{Space::kHyperbolic, CovType::kDiag, 1};
    const std::vector<double> p = {0.8, std::log(0.6)};
    const int n = 4000;
    std::vector<double> residuals;
    residuals.reserve(n);
    const auto mu = ExpMap(LorentzOrigin(1), PadZero(std::vector<double>{0.8}));
    for (int s = 0; s < n; ++s) {
      const std::vector<double> eps = {normal(rng)};
      const auto z = SampleTip(spec, p.data(), eps.data());
      const auto u = ParallelTransport(mu, LorentzOrigin(1), LogMap(mu, z));
      residuals.push_back(u[1]);
    }
    std::sort(residuals.begin(), residuals.end());
    double ks = 0.0;
    for (int i = 0; i < n; ++i) {
      const double cdf = 0.5 * std::erfc(-residuals[i] / (0.6 * std::sqrt(2.0)));
      ks = std::max(ks, std::abs(cdf - (i + 1.0) / n));
      ks = std::max(ks, std::abs(cdf - static_cast<double>(i) / n));
    }
    CHECK(ks < 1.63 / std::sqrt(static_cast<double>(n)));  // alpha = 0.01
  }
}

TEST_CASE("Gaussian and wrapped normal parameter gradients match finite differences") {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double h = 1e-5;
  for (const Space space : {Space::kEuclidean, Space::kHyperbolic}) {
    for (const CovType cov : {CovType::kDiag, CovType::kFull}) {
      int checked = 0;
      int config = 0;
      while (checked < 100) {
        const int dim = 1 + (config % 3);
        ++config;
        const TipDistSpec spec{space, cov, dim};
        const auto p = RandomParams(spec, rng);
        // Evaluate at a z drawn from a nearby distribution.
        std::vector<double> eps(dim);
        for (double& e : eps) e = normal(rng);
        auto shifted = p;
        shifted[0] += 0.3;
        const auto z = SampleTip(spec, shifted.data(), eps.data());

        std::vector<double> grad(spec.ParamCount(), 0.0);
        TipScoreAdd(spec, p.data(), z.data(), 1.0, grad.data());
        for (int a = 0; a < spec.ParamCount(); ++a) {
          auto plus = p;
          auto minus = p;
          plus[a] += h;
          minus[a] -= h;
          const double fd = (TipLogDensity(spec, plus.data(), z.data()) -
                             TipLogDensity(spec, minus.data(), z.data())) /
                            (2.0 * h);
          const double scale_ref =
              std::max({std::abs(fd), std::abs(grad[a]), 1e-4});
          CHECK(std::abs(grad[a] - fd) / scale_ref < 1e-4);
        }
        ++checked;
      }
    }
  }
}

TEST_CASE("pathwise density gradient equals total finite difference") {
  std::mt19937_64 rng(13);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double h = 1e-5;
  for (const Space space : {Space::kEuclidean, Space::kHyperbolic}) {
    for (const CovType cov : {CovType::kDiag, CovType::kFull}) {
      for (int dim : {1, 2, 3}) {
        const TipDistSpec spec{space, cov, dim};
        for (int rep = 0; rep < 10; ++rep) {
          const auto p = RandomParams(spec, rng);
          std::vector<double> eps(dim);
          for (double& e : eps) e = normal(rng);
          std::vector<double> grad(spec.ParamCount(), 0.0);
          TipPathwiseAdd(spec, p.data(), eps.data(), 1.0, grad.data());
          for (int a = 0; a < spec.ParamCount(); ++a) {
            auto plus = p;
            auto minus = p;
            plus[a] += h;
            minus[a] -= h;
            const double fd =
                (TipSelfLogDensity(spec, plus.data(), eps.data()) -
                 TipSelfLogDensity(spec, minus.data(), eps.data())) /
                (2.0 * h);
            CHECK(grad[a] == doctest::Approx(fd).epsilon(5e-4));
          }
          // Location components are identically zero.
          for (int j = 0; j < dim; ++j) CHECK(grad[j] == 0.0);
        }
      }
    }
  }
}

TEST_CASE("wrapped normal gradient special cases") {
  SUBCASE("scale gradient at the symmetric point reduces to the Gaussian form") {
    // z = mu = origin: residual 0, so each diagonal scale score is -1 and
    // off-diagonals vanish, as in the Euclidean case at its mean.
    const TipDistSpec spec{Space::kHyperbolic, CovType::kFull, 3};
    std::vector<double> p(spec.ParamCount(), 0.0);
    p[spec.dim + LowerIndex(1, 0)] = 0.4;
    const auto origin = LorentzOrigin(3);
    std::vector<double> grad(spec.ParamCount(), 0.0);
    TipScoreAdd(spec, p.data(), origin.data(), 1.0, grad.data());
    for (int i = 0; i < 3; ++i) {
      CHECK(grad[spec.dim + LowerIndex(i, i)] == doctest::Approx(-1.0));
      for (int j = 0; j < i; ++j) {
        CHECK(grad[spec.dim + LowerIndex(i, j)] == doctest::Approx(0.0));
      }
    }
  }
  SUBCASE("location gradient vanishes at z = mu with isotropic scale") {
    const TipDistSpec spec{Space::kHyperbolic, CovType::kDiag, 2};
    std::vector<double> p = {0.7, -0.2, std::log(0.5), std::log(0.5)};
    const auto mu = ExpMap(LorentzOrigin(2), PadZero(std::vector<double>{0.7, -0.2}));
    std::vector<double> grad(spec.ParamCount(), 0.0);
    TipScoreAdd(spec, p.data(), mu.data(), 1.0, grad.data());
    CHECK(std::abs(grad[0]) < 1e-9);
    CHECK(std::abs(grad[1]) < 1e-9);
  }
}

TEST_CASE("Euclidean normal basics") {
  const TipDistSpec spec{Space::kEuclidean, CovType::kFull, 3};
  std::vector<double> p(spec.ParamCount(), 0.0);
  p[0] = 1.0;
  p[1] = -2.0;
  p[2] = 0.5;
  p[spec.dim + LowerIndex(0, 0)] = std::log(0.7);
  p[spec.dim + LowerIndex(1, 0)] = 0.3;
  p[spec.dim + LowerIndex(2, 1)] = -0.2;
  const std::vector<double> zero_eps(3, 0.0);
  const auto at_mean = SampleTip(spec, p.data(), zero_eps.data());
  CHECK(at_mean[0] == doctest::Approx(1.0));
  CHECK(at_mean[1] == doctest::Approx(-2.0));
  // Log density at the mean is -(d/2) ln(2 pi) - ln det L.
  const double expected = -1.5 * std::log(2.0 * M_PI) - std::log(0.7);
  CHECK(TipLogDensity(spec, p.data(), at_mean.data()) ==
        doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("surrogate input Jacobians match finite differences") {
  std::mt19937_64 rng(14);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double h = 1e-6;
  for (const Space space : {Space::kEuclidean, Space::kHyperbolic}) {
    for (const CovType cov : {CovType::kDiag, CovType::kFull}) {
      for (int dim : {1, 2, 3}) {
        const TipDistSpec spec{space, cov, dim};
        const auto p = RandomParams(spec, rng);
        std::vector<double> eps(dim);
        for (double& e : eps) e = normal(rng);
        Eigen::VectorXd x;
        Eigen::MatrixXd jac;
        TipSurrogateInput(spec, p.data(), eps.data(), x, jac);
        for (int a = 0; a < spec.ParamCount(); ++a) {
          auto plus = p;
          auto minus = p;
          plus[a] += h;
          minus[a] -= h;
          Eigen::VectorXd x_plus, x_minus;
          Eigen::MatrixXd jac_unused;
          TipSurrogateInput(spec, plus.data(), eps.data(), x_plus, jac_unused);
          TipSurrogateInput(spec, minus.data(), eps.data(), x_minus,
                            jac_unused);
          for (int k = 0; k < dim; ++k) {
            const double fd = (x_plus(k) - x_minus(k)) / (2.0 * h);
            CHECK(jac(k, a) == doctest::Approx(fd).epsilon(1e-4));
          }
        }
      }
    }
  }
}
