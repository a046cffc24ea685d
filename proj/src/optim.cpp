// Copyright 2026 phylogeo project contributors.
// SPDX-License-Identifier: Apache-2.0

#include "phylogeo/optim.hpp"

#include <cmath>

#include "phylogeo/common.hpp"

namespace phylogeo {

AdamOptimizer::AdamOptimizer(double beta1, double beta2, double epsilon)
    : beta1_(beta1), beta2_(beta2), epsilon_(epsilon) {}

void AdamOptimizer::Step(Eigen::Ref<Eigen::VectorXd> params,
                         const Eigen::VectorXd& grad, double lr) {
  Assert(params.size() == grad.size(),
         "Adam parameter and gradient sizes differ");
  if (first_moment_.size() < params.size()) {
    const Eigen::Index old_size = first_moment_.size();
    first_moment_.conservativeResize(params.size());
    second_moment_.conservativeResize(params.size());
    first_moment_.tail(params.size() - old_size).setZero();
    second_moment_.tail(params.size() - old_size).setZero();
  }
  Assert(first_moment_.size() == params.size(),
         "Adam parameter vector shrank between steps");
  ++step_count_;
  first_moment_ = beta1_ * first_moment_ + (1.0 - beta1_) * grad;
  second_moment_ =
      beta2_ * second_moment_ + (1.0 - beta2_) * grad.cwiseProduct(grad);
  const double first_correction =
      1.0 - std::pow(beta1_, static_cast<double>(step_count_));
  const double second_correction =
      1.0 - std::pow(beta2_, static_cast<double>(step_count_));
  for (Eigen::Index i = 0; i < params.size(); ++i) {
    const double corrected_first = first_moment_[i] / first_correction;
    const double corrected_second = second_moment_[i] / second_correction;
    params[i] -=
        lr * corrected_first / (std::sqrt(corrected_second) + epsilon_);
  }
}

void AdamOptimizer::Step(std::vector<double>& params,
                         const Eigen::VectorXd& grad, double lr) {
  Eigen::Map<Eigen::VectorXd> view(params.data(),
                                   static_cast<Eigen::Index>(params.size()));
  Step(view, grad, lr);
}

}  // namespace phylogeo
