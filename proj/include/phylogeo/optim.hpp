// Copyright 2026 phylogeo project contributors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

// Adam with bias correction, in descent convention: maximizers pass the
// negated gradient. The moment vectors grow with the parameter vector, so
// lazily created branch slots join mid-run; late entries keep the global
// step count for bias correction, which only damps their first few updates.

namespace phylogeo {

class AdamOptimizer {
 public:
  explicit AdamOptimizer(double beta1 = 0.9, double beta2 = 0.999,
                         double epsilon = 1e-8);

  void Step(Eigen::Ref<Eigen::VectorXd> params, const Eigen::VectorXd& grad,
            double lr);
  void Step(std::vector<double>& params, const Eigen::VectorXd& grad,
            double lr);

  int64_t StepCount() const { return step_count_; }

 private:
  double beta1_;
  double beta2_;
  double epsilon_;
  int64_t step_count_ = 0;
  Eigen::VectorXd first_moment_;
  Eigen::VectorXd second_moment_;
};

}  // namespace phylogeo
