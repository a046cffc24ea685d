// Copyright 2026 phylogeo project contributors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>

namespace phylogeo {

// One-hidden-layer perceptron s_chi(x) with SiLU activation, used as the
// adaptive control variate. Parameters are stored flat as
// [W1 row-major (H x I) | b1 (H) | w2 (H) | b2], and every gradient below is
// with respect to that layout. The output layer starts at zero so the
// surrogate contributes nothing until it has been trained.
class Surrogate {
 public:
  Surrogate(int input_dim, int hidden_width);

  int InputDim() const { return input_dim_; }
  int HiddenWidth() const { return hidden_width_; }
  int ParamCount() const { return static_cast<int>(params_.size()); }
  Eigen::VectorXd& Params() { return params_; }
  const Eigen::VectorXd& Params() const { return params_; }

  // Scaled-uniform hidden layer init on (-1/sqrt(I), 1/sqrt(I)]; the output
  // layer stays zero. Deterministic given the seed.
  void InitializeHidden(uint64_t seed);

  double Value(const Eigen::VectorXd& x) const;

  // d s / d x.
  Eigen::VectorXd InputGradient(const Eigen::VectorXd& x) const;

  // grad += weight * d s(x) / d chi.
  void ValueParamGradientAdd(const Eigen::VectorXd& x, double weight,
                             Eigen::VectorXd& grad) const;

  // grad += weight * d (q . ds/dx) / d chi, with q held constant.
  void MixedParamGradientAdd(const Eigen::VectorXd& x,
                             const Eigen::VectorXd& q, double weight,
                             Eigen::VectorXd& grad) const;

 private:
  int input_dim_;
  int hidden_width_;
  Eigen::VectorXd params_;
};

}  // namespace phylogeo
