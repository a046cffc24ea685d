// Copyright 2026 phylogeo project contributors.
// SPDX-License-Identifier: Apache-2.0

#include "phylogeo/surrogate.hpp"

#include <cmath>

#include "phylogeo/common.hpp"
#include "phylogeo/rng.hpp"

namespace phylogeo {

namespace {

double Sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double Silu(double x) { return x * Sigmoid(x); }

double SiluPrime(double x) {
  const double s = Sigmoid(x);
  return s * (1.0 + x * (1.0 - s));
}

double SiluSecond(double x) {
  const double s = Sigmoid(x);
  return s * (1.0 - s) * (2.0 + x * (1.0 - 2.0 * s));
}

}  // namespace

Surrogate::Surrogate(int input_dim, int hidden_width)
    : input_dim_(input_dim), hidden_width_(hidden_width) {
  Assert(input_dim >= 1 && hidden_width >= 1,
         "Surrogate needs positive layer widths.");
  params_ = Eigen::VectorXd::Zero(hidden_width_ * input_dim_ +
                                  2 * hidden_width_ + 1);
}

void Surrogate::InitializeHidden(uint64_t seed) {
  CounterRng rng(seed, 0, 0, RngStream::kInit);
  const double bound = 1.0 / std::sqrt(static_cast<double>(input_dim_));
  const int hidden_params = hidden_width_ * input_dim_ + hidden_width_;
  for (int i = 0; i < hidden_params; ++i) {
    params_[i] = (2.0 * rng.NextUnit() - 1.0) * bound;
  }
  params_.tail(hidden_width_ + 1).setZero();
}

double Surrogate::Value(const Eigen::VectorXd& x) const {
  Assert(x.size() == input_dim_, "Surrogate input has the wrong size.");
  const auto w1 = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic,
                                                 Eigen::Dynamic,
                                                 Eigen::RowMajor>>(
      params_.data(), hidden_width_, input_dim_);
  const auto b1 = params_.segment(hidden_width_ * input_dim_, hidden_width_);
  const auto w2 =
      params_.segment(hidden_width_ * (input_dim_ + 1), hidden_width_);
  const double b2 = params_[params_.size() - 1];
  const Eigen::VectorXd h = w1 * x + b1;
  double value = b2;
  for (int j = 0; j < hidden_width_; ++j) {
    value += w2[j] * Silu(h[j]);
  }
  return value;
}

Eigen::VectorXd Surrogate::InputGradient(const Eigen::VectorXd& x) const {
  Assert(x.size() == input_dim_, "Surrogate input has the wrong size.");
  const auto w1 = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic,
                                                 Eigen::Dynamic,
                                                 Eigen::RowMajor>>(
      params_.data(), hidden_width_, input_dim_);
  const auto b1 = params_.segment(hidden_width_ * input_dim_, hidden_width_);
  const auto w2 =
      params_.segment(hidden_width_ * (input_dim_ + 1), hidden_width_);
  const Eigen::VectorXd h = w1 * x + b1;
  Eigen::VectorXd back(hidden_width_);
  for (int j = 0; j < hidden_width_; ++j) {
    back[j] = w2[j] * SiluPrime(h[j]);
  }
  return w1.transpose() * back;
}

void Surrogate::ValueParamGradientAdd(const Eigen::VectorXd& x, double weight,
                                      Eigen::VectorXd& grad) const {
  Assert(grad.size() == params_.size(),
         "Surrogate gradient has the wrong size.");
  const auto w1 = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic,
                                                 Eigen::Dynamic,
                                                 Eigen::RowMajor>>(
      params_.data(), hidden_width_, input_dim_);
  const auto b1 = params_.segment(hidden_width_ * input_dim_, hidden_width_);
  const auto w2 =
      params_.segment(hidden_width_ * (input_dim_ + 1), hidden_width_);
  const Eigen::VectorXd h = w1 * x + b1;
  const int b1_offset = hidden_width_ * input_dim_;
  const int w2_offset = b1_offset + hidden_width_;
  for (int j = 0; j < hidden_width_; ++j) {
    const double prime = SiluPrime(h[j]);
    const double through = weight * w2[j] * prime;
    for (int i = 0; i < input_dim_; ++i) {
      grad[j * input_dim_ + i] += through * x[i];
    }
    grad[b1_offset + j] += through;
    grad[w2_offset + j] += weight * Silu(h[j]);
  }
  grad[grad.size() - 1] += weight;
}

void Surrogate::MixedParamGradientAdd(const Eigen::VectorXd& x,
                                      const Eigen::VectorXd& q, double weight,
                                      Eigen::VectorXd& grad) const {
  Assert(grad.size() == params_.size(),
         "Surrogate gradient has the wrong size.");
  Assert(q.size() == input_dim_, "Surrogate direction has the wrong size.");
  const auto w1 = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic,
                                                 Eigen::Dynamic,
                                                 Eigen::RowMajor>>(
      params_.data(), hidden_width_, input_dim_);
  const auto b1 = params_.segment(hidden_width_ * input_dim_, hidden_width_);
  const auto w2 =
      params_.segment(hidden_width_ * (input_dim_ + 1), hidden_width_);
  const Eigen::VectorXd h = w1 * x + b1;
  const Eigen::VectorXd p = w1 * q;
  const int b1_offset = hidden_width_ * input_dim_;
  const int w2_offset = b1_offset + hidden_width_;
  // q . ds/dx = sum_j p_j w2_j silu'(h_j), so the W1 entries pick up both a
  // direct q term and a curvature term through h.
  for (int j = 0; j < hidden_width_; ++j) {
    const double prime = SiluPrime(h[j]);
    const double second = SiluSecond(h[j]);
    const double curvature = weight * w2[j] * second * p[j];
    const double direct = weight * w2[j] * prime;
    for (int i = 0; i < input_dim_; ++i) {
      grad[j * input_dim_ + i] += direct * q[i] + curvature * x[i];
    }
    grad[b1_offset + j] += curvature;
    grad[w2_offset + j] += weight * prime * p[j];
  }
}

}  // namespace phylogeo
