// Copyright 2026 phylogeo project contributors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <cmath>

namespace phylogeo {

// Forward-mode scalar carrying a value and a dense derivative vector with
// respect to a fixed set of inputs. An empty derivative vector means "zero
// gradient" so plain constants stay cheap. Used to push analytic gradients
// through the Lorentz-model chain (exp/log maps, transports) where hand
// expansion would be error prone.
class Dual {
 public:
  Dual() = default;
  Dual(double value) : value_(value) {}  // NOLINT: implicit constant lift
  Dual(double value, Eigen::VectorXd grad)
      : value_(value), grad_(std::move(grad)) {}

  static Dual Seed(double value, int input_count, int index) {
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(input_count);
    grad(index) = 1.0;
    return Dual(value, std::move(grad));
  }

  double value() const { return value_; }
  const Eigen::VectorXd& grad() const { return grad_; }
  bool HasGrad() const { return grad_.size() > 0; }

  Dual operator-() const {
    return HasGrad() ? Dual(-value_, -grad_) : Dual(-value_);
  }

  Dual& operator+=(const Dual& other) {
    value_ += other.value_;
    AddGrad(other.grad_, 1.0);
    return *this;
  }
  Dual& operator-=(const Dual& other) {
    value_ -= other.value_;
    AddGrad(other.grad_, -1.0);
    return *this;
  }

  friend Dual operator+(Dual a, const Dual& b) { return a += b; }
  friend Dual operator-(Dual a, const Dual& b) { return a -= b; }

  friend Dual operator*(const Dual& a, const Dual& b) {
    Dual out(a.value_ * b.value_);
    if (a.HasGrad()) out.grad_ = a.grad_ * b.value_;
    if (b.HasGrad()) {
      if (out.HasGrad()) {
        out.grad_ += b.grad_ * a.value_;
      } else {
        out.grad_ = b.grad_ * a.value_;
      }
    }
    return out;
  }

  friend Dual operator/(const Dual& a, const Dual& b) {
    const double inv = 1.0 / b.value_;
    Dual out(a.value_ * inv);
    if (a.HasGrad()) out.grad_ = a.grad_ * inv;
    if (b.HasGrad()) {
      const double scale = -a.value_ * inv * inv;
      if (out.HasGrad()) {
        out.grad_ += b.grad_ * scale;
      } else {
        out.grad_ = b.grad_ * scale;
      }
    }
    return out;
  }

  friend bool operator<(const Dual& a, const Dual& b) {
    return a.value_ < b.value_;
  }
  friend bool operator>(const Dual& a, const Dual& b) {
    return a.value_ > b.value_;
  }

 private:
  void AddGrad(const Eigen::VectorXd& other, double factor) {
    if (other.size() == 0) return;
    if (grad_.size() == 0) {
      grad_ = other * factor;
    } else {
      grad_ += other * factor;
    }
  }

  double value_ = 0.0;
  Eigen::VectorXd grad_;

  friend Dual Chain(const Dual& x, double value, double derivative);
};

// Lifts a scalar function with known derivative: f(x), f'(x).
inline Dual Chain(const Dual& x, double value, double derivative) {
  Dual out(value);
  if (x.HasGrad()) out.grad_ = x.grad() * derivative;
  return out;
}

inline Dual sqrt(const Dual& x) {
  const double root = std::sqrt(x.value());
  return Chain(x, root, 0.5 / root);
}
inline Dual exp(const Dual& x) {
  const double e = std::exp(x.value());
  return Chain(x, e, e);
}
inline Dual log(const Dual& x) { return Chain(x, std::log(x.value()), 1.0 / x.value()); }
inline Dual sinh(const Dual& x) {
  return Chain(x, std::sinh(x.value()), std::cosh(x.value()));
}
inline Dual cosh(const Dual& x) {
  return Chain(x, std::cosh(x.value()), std::sinh(x.value()));
}
inline Dual tanh(const Dual& x) {
  const double t = std::tanh(x.value());
  return Chain(x, t, 1.0 - t * t);
}
inline Dual acosh(const Dual& x) {
  const double v = x.value();
  return Chain(x, std::acosh(v), 1.0 / std::sqrt(v * v - 1.0));
}

// Value extraction usable from code templated over double/Dual.
inline double ScalarValue(double x) { return x; }
inline double ScalarValue(const Dual& x) { return x.value(); }

}  // namespace phylogeo
