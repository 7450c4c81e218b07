#pragma once

// Value-level layer primitives. The autodiff tape in autodiff.hpp reuses the
// scalar activations defined here so both paths agree bit for bit.

#include <cmath>
#include <functional>
#include <random>
#include <string>

#include "dcmn/types.hpp"

namespace dcmn::nn {

inline constexpr double kLayerNormEpsilon = 1e-5;

struct LinearParams {
  Matrix weight;  // out x in
  Vector bias;    // out
};

inline double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double softplus(double x) { return std::log1p(std::exp(-std::abs(x))) + std::max(x, 0.0); }

inline double elu(double x) { return x > 0 ? x : std::expm1(x); }
inline double elu_grad(double x) { return x > 0 ? 1.0 : std::exp(x); }

inline double mish(double x) { return x * std::tanh(softplus(x)); }
inline double mish_grad(double x) {
  const double t = std::tanh(softplus(x));
  return t + x * (1.0 - t * t) * sigmoid(x);
}

inline double tanh(double x) { return std::tanh(x); }

Vector linear(const Vector& x, const LinearParams& p);
Vector layer_norm(const Vector& x, const Vector& gain, const Vector& offset,
                  double epsilon = kLayerNormEpsilon);
Vector softmax(const Vector& x);
Vector glu(const Vector& x, const LinearParams& value, const LinearParams& gate);

/// Inverted dropout; identity when `training` is false or `rate` is zero.
Vector dropout(const Vector& x, double rate, bool training, std::mt19937_64& rng);

/// Bernoulli keep-mask scaled by 1/(1-rate).
Matrix dropout_mask(Eigen::Index rows, Eigen::Index cols, double rate, std::mt19937_64& rng);

/// Uniform(-sqrt(1/fan_in), sqrt(1/fan_in)) weights, zero bias.
LinearParams init_linear(Eigen::Index in, Eigen::Index out, std::mt19937_64& rng);
Matrix init_uniform(Eigen::Index rows, Eigen::Index cols, Eigen::Index fan_in, std::mt19937_64& rng);

struct GradCheckReport {
  std::string op;
  double max_relative_error = 0.0;
  double perturbation = 0.0;
};

/// Central differences (f(t + eps e_i) - f(t - eps e_i)) / (2 eps).
Vector finite_diff_grad(const std::function<double(const Vector&)>& f, const Vector& theta,
                        double epsilon);

/// max_i |a_i - n_i| / max(max_i |a_i|, max_i |n_i|): infinity-norm relative error
/// of an analytic gradient against its numeric estimate. Zero when both vanish.
double relative_error(const Vector& analytic, const Vector& numeric);

}  // namespace dcmn::nn
