#include "dcmn/nn.hpp"

#include <algorithm>

namespace dcmn::nn {

Vector linear(const Vector& x, const LinearParams& p) {
  require_dims(p.weight.cols() == x.size(), "linear: input has " + std::to_string(x.size()) +
                                                " entries, weight expects " +
                                                std::to_string(p.weight.cols()));
  require_dims(p.bias.size() == p.weight.rows(), "linear: bias/weight row mismatch");
  return p.weight * x + p.bias;
}

Vector layer_norm(const Vector& x, const Vector& gain, const Vector& offset, double epsilon) {
  require_dims(x.size() >= 2, "layer_norm: need at least two entries");
  require_dims(gain.size() == x.size() && offset.size() == x.size(),
               "layer_norm: gain/offset size mismatch");
  const double mean = x.mean();
  const Vector centered = x.array() - mean;
  const double var = centered.squaredNorm() / static_cast<double>(x.size());
  const double inv_std = 1.0 / std::sqrt(var + epsilon);
  return (centered * inv_std).cwiseProduct(gain) + offset;
}

Vector softmax(const Vector& x) {
  require_dims(x.size() > 0, "softmax: empty input");
  const Vector e = (x.array() - x.maxCoeff()).exp();
  return e / e.sum();
}

Vector glu(const Vector& x, const LinearParams& value, const LinearParams& gate) {
  const Vector v = linear(x, value);
  const Vector g = linear(x, gate);
  require_dims(v.size() == g.size(), "glu: value and gate widths differ");
  return v.cwiseProduct(g.unaryExpr([](double z) { return sigmoid(z); }));
}

Matrix dropout_mask(Eigen::Index rows, Eigen::Index cols, double rate, std::mt19937_64& rng) {
  if (rate < 0.0 || rate >= 1.0) throw ConfigError("dropout rate must lie in [0, 1)");
  Matrix mask(rows, cols);
  if (rate == 0.0) {
    mask.setOnes();
    return mask;
  }
  std::bernoulli_distribution keep(1.0 - rate);
  const double scale = 1.0 / (1.0 - rate);
  for (Eigen::Index i = 0; i < mask.size(); ++i) mask.data()[i] = keep(rng) ? scale : 0.0;
  return mask;
}

Vector dropout(const Vector& x, double rate, bool training, std::mt19937_64& rng) {
  if (rate < 0.0 || rate >= 1.0) throw ConfigError("dropout rate must lie in [0, 1)");
  if (!training || rate == 0.0) return x;
  const Matrix mask = dropout_mask(x.size(), 1, rate, rng);
  return x.cwiseProduct(Eigen::Map<const Vector>(mask.data(), x.size()));
}

Matrix init_uniform(Eigen::Index rows, Eigen::Index cols, Eigen::Index fan_in,
                    std::mt19937_64& rng) {
  const double bound = std::sqrt(1.0 / static_cast<double>(std::max<Eigen::Index>(fan_in, 1)));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Matrix w(rows, cols);
  for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = dist(rng);
  return w;
}

LinearParams init_linear(Eigen::Index in, Eigen::Index out, std::mt19937_64& rng) {
  return {init_uniform(out, in, in, rng), Vector::Zero(out)};
}

Vector finite_diff_grad(const std::function<double(const Vector&)>& f, const Vector& theta,
                        double epsilon) {
  if (!(epsilon > 0.0)) throw OracleError("finite_diff_grad: perturbation must be positive");
  Vector grad(theta.size());
  Vector probe = theta;
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    probe[i] = theta[i] + epsilon;
    const double up = f(probe);
    probe[i] = theta[i] - epsilon;
    const double down = f(probe);
    probe[i] = theta[i];
    if (!std::isfinite(up) || !std::isfinite(down))
      throw OracleError("finite_diff_grad: non-finite objective at coordinate " +
                        std::to_string(i));
    grad[i] = (up - down) / (2.0 * epsilon);
  }
  return grad;
}

double relative_error(const Vector& analytic, const Vector& numeric) {
  require_dims(analytic.size() == numeric.size(), "relative_error: size mismatch");
  if (analytic.size() == 0) return 0.0;
  const double scale = std::max(analytic.cwiseAbs().maxCoeff(), numeric.cwiseAbs().maxCoeff());
  if (scale == 0.0) return 0.0;
  return (analytic - numeric).cwiseAbs().maxCoeff() / scale;
}

}  // namespace dcmn::nn
