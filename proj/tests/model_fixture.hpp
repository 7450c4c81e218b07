#pragma once

#include <map>
#include <random>
#include <string>
#include <vector>

#include "dcmn/model.hpp"
#include "dcmn/nn.hpp"

namespace dcmn::testing {

inline model::ModelConfig tiny_config(model::Variant v = model::Variant::full) {
  model::ModelConfig cfg;
  cfg.d = 8;
  cfg.heads = 2;
  cfg.steps = 4;
  cfg.rooms = 3;
  cfg.rssi = 5;
  cfg.accel = 3;
  cfg.variant = v;
  return cfg;
}

/// Initialised parameters with every entry jittered so no bias, gain or CRF
/// score sits at a symmetric zero.
inline model::Params jittered_params(const model::ModelConfig& cfg, std::uint64_t seed, double jitter = 0.3) {
  auto p = model::init_params(cfg, seed);
  std::mt19937_64 rng(seed ^ 0x5eedULL);
  std::uniform_real_distribution<double> u(-jitter, jitter);
  for (auto& [name, m] : p)
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] += u(rng);
  return p;
}

inline std::vector<data::Sample> random_samples(const model::ModelConfig& cfg, int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> room(0, cfg.rooms - 1);
  std::vector<data::Sample> out(static_cast<std::size_t>(count));
  for (auto& s : out) {
    s.rssi.resize(cfg.steps, cfg.rssi);
    s.accel.resize(cfg.steps, cfg.accel);
    for (Eigen::Index i = 0; i < s.rssi.size(); ++i) s.rssi.data()[i] = u(rng);
    for (Eigen::Index i = 0; i < s.accel.size(); ++i) s.accel.data()[i] = u(rng);
    for (int t = 0; t < cfg.steps; ++t) s.labels.push_back(room(rng));
  }
  return out;
}

/// Per-parameter-group relative error of the total-loss gradient against
/// central differences (dropout off so the loss is a deterministic function).
inline std::map<std::string, double> loss_gradient_errors(const model::ModelConfig& cfg, const model::Params& params,
                                                          const std::vector<data::Sample>& samples,
                                                          double eps = 1e-5) {
  const auto batch = model::make_batch(samples);
  auto loss_at = [&](const model::Params& p) {
    const auto vars = model::as_constants(p);
    const auto g = model::build(cfg, vars, batch, {});
    return model::total_loss(cfg, vars, g, batch).value()(0, 0);
  };
  const auto vars = model::as_parameters(params);
  const auto g = model::build(cfg, vars, batch, {});
  ad::backward(model::total_loss(cfg, vars, g, batch));

  std::map<std::string, double> errors;
  model::Params probe = params;
  for (const auto& [name, m] : params) {
    const Vector theta = Eigen::Map<const Vector>(m.data(), m.size());
    auto f = [&](const Vector& th) {
      probe[name] = Eigen::Map<const Matrix>(th.data(), m.rows(), m.cols());
      return loss_at(probe);
    };
    const Vector numeric = nn::finite_diff_grad(f, theta, eps);
    probe[name] = m;
    const auto& grad = vars.at(name).grad();
    const Vector analytic = grad.size() ? Vector(Eigen::Map<const Vector>(grad.data(), grad.size())) : Vector::Zero(m.size());
    errors[name] = nn::relative_error(analytic, numeric);
  }
  return errors;
}

}  // namespace dcmn::testing
