#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numeric>

#include "dcmn/autodiff.hpp"
#include "dcmn/nn.hpp"
#include "test_util.hpp"

using namespace dcmn;
using dcmn::testing::gradient_error;
using dcmn::testing::random_matrix;
using dcmn::testing::random_vector;

TEST_CASE("linear") {
  nn::LinearParams id{Matrix::Identity(2, 2), Vector::Zero(2)};
  Vector x(2);
  x << 1, 0;
  CHECK(nn::linear(x, id) == x);

  nn::LinearParams s{Matrix::Constant(1, 1, 3.0), Vector::Constant(1, 1.0)};
  CHECK(nn::linear(Vector::Constant(1, 2.0), s)[0] == doctest::Approx(7.0));

  std::mt19937_64 rng(1);
  nn::LinearParams p{random_matrix(4, 3, rng), random_vector(4, rng)};
  const Vector v = random_vector(3, rng);
  const Vector y = nn::linear(v, p);
  for (int i = 0; i < 4; ++i) {
    double acc = p.bias[i];
    for (int j = 0; j < 3; ++j) acc += p.weight(i, j) * v[j];
    CHECK(y[i] == doctest::Approx(acc).epsilon(1e-14));
  }
  CHECK_THROWS_AS(nn::linear(Vector::Zero(5), p), DimensionError);
}

TEST_CASE("layer_norm") {
  const Vector ones = Vector::Ones(4);
  CHECK(nn::layer_norm(Vector::Ones(4), ones, Vector::Zero(4)).cwiseAbs().maxCoeff() == 0.0);

  Vector x(2);
  x << 1, -1;
  const double s = 1.0 / std::sqrt(1.0 + nn::kLayerNormEpsilon);
  Vector y = nn::layer_norm(x, Vector::Ones(2), Vector::Zero(2));
  CHECK(y[0] == doctest::Approx(s).epsilon(1e-15));
  CHECK(y[1] == doctest::Approx(-s).epsilon(1e-15));
  CHECK(y[0] == doctest::Approx(1.0).epsilon(1e-5));

  x << 0, 2;
  y = nn::layer_norm(x, Vector::Constant(2, 2.0), Vector::Ones(2));
  CHECK(y[0] == doctest::Approx(1.0 - 2.0 * s).epsilon(1e-15));
  CHECK(y[1] == doctest::Approx(1.0 + 2.0 * s).epsilon(1e-15));
  CHECK(y[0] == doctest::Approx(-1.0).epsilon(1e-4));
  CHECK(y[1] == doctest::Approx(3.0).epsilon(1e-4));

  CHECK_THROWS_AS(nn::layer_norm(Vector::Ones(1), Vector::Ones(1), Vector::Zero(1)),
                  DimensionError);

  std::mt19937_64 rng(7);
  for (int i = 0; i < 50; ++i) {
    const Vector v = random_vector(16, rng, -5, 5);
    CHECK(std::abs(nn::layer_norm(v, Vector::Ones(16), Vector::Zero(16)).mean()) <= 1e-7);
  }
}

TEST_CASE("activations") {
  CHECK(nn::elu(0.0) == 0.0);
  CHECK(nn::mish(0.0) == 0.0);
  CHECK(nn::tanh(0.0) == 0.0);
  CHECK(nn::elu(-50.0) == doctest::Approx(-1.0));
  CHECK(nn::elu(2.5) == 2.5);
  CHECK(nn::mish(1.0) == doctest::Approx(1.0 * std::tanh(std::log(1.0 + std::exp(1.0)))).epsilon(1e-15));
  CHECK(nn::mish(1.0) == doctest::Approx(0.8650983882673103));
  CHECK(nn::sigmoid(-800.0) == 0.0);
  CHECK(nn::sigmoid(800.0) == 1.0);

  // analytic derivative of sum(mish) against central differences
  std::mt19937_64 rng(3);
  const Vector theta = random_vector(12, rng, -4, 4);
  const Vector numeric = nn::finite_diff_grad(
      [](const Vector& t) { return t.unaryExpr([](double z) { return nn::mish(z); }).sum(); },
      theta, 1e-5);
  for (Eigen::Index i = 0; i < theta.size(); ++i)
    CHECK(std::abs(numeric[i] - nn::mish_grad(theta[i])) < 1e-6);
}

TEST_CASE("softmax") {
  CHECK(nn::softmax(Vector::Zero(2)).isApprox(Vector::Constant(2, 0.5)));
  const Vector big = nn::softmax(Vector::Constant(3, 1000.0));
  for (int i = 0; i < 3; ++i) CHECK(big[i] == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  Vector x(3);
  x << 1, 2, 3;
  const double z = std::exp(1.0) + std::exp(2.0) + std::exp(3.0);
  const Vector y = nn::softmax(x);
  for (int i = 0; i < 3; ++i) CHECK(y[i] == doctest::Approx(std::exp(x[i]) / z).epsilon(1e-14));
  CHECK_THROWS_AS(nn::softmax(Vector()), DimensionError);

  std::mt19937_64 rng(5);
  for (int i = 0; i < 100; ++i) {
    const Vector v = random_vector(7, rng, -30, 30);
    const Vector p = nn::softmax(v);
    CHECK(std::abs(p.sum() - 1.0) <= 1e-9);
    CHECK((p - nn::softmax(v.array() + 17.5)).cwiseAbs().maxCoeff() <= 1e-9);
    CHECK(p.minCoeff() > 0.0);
  }
}

TEST_CASE("glu") {
  std::mt19937_64 rng(11);
  const nn::LinearParams value{random_matrix(3, 3, rng), random_vector(3, rng)};
  nn::LinearParams gate{Matrix::Zero(3, 3), Vector::Constant(3, -50.0)};
  const Vector x = random_vector(3, rng);
  CHECK(nn::glu(x, value, gate).norm() < 1e-20);
  gate.bias.setConstant(50.0);
  CHECK((nn::glu(x, value, gate) - nn::linear(x, value)).norm() < 1e-18);

  // suppression grows monotonically as the gate closes
  double prev = std::numeric_limits<double>::infinity();
  for (double g = 5.0; g >= -60.0; g -= 5.0) {
    gate.bias.setConstant(g);
    const double norm = nn::glu(x, value, gate).norm();
    CHECK(norm <= prev);
    prev = norm;
  }

  const nn::LinearParams g2{random_matrix(3, 3, rng), random_vector(3, rng)};
  const Vector out = nn::glu(x, value, g2);
  for (int i = 0; i < 3; ++i) {
    double v = value.bias[i], g = g2.bias[i];
    for (int j = 0; j < 3; ++j) {
      v += value.weight(i, j) * x[j];
      g += g2.weight(i, j) * x[j];
    }
    CHECK(out[i] == doctest::Approx(v / (1.0 + std::exp(-g))).epsilon(1e-13));
  }
}

TEST_CASE("dropout") {
  std::mt19937_64 rng(42);
  const Vector x = random_vector(64, rng);
  CHECK(nn::dropout(x, 0.0, true, rng) == x);
  CHECK(nn::dropout(x, 0.5, false, rng) == x);
  CHECK_THROWS_AS(nn::dropout(x, 1.0, true, rng), ConfigError);

  const Vector big = Vector::Ones(1'000'000);
  const Vector d = nn::dropout(big, 0.15, true, rng);
  const double zero_fraction = static_cast<double>((d.array() == 0.0).count()) / 1e6;
  CHECK(std::abs(zero_fraction - 0.15) < 0.005);
  CHECK(d.maxCoeff() == doctest::Approx(1.0 / 0.85));
}

TEST_CASE("finite_diff_grad") {
  Vector theta(1);
  theta << 3.0;
  const Vector g = nn::finite_diff_grad([](const Vector& t) { return t[0] * t[0]; }, theta, 1e-5);
  CHECK(std::abs(g[0] - 6.0) < 1e-6);
  CHECK_THROWS_AS(nn::finite_diff_grad([](const Vector&) { return 0.0; }, theta, 0.0), OracleError);
  CHECK_THROWS_AS(
      nn::finite_diff_grad([](const Vector&) { return std::nan(""); }, theta, 1e-5), OracleError);
}

// Each tape op against central differences on 20 random instances.
TEST_CASE("autodiff op gradients") {
  std::mt19937_64 rng(2024);
  using V = std::vector<ad::Var>;
  auto weights = [&](Eigen::Index r, Eigen::Index c) { return random_matrix(r, c, rng); };
  const Matrix probe = random_matrix(4, 5, rng);
  auto dot_probe = [probe](const ad::Var& v) { return ad::sum(ad::mul_const(v, probe)); };

  struct Case {
    const char* name;
    std::function<std::vector<Matrix>()> inputs;
    testing::Builder build;
  };
  const std::vector<Case> cases = {
      {"matmul", [&] { return std::vector{weights(4, 3), weights(3, 5)}; },
       [&](const V& v) { return dot_probe(ad::matmul(v[0], v[1])); }},
      {"matmul_nt", [&] { return std::vector{weights(4, 3), weights(5, 3)}; },
       [&](const V& v) { return dot_probe(ad::matmul_nt(v[0], v[1])); }},
      {"add_row", [&] { return std::vector{weights(4, 5), weights(1, 5)}; },
       [&](const V& v) { return dot_probe(ad::add_row(v[0], v[1])); }},
      {"add_sub_mul", [&] { return std::vector{weights(4, 5), weights(4, 5)}; },
       [&](const V& v) { return dot_probe(ad::mul(ad::add(v[0], v[1]), ad::sub(v[0], v[1]))); }},
      {"tanh_sigmoid", [&] { return std::vector{weights(4, 5)}; },
       [&](const V& v) { return dot_probe(ad::mul(ad::tanh(v[0]), ad::sigmoid(ad::scale(v[0], 2.0)))); }},
      {"elu", [&] { return std::vector{weights(4, 5)}; },
       [&](const V& v) { return dot_probe(ad::elu(ad::scale(v[0], 3.0))); }},
      {"mish", [&] { return std::vector{weights(4, 5)}; },
       [&](const V& v) { return dot_probe(ad::mish(ad::scale(v[0], 3.0))); }},
      {"layer_norm", [&] { return std::vector{weights(4, 5), weights(1, 5), weights(1, 5)}; },
       [&](const V& v) { return dot_probe(ad::layer_norm_rows(v[0], v[1], v[2], 1e-5)); }},
      {"softmax", [&] { return std::vector{weights(4, 5)}; },
       [&](const V& v) { return dot_probe(ad::softmax_rows(ad::scale(v[0], 3.0))); }},
      {"slice_concat", [&] { return std::vector{weights(4, 3), weights(4, 2)}; },
       [&](const V& v) {
         const ad::Var parts[] = {ad::slice_cols(v[0], 1, 2), v[1], ad::slice_cols(v[0], 0, 1)};
         return dot_probe(ad::concat_cols(parts));
       }},
      {"rows", [&] { return std::vector{weights(2, 5), weights(3, 5)}; },
       [&](const V& v) {
         const ad::Var parts[] = {v[0], v[1]};
         return dot_probe(ad::gather_rows(ad::concat_rows(parts), {4, 0, 0, 2}));
       }},
      {"reshape", [&] { return std::vector{weights(10, 2)}; },
       [&](const V& v) { return dot_probe(ad::reshape(ad::tanh(v[0]), 4, 5)); }},
      {"huber", [&] { return std::vector{random_matrix(4, 5, rng, -3, 3)}; },
       [&](const V& v) { return ad::huber_sum(v[0], probe, 1.0); }},
      {"cross_entropy", [&] { return std::vector{random_matrix(4, 5, rng, -3, 3)}; },
       [&](const V& v) {
         const int labels[] = {0, 4, 2, 2};
         return ad::cross_entropy_rows(v[0], labels);
       }},
  };
  for (const auto& c : cases) {
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) worst = std::max(worst, gradient_error(c.build, c.inputs()));
    INFO(c.name);
    CHECK(worst <= 1e-4);
  }
}

TEST_CASE("autodiff constants carry no graph") {
  const ad::Var a = ad::constant(Matrix::Ones(2, 2));
  const ad::Var b = ad::tanh(ad::matmul(a, a));
  CHECK_FALSE(b.needs_grad());
  CHECK(b.node().inputs.empty());
  CHECK_THROWS_AS(ad::matmul(a, ad::constant(Matrix::Ones(3, 1))), DimensionError);
}
