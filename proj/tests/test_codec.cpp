#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "kgsc/codec.hpp"
#include "kgsc/errors.hpp"
#include "kgsc/rng.hpp"

using namespace kgsc;

namespace {

Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  return Matrix::NullaryExpr(rows, cols, [&]() { return rng.uniform(-1.0, 1.0); });
}

// Central finite differences against an arbitrary scalar functional of the
// MLP output.
void check_mlp_gradients(Mlp& mlp, const Matrix& x, Rng& rng) {
  const Matrix probe = random_matrix(x.rows(), mlp.out_dim(), rng);
  MlpCache cache;
  mlp.forward(x, &cache);
  MlpGrads grads = mlp.backward(cache, probe);

  auto loss = [&]() { return (mlp.forward(x).array() * probe.array()).sum(); };

  const double h = 1e-5;
  auto views = mlp.param_views();
  auto grad_views = grads.param_views();
  REQUIRE(views.size() == grad_views.size());
  for (std::size_t t = 0; t < views.size(); ++t) {
    for (Eigen::Index i = 0; i < views[t].size; ++i) {
      double& p = views[t].data[i];
      const double saved = p;
      p = saved + h;
      const double up = loss();
      p = saved - h;
      const double down = loss();
      p = saved;
      const double fd = (up - down) / (2.0 * h);
      const double analytic = grad_views[t].data[i];
      const double denom = std::max({std::abs(fd), std::abs(analytic), 1e-6});
      CHECK(std::abs(fd - analytic) / denom < 1e-4);
    }
  }

  // Input gradient.
  Matrix x_var = x;
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      const double saved = x_var(r, c);
      x_var(r, c) = saved + h;
      const double up = (mlp.forward(x_var).array() * probe.array()).sum();
      x_var(r, c) = saved - h;
      const double down = (mlp.forward(x_var).array() * probe.array()).sum();
      x_var(r, c) = saved;
      const double fd = (up - down) / (2.0 * h);
      const double denom = std::max({std::abs(fd), std::abs(grads.input(r, c)), 1e-6});
      CHECK(std::abs(fd - grads.input(r, c)) / denom < 1e-4);
    }
  }
}

}  // namespace

TEST_CASE("semantic encoder closed-form configurations") {
  // Zero weights: output is the (zero) bias regardless of input.
  Mlp zero = Mlp::init({3, 4, 4}, {true, false}, 1);
  for (auto& layer : zero.layers()) layer.weight.setZero();
  Rng rng(2);
  CHECK(zero.forward(random_matrix(5, 3, rng)).isZero());

  // Identity-configured layers pass ReLU(x) through.
  std::vector<AffineLayer> layers(2);
  layers[0] = {Matrix::Identity(4, 4), Vector::Zero(4), true};
  layers[1] = {Matrix::Identity(4, 4), Vector::Zero(4), false};
  Mlp identity(std::move(layers));
  Matrix x(2, 4);
  x << 1.0, -2.0, 0.5, -0.1,
       -3.0, 4.0, 0.0, 2.0;
  Matrix expect(2, 4);
  expect << 1.0, 0.0, 0.5, 0.0,
            0.0, 4.0, 0.0, 2.0;
  CHECK(identity.forward(x) == expect);

  CHECK_THROWS_AS(identity.forward(Matrix::Zero(1, 3)), Error);
}

TEST_CASE("power_normalize: fixed points, scale invariance, idempotence") {
  Vector ones = Vector::Ones(6);
  CHECK(power_normalize(ones) == ones);

  Vector spike(4);
  spike << 2.0, 0.0, 0.0, 0.0;  // rms = sqrt(4/4) = 1, already normalized
  CHECK(power_normalize(spike) == spike);

  Rng rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    Vector z = random_matrix(8, 1, rng);
    const Vector n1 = power_normalize(z);
    CHECK(n1.squaredNorm() / 8.0 == doctest::Approx(1.0).epsilon(1e-9));

    const Vector n7 = power_normalize(Vector(7.0 * z));
    CHECK((n7 - n1).cwiseAbs().maxCoeff() < 1e-12);

    const Vector twice = power_normalize(n1);
    CHECK((twice - n1).cwiseAbs().maxCoeff() < 1e-12);
  }

  CHECK_THROWS_AS(power_normalize(Vector(Vector::Zero(4))), Error);
}

TEST_CASE("noiseless chain with inverse-initialized parameters recovers s") {
  // 4-dim toy: identity channel encoder/decoder and identity semantic
  // decoder. Inputs are non-negative with unit RMS, so power normalization
  // and the decoder ReLU are both exact identities.
  CodecStack stack;
  stack.semantic_encoder = Mlp({{Matrix::Identity(4, 4), Vector::Zero(4), false}});
  stack.channel_encoder = Mlp({{Matrix::Identity(4, 4), Vector::Zero(4), false}});
  stack.channel_decoder = Mlp({{Matrix::Identity(4, 4), Vector::Zero(4), true}});
  stack.semantic_decoder = Mlp({{Matrix::Identity(4, 4), Vector::Zero(4), false}});

  Matrix s(2, 4);
  s << 1.0, 1.0, 1.0, 1.0,
       std::sqrt(2.0), 0.0, std::sqrt(2.0), 0.0;

  const Matrix z = channel_encode(stack, s);
  const Matrix s_hat = decode_received(stack, z);  // noiseless: ẑ = z
  CHECK((s_hat - s).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("channel_encode output has unit mean square per row") {
  Rng rng(11);
  CodecStack stack = CodecStack::init(6, 5, 4, 21);
  const Matrix x = random_matrix(9, 6, rng);
  const Matrix z = channel_encode(stack, semantic_encode(stack, x));
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    CHECK(z.row(i).squaredNorm() / static_cast<double>(z.cols()) ==
          doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("all codec stacks pass finite-difference gradient checks") {
  Rng rng(20240607);
  CodecStack stack = CodecStack::init(5, 6, 4, 33);
  const Matrix x = random_matrix(3, 5, rng);
  check_mlp_gradients(stack.semantic_encoder, x, rng);

  const Matrix s = semantic_encode(stack, x);
  check_mlp_gradients(stack.channel_encoder, s, rng);

  const Matrix z = channel_encode(stack, s);
  check_mlp_gradients(stack.channel_decoder, z, rng);

  const Matrix u = channel_decode(stack, z);
  check_mlp_gradients(stack.semantic_decoder, u, rng);
}

TEST_CASE("power_normalize backward matches finite differences") {
  Rng rng(9);
  const Matrix z = random_matrix(4, 6, rng);
  const Matrix probe = random_matrix(4, 6, rng);

  const Matrix analytic = power_normalize_backward(z, probe);
  const double h = 1e-6;
  Matrix z_var = z;
  for (Eigen::Index r = 0; r < z.rows(); ++r) {
    for (Eigen::Index c = 0; c < z.cols(); ++c) {
      const double saved = z_var(r, c);
      z_var(r, c) = saved + h;
      const double up = (power_normalize(z_var).array() * probe.array()).sum();
      z_var(r, c) = saved - h;
      const double down = (power_normalize(z_var).array() * probe.array()).sum();
      z_var(r, c) = saved;
      const double fd = (up - down) / (2.0 * h);
      const double denom = std::max({std::abs(fd), std::abs(analytic(r, c)), 1e-6});
      CHECK(std::abs(fd - analytic(r, c)) / denom < 1e-4);
    }
  }
}

TEST_CASE("composite encode-channel-decode chain is differentiable end to end") {
  // 6-dim toy configuration; gradient of a scalar functional of ŝ w.r.t. x
  // through every stage including power normalization.
  Rng rng(20240608);
  CodecStack stack = CodecStack::init(6, 6, 6, 55);
  const Matrix x = random_matrix(2, 6, rng);
  const Matrix probe = random_matrix(2, 6, rng);

  auto chain = [&](const Matrix& input) {
    return decode_received(stack, channel_encode(stack, semantic_encode(stack, input)));
  };

  // Analytic: backprop through the four stacks and the normalization.
  MlpCache se_cache, ce_cache, cd_cache, sd_cache;
  const Matrix s = stack.semantic_encoder.forward(x, &se_cache);
  const Matrix z_raw = stack.channel_encoder.forward(s, &ce_cache);
  const Matrix z = power_normalize(z_raw);
  const Matrix u = stack.channel_decoder.forward(z, &cd_cache);
  stack.semantic_decoder.forward(u, &sd_cache);

  const auto sd_grads = stack.semantic_decoder.backward(sd_cache, probe);
  const auto cd_grads = stack.channel_decoder.backward(cd_cache, sd_grads.input);
  const Matrix g_raw = power_normalize_backward(z_raw, cd_grads.input);
  const auto ce_grads = stack.channel_encoder.backward(ce_cache, g_raw);
  const auto se_grads = stack.semantic_encoder.backward(se_cache, ce_grads.input);

  const double h = 1e-5;
  Matrix x_var = x;
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      const double saved = x_var(r, c);
      x_var(r, c) = saved + h;
      const double up = (chain(x_var).array() * probe.array()).sum();
      x_var(r, c) = saved - h;
      const double down = (chain(x_var).array() * probe.array()).sum();
      x_var(r, c) = saved;
      const double fd = (up - down) / (2.0 * h);
      const double analytic = se_grads.input(r, c);
      const double denom = std::max({std::abs(fd), std::abs(analytic), 1e-6});
      CHECK(std::abs(fd - analytic) / denom < 1e-4);
    }
  }
}

TEST_CASE("codec maps are pure") {
  Rng rng(77);
  CodecStack stack = CodecStack::init(5, 7, 3, 101);
  const Matrix x = random_matrix(4, 5, rng);
  const Matrix a = semantic_encode(stack, x);
  const Matrix b = semantic_encode(stack, x);
  CHECK(a == b);
  const Matrix za = channel_encode(stack, a);
  const Matrix zb = channel_encode(stack, b);
  CHECK(za == zb);
  CHECK(decode_received(stack, za) == decode_received(stack, zb));
}

TEST_CASE("default dimensions follow the configured contract") {
  CodecStack stack = CodecStack::init(kDefaultFeatureDim, kDefaultSemanticDim,
                                      kDefaultChannelDim, 1);
  CHECK(stack.feature_dim() == 2048);
  CHECK(stack.semantic_dim() == 2049);
  CHECK(stack.channel_dim() == 512);
}
