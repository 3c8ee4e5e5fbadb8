// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <limits>
#include <numeric>

#include "doctest.h"
#include "psytraj/error.hpp"
#include "psytraj/nn.hpp"
#include "psytraj/ortho.hpp"
#include "psytraj/rng.hpp"
#include "support/oracles.hpp"

using namespace psytraj;
using linalg::Matrix;

namespace {

nn::NetworkSpec toy_spec() {
  return nn::NetworkSpec::mirrored(4, 3, {{6, nn::Activation::relu}}, true);
}

// One-layer pass-through network: latent == reconstruction == W x + b.
nn::NetworkSpec single_layer_spec(std::size_t c) {
  nn::NetworkSpec spec;
  spec.input_dim = c;
  spec.latent_dim = c;
  spec.latent_layer = 0;
  spec.layers = {{c, c, nn::Activation::identity}};
  spec.validate();
  return spec;
}

Matrix random_batch(Rng& rng, std::size_t n, std::size_t c, double scale = 1.0) {
  Matrix m(n, c);
  for (double& x : m.v) x = scale * rng.uniform(-1.0, 1.0);
  return m;
}

double loss_value(const nn::NetworkSpec& spec, const nn::Weights& w, const Matrix& batch,
                  double lambda) {
  double mse = 0.0;
  Matrix latents;
  nn::encode_batch(spec, w, batch, latents, &mse);
  if (lambda == 0.0) return mse;
  return mse + lambda * ortho::angular_penalty(latents).penalty;
}

// Smallest |pre-activation| seen at any ReLU layer over the batch.
double relu_margin(const nn::NetworkSpec& spec, const nn::Weights& w, const Matrix& batch) {
  double margin = std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < batch.rows; ++r) {
    const nn::ForwardTrace trace =
        nn::forward(spec, w, std::span<const double>(batch.row(r), batch.cols));
    for (std::size_t l = 0; l < spec.layers.size(); ++l) {
      if (spec.layers[l].activation != nn::Activation::relu) continue;
      for (double v : trace.pre[l]) margin = std::min(margin, std::abs(v));
    }
  }
  return margin;
}

}  // namespace

TEST_SUITE("nn") {

TEST_CASE("autoencoder ladder matches the canonical topology") {
  const nn::NetworkSpec spec = nn::NetworkSpec::autoencoder(24, 3);
  CHECK(spec.is_mirror());
  REQUIRE(spec.layers.size() == 14);
  const std::size_t widths[] = {128, 128, 29, 17, 7, 5, 3, 5, 7, 17, 29, 128, 128, 24};
  for (std::size_t i = 0; i < 14; ++i) {
    CHECK(spec.layers[i].out_dim == widths[i]);
    const bool relu = spec.layers[i].activation == nn::Activation::relu;
    CHECK(relu == (widths[i] == 128));
  }
  CHECK(spec.latent_layer == 6);
  CHECK(spec.layers[5].out_dim == 5);  // buffer layers flank the latent
  CHECK(spec.layers[7].out_dim == 5);
}

TEST_CASE("ReLU off the 128-wide ladder requires the explicit override") {
  nn::NetworkSpec spec;
  spec.input_dim = 4;
  spec.latent_dim = 2;
  spec.latent_layer = 0;
  spec.layers = {{4, 2, nn::Activation::relu}, {2, 4, nn::Activation::identity}};
  CHECK_THROWS_AS(spec.validate(), error);
  spec.allow_narrow_relu = true;
  CHECK_NOTHROW(spec.validate());
}

TEST_CASE("init_weights is deterministic and bounded") {
  const nn::NetworkSpec spec = toy_spec();
  const nn::Weights a = nn::init_weights(spec, 42);
  const nn::Weights b = nn::init_weights(spec, 42);
  const nn::Weights c = nn::init_weights(spec, 43);
  bool identical = true;
  bool differs = false;
  for (std::size_t l = 0; l < a.layers.size(); ++l) {
    identical = identical && a.layers[l].w.v == b.layers[l].w.v;
    differs = differs || a.layers[l].w.v != c.layers[l].w.v;
    const double bound =
        std::sqrt(6.0 / static_cast<double>(a.layers[l].w.rows + a.layers[l].w.cols));
    for (double x : a.layers[l].w.v) CHECK(std::abs(x) <= bound);
    for (double x : a.layers[l].b) CHECK(x == 0.0);
  }
  CHECK(identical);
  CHECK(differs);
}

TEST_CASE("init_weights empirical mean stays within three standard errors") {
  // Single 400 -> 250 layer: 100000 weights.
  const nn::NetworkSpec spec = nn::NetworkSpec::mirrored(400, 250, {}, false);
  const nn::Weights w = nn::init_weights(spec, 7);
  const auto& layer = w.layers[0];
  REQUIRE(layer.w.size() == 100000);
  const double a = std::sqrt(6.0 / 650.0);
  double mean = 0.0;
  for (double x : layer.w.v) mean += x;
  mean /= static_cast<double>(layer.w.size());
  // Uniform(-a, a): sd of the sample mean is a / sqrt(3 n).
  const double se = a / std::sqrt(3.0 * static_cast<double>(layer.w.size()));
  CHECK(std::abs(mean) < 3.0 * se);
}

TEST_CASE("zero network maps everything to zero") {
  const nn::NetworkSpec spec = toy_spec();
  const nn::Weights w = nn::Weights::zeros_like(spec);
  const std::vector<double> x = {0.5, -1.0, 2.0, 0.25};
  const nn::ForwardTrace trace = nn::forward(spec, w, x);
  for (double v : trace.latent(spec)) CHECK(v == 0.0);
  for (double v : trace.reconstruction()) CHECK(v == 0.0);
}

TEST_CASE("single identity layer with identity weights reproduces the input") {
  const nn::NetworkSpec spec = single_layer_spec(3);
  nn::Weights w = nn::Weights::zeros_like(spec);
  w.layers[0].w = Matrix::identity(3);
  const std::vector<double> x = {1.5, -0.25, 3.0};
  const nn::ForwardTrace trace = nn::forward(spec, w, x);
  for (std::size_t i = 0; i < 3; ++i) CHECK(trace.reconstruction()[i] == x[i]);
}

TEST_CASE("forward matches a straight-line oracle on the toy network") {
  const nn::NetworkSpec spec = toy_spec();
  Rng rng(5);
  const nn::Weights w = nn::init_weights(spec, 5);
  const std::vector<double> x = {0.3, -0.7, 0.9, 0.2};

  // Independent nested-loop evaluation.
  std::vector<double> cur = x;
  for (std::size_t l = 0; l < spec.layers.size(); ++l) {
    std::vector<double> next(spec.layers[l].out_dim, 0.0);
    for (std::size_t o = 0; o < spec.layers[l].out_dim; ++o) {
      double acc = w.layers[l].b[o];
      for (std::size_t i = 0; i < spec.layers[l].in_dim; ++i) {
        acc += w.layers[l].w.at(o, i) * cur[i];
      }
      next[o] = spec.layers[l].activation == nn::Activation::relu ? std::max(acc, 0.0) : acc;
    }
    cur = std::move(next);
  }

  const nn::ForwardTrace trace = nn::forward(spec, w, x);
  REQUIRE(trace.reconstruction().size() == cur.size());
  for (std::size_t i = 0; i < cur.size(); ++i) {
    CHECK(trace.reconstruction()[i] == doctest::Approx(cur[i]).epsilon(1e-12));
  }
}

TEST_CASE("batched forward equals per-sample forward") {
  const nn::NetworkSpec spec = toy_spec();
  const nn::Weights w = nn::init_weights(spec, 11);
  Rng rng(11);
  const Matrix batch = random_batch(rng, 17, 4);
  nn::BatchTrace trace;
  nn::forward_batch(spec, w, batch, trace);
  for (std::size_t r = 0; r < batch.rows; ++r) {
    const nn::ForwardTrace single =
        nn::forward(spec, w, std::span<const double>(batch.row(r), batch.cols));
    for (std::size_t c = 0; c < 4; ++c) {
      CHECK(trace.post.back().at(r, c) == doctest::Approx(single.reconstruction()[c]).epsilon(1e-13));
    }
  }
}

TEST_CASE("reconstruction loss closed forms") {
  const nn::NetworkSpec spec = single_layer_spec(2);
  nn::Weights perfect = nn::Weights::zeros_like(spec);
  perfect.layers[0].w = Matrix::identity(2);
  Matrix batch(3, 2);
  double sum_sq = 0.0;
  Rng rng(3);
  for (double& x : batch.v) {
    x = rng.uniform(-2.0, 2.0);
    sum_sq += x * x;
  }
  CHECK(nn::reconstruction_loss(spec, perfect, batch) == doctest::Approx(0.0).epsilon(1e-15));

  const nn::Weights zero = nn::Weights::zeros_like(spec);
  CHECK(nn::reconstruction_loss(spec, zero, batch) == doctest::Approx(sum_sq / 6.0).epsilon(1e-12));
}

TEST_CASE("reconstruction loss matches a scalar-loop oracle and ignores row order") {
  const nn::NetworkSpec spec = toy_spec();
  const nn::Weights w = nn::init_weights(spec, 23);
  Rng rng(23);
  const Matrix batch = random_batch(rng, 9, 4);

  double oracle = 0.0;
  for (std::size_t r = 0; r < batch.rows; ++r) {
    const nn::ForwardTrace trace =
        nn::forward(spec, w, std::span<const double>(batch.row(r), batch.cols));
    for (std::size_t c = 0; c < 4; ++c) {
      const double d = trace.reconstruction()[c] - batch.at(r, c);
      oracle += d * d;
    }
  }
  oracle /= static_cast<double>(batch.rows * batch.cols);
  CHECK(nn::reconstruction_loss(spec, w, batch) == doctest::Approx(oracle).epsilon(1e-12));

  Matrix reversed(batch.rows, batch.cols);
  for (std::size_t r = 0; r < batch.rows; ++r) {
    for (std::size_t c = 0; c < batch.cols; ++c) {
      reversed.at(r, c) = batch.at(batch.rows - 1 - r, c);
    }
  }
  CHECK(nn::reconstruction_loss(spec, w, reversed) ==
        doctest::Approx(nn::reconstruction_loss(spec, w, batch)).epsilon(1e-12));
}

TEST_CASE("gradients vanish at a perfect reconstruction with zero penalty") {
  const nn::NetworkSpec spec = single_layer_spec(3);
  nn::Weights w = nn::Weights::zeros_like(spec);
  w.layers[0].w = Matrix::identity(3);
  Rng rng(9);
  const Matrix batch = random_batch(rng, 5, 3);
  const nn::GradientResult res = nn::gradients(spec, w, batch, 0.0);
  CHECK(res.mse == doctest::Approx(0.0).epsilon(1e-15));
  for (double g : res.grads.layers[0].w.v) CHECK(g == 0.0);
  for (double g : res.grads.layers[0].b) CHECK(g == 0.0);
}

TEST_CASE("single linear layer gradient matches the closed form") {
  const std::size_t c = 3;
  const nn::NetworkSpec spec = single_layer_spec(c);
  Rng rng(13);
  nn::Weights w = nn::Weights::zeros_like(spec);
  for (double& x : w.layers[0].w.v) x = rng.uniform(-1.0, 1.0);
  const Matrix batch = random_batch(rng, 1, c);

  const nn::GradientResult res = nn::gradients(spec, w, batch, 0.0);
  // One sample: dW = (2 / C) (x_hat - x) x^T.
  const nn::ForwardTrace trace =
      nn::forward(spec, w, std::span<const double>(batch.row(0), c));
  for (std::size_t o = 0; o < c; ++o) {
    const double resid = trace.reconstruction()[o] - batch.at(0, o);
    for (std::size_t i = 0; i < c; ++i) {
      const double expect = 2.0 / static_cast<double>(c) * resid * batch.at(0, i);
      CHECK(res.grads.layers[0].w.at(o, i) == doctest::Approx(expect).epsilon(1e-12));
    }
    CHECK(res.grads.layers[0].b[o] ==
          doctest::Approx(2.0 / static_cast<double>(c) * resid).epsilon(1e-12));
  }
}

TEST_CASE("analytic gradients match central finite differences") {
  const nn::NetworkSpec spec = toy_spec();
  const nn::PenaltyFn penalty = [](const Matrix& z, Matrix& dz) {
    return ortho::angular_penalty_grad(z, dz);
  };

  int checked = 0;
  uint64_t seed = 100;
  while (checked < 5 && seed < 200) {
    const uint64_t s = seed++;
    Rng rng(s);
    const nn::Weights w = nn::init_weights(spec, s);
    const Matrix batch = random_batch(rng, 8, 4);
    if (relu_margin(spec, w, batch) < 1e-3) continue;  // keep clear of ReLU kinks
    const double lambda = (checked % 2 == 0) ? 0.1 : 0.0;

    nn::GradientResult res = nn::gradients(spec, w, batch, lambda, penalty);
    const std::size_t n = oracle::param_count(res.grads);
    std::vector<double> analytic(n), fd(n);
    for (std::size_t i = 0; i < n; ++i) analytic[i] = oracle::get_param(res.grads, i);

    nn::Weights probe = w;
    const double h = 1e-5;
    for (std::size_t i = 0; i < n; ++i) {
      const double orig = oracle::get_param(probe, i);
      oracle::set_param(probe, i, orig + h);
      const double fplus = loss_value(spec, probe, batch, lambda);
      oracle::set_param(probe, i, orig - h);
      const double fminus = loss_value(spec, probe, batch, lambda);
      oracle::set_param(probe, i, orig);
      fd[i] = (fplus - fminus) / (2.0 * h);
    }
    CAPTURE(s);
    CHECK(oracle::max_relative_error(analytic, fd) < 1e-4);
    ++checked;
  }
  CHECK(checked == 5);
}

TEST_CASE("gradient fan-out across workers matches the sequential result") {
  const nn::NetworkSpec spec = toy_spec();
  const nn::Weights w = nn::init_weights(spec, 77);
  Rng rng(77);
  const Matrix batch = random_batch(rng, 33, 4);

  nn::GradientResult seq;
  nn::GradientWorkspace ws_seq;
  nn::gradients(spec, w, batch, 0.0, nullptr, seq, ws_seq, nullptr);

  Pool pool(3);
  nn::GradientResult par1, par2;
  nn::GradientWorkspace ws_par;
  nn::gradients(spec, w, batch, 0.0, nullptr, par1, ws_par, &pool);
  nn::gradients(spec, w, batch, 0.0, nullptr, par2, ws_par, &pool);

  for (std::size_t l = 0; l < seq.grads.layers.size(); ++l) {
    // Same pool, same partition: bit-identical across calls.
    CHECK(par1.grads.layers[l].w.v == par2.grads.layers[l].w.v);
    // Different reduction order vs sequential: equal to rounding.
    for (std::size_t i = 0; i < seq.grads.layers[l].w.size(); ++i) {
      CHECK(par1.grads.layers[l].w.v[i] ==
            doctest::Approx(seq.grads.layers[l].w.v[i]).epsilon(1e-11));
    }
  }
  CHECK(par1.mse == doctest::Approx(seq.mse).epsilon(1e-13));
}

TEST_CASE("forward is positively homogeneous through identity layers") {
  // All-identity ladder so scaling one layer's weights scales the output.
  const nn::NetworkSpec spec = nn::NetworkSpec::mirrored(3, 2, {{5, nn::Activation::identity}});
  nn::Weights w = nn::init_weights(spec, 15);
  for (auto& layer : w.layers) std::fill(layer.b.begin(), layer.b.end(), 0.0);
  const std::vector<double> x = {0.4, -0.9, 1.4};
  const nn::ForwardTrace base = nn::forward(spec, w, x);

  nn::Weights scaled = w;
  for (double& v : scaled.layers[1].w.v) v *= 3.0;
  const nn::ForwardTrace out = nn::forward(spec, w, x);
  const nn::ForwardTrace out_scaled = nn::forward(spec, scaled, x);
  for (std::size_t i = 0; i < out.reconstruction().size(); ++i) {
    CHECK(out_scaled.reconstruction()[i] ==
          doctest::Approx(3.0 * out.reconstruction()[i]).epsilon(1e-12));
  }
  (void)base;
}

TEST_CASE("full-size ladder shapes: 24-wide input, 3-wide latent, 24-wide reconstruction") {
  const nn::NetworkSpec spec = nn::NetworkSpec::autoencoder(24, 3);
  const nn::Weights w = nn::init_weights(spec, 1);
  std::vector<double> x(24, 0.1);
  const nn::ForwardTrace trace = nn::forward(spec, w, x);
  CHECK(trace.latent(spec).size() == 3);
  CHECK(trace.reconstruction().size() == 24);
}

TEST_CASE("sgd_step: plain step, stationarity, and quadratic convergence") {
  const nn::NetworkSpec spec = single_layer_spec(1);
  nn::Weights w = nn::Weights::zeros_like(spec);
  w.layers[0].w.at(0, 0) = 1.0;
  nn::Weights g = nn::Weights::zeros_like(spec);
  g.layers[0].w.at(0, 0) = 0.5;
  nn::Velocity v = nn::Weights::zeros_like(spec);

  nn::sgd_step(w, g, 0.1, 0.0, v);
  CHECK(w.layers[0].w.at(0, 0) == doctest::Approx(1.0 - 0.1 * 0.5).epsilon(1e-15));

  nn::Weights zero_g = nn::Weights::zeros_like(spec);
  nn::Velocity zero_v = nn::Weights::zeros_like(spec);
  nn::Weights w2 = w;
  nn::sgd_step(w2, zero_g, 0.1, 0.9, zero_v);
  CHECK(w2.layers[0].w.at(0, 0) == w.layers[0].w.at(0, 0));

  // Minimize f(t) = (t - 2)^2 with momentum SGD.
  nn::Weights theta = nn::Weights::zeros_like(spec);
  nn::Velocity vel = nn::Weights::zeros_like(spec);
  nn::Weights grad = nn::Weights::zeros_like(spec);
  for (int it = 0; it < 100; ++it) {
    grad.layers[0].w.at(0, 0) = 2.0 * (theta.layers[0].w.at(0, 0) - 2.0);
    nn::sgd_step(theta, grad, 0.2, 0.5, vel);
  }
  CHECK(std::abs(theta.layers[0].w.at(0, 0) - 2.0) < 1e-6);

  CHECK_THROWS_AS(nn::sgd_step(w, g, 0.0, 0.0, v), error);
  CHECK_THROWS_AS(nn::sgd_step(w, g, 0.1, 1.0, v), error);
}

TEST_CASE("shape errors are rejected") {
  const nn::NetworkSpec spec = toy_spec();
  const nn::Weights w = nn::init_weights(spec, 2);
  std::vector<double> bad(5, 0.0);
  CHECK_THROWS_AS(nn::forward(spec, w, bad), error);
  Matrix batch(0, 4);
  CHECK_THROWS_AS(nn::reconstruction_loss(spec, w, batch), error);
  Matrix wrong(3, 5);
  CHECK_THROWS_AS(nn::gradients(spec, w, wrong, 0.0), error);
}

}  // TEST_SUITE
