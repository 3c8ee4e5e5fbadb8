// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "psytraj/linalg.hpp"
#include "psytraj/pool.hpp"

namespace psytraj::nn {

enum class Activation { identity, relu };

struct LayerSpec {
  std::size_t in_dim = 0;
  std::size_t out_dim = 0;
  Activation activation = Activation::identity;
};

// Fully-connected autoencoder topology. The canonical ladder compresses the
// channel vector through 128, 128, 29, 17, 7, 5 to the latent width and
// mirrors back out, with ReLU only on the 128-wide layers; everything else
// stays linear. ReLU on a narrower layer requires the explicit override.
struct NetworkSpec {
  std::size_t input_dim = 24;
  std::size_t latent_dim = 3;
  std::size_t latent_layer = 0;  // index of the encoder output layer
  std::vector<LayerSpec> layers;
  bool allow_narrow_relu = false;

  static NetworkSpec autoencoder(std::size_t input_dim, std::size_t latent_dim = 3,
                                 const std::vector<std::size_t>& hidden = {128, 128, 29, 17, 7, 5});
  // Arbitrary mirrored ladder for reduced/test networks.
  static NetworkSpec mirrored(std::size_t input_dim, std::size_t latent_dim,
                              const std::vector<std::pair<std::size_t, Activation>>& encoder_hidden,
                              bool allow_narrow_relu = false);

  void validate() const;
  bool is_mirror() const;  // decoder dims are the exact reverse of the encoder's
  std::size_t param_count() const;
};

struct Weights {
  struct Layer {
    linalg::Matrix w;        // out_dim x in_dim
    std::vector<double> b;   // out_dim
  };
  std::vector<Layer> layers;

  static Weights zeros_like(const NetworkSpec& spec);
  void zero();
  bool finite() const;
  std::size_t param_count() const;
};

// Shapes velocity buffers the same way as the weights they update.
using Velocity = Weights;

// Per-layer pre/post activations for a single input vector.
struct ForwardTrace {
  std::vector<std::vector<double>> pre;
  std::vector<std::vector<double>> post;

  const std::vector<double>& latent(const NetworkSpec& spec) const { return post[spec.latent_layer]; }
  const std::vector<double>& reconstruction() const { return post.back(); }
};

// Per-layer pre/post activations for a row batch (reused across batches).
struct BatchTrace {
  std::vector<linalg::Matrix> pre;
  std::vector<linalg::Matrix> post;
};

// Deterministic Glorot-uniform init: weights uniform in [-a, a] with
// a = sqrt(6 / (in + out)), biases zero.
Weights init_weights(const NetworkSpec& spec, uint64_t seed);

ForwardTrace forward(const NetworkSpec& spec, const Weights& w, std::span<const double> x);

void forward_batch(const NetworkSpec& spec, const Weights& w, linalg::ConstView x,
                   BatchTrace& trace, Pool* pool = nullptr);

// Mean squared reconstruction error (1 / (N*C)) * sum ||x - x_hat||^2.
double reconstruction_loss(const NetworkSpec& spec, const Weights& w, linalg::ConstView batch);

// Batch-coupled latent penalty: fills dz (same shape as the latent batch)
// and returns the penalty value.
using PenaltyFn = std::function<double(const linalg::Matrix& latents, linalg::Matrix& dz)>;

struct GradientResult {
  Weights grads;
  double mse = 0.0;
  double penalty = 0.0;
};

struct GradientWorkspace {
  BatchTrace trace;
  std::vector<linalg::Matrix> delta;       // dL/d(pre) per layer, batch rows
  linalg::Matrix penalty_grad;             // B x L
  std::vector<Weights> partial;            // per-worker accumulators
};

// Exact reverse-mode gradients of MSE + lambda * penalty for every weight
// and bias. ReLU subgradient at 0 is 0. Work fans out over batch rows with a
// fixed partition and worker-ordered reduction, so results are deterministic
// for a given worker count.
void gradients(const NetworkSpec& spec, const Weights& w, linalg::ConstView batch, double lambda,
               const PenaltyFn& penalty_fn, GradientResult& out, GradientWorkspace& ws,
               Pool* pool = nullptr);

// Convenience overload for tests and small callers.
GradientResult gradients(const NetworkSpec& spec, const Weights& w, linalg::ConstView batch,
                         double lambda, const PenaltyFn& penalty_fn = nullptr);

// v <- momentum * v - lr * g;  w <- w + v
void sgd_step(Weights& w, const Weights& grads, double lr, double momentum, Velocity& velocity);

// Full-dataset pass in fixed-size chunks: latent row per input row plus the
// overall reconstruction MSE.
void encode_batch(const NetworkSpec& spec, const Weights& w, linalg::ConstView x,
                  linalg::Matrix& latents, double* mse = nullptr, Pool* pool = nullptr);

std::string to_string(Activation a);
Activation activation_from_string(const std::string& s);

}  // namespace psytraj::nn
