// SPDX-License-Identifier: Apache-2.0
#include "psytraj/nn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "psytraj/error.hpp"
#include "psytraj/kernels.hpp"
#include "psytraj/rng.hpp"

namespace psytraj::nn {

namespace {

constexpr std::size_t kReluWidth = 128;
constexpr std::size_t kEvalChunk = 256;

Activation rule_activation(std::size_t out_dim) {
  return out_dim == kReluWidth ? Activation::relu : Activation::identity;
}

void ensure_shape(linalg::Matrix& m, std::size_t rows, std::size_t cols) {
  if (m.rows != rows || m.cols != cols) m = linalg::Matrix(rows, cols);
}

}  // namespace

std::string to_string(Activation a) { return a == Activation::relu ? "relu" : "identity"; }

Activation activation_from_string(const std::string& s) {
  if (s == "relu") return Activation::relu;
  if (s == "identity") return Activation::identity;
  fail(errc::parse, "unknown activation '" + s + "'");
}

NetworkSpec NetworkSpec::autoencoder(std::size_t input_dim, std::size_t latent_dim,
                                     const std::vector<std::size_t>& hidden) {
  NetworkSpec spec;
  spec.input_dim = input_dim;
  spec.latent_dim = latent_dim;
  spec.latent_layer = hidden.size();

  std::size_t prev = input_dim;
  for (std::size_t h : hidden) {
    spec.layers.push_back({prev, h, rule_activation(h)});
    prev = h;
  }
  spec.layers.push_back({prev, latent_dim, rule_activation(latent_dim)});
  prev = latent_dim;
  for (std::size_t i = hidden.size(); i-- > 0;) {
    spec.layers.push_back({prev, hidden[i], rule_activation(hidden[i])});
    prev = hidden[i];
  }
  spec.layers.push_back({prev, input_dim, Activation::identity});
  spec.validate();
  return spec;
}

NetworkSpec NetworkSpec::mirrored(std::size_t input_dim, std::size_t latent_dim,
                                  const std::vector<std::pair<std::size_t, Activation>>& encoder_hidden,
                                  bool allow_narrow_relu) {
  NetworkSpec spec;
  spec.input_dim = input_dim;
  spec.latent_dim = latent_dim;
  spec.latent_layer = encoder_hidden.size();
  spec.allow_narrow_relu = allow_narrow_relu;

  std::size_t prev = input_dim;
  for (const auto& [h, act] : encoder_hidden) {
    spec.layers.push_back({prev, h, act});
    prev = h;
  }
  spec.layers.push_back({prev, latent_dim, Activation::identity});
  prev = latent_dim;
  for (std::size_t i = encoder_hidden.size(); i-- > 0;) {
    spec.layers.push_back({prev, encoder_hidden[i].first, encoder_hidden[i].second});
    prev = encoder_hidden[i].first;
  }
  spec.layers.push_back({prev, input_dim, Activation::identity});
  spec.validate();
  return spec;
}

void NetworkSpec::validate() const {
  if (layers.empty()) fail(errc::parameter, "network: no layers");
  if (input_dim == 0 || latent_dim == 0) fail(errc::parameter, "network: zero dimension");
  if (latent_layer >= layers.size()) fail(errc::parameter, "network: latent layer out of range");
  std::size_t prev = input_dim;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const LayerSpec& l = layers[i];
    if (l.in_dim == 0 || l.out_dim == 0) fail(errc::parameter, "network: zero-width layer");
    if (l.in_dim != prev) {
      fail(errc::shape_mismatch, "network: layer " + std::to_string(i) + " expects " +
                                     std::to_string(l.in_dim) + " inputs, previous width is " +
                                     std::to_string(prev));
    }
    if (l.activation == Activation::relu && l.out_dim != kReluWidth && !allow_narrow_relu) {
      fail(errc::parameter, "network: ReLU on a " + std::to_string(l.out_dim) +
                                "-wide layer requires the explicit narrow-ReLU override");
    }
    prev = l.out_dim;
  }
  if (layers[latent_layer].out_dim != latent_dim) {
    fail(errc::shape_mismatch, "network: latent layer width " +
                                   std::to_string(layers[latent_layer].out_dim) + " != latent_dim " +
                                   std::to_string(latent_dim));
  }
  if (layers.back().out_dim != input_dim) {
    fail(errc::shape_mismatch, "network: reconstruction width " +
                                   std::to_string(layers.back().out_dim) + " != input_dim " +
                                   std::to_string(input_dim));
  }
}

bool NetworkSpec::is_mirror() const {
  const std::size_t enc = latent_layer + 1;
  if (layers.size() != 2 * enc) return false;
  for (std::size_t i = 0; i < enc; ++i) {
    const LayerSpec& e = layers[i];
    const LayerSpec& d = layers[layers.size() - 1 - i];
    if (e.in_dim != d.out_dim || e.out_dim != d.in_dim) return false;
  }
  return true;
}

std::size_t NetworkSpec::param_count() const {
  std::size_t n = 0;
  for (const LayerSpec& l : layers) n += l.out_dim * (l.in_dim + 1);
  return n;
}

Weights Weights::zeros_like(const NetworkSpec& spec) {
  Weights w;
  w.layers.reserve(spec.layers.size());
  for (const LayerSpec& l : spec.layers) {
    w.layers.push_back({linalg::Matrix(l.out_dim, l.in_dim), std::vector<double>(l.out_dim, 0.0)});
  }
  return w;
}

void Weights::zero() {
  for (auto& l : layers) {
    l.w.fill(0.0);
    std::fill(l.b.begin(), l.b.end(), 0.0);
  }
}

bool Weights::finite() const {
  for (const auto& l : layers) {
    if (!l.w.finite()) return false;
    for (double x : l.b) {
      if (!std::isfinite(x)) return false;
    }
  }
  return true;
}

std::size_t Weights::param_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.w.size() + l.b.size();
  return n;
}

Weights init_weights(const NetworkSpec& spec, uint64_t seed) {
  spec.validate();
  Weights w = Weights::zeros_like(spec);
  Rng rng(seed);
  for (auto& layer : w.layers) {
    const double a = std::sqrt(6.0 / static_cast<double>(layer.w.rows + layer.w.cols));
    for (double& x : layer.w.v) x = rng.uniform(-a, a);
  }
  return w;
}

ForwardTrace forward(const NetworkSpec& spec, const Weights& w, std::span<const double> x) {
  if (x.size() != spec.input_dim) {
    fail(errc::shape_mismatch, "forward: input has " + std::to_string(x.size()) +
                                   " values, network expects " + std::to_string(spec.input_dim));
  }
  for (double v : x) {
    if (!std::isfinite(v)) fail(errc::nonfinite, "forward: non-finite input");
  }
  const auto& k = kern::active();
  ForwardTrace trace;
  trace.pre.resize(spec.layers.size());
  trace.post.resize(spec.layers.size());
  const double* in = x.data();
  for (std::size_t l = 0; l < spec.layers.size(); ++l) {
    const LayerSpec& ls = spec.layers[l];
    auto& pre = trace.pre[l];
    auto& post = trace.post[l];
    pre.resize(ls.out_dim);
    post.resize(ls.out_dim);
    for (std::size_t o = 0; o < ls.out_dim; ++o) {
      pre[o] = k.dot(in, w.layers[l].w.row(o), ls.in_dim) + w.layers[l].b[o];
    }
    if (ls.activation == Activation::relu) {
      k.relu(pre.data(), post.data(), ls.out_dim);
    } else {
      post = pre;
    }
    in = post.data();
  }
  return trace;
}

namespace {

void resize_trace(const NetworkSpec& spec, std::size_t rows, BatchTrace& trace) {
  trace.pre.resize(spec.layers.size());
  trace.post.resize(spec.layers.size());
  for (std::size_t l = 0; l < spec.layers.size(); ++l) {
    ensure_shape(trace.pre[l], rows, spec.layers[l].out_dim);
    ensure_shape(trace.post[l], rows, spec.layers[l].out_dim);
  }
}

unsigned effective_workers(Pool* pool, std::size_t rows) {
  if (pool == nullptr) return 1;
  const unsigned k = pool->workers();
  if (k <= 1 || rows < 2 * k) return 1;
  return k;
}

// Forward of rows [r0, r1) through every layer.
void forward_rows(const NetworkSpec& spec, const Weights& w, linalg::ConstView x, BatchTrace& trace,
                  std::size_t r0, std::size_t r1) {
  if (r1 <= r0) return;
  const auto& k = kern::active();
  for (std::size_t l = 0; l < spec.layers.size(); ++l) {
    const LayerSpec& ls = spec.layers[l];
    const linalg::Matrix& wm = w.layers[l].w;
    const double* bias = w.layers[l].b.data();
    linalg::Matrix& pre = trace.pre[l];
    for (std::size_t r = r0; r < r1; ++r) {
      const double* in = (l == 0) ? x.row(r) : trace.post[l - 1].row(r);
      double* out = pre.row(r);
      std::size_t o = 0;
      for (; o + 4 <= ls.out_dim; o += 4) {
        k.dot4(in, wm.row(o), ls.in_dim, ls.in_dim, out + o);
      }
      for (; o < ls.out_dim; ++o) {
        out[o] = k.dot(in, wm.row(o), ls.in_dim);
      }
      for (o = 0; o < ls.out_dim; ++o) out[o] += bias[o];
    }
    const std::size_t count = (r1 - r0) * ls.out_dim;
    double* pre0 = pre.row(r0);
    double* post0 = trace.post[l].row(r0);
    if (ls.activation == Activation::relu) {
      k.relu(pre0, post0, count);
    } else {
      std::memcpy(post0, pre0, count * sizeof(double));
    }
  }
}

double squared_residual_rows(const linalg::Matrix& recon, linalg::ConstView x, std::size_t r0,
                             std::size_t r1) {
  double sq = 0.0;
  std::vector<double> diff(x.cols);
  for (std::size_t r = r0; r < r1; ++r) {
    const double* a = recon.row(r);
    const double* b = x.row(r);
    for (std::size_t c = 0; c < x.cols; ++c) diff[c] = a[c] - b[c];
    sq += kern::active().sumsq(diff.data(), x.cols);
  }
  return sq;
}

void add_weights(Weights& dst, const Weights& src) {
  const auto& k = kern::active();
  for (std::size_t l = 0; l < dst.layers.size(); ++l) {
    k.axpy(1.0, src.layers[l].w.v.data(), dst.layers[l].w.v.data(), dst.layers[l].w.size());
    k.axpy(1.0, src.layers[l].b.data(), dst.layers[l].b.data(), dst.layers[l].b.size());
  }
}

// Backward pass over rows [r0, r1), accumulating into `grads`. `delta[l]`
// holds dL/d(pre[l]) for the processed rows; rows are partitioned across
// workers so the shared delta matrices need no locking.
void backward_rows(const NetworkSpec& spec, const Weights& w, linalg::ConstView x,
                   const BatchTrace& trace, std::vector<linalg::Matrix>& delta,
                   const linalg::Matrix& penalty_grad, double lambda, double mse_scale,
                   Weights& grads, std::size_t r0, std::size_t r1) {
  if (r1 <= r0) return;
  const auto& k = kern::active();
  const std::size_t last = spec.layers.size() - 1;
  const bool with_penalty = lambda != 0.0 && penalty_grad.rows > 0;

  // dL/d(post[last]) from the reconstruction term.
  for (std::size_t r = r0; r < r1; ++r) {
    const double* recon = trace.post[last].row(r);
    const double* in = x.row(r);
    double* d = delta[last].row(r);
    for (std::size_t c = 0; c < x.cols; ++c) d[c] = mse_scale * (recon[c] - in[c]);
  }
  if (with_penalty && spec.latent_layer == last) {
    for (std::size_t r = r0; r < r1; ++r) {
      k.axpy(lambda, penalty_grad.row(r), delta[last].row(r), spec.latent_dim);
    }
  }

  for (std::size_t l = last + 1; l-- > 0;) {
    const LayerSpec& ls = spec.layers[l];
    const linalg::Matrix& wm = w.layers[l].w;
    linalg::Matrix& dl = delta[l];

    if (ls.activation == Activation::relu) {
      const std::size_t count = (r1 - r0) * ls.out_dim;
      k.relu_mask(trace.pre[l].row(r0), dl.row(r0), count);
    }

    // Weight and bias gradients for this layer.
    linalg::ConstView in_view =
        (l == 0) ? x : linalg::ConstView(trace.post[l - 1].row(0), x.rows, ls.in_dim);
    linalg::Matrix& gw = grads.layers[l].w;
    std::vector<double>& gb = grads.layers[l].b;
    for (std::size_t o = 0; o < ls.out_dim; ++o) {
      double* grow = gw.row(o);
      double bsum = 0.0;
      std::size_t r = r0;
      for (; r + 4 <= r1; r += 4) {
        const double a4[4] = {dl.at(r, o), dl.at(r + 1, o), dl.at(r + 2, o), dl.at(r + 3, o)};
        k.axpy4(a4, in_view.row(r), ls.in_dim, grow, ls.in_dim);
        bsum += a4[0] + a4[1] + a4[2] + a4[3];
      }
      for (; r < r1; ++r) {
        const double a = dl.at(r, o);
        k.axpy(a, in_view.row(r), grow, ls.in_dim);
        bsum += a;
      }
      gb[o] += bsum;
    }

    // Propagate to the previous layer's post-activations.
    if (l == 0) break;
    linalg::Matrix& dprev = delta[l - 1];
    for (std::size_t r = r0; r < r1; ++r) {
      double* dp = dprev.row(r);
      std::memset(dp, 0, ls.in_dim * sizeof(double));
      const double* drow = dl.row(r);
      std::size_t o = 0;
      for (; o + 4 <= ls.out_dim; o += 4) {
        k.axpy4(drow + o, wm.row(o), ls.in_dim, dp, ls.in_dim);
      }
      for (; o < ls.out_dim; ++o) {
        k.axpy(drow[o], wm.row(o), dp, ls.in_dim);
      }
    }
    if (with_penalty && l - 1 == spec.latent_layer) {
      for (std::size_t r = r0; r < r1; ++r) {
        k.axpy(lambda, penalty_grad.row(r), dprev.row(r), spec.latent_dim);
      }
    }
  }
}

}  // namespace

void forward_batch(const NetworkSpec& spec, const Weights& w, linalg::ConstView x,
                   BatchTrace& trace, Pool* pool) {
  if (x.cols != spec.input_dim) {
    fail(errc::shape_mismatch, "forward_batch: batch has " + std::to_string(x.cols) +
                                   " columns, network expects " + std::to_string(spec.input_dim));
  }
  if (x.rows == 0) fail(errc::empty_input, "forward_batch: empty batch");
  resize_trace(spec, x.rows, trace);
  const unsigned workers = effective_workers(pool, x.rows);
  if (workers == 1) {
    forward_rows(spec, w, x, trace, 0, x.rows);
    return;
  }
  pool->run([&](unsigned idx) {
    const auto [r0, r1] = split_range(x.rows, workers, idx);
    forward_rows(spec, w, x, trace, r0, r1);
  });
}

double reconstruction_loss(const NetworkSpec& spec, const Weights& w, linalg::ConstView batch) {
  if (batch.rows == 0) fail(errc::empty_input, "reconstruction_loss: empty batch");
  linalg::Matrix latents;
  double mse = 0.0;
  encode_batch(spec, w, batch, latents, &mse, nullptr);
  return mse;
}

void gradients(const NetworkSpec& spec, const Weights& w, linalg::ConstView batch, double lambda,
               const PenaltyFn& penalty_fn, GradientResult& out, GradientWorkspace& ws,
               Pool* pool) {
  if (batch.rows == 0) fail(errc::empty_input, "gradients: empty batch");
  if (batch.cols != spec.input_dim) {
    fail(errc::shape_mismatch, "gradients: batch width " + std::to_string(batch.cols) +
                                   " != input_dim " + std::to_string(spec.input_dim));
  }
  if (lambda < 0.0) fail(errc::parameter, "gradients: negative penalty weight");

  const unsigned workers = effective_workers(pool, batch.rows);
  resize_trace(spec, batch.rows, ws.trace);
  ws.delta.resize(spec.layers.size());
  for (std::size_t l = 0; l < spec.layers.size(); ++l) {
    ensure_shape(ws.delta[l], batch.rows, spec.layers[l].out_dim);
  }
  if (ws.partial.size() != workers) {
    ws.partial.assign(workers, Weights::zeros_like(spec));
  }
  for (auto& p : ws.partial) p.zero();

  // Phase 1: forward, with per-worker squared-residual partials reduced in
  // worker order.
  std::vector<double> sq(workers, 0.0);
  if (workers == 1) {
    forward_rows(spec, w, batch, ws.trace, 0, batch.rows);
    sq[0] = squared_residual_rows(ws.trace.post.back(), batch, 0, batch.rows);
  } else {
    pool->run([&](unsigned idx) {
      const auto [r0, r1] = split_range(batch.rows, workers, idx);
      forward_rows(spec, w, batch, ws.trace, r0, r1);
      sq[idx] = squared_residual_rows(ws.trace.post.back(), batch, r0, r1);
    });
  }
  double total_sq = 0.0;
  for (double s : sq) total_sq += s;
  const double denom = static_cast<double>(batch.rows) * static_cast<double>(batch.cols);
  out.mse = total_sq / denom;

  // Phase 2: the batch-coupled latent penalty.
  out.penalty = 0.0;
  if (lambda != 0.0 && penalty_fn) {
    out.penalty = penalty_fn(ws.trace.post[spec.latent_layer], ws.penalty_grad);
  } else {
    ws.penalty_grad = linalg::Matrix();
  }

  // Phase 3: backward over row ranges into per-worker accumulators.
  const double mse_scale = 2.0 / denom;
  if (workers == 1) {
    backward_rows(spec, w, batch, ws.trace, ws.delta, ws.penalty_grad, lambda, mse_scale,
                  ws.partial[0], 0, batch.rows);
  } else {
    pool->run([&](unsigned idx) {
      const auto [r0, r1] = split_range(batch.rows, workers, idx);
      backward_rows(spec, w, batch, ws.trace, ws.delta, ws.penalty_grad, lambda, mse_scale,
                    ws.partial[idx], r0, r1);
    });
  }

  // Phase 4: ordered reduction.
  if (out.grads.layers.empty()) out.grads = Weights::zeros_like(spec);
  out.grads.zero();
  for (unsigned k = 0; k < workers; ++k) add_weights(out.grads, ws.partial[k]);
}

GradientResult gradients(const NetworkSpec& spec, const Weights& w, linalg::ConstView batch,
                         double lambda, const PenaltyFn& penalty_fn) {
  GradientResult out;
  GradientWorkspace ws;
  gradients(spec, w, batch, lambda, penalty_fn, out, ws, nullptr);
  return out;
}

void sgd_step(Weights& w, const Weights& grads, double lr, double momentum, Velocity& velocity) {
  if (lr <= 0.0) fail(errc::parameter, "sgd_step: learning rate must be positive");
  if (momentum < 0.0 || momentum >= 1.0) fail(errc::parameter, "sgd_step: momentum must be in [0, 1)");
  if (w.layers.size() != grads.layers.size() || w.layers.size() != velocity.layers.size()) {
    fail(errc::shape_mismatch, "sgd_step: mismatched layer counts");
  }
  const auto& k = kern::active();
  for (std::size_t l = 0; l < w.layers.size(); ++l) {
    auto& wl = w.layers[l];
    const auto& gl = grads.layers[l];
    auto& vl = velocity.layers[l];
    if (wl.w.size() != gl.w.size() || wl.w.size() != vl.w.size()) {
      fail(errc::shape_mismatch, "sgd_step: mismatched shapes at layer " + std::to_string(l));
    }
    k.scal(momentum, vl.w.v.data(), vl.w.size());
    k.axpy(-lr, gl.w.v.data(), vl.w.v.data(), vl.w.size());
    k.axpy(1.0, vl.w.v.data(), wl.w.v.data(), wl.w.size());
    k.scal(momentum, vl.b.data(), vl.b.size());
    k.axpy(-lr, gl.b.data(), vl.b.data(), vl.b.size());
    k.axpy(1.0, vl.b.data(), wl.b.data(), wl.b.size());
  }
}

void encode_batch(const NetworkSpec& spec, const Weights& w, linalg::ConstView x,
                  linalg::Matrix& latents, double* mse, Pool* pool) {
  if (x.rows == 0) fail(errc::empty_input, "encode_batch: empty input");
  if (x.cols != spec.input_dim) {
    fail(errc::shape_mismatch, "encode_batch: input width " + std::to_string(x.cols) +
                                   " != input_dim " + std::to_string(spec.input_dim));
  }
  ensure_shape(latents, x.rows, spec.latent_dim);
  BatchTrace trace;
  double total_sq = 0.0;
  for (std::size_t c0 = 0; c0 < x.rows; c0 += kEvalChunk) {
    const std::size_t c1 = std::min(x.rows, c0 + kEvalChunk);
    linalg::ConstView chunk(x.row(c0), c1 - c0, x.cols);
    forward_batch(spec, w, chunk, trace, pool);
    const linalg::Matrix& z = trace.post[spec.latent_layer];
    for (std::size_t r = 0; r < c1 - c0; ++r) {
      std::memcpy(latents.row(c0 + r), z.row(r), spec.latent_dim * sizeof(double));
    }
    if (mse != nullptr) {
      total_sq += squared_residual_rows(trace.post.back(), chunk, 0, c1 - c0);
    }
  }
  if (mse != nullptr) {
    *mse = total_sq / (static_cast<double>(x.rows) * static_cast<double>(x.cols));
  }
}

}  // namespace psytraj::nn
