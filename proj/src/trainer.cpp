// SPDX-License-Identifier: Apache-2.0
#include "psytraj/trainer.hpp"

#include <bit>
#include <chrono>
#include <cmath>
#include <cstring>
#include <numeric>

#include "json.hpp"
#include "psytraj/error.hpp"
#include "psytraj/pool.hpp"
#include "psytraj/rng.hpp"
#include "psytraj/util.hpp"

namespace psytraj::trainer {

using nlohmann::json;

namespace {

constexpr char kMagic[4] = {'L', 'T', 'A', 'E'};
constexpr uint32_t kFormatVersion = 1;
constexpr double kDivergenceCeiling = 1e6;

}  // namespace

void TrainConfig::validate() const {
  if (max_epochs == 0) fail(errc::parameter, "config: max_epochs must be positive");
  if (batch_size == 0) fail(errc::parameter, "config: batch_size must be positive");
  if (lr <= 0.0) fail(errc::parameter, "config: lr must be positive");
  if (momentum < 0.0 || momentum >= 1.0) fail(errc::parameter, "config: momentum must be in [0, 1)");
  if (ortho.penalty_weight < 0.0) fail(errc::parameter, "config: penalty weight must be nonnegative");
  if (ortho.tolerance_deg <= 0.0) fail(errc::parameter, "config: tolerance must be positive");
  if (latent_dim == 0) fail(errc::parameter, "config: latent_dim must be positive");
  if (ortho.penalty_weight > 0.0 && batch_size < 2) {
    fail(errc::parameter, "config: the angular penalty needs batches of at least 2 samples");
  }
}

namespace {

json config_to_json(const TrainConfig& cfg) {
  return json{
      {"max_epochs", cfg.max_epochs},
      {"batch_size", cfg.batch_size},
      {"lr", cfg.lr},
      {"momentum", cfg.momentum},
      {"seed", cfg.seed},
      {"snr_floor_epoch", cfg.snr_floor_epoch},
      {"latent_dim", cfg.latent_dim},
      {"threads", cfg.threads},
      {"ortho",
       {{"tolerance_deg", cfg.ortho.tolerance_deg},
        {"penalty_weight", cfg.ortho.penalty_weight},
        {"orthonormalize_each_epoch", cfg.ortho.orthonormalize_each_epoch}}},
  };
}

TrainConfig config_from_json(const json& j) {
  TrainConfig cfg;
  cfg.max_epochs = j.value("max_epochs", cfg.max_epochs);
  cfg.batch_size = j.value("batch_size", cfg.batch_size);
  cfg.lr = j.value("lr", cfg.lr);
  cfg.momentum = j.value("momentum", cfg.momentum);
  cfg.seed = j.value("seed", cfg.seed);
  cfg.snr_floor_epoch = j.value("snr_floor_epoch", cfg.snr_floor_epoch);
  cfg.latent_dim = j.value("latent_dim", cfg.latent_dim);
  cfg.threads = j.value("threads", cfg.threads);
  if (j.contains("ortho")) {
    const json& o = j["ortho"];
    cfg.ortho.tolerance_deg = o.value("tolerance_deg", cfg.ortho.tolerance_deg);
    cfg.ortho.penalty_weight = o.value("penalty_weight", cfg.ortho.penalty_weight);
    cfg.ortho.orthonormalize_each_epoch =
        o.value("orthonormalize_each_epoch", cfg.ortho.orthonormalize_each_epoch);
  }
  cfg.validate();
  return cfg;
}

json network_to_json(const nn::NetworkSpec& spec) {
  json layers = json::array();
  for (const auto& l : spec.layers) {
    layers.push_back(
        {{"in", l.in_dim}, {"out", l.out_dim}, {"activation", nn::to_string(l.activation)}});
  }
  return json{
      {"input_dim", spec.input_dim},   {"latent_dim", spec.latent_dim},
      {"latent_layer", spec.latent_layer}, {"allow_narrow_relu", spec.allow_narrow_relu},
      {"layers", layers},
  };
}

nn::NetworkSpec network_from_json(const json& j) {
  nn::NetworkSpec spec;
  spec.input_dim = j.at("input_dim").get<std::size_t>();
  spec.latent_dim = j.at("latent_dim").get<std::size_t>();
  spec.latent_layer = j.at("latent_layer").get<std::size_t>();
  spec.allow_narrow_relu = j.at("allow_narrow_relu").get<bool>();
  for (const auto& jl : j.at("layers")) {
    spec.layers.push_back({jl.at("in").get<std::size_t>(), jl.at("out").get<std::size_t>(),
                           nn::activation_from_string(jl.at("activation").get<std::string>())});
  }
  spec.validate();
  return spec;
}

json stats_to_json(const signal::NormalizationStats& stats) {
  return json{{"mean", stats.mean}, {"stddev", stats.stddev}, {"degenerate", stats.degenerate}};
}

signal::NormalizationStats stats_from_json(const json& j) {
  signal::NormalizationStats stats;
  stats.mean = j.at("mean").get<std::vector<double>>();
  stats.stddev = j.at("stddev").get<std::vector<double>>();
  stats.degenerate = j.at("degenerate").get<std::vector<uint8_t>>();
  return stats;
}

json record_to_json(const EpochRecord& rec, bool with_wall) {
  json j{
      {"epoch", rec.epoch},
      {"curriculum", rec.curriculum},
      {"mse", rec.mse},
      {"penalty", rec.penalty},
      {"max_angle_deviation_deg", rec.max_angle_deviation_deg},
      {"angles_deg", rec.angles_deg},
      {"orthonormalized", rec.orthonormalized},
  };
  if (with_wall) j["wall_ms"] = rec.wall_ms;
  return j;
}

EpochRecord record_from_json(const json& j) {
  EpochRecord rec;
  rec.epoch = j.at("epoch").get<std::size_t>();
  rec.curriculum = j.at("curriculum").get<bool>();
  rec.mse = j.at("mse").get<double>();
  rec.penalty = j.at("penalty").get<double>();
  rec.max_angle_deviation_deg = j.at("max_angle_deviation_deg").get<double>();
  rec.angles_deg = j.at("angles_deg").get<std::vector<double>>();
  rec.orthonormalized = j.at("orthonormalized").get<bool>();
  rec.wall_ms = j.value("wall_ms", 0.0);
  return rec;
}

}  // namespace

TrainConfig TrainConfig::from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(errc::parse, std::string("train config: ") + e.what());
  }
  try {
    return config_from_json(j);
  } catch (const json::exception& e) {
    fail(errc::parse, std::string("train config: ") + e.what());
  }
}

std::string TrainConfig::to_json_text() const { return config_to_json(*this).dump(2) + "\n"; }

Curriculum::Curriculum(const signal::Recording& normalized, bool snr_floor, uint64_t seed)
    : snr_floor_(snr_floor), seed_(seed) {
  if (!normalized.normalized) {
    fail(errc::contract, "curriculum: recording must be normalized first");
  }
  real_ = normalized.frames;
  if (snr_floor_) {
    pattern_ = signal::common_mode_pattern(normalized, normalized.frame_count()).frames;
  }
}

void Curriculum::materialize_epoch(std::size_t epoch, linalg::Matrix& out) const {
  if (is_curriculum_epoch(epoch)) {
    out = pattern_;
    return;
  }
  if (out.rows != real_.rows || out.cols != real_.cols) {
    out = linalg::Matrix(real_.rows, real_.cols);
  }
  std::vector<uint32_t> perm(real_.rows);
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(hash_combine(seed_, hash_combine(0x65706f6368ULL /* "epoch" */, epoch)));
  rng.shuffle(perm);
  for (std::size_t r = 0; r < perm.size(); ++r) {
    std::memcpy(out.row(r), real_.row(perm[r]), real_.cols * sizeof(double));
  }
}

Curriculum build_curriculum(const signal::Recording& normalized, const TrainConfig& cfg) {
  return Curriculum(normalized, cfg.snr_floor_epoch, cfg.seed);
}

TrainedModel train(const signal::Recording& rec, const TrainConfig& cfg) {
  cfg.validate();
  rec.validate();
  if (rec.frame_count() < 2 * cfg.batch_size) {
    fail(errc::insufficient_data, "train: need at least " + std::to_string(2 * cfg.batch_size) +
                                      " frames, got " + std::to_string(rec.frame_count()));
  }

  TrainedModel model;
  model.config = cfg;
  model.stats = signal::compute_stats(rec);
  const signal::Recording norm = signal::normalize(rec, model.stats);
  model.spec = nn::NetworkSpec::autoencoder(rec.channel_count(), cfg.latent_dim);
  const Curriculum curriculum = build_curriculum(norm, cfg);

  model.weights = nn::init_weights(model.spec, cfg.seed);
  nn::Velocity velocity = nn::Weights::zeros_like(model.spec);
  nn::GradientResult grad;
  nn::GradientWorkspace ws;
  Pool pool(cfg.threads);
  Pool* pool_ptr = pool.workers() > 1 ? &pool : nullptr;

  const double lambda = cfg.ortho.penalty_weight;
  nn::PenaltyFn penalty_fn;
  if (lambda > 0.0) {
    penalty_fn = [](const linalg::Matrix& z, linalg::Matrix& dz) {
      return ortho::angular_penalty_grad(z, dz);
    };
  }

  linalg::Matrix epoch_data;
  linalg::Matrix latents;
  model.converged = false;

  for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    curriculum.materialize_epoch(epoch, epoch_data);

    for (std::size_t b0 = 0; b0 < epoch_data.rows; b0 += cfg.batch_size) {
      const std::size_t b1 = std::min(epoch_data.rows, b0 + cfg.batch_size);
      if (b1 - b0 < 2 && lambda > 0.0) continue;  // penalty undefined on 1-row tails
      nn::gradients(model.spec, model.weights, linalg::view_rows(epoch_data, b0, b1), lambda,
                    penalty_fn, grad, ws, pool_ptr);
      const double loss = grad.mse + lambda * grad.penalty;
      if (!std::isfinite(loss) || loss > kDivergenceCeiling) {
        fail(errc::divergence, "train: loss diverged at epoch " + std::to_string(epoch));
      }
      nn::sgd_step(model.weights, grad.grads, cfg.lr, cfg.momentum, velocity);
    }

    EpochRecord record;
    record.epoch = epoch;
    record.curriculum = curriculum.is_curriculum_epoch(epoch);
    record.orthonormalized = false;
    if (cfg.ortho.orthonormalize_each_epoch) {
      record.orthonormalized = ortho::epoch_orthonormalize(model.weights, model.spec).applied;
    }

    // Convergence is judged on the full real dataset's latents, never on
    // minibatches, and never on the SNR-floor pass.
    nn::encode_batch(model.spec, model.weights, curriculum.real_frames(), latents, &record.mse,
                     pool_ptr);
    const ortho::AnglePenaltyReport report = ortho::angular_penalty(latents);
    record.penalty = report.penalty;
    record.max_angle_deviation_deg = report.max_deviation_deg;
    record.angles_deg = report.angles_deg;
    record.wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    model.history.epochs.push_back(std::move(record));

    if (!curriculum.is_curriculum_epoch(epoch) && ortho::check_convergence(report, cfg.ortho)) {
      model.converged = true;
      break;
    }
  }
  return model;
}

namespace {

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

void put_u64(std::vector<uint8_t>& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

void put_f64(std::vector<uint8_t>& out, double d) { put_u64(out, std::bit_cast<uint64_t>(d)); }

uint32_t get_u32(const uint8_t* p) {
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(p[i]) << (8 * i);
  return v;
}

uint64_t get_u64(const uint8_t* p) {
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(p[i]) << (8 * i);
  return v;
}

double get_f64(const uint8_t* p) { return std::bit_cast<double>(get_u64(p)); }

}  // namespace

void save_checkpoint(const TrainedModel& model, const std::filesystem::path& path) {
  json j;
  j["network"] = network_to_json(model.spec);
  j["config"] = config_to_json(model.config);
  j["stats"] = stats_to_json(model.stats);
  j["converged"] = model.converged;
  json hist = json::array();
  for (const auto& rec : model.history.epochs) hist.push_back(record_to_json(rec, false));
  j["history"] = hist;
  const std::string payload = j.dump();

  std::vector<uint8_t> bytes;
  bytes.reserve(payload.size() + model.weights.param_count() * 8 + 64);
  bytes.insert(bytes.end(), kMagic, kMagic + 4);
  put_u32(bytes, kFormatVersion);
  put_u64(bytes, payload.size());
  bytes.insert(bytes.end(), payload.begin(), payload.end());
  put_u64(bytes, model.weights.param_count());
  for (const auto& layer : model.weights.layers) {
    for (double v : layer.w.v) put_f64(bytes, v);
    for (double v : layer.b) put_f64(bytes, v);
  }
  put_u32(bytes, crc32(bytes.data(), bytes.size()));
  write_file_bytes(path, bytes.data(), bytes.size());
}

TrainedModel load_checkpoint(const std::filesystem::path& path) {
  const std::vector<uint8_t> bytes = read_file_bytes(path);
  if (bytes.size() < 4 + 4 + 8 + 8 + 4) {
    fail(errc::integrity, "checkpoint " + path.string() + ": truncated");
  }
  const uint32_t stored_crc = get_u32(bytes.data() + bytes.size() - 4);
  if (crc32(bytes.data(), bytes.size() - 4) != stored_crc) {
    fail(errc::integrity, "checkpoint " + path.string() + ": CRC mismatch");
  }
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) {
    fail(errc::integrity, "checkpoint " + path.string() + ": bad magic");
  }
  const uint32_t version = get_u32(bytes.data() + 4);
  if (version != kFormatVersion) {
    fail(errc::version_mismatch, "checkpoint " + path.string() + ": format version " +
                                     std::to_string(version) + ", expected " +
                                     std::to_string(kFormatVersion));
  }
  const uint64_t json_len = get_u64(bytes.data() + 8);
  std::size_t off = 16;
  if (off + json_len + 8 + 4 > bytes.size()) {
    fail(errc::integrity, "checkpoint " + path.string() + ": JSON block overruns file");
  }
  json j;
  try {
    j = json::parse(bytes.begin() + static_cast<std::ptrdiff_t>(off),
                    bytes.begin() + static_cast<std::ptrdiff_t>(off + json_len));
  } catch (const json::exception& e) {
    fail(errc::integrity, "checkpoint " + path.string() + ": bad JSON block: " + e.what());
  }
  off += json_len;

  TrainedModel model;
  try {
    model.spec = network_from_json(j.at("network"));
    model.config = config_from_json(j.at("config"));
    model.stats = stats_from_json(j.at("stats"));
    model.converged = j.at("converged").get<bool>();
    for (const auto& jr : j.at("history")) model.history.epochs.push_back(record_from_json(jr));
  } catch (const json::exception& e) {
    fail(errc::integrity, "checkpoint " + path.string() + ": incomplete JSON block: " + e.what());
  }
  if (model.stats.channel_count() != model.spec.input_dim) {
    fail(errc::integrity, "checkpoint " + path.string() + ": stats do not match network input");
  }

  const uint64_t count = get_u64(bytes.data() + off);
  off += 8;
  model.weights = nn::Weights::zeros_like(model.spec);
  if (count != model.weights.param_count() || off + count * 8 + 4 != bytes.size()) {
    fail(errc::integrity, "checkpoint " + path.string() + ": weight payload size mismatch");
  }
  for (auto& layer : model.weights.layers) {
    for (double& v : layer.w.v) {
      v = get_f64(bytes.data() + off);
      off += 8;
    }
    for (double& v : layer.b) {
      v = get_f64(bytes.data() + off);
      off += 8;
    }
  }
  if (!model.weights.finite()) {
    fail(errc::integrity, "checkpoint " + path.string() + ": non-finite weights");
  }
  return model;
}

uint32_t checkpoint_crc(const std::filesystem::path& path) {
  const std::vector<uint8_t> bytes = read_file_bytes(path);
  if (bytes.size() < 4) fail(errc::integrity, "checkpoint " + path.string() + ": truncated");
  const uint32_t stored = get_u32(bytes.data() + bytes.size() - 4);
  if (crc32(bytes.data(), bytes.size() - 4) != stored) {
    fail(errc::integrity, "checkpoint " + path.string() + ": CRC mismatch");
  }
  return stored;
}

void write_train_log(const TrainHistory& history, bool converged,
                     const std::filesystem::path& path) {
  std::string out;
  for (const auto& rec : history.epochs) {
    json j = record_to_json(rec, true);
    j["converged"] = converged && &rec == &history.epochs.back();
    out += j.dump();
    out += '\n';
  }
  write_file_text(path, out);
}

}  // namespace psytraj::trainer
