// SPDX-License-Identifier: Apache-2.0
#include "psytraj/cli.hpp"

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "psytraj/csv.hpp"
#include "psytraj/error.hpp"
#include "psytraj/signal.hpp"
#include "psytraj/trainer.hpp"
#include "psytraj/trajectory.hpp"
#include "psytraj/util.hpp"

namespace psytraj::cli {

using nlohmann::json;

namespace {

void emit(const json& j) { std::cout << j.dump() << "\n"; }

json summary_of(const trainer::TrainedModel& model) {
  json j;
  j["converged"] = model.converged;
  j["epochs_run"] = model.history.epochs.size();
  if (!model.history.epochs.empty()) {
    const auto& last = model.history.epochs.back();
    j["final_mse"] = last.mse;
    j["final_penalty"] = last.penalty;
    j["final_max_angle_deviation_deg"] = last.max_angle_deviation_deg;
    j["final_angles_deg"] = last.angles_deg;
  }
  return j;
}

struct SynthArgs {
  std::string spec_path;
  std::string out_path;
  uint64_t seed = 0;
};

struct TrainArgs {
  std::string data_path;
  std::string config_path;
  std::string out_path;
  std::string log_path;
  std::optional<double> rate;
  std::optional<uint64_t> seed;
  std::optional<std::size_t> max_epochs;
  std::optional<std::size_t> batch_size;
  std::optional<double> lr;
  std::optional<double> momentum;
  std::optional<double> lambda;
  std::optional<double> tolerance_deg;
  std::optional<std::size_t> latent_dim;
  std::optional<unsigned> threads;
  bool no_snr_floor = false;
  bool no_orthonormalize = false;
};

struct EncodeArgs {
  std::string model_path;
  std::string data_path;
  std::string out_path;
  std::optional<double> rate;
};

struct TrackArgs {
  std::string model_path;
  std::string resting_path;
  std::string task_path;
  std::string out_path;
  std::string svg_path;
  double filter_ms = 100.0;
  std::optional<double> rate;
  std::string mode = "centroid";
};

struct CompareArgs {
  std::string a_path;
  std::string b_path;
  std::string out_path;
  std::string svg_path;
};

int run_synth(const SynthArgs& args) {
  const signal::SynthSpec spec = signal::SynthSpec::from_json_text(read_file_text(args.spec_path));
  const signal::Recording rec = signal::synthesize(spec, args.seed);
  signal::save_recording(rec, args.out_path);
  emit(json{{"command", "synth"},
            {"out", args.out_path},
            {"frames", rec.frame_count()},
            {"channels", rec.channel_count()},
            {"sample_rate_hz", rec.sample_rate_hz},
            {"condition", rec.condition},
            {"seed", args.seed}});
  return 0;
}

int run_train(const TrainArgs& args) {
  trainer::TrainConfig cfg;
  if (!args.config_path.empty()) {
    cfg = trainer::TrainConfig::from_json_text(read_file_text(args.config_path));
  }
  if (args.seed) cfg.seed = *args.seed;
  if (args.max_epochs) cfg.max_epochs = *args.max_epochs;
  if (args.batch_size) cfg.batch_size = *args.batch_size;
  if (args.lr) cfg.lr = *args.lr;
  if (args.momentum) cfg.momentum = *args.momentum;
  if (args.lambda) cfg.ortho.penalty_weight = *args.lambda;
  if (args.tolerance_deg) cfg.ortho.tolerance_deg = *args.tolerance_deg;
  if (args.latent_dim) cfg.latent_dim = *args.latent_dim;
  if (args.threads) cfg.threads = *args.threads;
  if (args.no_snr_floor) cfg.snr_floor_epoch = false;
  if (args.no_orthonormalize) cfg.ortho.orthonormalize_each_epoch = false;
  cfg.validate();

  const signal::Recording rec = signal::load_recording(args.data_path, args.rate);
  const trainer::TrainedModel model = trainer::train(rec, cfg);
  trainer::save_checkpoint(model, args.out_path);

  std::string log_path = args.log_path;
  if (log_path.empty()) {
    std::filesystem::path p(args.out_path);
    p.replace_extension(".log.jsonl");
    log_path = p.string();
  }
  trainer::write_train_log(model.history, model.converged, log_path);

  json j = summary_of(model);
  j["command"] = "train";
  j["out"] = args.out_path;
  j["log"] = log_path;
  j["checkpoint_crc32"] = crc32_hex(trainer::checkpoint_crc(args.out_path));
  emit(j);
  return 0;
}

int run_encode(const EncodeArgs& args) {
  const trainer::TrainedModel model = trainer::load_checkpoint(args.model_path);
  const signal::Recording raw = signal::load_recording(args.data_path, args.rate);
  const signal::Recording rec = signal::normalize(raw, model.stats);
  const linalg::Matrix latents = trajectory::encode_sequence(model, rec);

  std::vector<std::string> header;
  for (std::size_t c = 0; c < latents.cols; ++c) header.push_back("z" + std::to_string(c));
  csv::write_table(args.out_path, header, latents);
  const std::string crc = crc32_hex(trainer::checkpoint_crc(args.model_path));
  write_file_text(signal::sidecar_path(args.out_path),
                  json{{"sample_rate_hz", rec.sample_rate_hz},
                       {"condition", rec.condition},
                       {"checkpoint_crc32", crc}}
                          .dump(2) +
                      "\n");
  emit(json{{"command", "encode"},
            {"out", args.out_path},
            {"frames", latents.rows},
            {"latent_dim", latents.cols},
            {"condition", rec.condition},
            {"checkpoint_crc32", crc}});
  return 0;
}

int run_track(const TrackArgs& args) {
  trajectory::DisplacementMode mode = trajectory::DisplacementMode::centroid;
  if (args.mode == "nearest") {
    mode = trajectory::DisplacementMode::nearest_point;
  } else if (args.mode != "centroid") {
    fail(errc::parameter, "track: unknown displacement mode '" + args.mode + "'");
  }

  const trainer::TrainedModel model = trainer::load_checkpoint(args.model_path);
  const std::string crc = crc32_hex(trainer::checkpoint_crc(args.model_path));

  const signal::Recording resting =
      signal::normalize(signal::load_recording(args.resting_path, args.rate), model.stats);
  const trajectory::RestingManifold manifold =
      trajectory::build_manifold(trajectory::encode_sequence(model, resting));

  const signal::Recording task_raw = signal::load_recording(args.task_path, args.rate);
  const signal::Recording task = signal::normalize(task_raw, model.stats);
  const linalg::Matrix latents = trajectory::encode_sequence(model, task);
  const trajectory::Trajectory traj =
      trajectory::to_trajectory(latents, manifold, task.sample_rate_hz, task.condition);
  const trajectory::Trajectory filtered = trajectory::median_filter(traj, args.filter_ms);

  const std::vector<double> disp = trajectory::displacement(filtered, manifold, mode);
  const trajectory::Kinematics kin = trajectory::kinematics(filtered);

  trajectory::TrajectoryMeta meta;
  meta.condition = filtered.condition;
  meta.sample_rate_hz = filtered.sample_rate_hz;
  meta.filter_window_ms = args.filter_ms;
  meta.filter_window_samples =
      trajectory::median_window_samples(args.filter_ms, filtered.sample_rate_hz);
  meta.checkpoint_crc32 = crc;
  meta.displacement_mode = args.mode;
  trajectory::save_trajectory(filtered, args.out_path, meta, &disp, &kin);
  if (!args.svg_path.empty()) {
    trajectory::export_svg({&filtered}, args.svg_path);
  }

  double mean_disp = 0.0;
  for (double d : disp) mean_disp += d;
  mean_disp /= static_cast<double>(disp.size());
  double mean_speed = 0.0;
  for (double s : kin.speed) mean_speed += s;
  mean_speed /= static_cast<double>(kin.speed.size());

  json j{{"command", "track"},
         {"out", args.out_path},
         {"frames", filtered.coords.rows},
         {"condition", filtered.condition},
         {"filter_window_ms", args.filter_ms},
         {"filter_window_samples", meta.filter_window_samples},
         {"displacement_mode", args.mode},
         {"mean_displacement", mean_disp},
         {"mean_speed", mean_speed},
         {"checkpoint_crc32", crc}};
  if (!args.svg_path.empty()) j["svg"] = args.svg_path;
  emit(j);
  return 0;
}

int run_compare(const CompareArgs& args) {
  const trajectory::Trajectory a = trajectory::load_trajectory(args.a_path);
  const trajectory::Trajectory b = trajectory::load_trajectory(args.b_path);
  const trajectory::SeparationReport rep = trajectory::separation(a, b);

  const json j{{"command", "compare"},
               {"traj_a", args.a_path},
               {"traj_b", args.b_path},
               {"condition_a", a.condition},
               {"condition_b", b.condition},
               {"n_a", a.coords.rows},
               {"n_b", b.coords.rows},
               {"centroid_distance", rep.centroid_distance},
               {"spread_a", rep.spread_a},
               {"spread_b", rep.spread_b},
               {"separation_ratio", rep.ratio}};
  if (!args.out_path.empty()) write_file_text(args.out_path, j.dump(2) + "\n");
  if (!args.svg_path.empty()) trajectory::export_svg({&a, &b}, args.svg_path);
  emit(j);
  return 0;
}

int run_inspect(const std::string& model_path) {
  const trainer::TrainedModel model = trainer::load_checkpoint(model_path);
  json ladder = json::array();
  for (const auto& l : model.spec.layers) ladder.push_back(l.out_dim);

  json j = summary_of(model);
  j["command"] = "inspect";
  j["model"] = model_path;
  j["network"] = {{"input_dim", model.spec.input_dim},
                  {"latent_dim", model.spec.latent_dim},
                  {"layer_widths", ladder}};
  j["config"] = json::parse(model.config.to_json_text());
  j["checkpoint_crc32"] = crc32_hex(trainer::checkpoint_crc(model_path));
  emit(j);
  return 0;
}

}  // namespace

int run(int argc, const char* const* argv) {
  CLI::App app{"compress multichannel psychophysiological recordings into 3-D latent trajectories"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "generate a recording from a synthesis spec");
  synth_cmd->add_option("--spec", synth.spec_path, "synthesis spec JSON")->required();
  synth_cmd->add_option("--seed", synth.seed, "random seed");
  synth_cmd->add_option("--out", synth.out_path, "output CSV path")->required();

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "train the autoencoder on a recording");
  train_cmd->add_option("--data", train.data_path, "training recording CSV")->required();
  train_cmd->add_option("--config", train.config_path, "train config JSON");
  train_cmd->add_option("--out", train.out_path, "checkpoint output path")->required();
  train_cmd->add_option("--log", train.log_path, "JSONL epoch log path");
  train_cmd->add_option("--rate", train.rate, "sample rate override (Hz)");
  train_cmd->add_option("--seed", train.seed, "random seed");
  train_cmd->add_option("--max-epochs", train.max_epochs, "epoch budget");
  train_cmd->add_option("--batch-size", train.batch_size, "minibatch rows");
  train_cmd->add_option("--lr", train.lr, "learning rate");
  train_cmd->add_option("--momentum", train.momentum, "SGD momentum");
  train_cmd->add_option("--lambda", train.lambda, "angular penalty weight");
  train_cmd->add_option("--tolerance-deg", train.tolerance_deg, "orthogonality tolerance");
  train_cmd->add_option("--latent-dim", train.latent_dim, "latent width");
  train_cmd->add_option("--threads", train.threads, "gradient workers (0 = auto)");
  train_cmd->add_flag("--no-snr-floor", train.no_snr_floor, "skip the common-mode first epoch");
  train_cmd->add_flag("--no-orthonormalize", train.no_orthonormalize,
                      "skip per-epoch latent orthonormalization");

  EncodeArgs encode;
  auto* encode_cmd = app.add_subcommand("encode", "map a recording to latent rows");
  encode_cmd->add_option("--model", encode.model_path, "checkpoint path")->required();
  encode_cmd->add_option("--data", encode.data_path, "recording CSV")->required();
  encode_cmd->add_option("--out", encode.out_path, "latent CSV output")->required();
  encode_cmd->add_option("--rate", encode.rate, "sample rate override (Hz)");

  TrackArgs track;
  auto* track_cmd = app.add_subcommand("track", "trajectory of a task recording vs a resting manifold");
  track_cmd->add_option("--model", track.model_path, "checkpoint path")->required();
  track_cmd->add_option("--resting", track.resting_path, "eyes-closed recording CSV")->required();
  track_cmd->add_option("--task", track.task_path, "task recording CSV")->required();
  track_cmd->add_option("--filter-ms", track.filter_ms, "median filter window (ms)");
  track_cmd->add_option("--out", track.out_path, "trajectory CSV output")->required();
  track_cmd->add_option("--svg", track.svg_path, "optional SVG figure output");
  track_cmd->add_option("--rate", track.rate, "sample rate override (Hz)");
  track_cmd->add_option("--displacement-mode", track.mode, "centroid | nearest");

  CompareArgs compare;
  auto* compare_cmd = app.add_subcommand("compare", "separation statistics of two trajectories");
  compare_cmd->add_option("--traj-a", compare.a_path, "first trajectory CSV")->required();
  compare_cmd->add_option("--traj-b", compare.b_path, "second trajectory CSV")->required();
  compare_cmd->add_option("--out", compare.out_path, "report JSON output");
  compare_cmd->add_option("--svg", compare.svg_path, "optional SVG figure output");

  std::string inspect_model;
  auto* inspect_cmd = app.add_subcommand("inspect", "print a checkpoint's summary as JSON");
  inspect_cmd->add_option("--model", inspect_model, "checkpoint path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (app.got_subcommand(synth_cmd)) return run_synth(synth);
    if (app.got_subcommand(train_cmd)) return run_train(train);
    if (app.got_subcommand(encode_cmd)) return run_encode(encode);
    if (app.got_subcommand(track_cmd)) return run_track(track);
    if (app.got_subcommand(compare_cmd)) return run_compare(compare);
    if (app.got_subcommand(inspect_cmd)) return run_inspect(inspect_model);
  } catch (const error& e) {
    std::fprintf(stderr, "psytraj: %s\n", e.what());
    return e.numeric() ? 3 : 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "psytraj: %s\n", e.what());
    return 2;
  }
  return 1;
}

}  // namespace psytraj::cli
