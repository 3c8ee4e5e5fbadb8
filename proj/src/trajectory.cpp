// SPDX-License-Identifier: Apache-2.0
#include "psytraj/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <limits>

#include "json.hpp"
#include "psytraj/csv.hpp"
#include "psytraj/error.hpp"
#include "psytraj/kernels.hpp"
#include "psytraj/util.hpp"

namespace psytraj::trajectory {

linalg::Matrix encode_sequence(const trainer::TrainedModel& model, const signal::Recording& rec) {
  if (rec.channel_count() != model.spec.input_dim) {
    fail(errc::shape_mismatch, "encode: recording has " + std::to_string(rec.channel_count()) +
                                   " channels, model expects " +
                                   std::to_string(model.spec.input_dim));
  }
  if (!rec.normalized) {
    fail(errc::contract, "encode: recording must be normalized with the model's stats first");
  }
  linalg::Matrix latents;
  nn::encode_batch(model.spec, model.weights, rec.frames, latents);
  return latents;
}

RestingManifold build_manifold(const linalg::Matrix& latents) {
  if (latents.rows < 4) {
    fail(errc::insufficient_data,
         "manifold: need at least 4 latent points, got " + std::to_string(latents.rows));
  }
  const std::size_t l = latents.cols;
  if (l < 3) {
    fail(errc::shape_mismatch,
         "manifold: latent dimension " + std::to_string(l) + " < 3, cannot span 3-D coordinates");
  }

  RestingManifold manifold;
  manifold.points = latents;
  manifold.centroid.assign(l, 0.0);
  for (std::size_t r = 0; r < latents.rows; ++r) {
    const double* row = latents.row(r);
    for (std::size_t c = 0; c < l; ++c) manifold.centroid[c] += row[c];
  }
  for (double& v : manifold.centroid) v /= static_cast<double>(latents.rows);

  linalg::Matrix centered = latents;
  for (std::size_t r = 0; r < centered.rows; ++r) {
    double* row = centered.row(r);
    for (std::size_t c = 0; c < l; ++c) row[c] -= manifold.centroid[c];
  }

  const linalg::SvdResult f = linalg::svd(centered);
  manifold.singular_values = f.s;
  const double smax = std::max(f.s[0], 1e-300);
  std::size_t nonzero = 0;
  for (double s : f.s) {
    if (s > 1e-12 * std::max(smax, 1.0)) ++nonzero;
  }
  manifold.degenerate = nonzero < 3;

  manifold.basis3 = linalg::Matrix(l, 3);
  for (std::size_t r = 0; r < l; ++r) {
    for (std::size_t c = 0; c < 3; ++c) manifold.basis3.at(r, c) = f.v.at(r, c);
  }
  return manifold;
}

Trajectory to_trajectory(const linalg::Matrix& latents, const RestingManifold& manifold,
                         double sample_rate_hz, std::string condition) {
  if (latents.cols != manifold.basis3.rows) {
    fail(errc::shape_mismatch, "trajectory: latent width " + std::to_string(latents.cols) +
                                   " != manifold dimension " +
                                   std::to_string(manifold.basis3.rows));
  }
  if (sample_rate_hz <= 0.0) fail(errc::parameter, "trajectory: sample rate must be positive");
  if (latents.rows == 0) fail(errc::empty_input, "trajectory: no latent samples");

  Trajectory traj;
  traj.sample_rate_hz = sample_rate_hz;
  traj.condition = std::move(condition);
  traj.coords = linalg::Matrix(latents.rows, 3);
  const std::size_t l = latents.cols;
  std::vector<double> centered(l);
  for (std::size_t r = 0; r < latents.rows; ++r) {
    const double* row = latents.row(r);
    for (std::size_t c = 0; c < l; ++c) centered[c] = row[c] - manifold.centroid[c];
    double* out = traj.coords.row(r);
    for (std::size_t c = 0; c < 3; ++c) {
      double acc = 0.0;
      for (std::size_t i = 0; i < l; ++i) acc += centered[i] * manifold.basis3.at(i, c);
      out[c] = acc;
    }
  }
  return traj;
}

std::size_t median_window_samples(double window_ms, double sample_rate_hz) {
  if (window_ms <= 0.0) fail(errc::parameter, "median filter: window must be positive");
  auto w = static_cast<std::size_t>(std::llround(window_ms / 1000.0 * sample_rate_hz));
  if (w < 1) w = 1;
  if (w % 2 == 0) ++w;  // odd so the interior median is a data value
  return w;
}

namespace {

// Sorted sliding window: O(w) insert/erase by memmove, exact medians.
class SortedWindow {
 public:
  explicit SortedWindow(std::size_t capacity) { values_.reserve(capacity); }

  void insert(double v) {
    values_.insert(std::lower_bound(values_.begin(), values_.end(), v), v);
  }

  void erase(double v) {
    const auto it = std::lower_bound(values_.begin(), values_.end(), v);
    values_.erase(it);
  }

  double median() const {
    const std::size_t m = values_.size();
    const std::size_t mid = m / 2;
    if (m % 2 == 1) return values_[mid];
    return 0.5 * (values_[mid - 1] + values_[mid]);
  }

 private:
  std::vector<double> values_;
};

}  // namespace

Trajectory median_filter(const Trajectory& traj, double window_ms) {
  const std::size_t t = traj.coords.rows;
  if (t == 0) fail(errc::empty_input, "median filter: empty trajectory");
  const std::size_t w = median_window_samples(window_ms, traj.sample_rate_hz);
  if (w > 10 * t) {
    fail(errc::parameter, "median filter: window of " + std::to_string(w) +
                              " samples exceeds 10x trajectory length " + std::to_string(t));
  }
  const std::size_t half = w / 2;

  Trajectory out = traj;
  for (std::size_t axis = 0; axis < 3; ++axis) {
    SortedWindow window(w + 1);
    // Prime with the truncated window around index 0: [0, half].
    std::size_t hi = std::min(t, half + 1);
    for (std::size_t i = 0; i < hi; ++i) window.insert(traj.coords.at(i, axis));
    for (std::size_t i = 0; i < t; ++i) {
      out.coords.at(i, axis) = window.median();
      // Slide: next window covers [i+1-half, i+1+half] clamped to [0, t).
      if (i + 1 < t) {
        if (i + 1 + half < t) window.insert(traj.coords.at(i + 1 + half, axis));
        if (i >= half) window.erase(traj.coords.at(i - half, axis));
      }
    }
  }
  return out;
}

std::vector<double> displacement(const Trajectory& traj, const RestingManifold& manifold,
                                 DisplacementMode mode) {
  const std::size_t t = traj.coords.rows;
  std::vector<double> out(t, 0.0);
  if (mode == DisplacementMode::centroid) {
    for (std::size_t i = 0; i < t; ++i) {
      const double* row = traj.coords.row(i);
      out[i] = std::sqrt(row[0] * row[0] + row[1] * row[1] + row[2] * row[2]);
    }
    return out;
  }

  if (manifold.points.rows == 0) {
    fail(errc::empty_input, "displacement: nearest-point mode needs manifold points");
  }
  // Project the manifold cloud into the same 3-D frame, then brute-force
  // nearest neighbor.
  const Trajectory projected = to_trajectory(manifold.points, manifold, traj.sample_rate_hz, "");
  for (std::size_t i = 0; i < t; ++i) {
    const double* p = traj.coords.row(i);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t m = 0; m < projected.coords.rows; ++m) {
      const double* q = projected.coords.row(m);
      const double dx = p[0] - q[0];
      const double dy = p[1] - q[1];
      const double dz = p[2] - q[2];
      best = std::min(best, dx * dx + dy * dy + dz * dz);
    }
    out[i] = std::sqrt(best);
  }
  return out;
}

namespace {

// Central differences in the interior, one-sided at the ends, scaled by rate.
linalg::Matrix finite_difference(const linalg::Matrix& x, double rate) {
  const std::size_t t = x.rows;
  linalg::Matrix d(t, x.cols);
  for (std::size_t c = 0; c < x.cols; ++c) {
    d.at(0, c) = (x.at(1, c) - x.at(0, c)) * rate;
    for (std::size_t i = 1; i + 1 < t; ++i) {
      d.at(i, c) = (x.at(i + 1, c) - x.at(i - 1, c)) * (rate / 2.0);
    }
    d.at(t - 1, c) = (x.at(t - 1, c) - x.at(t - 2, c)) * rate;
  }
  return d;
}

}  // namespace

Kinematics kinematics(const Trajectory& traj) {
  if (traj.coords.rows < 3) {
    fail(errc::insufficient_data,
         "kinematics: need at least 3 samples, got " + std::to_string(traj.coords.rows));
  }
  Kinematics kin;
  kin.velocity = finite_difference(traj.coords, traj.sample_rate_hz);
  kin.acceleration = finite_difference(kin.velocity, traj.sample_rate_hz);
  kin.speed.resize(traj.coords.rows);
  for (std::size_t i = 0; i < traj.coords.rows; ++i) {
    const double* v = kin.velocity.row(i);
    kin.speed[i] = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
  }
  return kin;
}

namespace {

void centroid3(const linalg::Matrix& coords, double out[3]) {
  out[0] = out[1] = out[2] = 0.0;
  for (std::size_t i = 0; i < coords.rows; ++i) {
    const double* row = coords.row(i);
    out[0] += row[0];
    out[1] += row[1];
    out[2] += row[2];
  }
  for (int c = 0; c < 3; ++c) out[c] /= static_cast<double>(coords.rows);
}

double mean_distance_to(const linalg::Matrix& coords, const double center[3]) {
  double acc = 0.0;
  for (std::size_t i = 0; i < coords.rows; ++i) {
    const double* row = coords.row(i);
    const double dx = row[0] - center[0];
    const double dy = row[1] - center[1];
    const double dz = row[2] - center[2];
    acc += std::sqrt(dx * dx + dy * dy + dz * dz);
  }
  return acc / static_cast<double>(coords.rows);
}

}  // namespace

SeparationReport separation(const Trajectory& a, const Trajectory& b) {
  if (a.coords.rows == 0 || b.coords.rows == 0) {
    fail(errc::empty_input, "separation: empty trajectory");
  }
  double ca[3];
  double cb[3];
  centroid3(a.coords, ca);
  centroid3(b.coords, cb);

  SeparationReport report;
  const double dx = ca[0] - cb[0];
  const double dy = ca[1] - cb[1];
  const double dz = ca[2] - cb[2];
  report.centroid_distance = std::sqrt(dx * dx + dy * dy + dz * dz);
  report.spread_a = mean_distance_to(a.coords, ca);
  report.spread_b = mean_distance_to(b.coords, cb);
  const double pooled = 0.5 * (report.spread_a + report.spread_b);
  if (pooled <= 1e-12) {
    fail(errc::degenerate, "separation: pooled spread is zero, ratio undefined");
  }
  report.ratio = report.centroid_distance / pooled;
  return report;
}

void save_trajectory(const Trajectory& traj, const std::filesystem::path& path,
                     const TrajectoryMeta& meta, const std::vector<double>* displacement_series,
                     const Kinematics* kin) {
  std::vector<std::string> header = {"t_s", "x", "y", "z"};
  std::size_t extra = 0;
  if (displacement_series != nullptr) {
    header.emplace_back("displacement");
    ++extra;
  }
  if (kin != nullptr) {
    header.emplace_back("speed");
    ++extra;
  }
  linalg::Matrix table(traj.coords.rows, 4 + extra);
  for (std::size_t i = 0; i < traj.coords.rows; ++i) {
    double* row = table.row(i);
    row[0] = static_cast<double>(i) / traj.sample_rate_hz;
    std::memcpy(row + 1, traj.coords.row(i), 3 * sizeof(double));
    std::size_t c = 4;
    if (displacement_series != nullptr) row[c++] = (*displacement_series)[i];
    if (kin != nullptr) row[c++] = kin->speed[i];
  }
  csv::write_table(path, header, table);

  nlohmann::json j = {
      {"condition", meta.condition},
      {"sample_rate_hz", meta.sample_rate_hz},
      {"filter_window_ms", meta.filter_window_ms},
      {"filter_window_samples", meta.filter_window_samples},
      {"checkpoint_crc32", meta.checkpoint_crc32},
      {"displacement_mode", meta.displacement_mode},
  };
  write_file_text(signal::sidecar_path(path), j.dump(2) + "\n");
}

Trajectory load_trajectory(const std::filesystem::path& path) {
  const csv::Table table = csv::read_table(path);
  int ix = -1, iy = -1, iz = -1;
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    if (table.header[c] == "x") ix = static_cast<int>(c);
    if (table.header[c] == "y") iy = static_cast<int>(c);
    if (table.header[c] == "z") iz = static_cast<int>(c);
  }
  if (ix < 0 || iy < 0 || iz < 0) {
    fail(errc::parse, "trajectory " + path.string() + ": missing x/y/z columns");
  }
  Trajectory traj;
  traj.coords = linalg::Matrix(table.values.rows, 3);
  for (std::size_t r = 0; r < table.values.rows; ++r) {
    traj.coords.at(r, 0) = table.values.at(r, static_cast<std::size_t>(ix));
    traj.coords.at(r, 1) = table.values.at(r, static_cast<std::size_t>(iy));
    traj.coords.at(r, 2) = table.values.at(r, static_cast<std::size_t>(iz));
  }

  const std::filesystem::path meta = signal::sidecar_path(path);
  if (std::filesystem::exists(meta)) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(read_file_text(meta));
    } catch (const nlohmann::json::exception& e) {
      fail(errc::parse, "sidecar " + meta.string() + ": " + e.what());
    }
    traj.sample_rate_hz = j.value("sample_rate_hz", 300.0);
    traj.condition = j.value("condition", std::string{});
  }
  if (traj.coords.rows == 0) fail(errc::empty_input, "trajectory " + path.string() + ": no samples");
  return traj;
}

namespace {

const char* kPalette[] = {"#2ca02c", "#d62728", "#1f77b4", "#ff7f0e", "#9467bd", "#8c564b"};

struct PanelAxes {
  std::size_t a;
  std::size_t b;
  const char* label;
};

std::string fmt_svg(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return std::string(buf);
}

}  // namespace

void export_svg(const std::vector<const Trajectory*>& trajectories,
                const std::filesystem::path& path) {
  if (trajectories.empty()) fail(errc::empty_input, "svg export: no trajectories");

  double lo[3] = {0, 0, 0};
  double hi[3] = {0, 0, 0};
  bool first = true;
  for (const Trajectory* traj : trajectories) {
    for (std::size_t i = 0; i < traj->coords.rows; ++i) {
      const double* row = traj->coords.row(i);
      for (int c = 0; c < 3; ++c) {
        if (first || row[c] < lo[c]) lo[c] = row[c];
        if (first || row[c] > hi[c]) hi[c] = row[c];
      }
      first = false;
    }
  }
  for (int c = 0; c < 3; ++c) {
    const double span = hi[c] - lo[c];
    const double pad = span > 0 ? 0.05 * span : 1.0;
    lo[c] -= pad;
    hi[c] += pad;
  }

  // Stable palette assignment by first appearance of each condition tag.
  std::vector<std::string> tags;
  auto color_for = [&](const std::string& tag) -> const char* {
    for (std::size_t i = 0; i < tags.size(); ++i) {
      if (tags[i] == tag) return kPalette[i % 6];
    }
    tags.push_back(tag);
    return kPalette[(tags.size() - 1) % 6];
  };

  const double panel = 320.0;
  const double margin = 24.0;
  const PanelAxes panels[3] = {{0, 1, "xy"}, {0, 2, "xz"}, {1, 2, "yz"}};

  std::string svg;
  const double width = 3 * panel + 4 * margin;
  const double height = panel + 2 * margin + 16.0;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt_svg(width) + "\" height=\"" +
         fmt_svg(height) + "\" viewBox=\"0 0 " + fmt_svg(width) + " " + fmt_svg(height) + "\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  for (int p = 0; p < 3; ++p) {
    const double x0 = margin + p * (panel + margin);
    const double y0 = margin;
    svg += "<rect x=\"" + fmt_svg(x0) + "\" y=\"" + fmt_svg(y0) + "\" width=\"" + fmt_svg(panel) +
           "\" height=\"" + fmt_svg(panel) + "\" fill=\"none\" stroke=\"#888\"/>\n";
    svg += "<text x=\"" + fmt_svg(x0 + 4) + "\" y=\"" + fmt_svg(y0 + panel + 14) +
           "\" font-family=\"sans-serif\" font-size=\"12\">" + panels[p].label + "</text>\n";
    const std::size_t ax = panels[p].a;
    const std::size_t ay = panels[p].b;
    const double sx = panel / (hi[ax] - lo[ax]);
    const double sy = panel / (hi[ay] - lo[ay]);
    for (const Trajectory* traj : trajectories) {
      svg += "<polyline fill=\"none\" stroke=\"";
      svg += color_for(traj->condition);
      svg += "\" stroke-width=\"0.8\" points=\"";
      for (std::size_t i = 0; i < traj->coords.rows; ++i) {
        const double* row = traj->coords.row(i);
        const double px = x0 + (row[ax] - lo[ax]) * sx;
        const double py = y0 + panel - (row[ay] - lo[ay]) * sy;
        svg += fmt_svg(px);
        svg += ',';
        svg += fmt_svg(py);
        if (i + 1 < traj->coords.rows) svg += ' ';
      }
      svg += "\"/>\n";
    }
  }

  // Legend.
  double lx = margin;
  for (std::size_t i = 0; i < tags.size(); ++i) {
    svg += "<rect x=\"" + fmt_svg(lx) + "\" y=\"4\" width=\"10\" height=\"10\" fill=\"";
    svg += kPalette[i % 6];
    svg += "\"/>\n<text x=\"" + fmt_svg(lx + 14) +
           "\" y=\"13\" font-family=\"sans-serif\" font-size=\"12\">" +
           (tags[i].empty() ? "(untagged)" : tags[i]) + "</text>\n";
    lx += 120.0;
  }
  svg += "</svg>\n";
  write_file_text(path, svg);
}

}  // namespace psytraj::trajectory
