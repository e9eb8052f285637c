#include "tfsplat/oracle.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <sstream>

#include "fft.hpp"
#include "random.hpp"
#include "tfsplat/error.hpp"

namespace tfsplat {
namespace {

constexpr int kTaps = 32;
constexpr double kReferenceDistance = 1.0;

// x(n - delay) by Hann-windowed sinc interpolation over kTaps neighbours.
std::vector<double> fractional_delay(const std::vector<double>& x, double delay, double gain) {
  const auto whole = static_cast<long>(std::floor(delay));
  const double frac = delay - static_cast<double>(whole);
  constexpr int half = kTaps / 2;
  std::array<double, kTaps> h{};
  for (int k = -half; k < half; ++k) {
    const double u = -frac - k;  // t - m
    const double w = 0.5 * (1.0 + std::cos(std::numbers::pi * u / half));
    const double s = u == 0.0 ? 1.0 : std::sin(std::numbers::pi * u) / (std::numbers::pi * u);
    h[static_cast<std::size_t>(k + half)] = gain * w * s;
  }
  const long n = static_cast<long>(x.size());
  std::vector<double> y(x.size(), 0.0);
  for (long i = 0; i < n; ++i) {
    double acc = 0.0;
    const long base = i - whole;
    for (int k = -half; k < half; ++k) {
      const long m = base + k;
      if (m >= 0 && m < n) acc += h[static_cast<std::size_t>(k + half)] * x[static_cast<std::size_t>(m)];
    }
    y[static_cast<std::size_t>(i)] = acc;
  }
  return y;
}

std::vector<double> noise_bursts(std::size_t n, std::uint64_t seed, const SyntheticOptions& o) {
  detail::Rng rng(seed);
  std::vector<double> x(n);
  for (auto& v : x) v = rng.normal();

  // Brick-wall band limit.
  std::vector<cplx> X(n / 2 + 1);
  detail::rfft(x.data(), X.data(), n);
  for (std::size_t k = 0; k < X.size(); ++k) {
    const double hz = static_cast<double>(k) * o.sample_rate / static_cast<double>(n);
    if (hz < o.band_low || hz > o.band_high) X[k] = 0.0;
  }
  detail::irfft(X.data(), x.data(), n);

  // Bursts with raised-cosine edges over a low bed.
  const double period = o.burst_length + o.burst_gap;
  const double ramp = std::min(o.ramp, o.burst_length / 2);
  double peak = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = std::fmod(static_cast<double>(i) / o.sample_rate, period);
    double shape = 0.0;
    if (t < o.burst_length) {
      shape = 1.0;
      if (t < ramp) shape = 0.5 * (1.0 - std::cos(std::numbers::pi * t / ramp));
      else if (t > o.burst_length - ramp) shape = 0.5 * (1.0 - std::cos(std::numbers::pi * (o.burst_length - t) / ramp));
    }
    x[i] *= o.gap_level + (1.0 - o.gap_level) * shape;
    peak = std::max(peak, std::abs(x[i]));
  }
  if (peak > 0)
    for (auto& v : x) v *= o.level / peak;
  return x;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

Waveform simulate_free_field(const Waveform& source, const Vec3& source_position, const ListenerPose& pose,
                             const FieldConfig& cfg) {
  source.validate();
  pose.validate();
  cfg.validate();
  if (source.channel_count() != 1) throw Error("simulate_free_field: source must be mono");
  if (!is_finite(source_position)) throw Error("simulate_free_field: source position must be finite");

  const Vec3 right = pose.right();
  const Vec3 ears[2] = {pose.position - cfg.head_radius * right, pose.position + cfg.head_radius * right};
  Waveform out(source.sample_rate, 2, source.length());
  for (int e = 0; e < 2; ++e) {
    const double dist = norm(source_position - ears[e]);
    if (dist < 1e-6) throw Error("simulate_free_field: source coincides with an ear");
    const double delay = dist / cfg.speed_of_sound * source.sample_rate;
    out.channels[static_cast<std::size_t>(e)] = fractional_delay(source.channels[0], delay, kReferenceDistance / dist);
  }
  return out;
}

std::vector<PoseRecord> ring_poses(int n_poses, double radius) {
  if (n_poses < 1) throw Error("ring_poses: need at least one pose");
  std::vector<PoseRecord> poses;
  for (int i = 0; i < n_poses; ++i) {
    const double phi = 2.0 * std::numbers::pi * i / n_poses;
    PoseRecord r;
    r.id = "pose_" + std::to_string(i);
    r.position = {radius * std::sin(phi), 0.0, radius * std::cos(phi)};
    // Yaw by phi maps the listener's -z onto the direction of the center.
    r.orientation = Quat{std::cos(phi / 2), 0.0, std::sin(phi / 2), 0.0};
    poses.push_back(r);
  }
  return poses;
}

SyntheticScene generate_synthetic_scene(int n_poses, std::uint64_t seed, const SyntheticOptions& o) {
  if (n_poses < 2) throw Error("generate_synthetic_scene: need at least 2 poses");
  if (!(o.sample_rate > 0) || !(o.duration > 0)) throw Error("generate_synthetic_scene: bad rate or duration");
  if (!(o.source_offset >= 0) || !(o.source_offset < o.ring_radius - 0.5))
    throw Error("generate_synthetic_scene: source must stay well inside the ring");
  if (!(o.band_low >= 0 && o.band_high > o.band_low && o.band_high <= o.sample_rate / 2))
    throw Error("generate_synthetic_scene: bad noise band");
  if (!(o.burst_length > 0 && o.burst_gap >= 0 && o.ramp >= 0 && o.gap_level >= 0 && o.gap_level <= 1))
    throw Error("generate_synthetic_scene: bad burst envelope");

  const auto n = static_cast<std::size_t>(std::llround(o.duration * o.sample_rate));
  SyntheticScene s;
  s.sample_rate = o.sample_rate;
  s.poses = ring_poses(n_poses, o.ring_radius);

  if (o.source_position) {
    s.source_position = *o.source_position;
    if (!is_finite(s.source_position) || norm(s.source_position) > o.ring_radius - 0.5)
      throw Error("generate_synthetic_scene: source must stay well inside the ring");
  } else {
    detail::Rng rng(seed ^ 0x5eed5eedULL);
    const double az = 2.0 * std::numbers::pi * rng.uniform();
    s.source_position = {o.source_offset * std::sin(az), 0.0, o.source_offset * std::cos(az)};
  }

  if (o.source_signal) {
    s.source_signal = *o.source_signal;
    s.source_signal.resize(n, 0.0);
  } else {
    s.source_signal = noise_bursts(n, seed, o);
  }
  Waveform src(o.sample_rate, 1, n);
  src.channels[0] = s.source_signal;

  for (const auto& p : s.poses) {
    Waveform w = simulate_free_field(src, s.source_position, p.pose(), o.field);
    // Quantize to what a float32 WAV stores, so disk and memory scenes agree.
    for (auto& ch : w.channels)
      for (auto& v : ch) v = static_cast<double>(static_cast<float>(v));
    s.recordings.push_back(std::move(w));
  }

  s.metadata = {{"generator", "free_field"},
                {"seed", std::to_string(seed)},
                {"n_poses", std::to_string(n_poses)},
                {"sample_rate", fmt(o.sample_rate)},
                {"duration", fmt(o.duration)},
                {"ring_radius", fmt(o.ring_radius)},
                {"source_x", fmt(s.source_position.x)},
                {"source_y", fmt(s.source_position.y)},
                {"source_z", fmt(s.source_position.z)},
                {"band_low", fmt(o.band_low)},
                {"band_high", fmt(o.band_high)},
                {"head_radius", fmt(o.field.head_radius)},
                {"speed_of_sound", fmt(o.field.speed_of_sound)}};
  return s;
}

Scene SyntheticScene::to_scene(const SceneConfig& cfg) const {
  auto clips = assemble_scenes(poses, recordings, cfg);
  if (cfg.clip_index >= clips.size()) throw Error("synthetic scene: clip index out of range");
  return std::move(clips[cfg.clip_index]);
}

void SyntheticScene::save(const std::filesystem::path& dir) const {
  save_scene_dir(dir, poses, recordings);
  write_key_values(metadata, dir / kMetadataFile);
}

}  // namespace tfsplat
