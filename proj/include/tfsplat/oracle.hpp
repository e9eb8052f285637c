#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tfsplat/field.hpp"
#include "tfsplat/render.hpp"
#include "tfsplat/scene_io.hpp"
#include "tfsplat/spectral.hpp"

namespace tfsplat {

// Two-point-ear free-field propagation: each ear hears the source delayed by
// distance / c (32-tap windowed sinc) and scaled by 1 m / distance.
Waveform simulate_free_field(const Waveform& source, const Vec3& source_position, const ListenerPose& pose,
                             const FieldConfig& cfg = {});

struct SyntheticOptions {
  double sample_rate = 16000.0;
  double duration = 3.0;        // s
  double ring_radius = 2.0;     // m, listener circle in the x-z plane
  double source_offset = 0.3;   // m, distance of the source from the ring center
  std::optional<Vec3> source_position;  // overrides the seeded placement
  double band_low = 100.0;      // Hz
  double band_high = 8000.0;    // Hz
  double burst_length = 0.25;   // s, including both ramps
  double burst_gap = 0.125;     // s
  double ramp = 0.04;           // s, raised-cosine attack and release
  double gap_level = 0.1;       // envelope level between bursts
  double level = 0.5;           // peak amplitude of the emitted signal
  std::optional<std::vector<double>> source_signal;  // overrides the generated noise
  FieldConfig field;            // head radius and speed of sound
};

struct SyntheticScene {
  std::vector<PoseRecord> poses;
  std::vector<Waveform> recordings;  // raw, float32-representable, one per pose
  std::vector<double> source_signal;
  Vec3 source_position;
  double sample_rate = 16000.0;
  std::map<std::string, std::string> metadata;

  // Same result as writing the scene to disk and reading it back with load_scene.
  Scene to_scene(const SceneConfig& cfg) const;
  void save(const std::filesystem::path& dir) const;
};

// Poses `pose_0 .. pose_{n-1}` evenly spaced on the ring, each facing the center.
std::vector<PoseRecord> ring_poses(int n_poses, double radius);

SyntheticScene generate_synthetic_scene(int n_poses, std::uint64_t seed, const SyntheticOptions& opts = {});

}  // namespace tfsplat
