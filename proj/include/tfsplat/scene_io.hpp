#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "tfsplat/math.hpp"
#include "tfsplat/render.hpp"
#include "tfsplat/spectral.hpp"

namespace tfsplat {

struct PoseRecord {
  std::string id;
  Vec3 position;
  Quat orientation;

  ListenerPose pose() const { return {position, orientation}; }
  bool operator==(const PoseRecord&) const = default;
};

struct PoseAudio {
  PoseRecord pose;
  Waveform audio;  // stereo
};

// One aligned clip of a multi-pose recording.
struct Scene {
  Waveform source_clip;  // stereo, recorded at `reference`
  PoseRecord reference;
  std::vector<PoseAudio> targets;   // training pairs
  std::vector<PoseAudio> held_out;  // evaluation only
  double sample_rate = 16000.0;
  double clip_seconds = 3.0;
  std::size_t clip_index = 0;

  const PoseAudio* find(const std::string& id) const;
};

struct SceneConfig {
  std::string source_pose;            // empty: first pose in the poses file
  std::vector<std::string> holdout;   // pose ids excluded from training
  double clip_seconds = 3.0;
  double sample_rate = 16000.0;
  std::size_t clip_index = 0;
  bool source_in_targets = true;      // the reference pose is also a training target
  bool highpass = true;               // 150 Hz highpass on every recording

  void validate() const;
};

inline constexpr const char* kPosesFile = "poses.txt";
inline constexpr const char* kMetadataFile = "metadata.txt";

// RIFF/WAVE, PCM16 or IEEE float32, 1-2 channels. PCM16 is scaled by 1/32768.
Waveform load_wav(const std::filesystem::path& path);
// Always writes IEEE float32.
void save_wav(const Waveform& x, const std::filesystem::path& path);

// Line format: `id px py pz qw qx qy qz`; '#' starts a comment.
std::vector<PoseRecord> read_poses(const std::filesystem::path& path);
void write_poses(const std::vector<PoseRecord>& poses, const std::filesystem::path& path);

// `key = value` lines with '#' comments.
std::map<std::string, std::string> read_key_values(const std::filesystem::path& path);
void write_key_values(const std::map<std::string, std::string>& values, const std::filesystem::path& path);

// Filters (optionally), segments and splits per-pose recordings into clips.
// `audio[i]` belongs to `poses[i]`.
std::vector<Scene> assemble_scenes(const std::vector<PoseRecord>& poses, const std::vector<Waveform>& audio,
                                   const SceneConfig& cfg);

// Reads `poses.txt` and `<id>.wav` for each pose from `dir`.
std::vector<Scene> load_scene_clips(const std::filesystem::path& dir, const SceneConfig& cfg);
Scene load_scene(const std::filesystem::path& dir, const SceneConfig& cfg);

// Writes a scene directory: poses file plus one WAV per pose (raw, unfiltered).
void save_scene_dir(const std::filesystem::path& dir, const std::vector<PoseRecord>& poses,
                    const std::vector<Waveform>& audio);

}  // namespace tfsplat
