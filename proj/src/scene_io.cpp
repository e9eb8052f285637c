#include "tfsplat/scene_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "tfsplat/error.hpp"

namespace tfsplat {
namespace {

static_assert(std::endian::native == std::endian::little, "WAV I/O assumes a little-endian host");

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

template <typename T>
T read_le(const unsigned char* p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  return v;
}

template <typename T>
void write_le(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string strip_comment(const std::string& line) {
  const auto hash = line.find('#');
  return hash == std::string::npos ? line : line.substr(0, hash);
}

}  // namespace

const PoseAudio* Scene::find(const std::string& id) const {
  for (const auto& t : targets)
    if (t.pose.id == id) return &t;
  for (const auto& t : held_out)
    if (t.pose.id == id) return &t;
  return nullptr;
}

void SceneConfig::validate() const {
  if (!(clip_seconds > 0)) throw Error("scene config: clip_seconds must be positive");
  if (!(sample_rate > 0)) throw Error("scene config: sample_rate must be positive");
  if (std::find(holdout.begin(), holdout.end(), source_pose) != holdout.end() && !source_pose.empty())
    throw Error("scene config: the source pose cannot be held out");
}

Waveform load_wav(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open WAV file: " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 || std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    throw Error("malformed WAV header: " + path.string());

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  const unsigned char* data = nullptr;
  std::size_t data_size = 0;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* chunk = bytes.data() + pos;
    const auto size = read_le<std::uint32_t>(chunk + 4);
    const std::size_t body = pos + 8;
    if (body + size > bytes.size() && std::memcmp(chunk, "data", 4) != 0)
      throw Error("malformed WAV: chunk overruns file: " + path.string());
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (size < 16) throw Error("malformed WAV: short fmt chunk");
      format = read_le<std::uint16_t>(chunk + 8);
      channels = read_le<std::uint16_t>(chunk + 10);
      rate = read_le<std::uint32_t>(chunk + 12);
      bits = read_le<std::uint16_t>(chunk + 22);
      if (format == kFormatExtensible) {
        if (size < 40) throw Error("malformed WAV: short extensible fmt chunk");
        format = read_le<std::uint16_t>(chunk + 8 + 24);
      }
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = chunk + 8;
      data_size = std::min<std::size_t>(size, bytes.size() - body);
    }
    pos = body + size + (size & 1u);
  }
  if (channels == 0 || rate == 0) throw Error("malformed WAV: missing fmt chunk");
  if (!data) throw Error("malformed WAV: missing data chunk");
  if (channels > 2) throw Error("unsupported channel count " + std::to_string(channels));
  const bool pcm16 = format == kFormatPcm && bits == 16;
  const bool f32 = format == kFormatFloat && bits == 32;
  if (!pcm16 && !f32) throw Error("unsupported sample format");

  const std::size_t width = bits / 8;
  const std::size_t frames = data_size / (width * channels);
  Waveform out(static_cast<double>(rate), channels, frames);
  for (std::size_t n = 0; n < frames; ++n) {
    for (std::size_t c = 0; c < channels; ++c) {
      const unsigned char* p = data + (n * channels + c) * width;
      out.channels[c][n] = pcm16 ? read_le<std::int16_t>(p) / 32768.0 : static_cast<double>(read_le<float>(p));
    }
  }
  return out;
}

void save_wav(const Waveform& x, const std::filesystem::path& path) {
  x.validate();
  const auto channels = static_cast<std::uint16_t>(x.channel_count());
  const auto rate = static_cast<std::uint32_t>(std::lround(x.sample_rate));
  const auto data_bytes = static_cast<std::uint32_t>(x.length() * channels * sizeof(float));
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error("cannot open WAV for writing: " + path.string());
  os.write("RIFF", 4);
  write_le<std::uint32_t>(os, 36 + data_bytes);
  os.write("WAVEfmt ", 8);
  write_le<std::uint32_t>(os, 16);
  write_le<std::uint16_t>(os, kFormatFloat);
  write_le<std::uint16_t>(os, channels);
  write_le<std::uint32_t>(os, rate);
  write_le<std::uint32_t>(os, rate * channels * 4);
  write_le<std::uint16_t>(os, static_cast<std::uint16_t>(channels * 4));
  write_le<std::uint16_t>(os, 32);
  os.write("data", 4);
  write_le<std::uint32_t>(os, data_bytes);
  std::vector<float> interleaved(x.length() * channels);
  for (std::size_t n = 0; n < x.length(); ++n)
    for (std::size_t c = 0; c < channels; ++c) interleaved[n * channels + c] = static_cast<float>(x.channels[c][n]);
  os.write(reinterpret_cast<const char*>(interleaved.data()), static_cast<std::streamsize>(data_bytes));
  if (!os) throw Error("failed writing WAV: " + path.string());
}

std::vector<PoseRecord> read_poses(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open poses file: " + path.string());
  std::vector<PoseRecord> poses;
  std::set<std::string> seen;
  std::string line;
  for (int line_no = 1; std::getline(is, line); ++line_no) {
    const std::string body = trim(strip_comment(line));
    if (body.empty()) continue;
    std::istringstream ss(body);
    PoseRecord r;
    Quat q;
    std::string extra;
    if (!(ss >> r.id >> r.position.x >> r.position.y >> r.position.z >> q.w >> q.x >> q.y >> q.z) || (ss >> extra))
      throw Error(path.string() + ":" + std::to_string(line_no) + ": expected `id px py pz qw qx qy qz`");
    if (!is_finite(r.position) || !std::isfinite(q.norm()))
      throw Error(path.string() + ":" + std::to_string(line_no) + ": non-finite value");
    if (std::abs(q.norm() - 1.0) > 1e-6)
      throw Error(path.string() + ":" + std::to_string(line_no) + ": orientation quaternion is not normalized");
    r.orientation = q.normalized();
    if (!seen.insert(r.id).second)
      throw Error(path.string() + ":" + std::to_string(line_no) + ": duplicate pose id '" + r.id + "'");
    poses.push_back(std::move(r));
  }
  if (poses.empty()) throw Error("poses file has no entries: " + path.string());
  return poses;
}

void write_poses(const std::vector<PoseRecord>& poses, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw Error("cannot open poses file for writing: " + path.string());
  os << "# id px py pz qw qx qy qz\n" << std::setprecision(17);
  for (const auto& p : poses)
    os << p.id << ' ' << p.position.x << ' ' << p.position.y << ' ' << p.position.z << ' ' << p.orientation.w << ' '
       << p.orientation.x << ' ' << p.orientation.y << ' ' << p.orientation.z << '\n';
  if (!os) throw Error("failed writing poses file: " + path.string());
}

std::map<std::string, std::string> read_key_values(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open config file: " + path.string());
  std::map<std::string, std::string> out;
  std::string line;
  for (int line_no = 1; std::getline(is, line); ++line_no) {
    const std::string body = trim(strip_comment(line));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos)
      throw Error(path.string() + ":" + std::to_string(line_no) + ": expected `key = value`");
    const std::string key = trim(body.substr(0, eq));
    if (key.empty()) throw Error(path.string() + ":" + std::to_string(line_no) + ": empty key");
    out[key] = trim(body.substr(eq + 1));
  }
  return out;
}

void write_key_values(const std::map<std::string, std::string>& values, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw Error("cannot open file for writing: " + path.string());
  for (const auto& [k, v] : values) os << k << " = " << v << '\n';
  if (!os) throw Error("failed writing: " + path.string());
}

std::vector<Scene> assemble_scenes(const std::vector<PoseRecord>& poses, const std::vector<Waveform>& audio,
                                   const SceneConfig& cfg) {
  cfg.validate();
  if (poses.size() != audio.size()) throw Error("scene: pose and recording counts differ");
  if (poses.empty()) throw Error("scene: no poses");

  const std::string source_id = cfg.source_pose.empty() ? poses.front().id : cfg.source_pose;
  auto index_of = [&](const std::string& id) -> std::size_t {
    for (std::size_t i = 0; i < poses.size(); ++i)
      if (poses[i].id == id) return i;
    throw Error("unknown pose id '" + id + "'");
  };
  const std::size_t source = index_of(source_id);
  std::set<std::size_t> holdout;
  for (const auto& id : cfg.holdout) {
    const std::size_t i = index_of(id);
    if (i == source) throw Error("scene: the source pose cannot be held out");
    holdout.insert(i);
  }

  std::vector<Waveform> filtered;
  filtered.reserve(audio.size());
  for (std::size_t i = 0; i < audio.size(); ++i) {
    const Waveform& w = audio[i];
    w.validate();
    if (w.channel_count() != 2) throw Error("scene: recording for pose '" + poses[i].id + "' is not stereo");
    if (w.sample_rate != cfg.sample_rate)
      throw Error("scene: recording for pose '" + poses[i].id + "' is at " + std::to_string(w.sample_rate) +
                  " Hz, expected " + std::to_string(cfg.sample_rate));
    if (w.length() != audio.front().length())
      throw Error("scene: recording lengths differ across poses ('" + poses[i].id + "')");
    filtered.push_back(cfg.highpass ? butterworth_highpass(w, 150.0) : w);
  }

  const auto clip_len = static_cast<std::size_t>(std::llround(cfg.clip_seconds * cfg.sample_rate));
  const std::size_t n_clips = clip_len ? filtered.front().length() / clip_len : 0;
  if (n_clips == 0) throw Error("scene: recordings are shorter than one clip");

  auto slice = [&](const Waveform& w, std::size_t k) {
    Waveform out(w.sample_rate, w.channel_count(), clip_len);
    for (std::size_t c = 0; c < w.channel_count(); ++c)
      std::copy_n(w.channels[c].begin() + static_cast<std::ptrdiff_t>(k * clip_len), clip_len, out.channels[c].begin());
    return out;
  };

  std::vector<Scene> scenes(n_clips);
  for (std::size_t k = 0; k < n_clips; ++k) {
    Scene& s = scenes[k];
    s.sample_rate = cfg.sample_rate;
    s.clip_seconds = cfg.clip_seconds;
    s.clip_index = k;
    s.reference = poses[source];
    s.source_clip = slice(filtered[source], k);
    for (std::size_t i = 0; i < poses.size(); ++i) {
      if (holdout.count(i))
        s.held_out.push_back({poses[i], slice(filtered[i], k)});
      else if (i != source || cfg.source_in_targets)
        s.targets.push_back({poses[i], slice(filtered[i], k)});
    }
  }
  return scenes;
}

std::vector<Scene> load_scene_clips(const std::filesystem::path& dir, const SceneConfig& cfg) {
  const auto poses = read_poses(dir / kPosesFile);
  std::vector<Waveform> audio;
  audio.reserve(poses.size());
  for (const auto& p : poses) {
    const auto file = dir / (p.id + ".wav");
    if (!std::filesystem::exists(file)) throw Error("missing audio for pose '" + p.id + "': " + file.string());
    audio.push_back(load_wav(file));
  }
  return assemble_scenes(poses, audio, cfg);
}

Scene load_scene(const std::filesystem::path& dir, const SceneConfig& cfg) {
  auto clips = load_scene_clips(dir, cfg);
  if (cfg.clip_index >= clips.size())
    throw Error("scene: clip index " + std::to_string(cfg.clip_index) + " out of range (" +
                std::to_string(clips.size()) + " clips)");
  return std::move(clips[cfg.clip_index]);
}

void save_scene_dir(const std::filesystem::path& dir, const std::vector<PoseRecord>& poses,
                    const std::vector<Waveform>& audio) {
  if (poses.size() != audio.size()) throw Error("scene: pose and recording counts differ");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) throw Error("cannot create scene directory: " + dir.string());
  write_poses(poses, dir / kPosesFile);
  for (std::size_t i = 0; i < poses.size(); ++i) save_wav(audio[i], dir / (poses[i].id + ".wav"));
}

}  // namespace tfsplat
