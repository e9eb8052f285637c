#include "tfsplat/config.hpp"

#include <charconv>
#include <functional>
#include <sstream>

#include "tfsplat/error.hpp"

namespace tfsplat {
namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

std::string fmt(bool v) { return v ? "true" : "false"; }

std::string join(const std::vector<std::string>& v) {
  std::string out;
  for (const auto& s : v) out += (out.empty() ? "" : ",") + s;
  return out;
}

double parse_double(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double d = 0;
  try {
    d = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != v.size()) throw Error("config: '" + key + "' expects a number, got '" + v + "'");
  return d;
}

long long parse_int(const std::string& key, const std::string& v) {
  long long out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size())
    throw Error("config: '" + key + "' expects an integer, got '" + v + "'");
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw Error("config: '" + key + "' expects true or false, got '" + v + "'");
}

std::vector<std::string> parse_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    if (b == std::string::npos) continue;
    out.push_back(item.substr(b, item.find_last_not_of(" \t") - b + 1));
  }
  return out;
}

using Setter = std::function<void(RunConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"grid.n_fft", [](RunConfig& c, auto& k, auto& v) { c.grid.n_fft = static_cast<int>(parse_int(k, v)); }},
      {"grid.win_length", [](RunConfig& c, auto& k, auto& v) { c.grid.win_length = static_cast<int>(parse_int(k, v)); }},
      {"grid.hop", [](RunConfig& c, auto& k, auto& v) { c.grid.hop = static_cast<int>(parse_int(k, v)); }},
      {"scene.source_pose", [](RunConfig& c, auto&, auto& v) { c.scene.source_pose = v; }},
      {"scene.holdout", [](RunConfig& c, auto&, auto& v) { c.scene.holdout = parse_list(v); }},
      {"scene.clip_seconds", [](RunConfig& c, auto& k, auto& v) { c.scene.clip_seconds = parse_double(k, v); }},
      {"scene.sample_rate",
       [](RunConfig& c, auto& k, auto& v) { c.scene.sample_rate = c.grid.sample_rate = parse_double(k, v); }},
      {"scene.clip_index",
       [](RunConfig& c, auto& k, auto& v) {
         const auto i = parse_int(k, v);
         if (i < 0) throw Error("config: scene.clip_index must be >= 0");
         c.scene.clip_index = static_cast<std::size_t>(i);
       }},
      {"scene.source_in_targets", [](RunConfig& c, auto& k, auto& v) { c.scene.source_in_targets = parse_bool(k, v); }},
      {"scene.highpass", [](RunConfig& c, auto& k, auto& v) { c.scene.highpass = parse_bool(k, v); }},
      {"field.sh_degree", [](RunConfig& c, auto& k, auto& v) { c.field.sh_degree = static_cast<int>(parse_int(k, v)); }},
      {"field.init_radius", [](RunConfig& c, auto& k, auto& v) { c.field.init_radius = parse_double(k, v); }},
      {"field.epsilon", [](RunConfig& c, auto& k, auto& v) { c.field.epsilon = parse_double(k, v); }},
      {"field.lambda_residual", [](RunConfig& c, auto& k, auto& v) { c.field.lambda_residual = parse_double(k, v); }},
      {"field.head_radius", [](RunConfig& c, auto& k, auto& v) { c.field.head_radius = parse_double(k, v); }},
      {"field.speed_of_sound", [](RunConfig& c, auto& k, auto& v) { c.field.speed_of_sound = parse_double(k, v); }},
      {"train.epochs", [](RunConfig& c, auto& k, auto& v) { c.train.epochs = static_cast<int>(parse_int(k, v)); }},
      {"train.lr_position", [](RunConfig& c, auto& k, auto& v) { c.train.lr_position = parse_double(k, v); }},
      {"train.lr_other", [](RunConfig& c, auto& k, auto& v) { c.train.lr_other = parse_double(k, v); }},
      {"train.beta1", [](RunConfig& c, auto& k, auto& v) { c.train.beta1 = parse_double(k, v); }},
      {"train.beta2", [](RunConfig& c, auto& k, auto& v) { c.train.beta2 = parse_double(k, v); }},
      {"train.adam_eps", [](RunConfig& c, auto& k, auto& v) { c.train.adam_eps = parse_double(k, v); }},
      {"train.grad_clip", [](RunConfig& c, auto& k, auto& v) { c.train.grad_clip = parse_double(k, v); }},
      {"train.seed",
       [](RunConfig& c, auto& k, auto& v) {
         const auto s = parse_int(k, v);
         if (s < 0) throw Error("config: train.seed must be >= 0");
         c.train.seed = static_cast<std::uint64_t>(s);
       }},
      {"train.threads",
       [](RunConfig& c, auto& k, auto& v) {
         const auto s = parse_int(k, v);
         if (s < 0) throw Error("config: train.threads must be >= 0");
         c.train.threads = static_cast<unsigned>(s);
       }},
      {"loss.lambda_diff", [](RunConfig& c, auto& k, auto& v) { c.train.loss.lambda_diff = parse_double(k, v); }},
      {"loss.lambda_phs", [](RunConfig& c, auto& k, auto& v) { c.train.loss.lambda_phs = parse_double(k, v); }},
      {"loss.log_floor", [](RunConfig& c, auto& k, auto& v) { c.train.loss.log_floor = parse_double(k, v); }},
      {"toggles.distance_attenuation",
       [](RunConfig& c, auto& k, auto& v) { c.train.toggles.distance_attenuation = parse_bool(k, v); }},
      {"toggles.spherical_harmonics",
       [](RunConfig& c, auto& k, auto& v) { c.train.toggles.spherical_harmonics = parse_bool(k, v); }},
      {"toggles.phase_correction",
       [](RunConfig& c, auto& k, auto& v) { c.train.toggles.phase_correction = parse_bool(k, v); }},
      {"export.percentile", [](RunConfig& c, auto& k, auto& v) { c.export_percentile = parse_double(k, v); }},
  };
  return table;
}

}  // namespace

std::map<std::string, std::string> RunConfig::to_key_values() const {
  return {
      {"grid.n_fft", std::to_string(grid.n_fft)},
      {"grid.win_length", std::to_string(grid.win_length)},
      {"grid.hop", std::to_string(grid.hop)},
      {"scene.source_pose", scene.source_pose},
      {"scene.holdout", join(scene.holdout)},
      {"scene.clip_seconds", fmt(scene.clip_seconds)},
      {"scene.sample_rate", fmt(scene.sample_rate)},
      {"scene.clip_index", std::to_string(scene.clip_index)},
      {"scene.source_in_targets", fmt(scene.source_in_targets)},
      {"scene.highpass", fmt(scene.highpass)},
      {"field.sh_degree", std::to_string(field.sh_degree)},
      {"field.init_radius", fmt(field.init_radius)},
      {"field.epsilon", fmt(field.epsilon)},
      {"field.lambda_residual", fmt(field.lambda_residual)},
      {"field.head_radius", fmt(field.head_radius)},
      {"field.speed_of_sound", fmt(field.speed_of_sound)},
      {"train.epochs", std::to_string(train.epochs)},
      {"train.lr_position", fmt(train.lr_position)},
      {"train.lr_other", fmt(train.lr_other)},
      {"train.beta1", fmt(train.beta1)},
      {"train.beta2", fmt(train.beta2)},
      {"train.adam_eps", fmt(train.adam_eps)},
      {"train.grad_clip", fmt(train.grad_clip)},
      {"train.seed", std::to_string(train.seed)},
      {"train.threads", std::to_string(train.threads)},
      {"loss.lambda_diff", fmt(train.loss.lambda_diff)},
      {"loss.lambda_phs", fmt(train.loss.lambda_phs)},
      {"loss.log_floor", fmt(train.loss.log_floor)},
      {"toggles.distance_attenuation", fmt(train.toggles.distance_attenuation)},
      {"toggles.spherical_harmonics", fmt(train.toggles.spherical_harmonics)},
      {"toggles.phase_correction", fmt(train.toggles.phase_correction)},
      {"export.percentile", fmt(export_percentile)},
  };
}

RunConfig RunConfig::from_key_values(const std::map<std::string, std::string>& kv) {
  RunConfig cfg;
  const auto& table = setters();
  for (const auto& [key, value] : kv) {
    const auto it = table.find(key);
    if (it == table.end()) throw Error("config: unknown key '" + key + "'");
    it->second(cfg, key, value);
  }
  cfg.validate();
  return cfg;
}

void RunConfig::validate() const {
  grid.validate();
  scene.validate();
  field.validate();
  train.validate();
  if (grid.sample_rate != scene.sample_rate) throw Error("config: grid and scene sample rates differ");
  if (!(export_percentile >= 0 && export_percentile <= 100)) throw Error("config: export.percentile must be in [0, 100]");
}

RunConfig load_run_config(const std::filesystem::path& path) { return RunConfig::from_key_values(read_key_values(path)); }

void save_run_config(const RunConfig& cfg, const std::filesystem::path& path) { write_key_values(cfg.to_key_values(), path); }

}  // namespace tfsplat
