#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "tfsplat/field.hpp"
#include "tfsplat/scene_io.hpp"
#include "tfsplat/spectral.hpp"
#include "tfsplat/train.hpp"

namespace tfsplat {

// Every tunable default in one place. Serialized as `section.key = value`.
struct RunConfig {
  SpectralGrid grid;
  SceneConfig scene;
  FieldConfig field;
  TrainConfig train;
  double export_percentile = 80.0;

  std::map<std::string, std::string> to_key_values() const;
  // Unknown keys are an error; missing keys keep their defaults.
  static RunConfig from_key_values(const std::map<std::string, std::string>& kv);

  void validate() const;
};

RunConfig load_run_config(const std::filesystem::path& path);
void save_run_config(const RunConfig& cfg, const std::filesystem::path& path);

}  // namespace tfsplat
