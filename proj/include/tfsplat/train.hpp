#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <vector>

#include "tfsplat/field.hpp"
#include "tfsplat/loss.hpp"
#include "tfsplat/render.hpp"
#include "tfsplat/scene_io.hpp"
#include "tfsplat/spectral.hpp"

namespace tfsplat {

// Derivatives of the loss, mirroring the field's parameter arrays.
struct GradientBuffer {
  std::vector<double> positions;
  std::vector<double> c_mono;
  std::vector<double> c_diff;
  std::vector<double> alpha_raw;
  std::vector<double> delta;

  GradientBuffer() = default;
  explicit GradientBuffer(const GaussianField& field);

  void zero();
  double squared_norm() const;
  bool all_finite() const;
  void scale(double s);
};

struct TrainConfig {
  int epochs = 60;
  double lr_position = 1e-4;
  double lr_other = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double grad_clip = 0.0;  // global L2 max-norm; 0 disables
  std::uint64_t seed = 0;
  unsigned threads = 1;    // 0: hardware concurrency. Results do not depend on it.
  LossWeights loss;
  RenderToggles toggles;

  void validate() const;
};

// Loss at (field, pose) and its exact gradient with respect to every
// Gaussian parameter, written into `grads` (overwritten, not accumulated).
LossComponents backward(const GaussianField& field, const ComplexSpectrogram& source, const ListenerPose& pose,
                        const ComplexSpectrogram& target, const LossWeights& weights, const RenderToggles& toggles,
                        const FieldConfig& cfg, GradientBuffer& grads, unsigned threads = 1);

// First and second moment estimates, one per parameter.
struct AdamState {
  GradientBuffer m;
  GradientBuffer v;

  AdamState() = default;
  explicit AdamState(const GaussianField& field) : m(field), v(field) {}
};

// One bias-corrected Adam update. Positions use lr_position, all other
// parameters lr_other. `step` counts from 1.
void adam_step(GaussianField& field, const GradientBuffer& grads, AdamState& state, std::uint64_t step,
               const TrainConfig& cfg);

struct EpochRecord {
  int epoch = 0;
  LossComponents loss;  // mean over training poses, evaluated before each update
};

struct TrainResult {
  GaussianField field;
  std::vector<EpochRecord> history;
};

// Mean training-pose position; used as the initialization center.
Vec3 training_center(const Scene& scene);

TrainResult train(const Scene& scene, const TrainConfig& cfg, const FieldConfig& field_cfg,
                  const SpectralGrid& grid = {}, const std::function<void(const EpochRecord&)>& on_epoch = {});

// Whitespace-separated rows: epoch total mono_mag diff_mag phase_L phase_R.
void write_history(const std::vector<EpochRecord>& history, const std::filesystem::path& path);
std::vector<EpochRecord> read_history(const std::filesystem::path& path);

}  // namespace tfsplat
