#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "tfsplat/math.hpp"
#include "tfsplat/sh.hpp"
#include "tfsplat/spectral.hpp"

namespace tfsplat {

struct FieldConfig {
  int sh_degree = 2;
  double init_radius = 0.1;       // m
  double epsilon = 1e-4;          // m, distance-gain stabilizer
  double lambda_residual = 0.2;   // range of the ITD residual, eta in [1-l, 1+l]
  double head_radius = 0.0875;    // m
  double speed_of_sound = 343.0;  // m/s

  void validate() const;
};

// One primitive, as a value. The field itself stores these structure-of-arrays.
struct AudioGaussian {
  std::array<float, 3> position{};
  std::vector<float> c_mono;
  std::vector<float> c_diff;
  float alpha_raw = 0.0f;  // decay exponent before softplus
  float delta = 0.0f;      // phase residual

  double alpha() const { return softplus(alpha_raw); }
  bool operator==(const AudioGaussian&) const = default;
};

// One Gaussian per (f, t) bin, f-major. Parameters are float32 so a checkpoint
// round-trip is exact.
class GaussianField {
 public:
  GaussianField() = default;
  GaussianField(const SpectralGrid& grid, std::size_t frames, int sh_degree, const Vec3& p_ref,
                const Quat& ref_orientation);

  const SpectralGrid& grid() const { return grid_; }
  std::size_t bins() const { return grid_.bins(); }
  std::size_t frames() const { return frames_; }
  std::size_t size() const { return bins() * frames_; }
  int sh_degree() const { return sh_degree_; }
  std::size_t coeff_count() const { return sh_coeff_count(sh_degree_); }
  std::size_t index(std::size_t f, std::size_t t) const { return f * frames_ + t; }

  const Vec3& p_ref() const { return p_ref_; }
  const Quat& ref_orientation() const { return ref_orientation_; }

  AudioGaussian gaussian(std::size_t f, std::size_t t) const;
  void set_gaussian(std::size_t f, std::size_t t, const AudioGaussian& g);

  // Raw parameter arrays: position[3N], c_mono[K N], c_diff[K N], alpha_raw[N], delta[N].
  std::vector<float>& positions() { return positions_; }
  std::vector<float>& c_mono() { return c_mono_; }
  std::vector<float>& c_diff() { return c_diff_; }
  std::vector<float>& alpha_raw() { return alpha_raw_; }
  std::vector<float>& delta() { return delta_; }
  const std::vector<float>& positions() const { return positions_; }
  const std::vector<float>& c_mono() const { return c_mono_; }
  const std::vector<float>& c_diff() const { return c_diff_; }
  const std::vector<float>& alpha_raw() const { return alpha_raw_; }
  const std::vector<float>& delta() const { return delta_; }

  Vec3 position(std::size_t i) const {
    return {positions_[3 * i], positions_[3 * i + 1], positions_[3 * i + 2]};
  }

  bool all_finite() const;
  bool operator==(const GaussianField&) const = default;

 private:
  SpectralGrid grid_;
  std::size_t frames_ = 0;
  int sh_degree_ = 0;
  Vec3 p_ref_;
  Quat ref_orientation_;
  std::vector<float> positions_;
  std::vector<float> c_mono_;
  std::vector<float> c_diff_;
  std::vector<float> alpha_raw_;
  std::vector<float> delta_;
};

// Positions uniform in a ball of cfg.init_radius around `center`, SH
// coefficients zero, effective decay 1, phase residual zero.
GaussianField init_field(const SpectralGrid& grid, std::size_t frames, const Vec3& center, const Vec3& p_ref,
                         const Quat& ref_orientation, const FieldConfig& cfg, std::uint64_t seed);

// Little-endian "AGSF" v1 binary.
void save_checkpoint(const GaussianField& field, const std::filesystem::path& path);
GaussianField load_checkpoint(const std::filesystem::path& path);

// Indices of the bins kept by a magnitude-percentile filter, in (f, t) order.
// Percentile 0 keeps everything, 100 keeps the single largest bin.
std::vector<std::size_t> percentile_filter(const MagnitudeGrid& A, double percentile);

// CSV rows x,y,z,f,t,magnitude for the Gaussians surviving percentile_filter.
// Returns the number of rows written.
std::size_t export_point_cloud(const GaussianField& field, const MagnitudeGrid& A, double percentile,
                               const std::filesystem::path& path);

}  // namespace tfsplat
