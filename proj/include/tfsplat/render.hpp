#pragma once

#include <span>
#include <vector>

#include "tfsplat/field.hpp"
#include "tfsplat/math.hpp"
#include "tfsplat/spectral.hpp"

namespace tfsplat {

// Listener frame: +x right ear, +y up, -z facing. `orientation` maps
// listener-frame vectors into the world frame.
struct ListenerPose {
  Vec3 position;
  Quat orientation;

  void validate() const;
  Vec3 forward() const { return orientation.rotate({0, 0, -1}); }
  Vec3 right() const { return orientation.rotate({1, 0, 0}); }
  bool operator==(const ListenerPose&) const = default;
};

// Ablation switches. Disabling DA forces G = 1, SH forces M = 1 and D = 0,
// PC forces both phase corrections to 0.
struct RenderToggles {
  bool distance_attenuation = true;
  bool spherical_harmonics = true;
  bool phase_correction = true;
  bool operator==(const RenderToggles&) const = default;
};

struct ListenerGeometry {
  Vec3 direction;   // unit, listener -> Gaussian, world frame
  double theta;     // signed azimuth in (-pi, pi], positive = left
  double distance;  // m
};

inline constexpr double kMinDistance = 1e-9;

ListenerGeometry listener_geometry(const Vec3& x, const ListenerPose& pose);

// 2 * sigmoid(<c_mono, Y(d)>), in (0, 2).
double mono_mask(std::span<const double> c_mono, const Vec3& d);
// <c_diff, Y(d)>, signed and unbounded.
double diff_mask(std::span<const double> c_diff, const Vec3& d);

// ((|p_ref - x| + eps) / (|p - x| + eps))^alpha
double distance_gain(const Vec3& x, const Vec3& p, const Vec3& p_ref, double alpha, double epsilon);

// Frequency-dependent rigid-sphere ITD magnitude in seconds. The Woodworth path
// term (a/c)(sin t + t) is scaled by 1.5 below 500 Hz and by 1.0 above 3 kHz,
// interpolated in log-frequency, with t folded front/back to min(|theta|, pi - |theta|).
double itd_rigid_sphere_hz(double freq_hz, double abs_theta, const FieldConfig& cfg);
double itd_rigid_sphere(std::size_t f_bin, double abs_theta, const FieldConfig& cfg, const SpectralGrid& grid);

struct PhaseCorrection {
  double dphi_left;
  double dphi_right;
  double eta;
};

PhaseCorrection phase_correction(double theta, double theta_ref, double delta, std::size_t f_bin,
                                 const FieldConfig& cfg, const SpectralGrid& grid);

struct RenderOutput {
  ComplexSpectrogram spectrogram;  // 2 channels (L, R)
  MagnitudeGrid mono_mag;          // A * G * M
  RealGrid diff_term;              // A * G * M * D (signed)
  RealGrid gain;                   // G
  RealGrid dphi_left;
  RealGrid dphi_right;
};

RenderOutput render(const GaussianField& field, const ComplexSpectrogram& source, const ListenerPose& pose,
                    const FieldConfig& cfg, const RenderToggles& toggles = {});

}  // namespace tfsplat
