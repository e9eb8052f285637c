#include "tfsplat/render.hpp"

#include <cmath>

#include "bin_model.hpp"
#include "tfsplat/error.hpp"

namespace tfsplat {

void ListenerPose::validate() const {
  if (!is_finite(position)) throw Error("listener pose: position must be finite");
  if (!orientation.is_unit()) throw Error("listener pose: orientation quaternion is not normalized");
}

ListenerGeometry listener_geometry(const Vec3& x, const ListenerPose& pose) {
  pose.validate();
  const auto geo = detail::compute_geometry(x, detail::PoseFrame::from(pose), true);
  return {geo.dir, geo.theta, geo.dist};
}

double mono_mask(std::span<const double> c_mono, const Vec3& d) {
  const int degree = static_cast<int>(std::lround(std::sqrt(static_cast<double>(c_mono.size())))) - 1;
  return 2.0 * sigmoid(sh_project(c_mono, sh_basis(d, degree)));
}

double diff_mask(std::span<const double> c_diff, const Vec3& d) {
  const int degree = static_cast<int>(std::lround(std::sqrt(static_cast<double>(c_diff.size())))) - 1;
  return sh_project(c_diff, sh_basis(d, degree));
}

double distance_gain(const Vec3& x, const Vec3& p, const Vec3& p_ref, double alpha, double epsilon) {
  if (!(alpha > 0)) throw Error("distance_gain: alpha must be positive");
  if (!(epsilon > 0)) throw Error("distance_gain: epsilon must be positive");
  return std::pow((norm(p_ref - x) + epsilon) / (norm(p - x) + epsilon), alpha);
}

double itd_rigid_sphere_hz(double freq_hz, double abs_theta, const FieldConfig& cfg) {
  if (!(abs_theta >= 0.0 && abs_theta <= std::numbers::pi)) throw Error("itd_rigid_sphere: |theta| must be in [0, pi]");
  return detail::itd_frequency_factor(freq_hz) * cfg.head_radius / cfg.speed_of_sound *
         detail::itd_term(abs_theta).value;
}

double itd_rigid_sphere(std::size_t f_bin, double abs_theta, const FieldConfig& cfg, const SpectralGrid& grid) {
  return itd_rigid_sphere_hz(grid.bin_hz(f_bin), abs_theta, cfg);
}

PhaseCorrection phase_correction(double theta, double theta_ref, double delta, std::size_t f_bin,
                                 const FieldConfig& cfg, const SpectralGrid& grid) {
  const double eta = 1.0 + cfg.lambda_residual * std::tanh(delta);
  const double dtau = itd_rigid_sphere(f_bin, std::abs(theta), cfg, grid) -
                      itd_rigid_sphere(f_bin, std::abs(theta_ref), cfg, grid);
  const double left = detail::sign_of(theta) * 0.5 * grid.omega(f_bin) * eta * dtau;
  return {left, -left, eta};
}

RenderOutput render(const GaussianField& field, const ComplexSpectrogram& source, const ListenerPose& pose,
                    const FieldConfig& cfg, const RenderToggles& toggles) {
  pose.validate();
  cfg.validate();
  if (source.channel_count() != 2) throw Error("render: source spectrogram must have 2 channels");
  if (source.bins() != field.bins() || source.frames != field.frames())
    throw Error("render: source spectrogram grid does not match the field");

  const detail::ModelContext ctx(field, source.grid, cfg, toggles);
  const detail::SourceBins src(source);
  const auto frame = detail::PoseFrame::from(pose);

  const std::size_t F = field.bins(), T = field.frames();
  RenderOutput out{ComplexSpectrogram(source.grid, T, source.n_samples, 2), MagnitudeGrid(F, T), RealGrid(F, T),
                   RealGrid(F, T), RealGrid(F, T), RealGrid(F, T)};
  detail::BinForward fw;
  for (std::size_t i = 0; i < field.size(); ++i) {
    detail::forward_bin(ctx, src, frame, i, false, fw);
    out.spectrogram.channels[0][i] = fw.SL;
    out.spectrogram.channels[1][i] = fw.SR;
    out.mono_mag.values[i] = fw.m;
    out.diff_term.values[i] = fw.m * fw.D;
    out.gain.values[i] = fw.G;
    out.dphi_left.values[i] = fw.dphi;
    out.dphi_right.values[i] = -fw.dphi;
  }
  return out;
}

}  // namespace tfsplat
