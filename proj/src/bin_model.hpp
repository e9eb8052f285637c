#pragma once

// Per-bin forward model and its reverse-mode derivative. Shared by render()
// and the trainer so both evaluate exactly the same expressions.

#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "tfsplat/field.hpp"
#include "tfsplat/math.hpp"
#include "tfsplat/render.hpp"
#include "tfsplat/sh.hpp"
#include "tfsplat/spectral.hpp"

namespace tfsplat::detail {

using cplx = std::complex<double>;

inline constexpr double kSignTolerance = 1e-9;

struct PoseFrame {
  Vec3 position;
  Mat3 rot;  // listener -> world
  Vec3 forward;

  static PoseFrame from(const ListenerPose& pose) {
    PoseFrame f;
    f.position = pose.position;
    f.rot = pose.orientation.to_matrix();
    f.forward = f.rot * Vec3{0, 0, -1};
    return f;
  }
};

// Geometry of one Gaussian relative to one listener frame.
struct BinGeometry {
  Vec3 offset;        // x - p
  double dist = 0;    // clamped to kMinDistance
  Vec3 dir;           // unit, world frame
  double theta = 0;   // signed azimuth
  Vec3 dtheta_dx;     // world-frame gradient of theta
  bool degenerate = false;
};

inline BinGeometry compute_geometry(const Vec3& x, const PoseFrame& frame, bool want_theta) {
  BinGeometry g;
  g.offset = x - frame.position;
  const double dist = norm(g.offset);
  if (!(dist >= kMinDistance)) {
    g.degenerate = true;
    g.dist = kMinDistance;
    g.dir = frame.forward;
    return g;
  }
  g.dist = dist;
  g.dir = g.offset / dist;
  if (want_theta) {
    const Vec3 u = frame.rot.transposed_times(g.offset);
    const double r2 = u.x * u.x + u.z * u.z;
    if (r2 > 1e-30) {
      g.theta = std::atan2(-u.x, -u.z);
      if (g.theta <= -std::numbers::pi) g.theta = std::numbers::pi;  // keep the range (-pi, pi]
      // d theta / d u = (u_z, 0, -u_x) / r2, rotated back into the world frame.
      g.dtheta_dx = frame.rot * Vec3{u.z / r2, 0.0, -u.x / r2};
    }
  }
  return g;
}

inline double sign_of(double theta) {
  if (std::abs(theta) < kSignTolerance) return 0.0;
  return theta > 0 ? 1.0 : -1.0;
}

// Woodworth path term with front/back folding. Returns tau / scale and its
// derivative with respect to |theta|.
struct ItdTerm {
  double value;
  double slope;
};

inline ItdTerm itd_term(double abs_theta) {
  constexpr double half_pi = std::numbers::pi / 2;
  const bool back = abs_theta > half_pi;
  const double t = back ? std::numbers::pi - abs_theta : abs_theta;
  return {std::sin(t) + t, (std::cos(t) + 1.0) * (back ? -1.0 : 1.0)};
}

// k(f): 1.5 at or below 500 Hz, 1.0 at or above 3 kHz, linear in log-frequency between.
inline double itd_frequency_factor(double hz) {
  constexpr double lo = 500.0, hi = 3000.0;
  if (hz <= lo) return 1.5;
  if (hz >= hi) return 1.0;
  return 1.5 - 0.5 * std::log(hz / lo) / std::log(hi / lo);
}

// Everything constant across bins for one (field, pose) evaluation.
struct ModelContext {
  const GaussianField* field = nullptr;
  FieldConfig cfg;
  RenderToggles toggles;
  std::size_t frames = 0;
  int degree = 0;
  std::size_t k = 0;
  std::vector<double> half_omega;  // omega_f / 2
  std::vector<double> itd_scale;   // k(f) * a / c
  PoseFrame ref;

  ModelContext(const GaussianField& f, const SpectralGrid& grid, const FieldConfig& c, const RenderToggles& t)
      : field(&f), cfg(c), toggles(t), frames(f.frames()), degree(f.sh_degree()), k(f.coeff_count()) {
    half_omega.resize(f.bins());
    itd_scale.resize(f.bins());
    for (std::size_t b = 0; b < f.bins(); ++b) {
      half_omega[b] = 0.5 * grid.omega(b);
      itd_scale[b] = itd_frequency_factor(grid.bin_hz(b)) * c.head_radius / c.speed_of_sound;
    }
    ref = PoseFrame::from(ListenerPose{f.p_ref(), f.ref_orientation()});
  }
};

// Source spectrogram reduced to what the model consumes.
struct SourceBins {
  std::vector<double> A;
  std::vector<cplx> phase_left;   // unit phasors; zero bins map to phase 0
  std::vector<cplx> phase_right;

  static cplx unit(const cplx& v) {
    const double m = std::abs(v);
    return m > 0 ? v / m : cplx(1.0, 0.0);
  }

  explicit SourceBins(const ComplexSpectrogram& S) {
    const std::size_t n = S.size();
    A.resize(n);
    phase_left.resize(n);
    phase_right.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const cplx l = S.channels[0][i];
      const cplx r = S.channels[1][i];
      A[i] = 0.5 * (std::abs(l) + std::abs(r));
      phase_left[i] = unit(l);
      phase_right[i] = unit(r);
    }
  }
};

struct BinForward {
  BinGeometry geo;
  BinGeometry geo_ref;
  std::array<double, kMaxShCoeffs> Y{};
  std::array<Vec3, kMaxShCoeffs> dY{};
  double sig = 0.5;
  double M = 1.0;
  double D = 0.0;
  double log_ratio = 0.0;
  double alpha = 1.0;
  double dist_ref = 0.0;
  double G = 1.0;
  double tanh_delta = 0.0;
  double eta = 1.0;
  double s = 0.0;
  double s_ref = 0.0;
  ItdTerm itd{0, 0};
  ItdTerm itd_ref{0, 0};
  double dtau = 0.0;
  double dphi = 0.0;  // left-ear correction; right is -dphi
  double m = 0.0;
  double mL = 0.0;
  double mR = 0.0;
  cplx eL{1, 0};  // unit phasors of the rendered ears
  cplx eR{1, 0};
  cplx SL{0, 0};
  cplx SR{0, 0};
};

inline void forward_bin(const ModelContext& ctx, const SourceBins& src, const PoseFrame& pose, std::size_t i,
                        bool need_grad, BinForward& out) {
  const GaussianField& field = *ctx.field;
  const float* px = field.positions().data() + 3 * i;
  const Vec3 x{px[0], px[1], px[2]};
  const std::size_t f = i / ctx.frames;
  const auto& tg = ctx.toggles;

  out.geo = compute_geometry(x, pose, tg.phase_correction);

  out.M = 1.0;
  out.D = 0.0;
  if (tg.spherical_harmonics) {
    sh_eval(out.geo.dir, ctx.degree, out.Y, need_grad ? &out.dY : nullptr);
    const float* cm = field.c_mono().data() + ctx.k * i;
    const float* cd = field.c_diff().data() + ctx.k * i;
    double zm = 0.0, zd = 0.0;
    for (std::size_t j = 0; j < ctx.k; ++j) {
      zm += cm[j] * out.Y[j];
      zd += cd[j] * out.Y[j];
    }
    out.sig = sigmoid(zm);
    out.M = 2.0 * out.sig;
    out.D = zd;
  }

  out.G = 1.0;
  if (tg.distance_attenuation) {
    const double raw = field.alpha_raw()[i];
    out.alpha = softplus(raw);
    const Vec3 to_ref = x - ctx.ref.position;
    out.dist_ref = norm(to_ref);
    out.log_ratio = std::log(out.dist_ref + ctx.cfg.epsilon) - std::log(out.geo.dist + ctx.cfg.epsilon);
    out.G = std::exp(out.alpha * out.log_ratio);
  }

  out.dphi = 0.0;
  if (tg.phase_correction) {
    out.geo_ref = compute_geometry(x, ctx.ref, true);
    out.tanh_delta = std::tanh(static_cast<double>(field.delta()[i]));
    out.eta = 1.0 + ctx.cfg.lambda_residual * out.tanh_delta;
    out.s = sign_of(out.geo.theta);
    out.s_ref = sign_of(out.geo_ref.theta);
    out.itd = itd_term(std::abs(out.geo.theta));
    out.itd_ref = itd_term(std::abs(out.geo_ref.theta));
    out.dtau = ctx.itd_scale[f] * (out.itd.value - out.itd_ref.value);
    out.dphi = out.s * ctx.half_omega[f] * out.eta * out.dtau;
  }

  out.m = src.A[i] * out.G * out.M;
  out.mL = std::max(0.0, out.m * (1.0 + out.D));
  out.mR = std::max(0.0, out.m * (1.0 - out.D));
  if (out.dphi != 0.0) {
    const cplx rot(std::cos(out.dphi), std::sin(out.dphi));
    out.eL = src.phase_left[i] * rot;
    out.eR = src.phase_right[i] * std::conj(rot);
  } else {
    out.eL = src.phase_left[i];
    out.eR = src.phase_right[i];
  }
  out.SL = out.mL * out.eL;
  out.SR = out.mR * out.eR;
}

// Upstream gradients for one bin. For a real loss l and a complex value S,
// grad_S is defined so that dl = Re(conj(grad_S) * dS).
struct BinUpstream {
  cplx grad_SL{0, 0};
  cplx grad_SR{0, 0};
  double grad_beta_L = 0.0;  // extra gradients on the rendered phase angles
  double grad_beta_R = 0.0;
};

// Parameter gradients for one Gaussian, laid out like the field.
struct BinGrad {
  Vec3 position;
  std::array<double, kMaxShCoeffs> c_mono{};
  std::array<double, kMaxShCoeffs> c_diff{};
  double alpha_raw = 0.0;
  double delta = 0.0;
};

inline void backward_bin(const ModelContext& ctx, const SourceBins& src, const BinForward& fw,
                         const BinUpstream& up, std::size_t i, BinGrad& g) {
  const GaussianField& field = *ctx.field;
  const std::size_t f = i / ctx.frames;
  const auto& tg = ctx.toggles;
  g = BinGrad{};

  // S_k = m_k e^{i beta_k}
  const cplx zl = std::conj(up.grad_SL) * fw.eL;
  const cplx zr = std::conj(up.grad_SR) * fw.eR;
  const double g_mL = zl.real();
  const double g_mR = zr.real();
  const double g_betaL = -fw.mL * zl.imag() + up.grad_beta_L;
  const double g_betaR = -fw.mR * zr.imag() + up.grad_beta_R;

  // ReLU cascade, subgradient 0 at the kink.
  double g_m = 0.0, g_D = 0.0;
  if (fw.m * (1.0 + fw.D) > 0.0) {
    g_m += g_mL * (1.0 + fw.D);
    g_D += g_mL * fw.m;
  }
  if (fw.m * (1.0 - fw.D) > 0.0) {
    g_m += g_mR * (1.0 - fw.D);
    g_D -= g_mR * fw.m;
  }

  Vec3 g_offset;      // wrt x - p
  Vec3 g_offset_ref;  // wrt x - p_ref

  if (tg.spherical_harmonics) {
    const double g_M = g_m * src.A[i] * fw.G;
    const double g_zm = g_M * 2.0 * fw.sig * (1.0 - fw.sig);
    const float* cm = field.c_mono().data() + ctx.k * i;
    const float* cd = field.c_diff().data() + ctx.k * i;
    Vec3 g_dir;
    for (std::size_t j = 0; j < ctx.k; ++j) {
      g.c_mono[j] = g_zm * fw.Y[j];
      g.c_diff[j] = g_D * fw.Y[j];
      const double g_Y = g_zm * cm[j] + g_D * cd[j];
      g_dir += g_Y * fw.dY[j];
    }
    if (!fw.geo.degenerate) {
      const Vec3& d = fw.geo.dir;
      g_offset += (g_dir - dot(d, g_dir) * d) / fw.geo.dist;
    }
  }

  if (tg.distance_attenuation) {
    const double g_G = g_m * src.A[i] * fw.M;
    const double g_alpha = g_G * fw.G * fw.log_ratio;
    g.alpha_raw = g_alpha * sigmoid(field.alpha_raw()[i]);
    if (!fw.geo.degenerate) {
      const double g_dist = -g_G * fw.G * fw.alpha / (fw.geo.dist + ctx.cfg.epsilon);
      g_offset += g_dist * fw.geo.dir;
    }
    if (fw.dist_ref > 0.0) {
      const double g_dist_ref = g_G * fw.G * fw.alpha / (fw.dist_ref + ctx.cfg.epsilon);
      const float* px = field.positions().data() + 3 * i;
      const Vec3 to_ref = Vec3{px[0], px[1], px[2]} - ctx.ref.position;
      g_offset_ref += (g_dist_ref / fw.dist_ref) * to_ref;
    }
  }

  if (tg.phase_correction && fw.s != 0.0) {
    const double g_dphi = g_betaL - g_betaR;
    const double h = fw.s * ctx.half_omega[f];
    const double g_eta = g_dphi * h * fw.dtau;
    g.delta = g_eta * ctx.cfg.lambda_residual * (1.0 - fw.tanh_delta * fw.tanh_delta);
    const double g_dtau = g_dphi * h * fw.eta;
    const double scale = ctx.itd_scale[f];
    // |theta| has derivative sign(theta); sign itself is piecewise constant.
    const double g_theta = g_dtau * scale * fw.itd.slope * fw.s;
    const double g_theta_ref = -g_dtau * scale * fw.itd_ref.slope * fw.s_ref;
    g_offset += g_theta * fw.geo.dtheta_dx;
    g_offset_ref += g_theta_ref * fw.geo_ref.dtheta_dx;
  }

  g.position = g_offset + g_offset_ref;
}

}  // namespace tfsplat::detail
