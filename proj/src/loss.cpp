#include "tfsplat/loss.hpp"

#include <cmath>

#include "tfsplat/error.hpp"

namespace tfsplat {
namespace {

void require_same_shape(const ComplexSpectrogram& a, const ComplexSpectrogram& b, const char* what) {
  if (a.bins() != b.bins() || a.frames != b.frames || a.channel_count() != b.channel_count())
    throw Error(std::string(what) + ": spectrogram dimensions differ");
  for (std::size_t c = 0; c < a.channel_count(); ++c)
    if (a.channels[c].size() != b.channels[c].size()) throw Error(std::string(what) + ": spectrogram dimensions differ");
}

ComplexSpectrogram single_channel(const ComplexSpectrogram& S, std::size_t c) {
  ComplexSpectrogram out;
  out.grid = S.grid;
  out.frames = S.frames;
  out.n_samples = S.n_samples;
  out.channels.push_back(S.channels.at(c));
  return out;
}

double angle(const cplx& v) { return (v.real() == 0.0 && v.imag() == 0.0) ? 0.0 : std::arg(v); }

}  // namespace

void LossWeights::validate() const {
  if (!(lambda_diff >= 0) || !std::isfinite(lambda_diff)) throw Error("loss weights: lambda_diff must be >= 0");
  if (!(lambda_phs >= 0) || !std::isfinite(lambda_phs)) throw Error("loss weights: lambda_phs must be >= 0");
  if (!(log_floor > 0) || !std::isfinite(log_floor)) throw Error("loss weights: log_floor must be > 0");
}

std::pair<ComplexSpectrogram, ComplexSpectrogram> mono_diff(const ComplexSpectrogram& S) {
  if (S.channel_count() != 2) throw Error("mono_diff: expected a 2-channel spectrogram");
  ComplexSpectrogram mono(S.grid, S.frames, S.n_samples, 1);
  ComplexSpectrogram diff(S.grid, S.frames, S.n_samples, 1);
  const auto& L = S.channels[0];
  const auto& R = S.channels[1];
  for (std::size_t i = 0; i < L.size(); ++i) {
    mono.channels[0][i] = L[i] + R[i];
    diff.channels[0][i] = L[i] - R[i];
  }
  return {std::move(mono), std::move(diff)};
}

double mag_loss(const ComplexSpectrogram& S, const ComplexSpectrogram& S_hat, double log_floor) {
  require_same_shape(S, S_hat, "mag_loss");
  double acc = 0.0;
  std::size_t count = 0;
  for (std::size_t c = 0; c < S.channel_count(); ++c) {
    for (std::size_t i = 0; i < S.channels[c].size(); ++i) {
      const double r = std::log(std::abs(S.channels[c][i]) + log_floor) - std::log(std::abs(S_hat.channels[c][i]) + log_floor);
      acc += r * r;
    }
    count += S.channels[c].size();
  }
  return count ? acc / static_cast<double>(count) : 0.0;
}

double phase_loss(const ComplexSpectrogram& S, const ComplexSpectrogram& S_hat) {
  require_same_shape(S, S_hat, "phase_loss");
  double acc = 0.0;
  std::size_t count = 0;
  for (std::size_t c = 0; c < S.channel_count(); ++c) {
    for (std::size_t i = 0; i < S.channels[c].size(); ++i) {
      const double a = angle(S.channels[c][i]);
      const double b = angle(S_hat.channels[c][i]);
      const double ds = std::sin(a) - std::sin(b);
      const double dc = std::cos(a) - std::cos(b);
      acc += ds * ds + dc * dc;
    }
    count += S.channels[c].size();
  }
  return count ? acc / static_cast<double>(count) : 0.0;
}

LossComponents total_loss(const ComplexSpectrogram& S_gt, const ComplexSpectrogram& S_hat, const LossWeights& w) {
  w.validate();
  require_same_shape(S_gt, S_hat, "total_loss");
  if (S_gt.channel_count() != 2) throw Error("total_loss: expected 2-channel spectrograms");
  const auto [gt_mono, gt_diff] = mono_diff(S_gt);
  const auto [pr_mono, pr_diff] = mono_diff(S_hat);
  LossComponents out;
  out.mono_mag = mag_loss(gt_mono, pr_mono, w.log_floor);
  out.diff_mag = mag_loss(gt_diff, pr_diff, w.log_floor);
  out.phase_left = phase_loss(single_channel(S_gt, 0), single_channel(S_hat, 0));
  out.phase_right = phase_loss(single_channel(S_gt, 1), single_channel(S_hat, 1));
  out.total = out.mono_mag + w.lambda_diff * out.diff_mag + w.lambda_phs * (out.phase_left + out.phase_right);
  return out;
}

}  // namespace tfsplat
