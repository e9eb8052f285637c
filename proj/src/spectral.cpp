#include "tfsplat/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "fft.hpp"
#include "tfsplat/error.hpp"

namespace tfsplat {
namespace {

constexpr double kWindowSumFloor = 1e-8;

// Mirror index into [0, n) without repeating the edge sample.
std::size_t reflect_index(std::ptrdiff_t i, std::size_t n) {
  if (n == 1) return 0;
  const auto period = static_cast<std::ptrdiff_t>(2 * (n - 1));
  i %= period;
  if (i < 0) i += period;
  if (i >= static_cast<std::ptrdiff_t>(n)) i = period - i;
  return static_cast<std::size_t>(i);
}

}  // namespace

Waveform Waveform::channel(std::size_t c) const {
  Waveform out;
  out.sample_rate = sample_rate;
  out.channels.push_back(channels.at(c));
  return out;
}

void Waveform::validate() const {
  if (!(sample_rate > 0) || !std::isfinite(sample_rate)) throw Error("waveform: sample rate must be positive");
  if (channels.empty() || channels.size() > 2) throw Error("waveform: expected 1 or 2 channels");
  for (const auto& ch : channels) {
    if (ch.size() != channels.front().size()) throw Error("waveform: channel lengths differ");
    for (double s : ch)
      if (!std::isfinite(s)) throw Error("waveform: non-finite sample");
  }
}

double SpectralGrid::omega(std::size_t f) const {
  return 2.0 * std::numbers::pi * static_cast<double>(f) * sample_rate / n_fft;
}

std::vector<double> SpectralGrid::omegas() const {
  std::vector<double> w(bins());
  for (std::size_t f = 0; f < w.size(); ++f) w[f] = omega(f);
  return w;
}

void SpectralGrid::validate() const {
  if (n_fft < 2 || n_fft % 2 != 0) throw Error("spectral grid: n_fft must be even and >= 2");
  if (win_length < 1 || win_length > n_fft) throw Error("spectral grid: need 1 <= win_length <= n_fft");
  if (hop < 1 || hop > win_length) throw Error("spectral grid: need 1 <= hop <= win_length");
  if (!(sample_rate > 0)) throw Error("spectral grid: sample rate must be positive");
}

void ComplexSpectrogram::validate() const {
  grid.validate();
  for (const auto& ch : channels) {
    if (ch.size() != size()) throw Error("spectrogram: data does not match grid dimensions");
    for (const auto& v : ch)
      if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) throw Error("spectrogram: non-finite value");
  }
}

std::vector<double> hamming_window(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i)
    w[i] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n));
  return w;
}

ComplexSpectrogram stft(const Waveform& x, const SpectralGrid& grid) {
  grid.validate();
  if (x.length() == 0) throw Error("stft: empty waveform");
  x.validate();
  if (x.sample_rate != grid.sample_rate)
    throw Error("stft: sample rate " + std::to_string(x.sample_rate) + " does not match grid rate " +
                std::to_string(grid.sample_rate));

  const std::size_t n = x.length();
  const std::size_t n_fft = static_cast<std::size_t>(grid.n_fft);
  const std::size_t win = static_cast<std::size_t>(grid.win_length);
  const std::size_t pad = (n_fft - win) / 2;
  const std::size_t frames = grid.frames_for(n);
  const std::size_t bins = grid.bins();
  const auto window = hamming_window(win);

  ComplexSpectrogram S(grid, frames, n, x.channel_count());
  std::vector<double> frame(n_fft);
  std::vector<cplx> spec(bins);
  for (std::size_t c = 0; c < x.channel_count(); ++c) {
    const auto& samples = x.channels[c];
    auto& out = S.channels[c];
    for (std::size_t t = 0; t < frames; ++t) {
      std::fill(frame.begin(), frame.end(), 0.0);
      const auto start = static_cast<std::ptrdiff_t>(t * grid.hop) - static_cast<std::ptrdiff_t>(n_fft / 2);
      for (std::size_t i = 0; i < win; ++i) {
        const auto idx = start + static_cast<std::ptrdiff_t>(pad + i);
        frame[pad + i] = samples[reflect_index(idx, n)] * window[i];
      }
      detail::rfft(frame.data(), spec.data(), n_fft);
      for (std::size_t f = 0; f < bins; ++f) out[f * frames + t] = spec[f];
    }
  }
  return S;
}

Waveform istft(const ComplexSpectrogram& S) {
  S.validate();
  const auto& grid = S.grid;
  const std::size_t n = S.n_samples;
  const std::size_t n_fft = static_cast<std::size_t>(grid.n_fft);
  const std::size_t win = static_cast<std::size_t>(grid.win_length);
  const std::size_t pad = (n_fft - win) / 2;
  const std::size_t bins = grid.bins();
  const auto window = hamming_window(win);

  Waveform out(grid.sample_rate, S.channel_count(), n);
  std::vector<double> weight(n, 0.0);
  for (std::size_t t = 0; t < S.frames; ++t) {
    const auto start = static_cast<std::ptrdiff_t>(t * grid.hop) - static_cast<std::ptrdiff_t>(n_fft / 2);
    for (std::size_t i = 0; i < win; ++i) {
      const auto idx = start + static_cast<std::ptrdiff_t>(pad + i);
      if (idx >= 0 && idx < static_cast<std::ptrdiff_t>(n)) weight[static_cast<std::size_t>(idx)] += window[i] * window[i];
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    if (weight[i] < kWindowSumFloor) throw Error("istft: zero window sum at sample " + std::to_string(i));

  std::vector<cplx> spec(bins);
  std::vector<double> frame(n_fft);
  for (std::size_t c = 0; c < S.channel_count(); ++c) {
    auto& y = out.channels[c];
    const auto& data = S.channels[c];
    for (std::size_t t = 0; t < S.frames; ++t) {
      for (std::size_t f = 0; f < bins; ++f) spec[f] = data[f * S.frames + t];
      detail::irfft(spec.data(), frame.data(), n_fft);
      const auto start = static_cast<std::ptrdiff_t>(t * grid.hop) - static_cast<std::ptrdiff_t>(n_fft / 2);
      for (std::size_t i = 0; i < win; ++i) {
        const auto idx = start + static_cast<std::ptrdiff_t>(pad + i);
        if (idx >= 0 && idx < static_cast<std::ptrdiff_t>(n)) y[static_cast<std::size_t>(idx)] += frame[pad + i] * window[i];
      }
    }
    for (std::size_t i = 0; i < n; ++i) y[i] /= weight[i];
  }
  return out;
}

MagnitudeGrid content_magnitude(const ComplexSpectrogram& S) {
  if (S.channel_count() != 2) throw Error("content_magnitude: expected a 2-channel spectrogram");
  MagnitudeGrid A(S.bins(), S.frames);
  const auto& L = S.channels[0];
  const auto& R = S.channels[1];
  for (std::size_t i = 0; i < A.values.size(); ++i) A.values[i] = 0.5 * (std::abs(L[i]) + std::abs(R[i]));
  return A;
}

std::vector<double> hilbert_envelope(const std::vector<double>& samples) {
  const std::size_t n = samples.size();
  if (n == 0) throw Error("hilbert_envelope: empty input");
  std::vector<cplx> spec(samples.begin(), samples.end());
  detail::cfft(spec, false);
  // Keep DC (and Nyquist for even n), double positive frequencies, zero negatives.
  const std::size_t half = n / 2;
  for (std::size_t k = 1; k < n; ++k) {
    if (k < (n + 1) / 2)
      spec[k] *= 2.0;
    else if (!(n % 2 == 0 && k == half))
      spec[k] = 0.0;
  }
  detail::cfft(spec, true);
  std::vector<double> env(n);
  for (std::size_t i = 0; i < n; ++i) env[i] = std::abs(spec[i]);
  return env;
}

std::vector<double> hilbert_envelope(const Waveform& x) {
  if (x.channel_count() != 1) throw Error("hilbert_envelope: expected a mono waveform");
  return hilbert_envelope(x.channels.front());
}

Waveform butterworth_highpass(const Waveform& x, double cutoff_hz) {
  x.validate();
  if (!(cutoff_hz > 0) || cutoff_hz >= x.sample_rate / 2) throw Error("highpass: cutoff out of range");
  // Bilinear-transform biquad with Q = 1/sqrt(2).
  const double w0 = 2.0 * std::numbers::pi * cutoff_hz / x.sample_rate;
  const double cw = std::cos(w0);
  const double alpha = std::sin(w0) / std::numbers::sqrt2;
  const double a0 = 1.0 + alpha;
  const double b0 = (1.0 + cw) / 2.0 / a0;
  const double b1 = -(1.0 + cw) / a0;
  const double b2 = b0;
  const double a1 = -2.0 * cw / a0;
  const double a2 = (1.0 - alpha) / a0;

  Waveform y = x;
  for (auto& ch : y.channels) {
    double s1 = 0.0, s2 = 0.0;  // transposed direct form II state
    for (double& v : ch) {
      const double in = v;
      const double out = b0 * in + s1;
      s1 = b1 * in - a1 * out + s2;
      s2 = b2 * in - a2 * out;
      v = out;
    }
  }
  return y;
}

Waveform highpass_150(const Waveform& x) {
  if (x.sample_rate != 16000.0) throw Error("highpass_150: expected 16 kHz input");
  return butterworth_highpass(x, 150.0);
}

}  // namespace tfsplat
