#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace tfsplat {

using cplx = std::complex<double>;

// Planar multi-channel audio. Samples are nominally in [-1, 1].
struct Waveform {
  double sample_rate = 16000.0;
  std::vector<std::vector<double>> channels;

  Waveform() = default;
  Waveform(double rate, std::size_t n_channels, std::size_t length)
      : sample_rate(rate), channels(n_channels, std::vector<double>(length, 0.0)) {}

  std::size_t channel_count() const { return channels.size(); }
  std::size_t length() const { return channels.empty() ? 0 : channels.front().size(); }
  Waveform channel(std::size_t c) const;

  // Throws Error unless rate > 0, 1-2 equal-length channels and all samples finite.
  void validate() const;
};

// STFT configuration. Frames are centered on multiples of `hop`.
struct SpectralGrid {
  int n_fft = 512;
  int win_length = 400;
  int hop = 160;
  double sample_rate = 16000.0;

  std::size_t bins() const { return static_cast<std::size_t>(n_fft / 2 + 1); }
  std::size_t frames_for(std::size_t n_samples) const {
    return (n_samples + static_cast<std::size_t>(hop) - 1) / static_cast<std::size_t>(hop);
  }
  double bin_hz(std::size_t f) const { return static_cast<double>(f) * sample_rate / n_fft; }
  // Angular frequency of bin f in rad/s.
  double omega(std::size_t f) const;
  std::vector<double> omegas() const;

  void validate() const;
  bool operator==(const SpectralGrid&) const = default;
};

// F x T complex values per channel, stored f-major: index(f, t) = f * frames + t.
struct ComplexSpectrogram {
  SpectralGrid grid;
  std::size_t frames = 0;
  std::size_t n_samples = 0;  // length of the waveform it was computed from
  std::vector<std::vector<cplx>> channels;

  ComplexSpectrogram() = default;
  ComplexSpectrogram(const SpectralGrid& g, std::size_t n_frames, std::size_t samples,
                     std::size_t n_channels)
      : grid(g),
        frames(n_frames),
        n_samples(samples),
        channels(n_channels, std::vector<cplx>(g.bins() * n_frames)) {}

  std::size_t bins() const { return grid.bins(); }
  std::size_t size() const { return bins() * frames; }
  std::size_t channel_count() const { return channels.size(); }
  std::size_t index(std::size_t f, std::size_t t) const { return f * frames + t; }
  bool same_shape(const ComplexSpectrogram& o) const {
    return grid == o.grid && frames == o.frames && channels.size() == o.channels.size();
  }
  void validate() const;
};

// F x T real grid, f-major like ComplexSpectrogram.
struct RealGrid {
  std::size_t bins = 0;
  std::size_t frames = 0;
  std::vector<double> values;

  RealGrid() = default;
  RealGrid(std::size_t f, std::size_t t) : bins(f), frames(t), values(f * t, 0.0) {}
  double operator()(std::size_t f, std::size_t t) const { return values[f * frames + t]; }
  double& operator()(std::size_t f, std::size_t t) { return values[f * frames + t]; }
};

// A RealGrid whose values are non-negative.
using MagnitudeGrid = RealGrid;

// Periodic Hamming window of length n.
std::vector<double> hamming_window(std::size_t n);

ComplexSpectrogram stft(const Waveform& x, const SpectralGrid& grid);
Waveform istft(const ComplexSpectrogram& S);

// A(f,t) = (|S_L| + |S_R|) / 2.
MagnitudeGrid content_magnitude(const ComplexSpectrogram& S);

// |analytic signal| of a mono waveform (full-length FFT Hilbert transform).
std::vector<double> hilbert_envelope(const Waveform& x);
std::vector<double> hilbert_envelope(const std::vector<double>& samples);

// Second-order Butterworth highpass at 150 Hz, causal. Input must be 16 kHz.
Waveform highpass_150(const Waveform& x);
// Same filter with an arbitrary cutoff and rate.
Waveform butterworth_highpass(const Waveform& x, double cutoff_hz);

}  // namespace tfsplat
