#pragma once

#include <utility>

#include "tfsplat/spectral.hpp"

namespace tfsplat {

struct LossWeights {
  double lambda_diff = 1.0;
  double lambda_phs = 0.1;
  double log_floor = 1e-5;

  void validate() const;
};

struct LossComponents {
  double total = 0.0;
  double mono_mag = 0.0;
  double diff_mag = 0.0;
  double phase_left = 0.0;
  double phase_right = 0.0;
};

// (S_L + S_R, S_L - S_R) as two mono spectrograms.
std::pair<ComplexSpectrogram, ComplexSpectrogram> mono_diff(const ComplexSpectrogram& S);

// Mean over bins and channels of (log(|S| + floor) - log(|S_hat| + floor))^2.
double mag_loss(const ComplexSpectrogram& S, const ComplexSpectrogram& S_hat, double log_floor);

// Mean over bins and channels of the squared distance between unit phasors.
// The phase of an exact zero is taken as 0.
double phase_loss(const ComplexSpectrogram& S, const ComplexSpectrogram& S_hat);

// mono mag + lambda_diff * diff mag + lambda_phs * (phase L + phase R).
LossComponents total_loss(const ComplexSpectrogram& S_gt, const ComplexSpectrogram& S_hat, const LossWeights& w);

}  // namespace tfsplat
