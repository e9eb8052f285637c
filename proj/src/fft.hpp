#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace tfsplat::detail {

// Thin wrappers over FFTW. Plans are cached per size; execution is thread-safe.

// Real forward transform: n real inputs -> n/2+1 complex outputs (unnormalized).
void rfft(const double* in, std::complex<double>* out, std::size_t n);
// Inverse of rfft: n/2+1 complex -> n real outputs, scaled by 1/n.
void irfft(const std::complex<double>* in, double* out, std::size_t n);
// In-place complex DFT. Inverse is scaled by 1/n.
void cfft(std::vector<std::complex<double>>& data, bool inverse);

}  // namespace tfsplat::detail
