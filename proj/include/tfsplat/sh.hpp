#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "tfsplat/math.hpp"

namespace tfsplat {

inline constexpr int kMaxShDegree = 3;
inline constexpr std::size_t kMaxShCoeffs = (kMaxShDegree + 1) * (kMaxShDegree + 1);

constexpr std::size_t sh_coeff_count(int degree) {
  return static_cast<std::size_t>((degree + 1) * (degree + 1));
}

// Real orthonormal spherical harmonics without the Condon-Shortley phase,
// ordered (0,0), (1,-1), (1,0), (1,1), (2,-2), ... Direction must be unit length.
std::vector<double> sh_basis(const Vec3& d, int degree);

// Allocation-free variant used by the renderer. Fills the first
// sh_coeff_count(degree) entries of `values`; when `grad` is non-null also
// writes the partial derivatives of each polynomial with respect to (x, y, z).
void sh_eval(const Vec3& d, int degree, std::array<double, kMaxShCoeffs>& values,
             std::array<Vec3, kMaxShCoeffs>* grad = nullptr);

// <c, Y>. Throws on length mismatch.
double sh_project(std::span<const double> coeffs, std::span<const double> basis);

}  // namespace tfsplat
