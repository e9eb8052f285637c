#include "tfsplat/sh.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "tfsplat/error.hpp"

namespace tfsplat {
namespace {

constexpr double kPi = std::numbers::pi;
const double C0 = 0.5 / std::sqrt(kPi);
const double C1 = std::sqrt(3.0 / (4.0 * kPi));
const double C2a = 0.5 * std::sqrt(15.0 / kPi);
const double C2b = 0.25 * std::sqrt(5.0 / kPi);
const double C2c = 0.25 * std::sqrt(15.0 / kPi);
const double C3a = 0.25 * std::sqrt(35.0 / (2.0 * kPi));
const double C3b = 0.5 * std::sqrt(105.0 / kPi);
const double C3c = 0.25 * std::sqrt(21.0 / (2.0 * kPi));
const double C3d = 0.25 * std::sqrt(7.0 / kPi);
const double C3e = 0.25 * std::sqrt(105.0 / kPi);

constexpr double kUnitTolerance = 1e-9;

}  // namespace

void sh_eval(const Vec3& d, int degree, std::array<double, kMaxShCoeffs>& Y, std::array<Vec3, kMaxShCoeffs>* grad) {
  const double x = d.x, y = d.y, z = d.z;
  Y[0] = C0;
  if (grad) (*grad)[0] = {0, 0, 0};
  if (degree < 1) return;

  Y[1] = C1 * y;
  Y[2] = C1 * z;
  Y[3] = C1 * x;
  if (grad) {
    auto& g = *grad;
    g[1] = {0, C1, 0};
    g[2] = {0, 0, C1};
    g[3] = {C1, 0, 0};
  }
  if (degree < 2) return;

  Y[4] = C2a * x * y;
  Y[5] = C2a * y * z;
  Y[6] = C2b * (3 * z * z - 1);
  Y[7] = C2a * x * z;
  Y[8] = C2c * (x * x - y * y);
  if (grad) {
    auto& g = *grad;
    g[4] = {C2a * y, C2a * x, 0};
    g[5] = {0, C2a * z, C2a * y};
    g[6] = {0, 0, C2b * 6 * z};
    g[7] = {C2a * z, 0, C2a * x};
    g[8] = {C2c * 2 * x, -C2c * 2 * y, 0};
  }
  if (degree < 3) return;

  Y[9] = C3a * y * (3 * x * x - y * y);
  Y[10] = C3b * x * y * z;
  Y[11] = C3c * y * (5 * z * z - 1);
  Y[12] = C3d * z * (5 * z * z - 3);
  Y[13] = C3c * x * (5 * z * z - 1);
  Y[14] = C3e * z * (x * x - y * y);
  Y[15] = C3a * x * (x * x - 3 * y * y);
  if (grad) {
    auto& g = *grad;
    g[9] = {C3a * 6 * x * y, C3a * (3 * x * x - 3 * y * y), 0};
    g[10] = {C3b * y * z, C3b * x * z, C3b * x * y};
    g[11] = {0, C3c * (5 * z * z - 1), C3c * 10 * y * z};
    g[12] = {0, 0, C3d * (15 * z * z - 3)};
    g[13] = {C3c * (5 * z * z - 1), 0, C3c * 10 * x * z};
    g[14] = {C3e * 2 * x * z, -C3e * 2 * y * z, C3e * (x * x - y * y)};
    g[15] = {C3a * (3 * x * x - 3 * y * y), -C3a * 6 * x * y, 0};
  }
}

std::vector<double> sh_basis(const Vec3& d, int degree) {
  if (degree < 0 || degree > kMaxShDegree) throw Error("sh_basis: unsupported degree " + std::to_string(degree));
  if (!is_finite(d) || std::abs(norm(d) - 1.0) > kUnitTolerance) throw Error("sh_basis: direction is not unit length");
  std::array<double, kMaxShCoeffs> values{};
  sh_eval(d, degree, values);
  return {values.begin(), values.begin() + static_cast<std::ptrdiff_t>(sh_coeff_count(degree))};
}

double sh_project(std::span<const double> coeffs, std::span<const double> basis) {
  if (coeffs.size() != basis.size()) throw Error("sh_project: coefficient and basis lengths differ");
  double acc = 0.0;
  for (std::size_t i = 0; i < coeffs.size(); ++i) acc += coeffs[i] * basis[i];
  return acc;
}

}  // namespace tfsplat
