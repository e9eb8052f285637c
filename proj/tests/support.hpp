#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

#include <unistd.h>

#include "tfsplat/field.hpp"
#include "tfsplat/spectral.hpp"

namespace testing {

// Unique scratch directory, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("tfsplat_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline tfsplat::Waveform random_waveform(std::mt19937_64& rng, std::size_t channels, std::size_t n,
                                         double rate = 16000.0) {
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  tfsplat::Waveform w(rate, channels, n);
  for (auto& ch : w.channels)
    for (auto& v : ch) v = u(rng);
  return w;
}

inline tfsplat::ComplexSpectrogram random_spectrogram(std::mt19937_64& rng, const tfsplat::SpectralGrid& grid,
                                                      std::size_t frames, std::size_t channels = 2) {
  std::normal_distribution<double> n(0.0, 1.0);
  tfsplat::ComplexSpectrogram S(grid, frames, 0, channels);
  for (auto& ch : S.channels)
    for (auto& v : ch) v = {n(rng), n(rng)};
  return S;
}

}  // namespace testing
