#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "tfsplat/spectral.hpp"

namespace tfsplat {

// Mean over channels and bins of ||STFT(pred)| - |STFT(gt)||.
double mag_distance(const Waveform& pred, const Waveform& gt, const SpectralGrid& grid = {});

// RMS difference of Hilbert envelopes, averaged over channels.
double env_distance(const Waveform& pred, const Waveform& gt);

// |LR energy ratio (dB) of pred - that of gt|. Throws on a silent channel.
double lre_error(const Waveform& pred, const Waveform& gt);

struct MetricReport {
  double mag = 0.0;
  double env = 0.0;
  double lre = 0.0;

  std::map<std::string, std::string> to_key_values() const;
};

MetricReport evaluate(const Waveform& pred, const Waveform& gt, const SpectralGrid& grid = {});
void write_report(const MetricReport& report, const std::filesystem::path& path);

}  // namespace tfsplat
