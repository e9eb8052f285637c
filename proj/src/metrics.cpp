#include "tfsplat/metrics.hpp"

#include <cmath>
#include <sstream>

#include "tfsplat/error.hpp"
#include "tfsplat/scene_io.hpp"

namespace tfsplat {
namespace {

void require_comparable(const Waveform& pred, const Waveform& gt, const char* what) {
  pred.validate();
  gt.validate();
  if (pred.channel_count() != gt.channel_count())
    throw Error(std::string(what) + ": channel count mismatch");
  if (pred.length() != gt.length())
    throw Error(std::string(what) + ": length mismatch (" + std::to_string(pred.length()) + " vs " +
                std::to_string(gt.length()) + ")");
  if (pred.sample_rate != gt.sample_rate) throw Error(std::string(what) + ": sample rate mismatch");
}

double lr_ratio_db(const Waveform& x) {
  if (x.channel_count() != 2) throw Error("lre_error: expected stereo input");
  double e[2] = {0.0, 0.0};
  for (std::size_t c = 0; c < 2; ++c)
    for (double s : x.channels[c]) e[c] += s * s;
  if (!(e[0] > 0.0) || !(e[1] > 0.0)) throw Error("undefined LRE: a channel has zero energy");
  return 10.0 * std::log10(e[0] / e[1]);
}

std::string format(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

double mag_distance(const Waveform& pred, const Waveform& gt, const SpectralGrid& grid_in) {
  require_comparable(pred, gt, "mag_distance");
  SpectralGrid grid = grid_in;
  grid.sample_rate = gt.sample_rate;
  const auto P = stft(pred, grid);
  const auto G = stft(gt, grid);
  double acc = 0.0;
  std::size_t n = 0;
  for (std::size_t c = 0; c < P.channel_count(); ++c) {
    for (std::size_t i = 0; i < P.channels[c].size(); ++i)
      acc += std::abs(std::abs(P.channels[c][i]) - std::abs(G.channels[c][i]));
    n += P.channels[c].size();
  }
  return n ? acc / static_cast<double>(n) : 0.0;
}

double env_distance(const Waveform& pred, const Waveform& gt) {
  require_comparable(pred, gt, "env_distance");
  if (gt.length() == 0) return 0.0;
  double total = 0.0;
  for (std::size_t c = 0; c < gt.channel_count(); ++c) {
    const auto a = hilbert_envelope(pred.channels[c]);
    const auto b = hilbert_envelope(gt.channels[c]);
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
    total += std::sqrt(acc / static_cast<double>(a.size()));
  }
  return total / static_cast<double>(gt.channel_count());
}

double lre_error(const Waveform& pred, const Waveform& gt) {
  require_comparable(pred, gt, "lre_error");
  return std::abs(lr_ratio_db(pred) - lr_ratio_db(gt));
}

std::map<std::string, std::string> MetricReport::to_key_values() const {
  return {{"mag", format(mag)}, {"env", format(env)}, {"lre_db", format(lre)}};
}

MetricReport evaluate(const Waveform& pred, const Waveform& gt, const SpectralGrid& grid) {
  return {mag_distance(pred, gt, grid), env_distance(pred, gt), lre_error(pred, gt)};
}

void write_report(const MetricReport& report, const std::filesystem::path& path) {
  write_key_values(report.to_key_values(), path);
}

}  // namespace tfsplat
