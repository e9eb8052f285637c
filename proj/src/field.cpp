#include "tfsplat/field.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include "random.hpp"
#include "tfsplat/error.hpp"

namespace tfsplat {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

void FieldConfig::validate() const {
  if (sh_degree < 0 || sh_degree > kMaxShDegree) throw Error("field config: sh_degree must be in [0, 3]");
  if (!(init_radius >= 0)) throw Error("field config: init_radius must be >= 0");
  if (!(epsilon > 0)) throw Error("field config: epsilon must be > 0");
  if (!(lambda_residual >= 0 && lambda_residual < 1)) throw Error("field config: lambda_residual must be in [0, 1)");
  if (!(head_radius > 0)) throw Error("field config: head_radius must be > 0");
  if (!(speed_of_sound > 0)) throw Error("field config: speed_of_sound must be > 0");
}

GaussianField::GaussianField(const SpectralGrid& grid, std::size_t frames, int sh_degree, const Vec3& p_ref,
                             const Quat& ref_orientation)
    : grid_(grid), frames_(frames), sh_degree_(sh_degree), p_ref_(p_ref), ref_orientation_(ref_orientation) {
  if (sh_degree < 0 || sh_degree > kMaxShDegree) throw Error("field: unsupported SH degree");
  if (!is_finite(p_ref)) throw Error("field: reference position must be finite");
  const std::size_t n = size();
  const std::size_t k = coeff_count();
  positions_.assign(3 * n, 0.0f);
  c_mono_.assign(k * n, 0.0f);
  c_diff_.assign(k * n, 0.0f);
  alpha_raw_.assign(n, 0.0f);
  delta_.assign(n, 0.0f);
}

AudioGaussian GaussianField::gaussian(std::size_t f, std::size_t t) const {
  const std::size_t i = index(f, t);
  const std::size_t k = coeff_count();
  AudioGaussian g;
  std::copy_n(positions_.begin() + 3 * i, 3, g.position.begin());
  g.c_mono.assign(c_mono_.begin() + k * i, c_mono_.begin() + k * (i + 1));
  g.c_diff.assign(c_diff_.begin() + k * i, c_diff_.begin() + k * (i + 1));
  g.alpha_raw = alpha_raw_[i];
  g.delta = delta_[i];
  return g;
}

void GaussianField::set_gaussian(std::size_t f, std::size_t t, const AudioGaussian& g) {
  const std::size_t i = index(f, t);
  const std::size_t k = coeff_count();
  if (g.c_mono.size() != k || g.c_diff.size() != k) throw Error("field: SH coefficient count mismatch");
  std::copy_n(g.position.begin(), 3, positions_.begin() + 3 * i);
  std::copy(g.c_mono.begin(), g.c_mono.end(), c_mono_.begin() + k * i);
  std::copy(g.c_diff.begin(), g.c_diff.end(), c_diff_.begin() + k * i);
  alpha_raw_[i] = g.alpha_raw;
  delta_[i] = g.delta;
}

bool GaussianField::all_finite() const {
  auto finite = [](const std::vector<float>& v) {
    return std::all_of(v.begin(), v.end(), [](float x) { return std::isfinite(x); });
  };
  return finite(positions_) && finite(c_mono_) && finite(c_diff_) && finite(alpha_raw_) && finite(delta_);
}

GaussianField init_field(const SpectralGrid& grid, std::size_t frames, const Vec3& center, const Vec3& p_ref,
                         const Quat& ref_orientation, const FieldConfig& cfg, std::uint64_t seed) {
  grid.validate();
  cfg.validate();
  GaussianField field(grid, frames, cfg.sh_degree, p_ref, ref_orientation);

  detail::Rng rng(seed);
  auto& pos = field.positions();
  for (std::size_t i = 0; i < field.size(); ++i) {
    Vec3 u;
    do {
      u = {2 * rng.uniform() - 1, 2 * rng.uniform() - 1, 2 * rng.uniform() - 1};
    } while (dot(u, u) > 1.0);
    Vec3 x = center + cfg.init_radius * u;
    // Rounding to float can push a point on the sphere just outside it.
    for (int attempt = 0; attempt < 4; ++attempt) {
      const Vec3 rounded{static_cast<float>(x.x), static_cast<float>(x.y), static_cast<float>(x.z)};
      if (norm(rounded - center) <= cfg.init_radius) break;
      x = center + 0.999999 * (x - center);
    }
    pos[3 * i] = static_cast<float>(x.x);
    pos[3 * i + 1] = static_cast<float>(x.y);
    pos[3 * i + 2] = static_cast<float>(x.z);
  }
  std::fill(field.alpha_raw().begin(), field.alpha_raw().end(), static_cast<float>(inverse_softplus(1.0)));
  return field;
}

namespace {

constexpr char kMagic[4] = {'A', 'G', 'S', 'F'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
void put_all(std::ostream& os, const float* data, std::size_t n) {
  os.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(n * sizeof(T)));
}

template <typename T>
T get(std::istream& is) {
  T v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof(T))) throw Error("corrupt checkpoint: truncated header");
  return v;
}

}  // namespace

void save_checkpoint(const GaussianField& field, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error("cannot open checkpoint for writing: " + path.string());
  os.write(kMagic, 4);
  put(os, kVersion);
  put(os, static_cast<std::uint32_t>(field.bins()));
  put(os, static_cast<std::uint32_t>(field.frames()));
  put(os, static_cast<std::uint32_t>(field.sh_degree()));
  const Vec3& p = field.p_ref();
  for (double v : {p.x, p.y, p.z}) put(os, v);
  const Quat& q = field.ref_orientation();
  for (double v : {q.w, q.x, q.y, q.z}) put(os, v);

  const std::size_t k = field.coeff_count();
  std::vector<float> record(3 + 2 * k + 2);
  for (std::size_t i = 0; i < field.size(); ++i) {
    std::copy_n(field.positions().begin() + 3 * i, 3, record.begin());
    std::copy_n(field.c_mono().begin() + k * i, k, record.begin() + 3);
    std::copy_n(field.c_diff().begin() + k * i, k, record.begin() + 3 + k);
    record[3 + 2 * k] = field.alpha_raw()[i];
    record[4 + 2 * k] = field.delta()[i];
    put_all<float>(os, record.data(), record.size());
  }
  if (!os) throw Error("failed writing checkpoint: " + path.string());
}

GaussianField load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open checkpoint: " + path.string());
  char magic[4];
  if (!is.read(magic, 4)) throw Error("corrupt checkpoint: truncated header");
  if (std::memcmp(magic, kMagic, 4) != 0) throw Error("not a checkpoint (bad magic): " + path.string());
  const auto version = get<std::uint32_t>(is);
  if (version != kVersion) throw Error("unsupported checkpoint version " + std::to_string(version));
  const auto bins = get<std::uint32_t>(is);
  const auto frames = get<std::uint32_t>(is);
  const auto degree = get<std::uint32_t>(is);
  if (degree > static_cast<std::uint32_t>(kMaxShDegree)) throw Error("corrupt checkpoint: bad SH degree");
  if (bins < 2) throw Error("corrupt checkpoint: bad bin count");
  Vec3 p;
  p.x = get<double>(is);
  p.y = get<double>(is);
  p.z = get<double>(is);
  Quat q;
  q.w = get<double>(is);
  q.x = get<double>(is);
  q.y = get<double>(is);
  q.z = get<double>(is);

  // The grid's n_fft follows from the bin count; the remaining STFT settings
  // are not stored and take their defaults.
  SpectralGrid grid;
  grid.n_fft = static_cast<int>(2 * (bins - 1));
  if (grid.win_length > grid.n_fft) grid.win_length = grid.n_fft;
  if (grid.hop > grid.win_length) grid.hop = grid.win_length;
  GaussianField field(grid, frames, static_cast<int>(degree), p, q);

  const std::size_t k = field.coeff_count();
  std::vector<float> record(3 + 2 * k + 2);
  const auto record_bytes = static_cast<std::streamsize>(record.size() * sizeof(float));
  for (std::size_t i = 0; i < field.size(); ++i) {
    if (!is.read(reinterpret_cast<char*>(record.data()), record_bytes))
      throw Error("corrupt checkpoint: truncated at Gaussian " + std::to_string(i));
    std::copy_n(record.begin(), 3, field.positions().begin() + 3 * i);
    std::copy_n(record.begin() + 3, k, field.c_mono().begin() + k * i);
    std::copy_n(record.begin() + 3 + k, k, field.c_diff().begin() + k * i);
    field.alpha_raw()[i] = record[3 + 2 * k];
    field.delta()[i] = record[4 + 2 * k];
  }
  if (is.peek() != std::char_traits<char>::eof()) throw Error("corrupt checkpoint: trailing data");
  return field;
}

std::vector<std::size_t> percentile_filter(const MagnitudeGrid& A, double percentile) {
  if (!(percentile >= 0 && percentile <= 100)) throw Error("percentile must be in [0, 100]");
  const std::size_t n = A.values.size();
  if (n == 0) return {};
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return A.values[a] > A.values[b]; });
  auto keep = static_cast<std::size_t>(std::llround((1.0 - percentile / 100.0) * static_cast<double>(n)));
  keep = std::clamp<std::size_t>(keep, 1, n);
  order.resize(keep);
  std::sort(order.begin(), order.end());
  return order;
}

std::size_t export_point_cloud(const GaussianField& field, const MagnitudeGrid& A, double percentile,
                               const std::filesystem::path& path) {
  if (A.bins != field.bins() || A.frames != field.frames())
    throw Error("export_point_cloud: magnitude grid does not match field dimensions");
  const auto kept = percentile_filter(A, percentile);
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw Error("cannot open point cloud for writing: " + path.string());
  os.precision(9);
  os << "x,y,z,f,t,magnitude\n";
  for (std::size_t i : kept) {
    const std::size_t f = i / field.frames();
    const std::size_t t = i % field.frames();
    os << field.positions()[3 * i] << ',' << field.positions()[3 * i + 1] << ',' << field.positions()[3 * i + 2]
       << ',' << f << ',' << t << ',' << A.values[i] << '\n';
  }
  if (!os) throw Error("failed writing point cloud: " + path.string());
  return kept.size();
}

}  // namespace tfsplat
