#include <doctest.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>

#include "support.hpp"
#include "tfsplat/error.hpp"
#include "tfsplat/field.hpp"

using namespace tfsplat;

namespace {

GaussianField random_field(std::uint64_t seed, int degree = 2, std::size_t frames = 5) {
  SpectralGrid g;
  g.n_fft = 16;
  g.win_length = 12;
  g.hop = 4;
  GaussianField f(g, frames, degree, {0.5, 1.0, -2.0}, Quat::from_axis_angle({0, 1, 0}, 0.3));
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> n;
  for (auto* v : {&f.positions(), &f.c_mono(), &f.c_diff(), &f.alpha_raw(), &f.delta()})
    for (auto& x : *v) x = n(rng);
  return f;
}

// Checkpoints keep the bin count but not the window, hop or sample rate.
bool same_parameters(const GaussianField& a, const GaussianField& b) {
  return a.bins() == b.bins() && a.frames() == b.frames() && a.sh_degree() == b.sh_degree() &&
         a.p_ref() == b.p_ref() && a.ref_orientation() == b.ref_orientation() && a.positions() == b.positions() &&
         a.c_mono() == b.c_mono() && a.c_diff() == b.c_diff() && a.alpha_raw() == b.alpha_raw() &&
         a.delta() == b.delta();
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("init_field follows the initialization rules") {
  const SpectralGrid g;
  FieldConfig cfg;
  const Vec3 center{0.3, -0.1, 0.7};
  const auto f = init_field(g, 300, center, {0, 0, 2}, Quat{}, cfg, 17);
  CHECK(f.bins() == 257);
  CHECK(f.frames() == 300);
  CHECK(f.coeff_count() == 9);
  double max_r = 0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    max_r = std::max(max_r, norm(f.position(i) - center));
    CHECK(std::abs(softplus(f.alpha_raw()[i]) - 1.0) <= 1e-9);
    CHECK(f.delta()[i] == 0.0f);
  }
  CHECK(max_r <= cfg.init_radius);
  CHECK(max_r > 0.9 * cfg.init_radius);
  for (float c : f.c_mono()) CHECK(c == 0.0f);
  for (float c : f.c_diff()) CHECK(c == 0.0f);

  CHECK(init_field(g, 300, center, {0, 0, 2}, Quat{}, cfg, 17) == f);
  CHECK_FALSE(init_field(g, 300, center, {0, 0, 2}, Quat{}, cfg, 18) == f);
}

TEST_CASE("gaussian accessors address the flat arrays") {
  auto f = random_field(1);
  AudioGaussian a = f.gaussian(3, 2);
  const std::size_t i = f.index(3, 2);
  CHECK(a.position[1] == f.positions()[3 * i + 1]);
  CHECK(a.c_diff[4] == f.c_diff()[9 * i + 4]);
  a.delta = 0.25f;
  f.set_gaussian(3, 2, a);
  CHECK(f.delta()[i] == 0.25f);
  CHECK(f.gaussian(3, 2) == a);
  a.c_mono.pop_back();
  CHECK_THROWS_AS(f.set_gaussian(3, 2, a), Error);
}

TEST_CASE("checkpoint round trip is bit exact") {
  testing::TempDir dir;
  for (int degree : {0, 2, 3}) {
    const auto f = random_field(7 + degree, degree);
    save_checkpoint(f, dir / "a.ckpt");
    const auto g = load_checkpoint(dir / "a.ckpt");
    CHECK(same_parameters(g, f));
    CHECK(g.grid().n_fft == f.grid().n_fft);
    CHECK(g.gaussian(2, 4) == f.gaussian(2, 4));
    save_checkpoint(g, dir / "b.ckpt");
    CHECK(slurp(dir / "a.ckpt") == slurp(dir / "b.ckpt"));
  }
}

TEST_CASE("checkpoint layout") {
  testing::TempDir dir;
  const auto f = random_field(3);
  save_checkpoint(f, dir / "c.ckpt");
  const std::string bytes = slurp(dir / "c.ckpt");
  CHECK(bytes.substr(0, 4) == "AGSF");
  const std::size_t header = 4 + 4 * 4 + 8 * 7;
  const std::size_t record = 4 * (3 + 9 + 9 + 1 + 1);
  CHECK(bytes.size() == header + f.size() * record);
  std::uint32_t version = 0, F = 0;
  std::memcpy(&version, bytes.data() + 4, 4);
  std::memcpy(&F, bytes.data() + 8, 4);
  CHECK(version == 1);
  CHECK(F == f.bins());
  float x0 = 0;
  std::memcpy(&x0, bytes.data() + header, 4);
  CHECK(x0 == f.positions()[0]);
}

TEST_CASE("corrupt checkpoints are rejected") {
  testing::TempDir dir;
  const auto f = random_field(5);
  save_checkpoint(f, dir / "ok.ckpt");
  const std::string bytes = slurp(dir / "ok.ckpt");

  auto write = [&](const std::string& name, const std::string& content) {
    std::ofstream os(dir / name, std::ios::binary);
    os << content;
  };
  write("trunc.ckpt", bytes.substr(0, bytes.size() - 3));
  try {
    (void)load_checkpoint(dir / "trunc.ckpt");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("corrupt checkpoint") != std::string::npos);
  }
  std::string magic = bytes;
  magic[0] = 'X';
  write("magic.ckpt", magic);
  CHECK_THROWS_AS(load_checkpoint(dir / "magic.ckpt"), Error);
  std::string version = bytes;
  version[4] = 9;
  write("version.ckpt", version);
  CHECK_THROWS_AS(load_checkpoint(dir / "version.ckpt"), Error);
  write("extra.ckpt", bytes + "junk");
  CHECK_THROWS_AS(load_checkpoint(dir / "extra.ckpt"), Error);
  CHECK_THROWS_AS(load_checkpoint(dir / "missing.ckpt"), Error);
}

TEST_CASE("percentile filter") {
  MagnitudeGrid A(4, 5);
  for (std::size_t i = 0; i < A.values.size(); ++i) A.values[i] = static_cast<double>((i * 7) % 20);
  CHECK(percentile_filter(A, 0).size() == 20);
  const auto top = percentile_filter(A, 100);
  REQUIRE(top.size() == 1);
  CHECK(A.values[top[0]] == 19.0);
  const auto half = percentile_filter(A, 50);
  CHECK(half.size() == 10);
  for (std::size_t i = 1; i < half.size(); ++i) CHECK(half[i] > half[i - 1]);
  for (auto i : half) CHECK(A.values[i] >= 10.0);

  MagnitudeGrid ties(2, 2);
  std::fill(ties.values.begin(), ties.values.end(), 1.0);
  const auto t = percentile_filter(ties, 100);
  REQUIRE(t.size() == 1);
  CHECK(t[0] == 0);
  CHECK_THROWS_AS(percentile_filter(A, 101), Error);
}

TEST_CASE("point cloud export") {
  testing::TempDir dir;
  const auto f = random_field(9, 2, 3);
  MagnitudeGrid A(f.bins(), f.frames());
  for (std::size_t i = 0; i < A.values.size(); ++i) A.values[i] = 1.0 + static_cast<double>(i);
  CHECK(export_point_cloud(f, A, 0, dir / "all.csv") == f.size());
  std::ifstream is(dir / "all.csv");
  std::string header;
  std::getline(is, header);
  CHECK(header == "x,y,z,f,t,magnitude");
  std::size_t rows = 0;
  for (std::string line; std::getline(is, line);) ++rows;
  CHECK(rows == f.size());
  CHECK(export_point_cloud(f, A, 100, dir / "top.csv") == 1);
  CHECK(export_point_cloud(f, A, 50, dir / "half.csv") == f.size() / 2 + f.size() % 2);
  CHECK_THROWS_AS(export_point_cloud(f, MagnitudeGrid(2, 2), 0, dir / "bad.csv"), Error);
}
