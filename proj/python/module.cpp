#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "tfsplat/cli.hpp"
#include "tfsplat/error.hpp"
#include "tfsplat/field.hpp"
#include "tfsplat/metrics.hpp"
#include "tfsplat/oracle.hpp"
#include "tfsplat/render.hpp"
#include "tfsplat/scene_io.hpp"
#include "tfsplat/sh.hpp"
#include "tfsplat/spectral.hpp"
#include "tfsplat/train.hpp"

namespace py = pybind11;
using namespace tfsplat;

namespace {

using RealArray = py::array_t<double, py::array::c_style | py::array::forcecast>;
using ComplexArray = py::array_t<cplx, py::array::c_style | py::array::forcecast>;

// (channels, samples) or (samples,) array -> Waveform
Waveform to_waveform(const RealArray& a, double rate) {
  if (a.ndim() != 1 && a.ndim() != 2) throw Error("expected a 1-D or (channels, samples) array");
  const std::size_t ch = a.ndim() == 1 ? 1 : static_cast<std::size_t>(a.shape(0));
  const std::size_t n = static_cast<std::size_t>(a.ndim() == 1 ? a.shape(0) : a.shape(1));
  Waveform w(rate, ch, n);
  const double* p = a.data();
  for (std::size_t c = 0; c < ch; ++c) std::copy_n(p + c * n, n, w.channels[c].begin());
  return w;
}

RealArray from_waveform(const Waveform& w) {
  RealArray out({w.channel_count(), w.length()});
  double* p = out.mutable_data();
  for (std::size_t c = 0; c < w.channel_count(); ++c) std::copy(w.channels[c].begin(), w.channels[c].end(), p + c * w.length());
  return out;
}

ComplexArray from_spectrogram(const ComplexSpectrogram& S) {
  ComplexArray out({S.channel_count(), S.bins(), S.frames});
  cplx* p = out.mutable_data();
  for (std::size_t c = 0; c < S.channel_count(); ++c) std::copy(S.channels[c].begin(), S.channels[c].end(), p + c * S.size());
  return out;
}

ComplexSpectrogram to_spectrogram(const ComplexArray& a, const SpectralGrid& g, std::size_t n_samples) {
  if (a.ndim() != 3) throw Error("expected a (channels, bins, frames) array");
  if (static_cast<std::size_t>(a.shape(1)) != g.bins()) throw Error("bin count does not match n_fft");
  ComplexSpectrogram S(g, static_cast<std::size_t>(a.shape(2)), n_samples, static_cast<std::size_t>(a.shape(0)));
  const cplx* p = a.data();
  for (std::size_t c = 0; c < S.channel_count(); ++c) std::copy_n(p + c * S.size(), S.size(), S.channels[c].begin());
  return S;
}

SpectralGrid make_grid(double rate, int n_fft, int win_length, int hop) {
  SpectralGrid g;
  g.sample_rate = rate;
  g.n_fft = n_fft;
  g.win_length = win_length;
  g.hop = hop;
  g.validate();
  return g;
}

Vec3 to_vec3(const std::array<double, 3>& v) { return {v[0], v[1], v[2]}; }
Quat to_quat(const std::array<double, 4>& q) { return {q[0], q[1], q[2], q[3]}; }

RealArray float_array(const std::vector<float>& v, std::size_t rows, std::size_t cols) {
  RealArray out({rows, cols});
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

}  // namespace

PYBIND11_MODULE(_tfsplat, m) {
  m.doc() = "Time-frequency Gaussian splatting for binaural audio";
  py::register_exception<Error>(m, "TfsplatError", PyExc_ValueError);

  m.def(
      "stft",
      [](const RealArray& x, double sample_rate, int n_fft, int win_length, int hop) {
        return from_spectrogram(stft(to_waveform(x, sample_rate), make_grid(sample_rate, n_fft, win_length, hop)));
      },
      py::arg("x"), py::arg("sample_rate") = 16000.0, py::arg("n_fft") = 512, py::arg("win_length") = 400,
      py::arg("hop") = 160, "Complex STFT, shape (channels, bins, frames).");
  m.def(
      "istft",
      [](const ComplexArray& S, std::size_t length, double sample_rate, int n_fft, int win_length, int hop) {
        return from_waveform(istft(to_spectrogram(S, make_grid(sample_rate, n_fft, win_length, hop), length)));
      },
      py::arg("S"), py::arg("length"), py::arg("sample_rate") = 16000.0, py::arg("n_fft") = 512,
      py::arg("win_length") = 400, py::arg("hop") = 160, "Inverse STFT, shape (channels, length).");
  m.def(
      "sh_basis", [](const std::array<double, 3>& d, int degree) { return sh_basis(to_vec3(d), degree); },
      py::arg("direction"), py::arg("degree"), "Real spherical harmonics Y_lm(direction), (degree + 1)^2 values.");

  m.def(
      "mag_distance",
      [](const RealArray& pred, const RealArray& gt, double rate) {
        return mag_distance(to_waveform(pred, rate), to_waveform(gt, rate));
      },
      py::arg("pred"), py::arg("gt"), py::arg("sample_rate") = 16000.0);
  m.def(
      "env_distance",
      [](const RealArray& pred, const RealArray& gt, double rate) {
        return env_distance(to_waveform(pred, rate), to_waveform(gt, rate));
      },
      py::arg("pred"), py::arg("gt"), py::arg("sample_rate") = 16000.0);
  m.def(
      "lre_error",
      [](const RealArray& pred, const RealArray& gt, double rate) {
        return lre_error(to_waveform(pred, rate), to_waveform(gt, rate));
      },
      py::arg("pred"), py::arg("gt"), py::arg("sample_rate") = 16000.0);

  m.def(
      "load_wav",
      [](const std::filesystem::path& p) {
        const Waveform w = load_wav(p);
        return py::make_tuple(from_waveform(w), w.sample_rate);
      },
      py::arg("path"), "Returns (samples[channels, n], sample_rate).");
  m.def(
      "save_wav",
      [](const std::filesystem::path& p, const RealArray& x, double rate) { save_wav(to_waveform(x, rate), p); },
      py::arg("path"), py::arg("x"), py::arg("sample_rate") = 16000.0);

  m.def(
      "simulate_free_field",
      [](const RealArray& src, const std::array<double, 3>& source_position, const std::array<double, 3>& position,
         const std::array<double, 4>& orientation, double rate) {
        return from_waveform(simulate_free_field(to_waveform(src, rate), to_vec3(source_position),
                                                 ListenerPose{to_vec3(position), to_quat(orientation)}));
      },
      py::arg("source"), py::arg("source_position"), py::arg("position"),
      py::arg("orientation") = std::array<double, 4>{1, 0, 0, 0}, py::arg("sample_rate") = 16000.0);
  m.def(
      "synthesize_scene",
      [](const std::filesystem::path& out, int n_poses, std::uint64_t seed) {
        const auto s = generate_synthetic_scene(n_poses, seed);
        s.save(out);
        return std::array<double, 3>{s.source_position.x, s.source_position.y, s.source_position.z};
      },
      py::arg("out"), py::arg("n_poses") = 8, py::arg("seed") = 0,
      "Writes a synthetic scene directory and returns the source position.");

  py::class_<GaussianField>(m, "Field")
      .def_static("load", &load_checkpoint, py::arg("path"))
      .def("save", [](const GaussianField& f, const std::filesystem::path& p) { save_checkpoint(f, p); }, py::arg("path"))
      .def_property_readonly("bins", &GaussianField::bins)
      .def_property_readonly("frames", &GaussianField::frames)
      .def_property_readonly("sh_degree", &GaussianField::sh_degree)
      .def_property_readonly("positions", [](const GaussianField& f) { return float_array(f.positions(), f.size(), 3); })
      .def_property_readonly("alpha",
                             [](const GaussianField& f) {
                               RealArray out(static_cast<py::ssize_t>(f.size()));
                               for (std::size_t i = 0; i < f.size(); ++i) out.mutable_data()[i] = softplus(f.alpha_raw()[i]);
                               return out;
                             })
      .def_property_readonly("delta", [](const GaussianField& f) { return float_array(f.delta(), f.size(), 1); })
      .def(
          "render",
          [](const GaussianField& f, const RealArray& source, const std::array<double, 3>& position,
             const std::array<double, 4>& orientation, double rate, bool da, bool sh, bool pc) {
            SpectralGrid g;
            g.sample_rate = rate;
            const auto S = stft(to_waveform(source, rate), g);
            RenderToggles t{da, sh, pc};
            return from_waveform(istft(render(f, S, ListenerPose{to_vec3(position), to_quat(orientation)}, FieldConfig{}, t).spectrogram));
          },
          py::arg("source"), py::arg("position"), py::arg("orientation") = std::array<double, 4>{1, 0, 0, 0},
          py::arg("sample_rate") = 16000.0, py::arg("distance_attenuation") = true,
          py::arg("spherical_harmonics") = true, py::arg("phase_correction") = true,
          "Binaural waveform at a pose, from the stereo source clip recorded at the reference pose.");

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::vector<const char*> argv{"tfsplat"};
        for (const auto& a : args) argv.push_back(a.c_str());
        std::ostringstream out, err;
        int code;
        {
          py::gil_scoped_release release;
          code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs a tfsplat subcommand in-process; returns (exit_code, stdout, stderr).");
}
