#include "tfsplat/cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>

#include "tfsplat/config.hpp"
#include "tfsplat/error.hpp"
#include "tfsplat/field.hpp"
#include "tfsplat/metrics.hpp"
#include "tfsplat/oracle.hpp"
#include "tfsplat/render.hpp"
#include "tfsplat/scene_io.hpp"
#include "tfsplat/train.hpp"

namespace fs = std::filesystem;

namespace tfsplat {
namespace {

struct UsageError : Error {
  using Error::Error;
};

// Run configuration stored next to a checkpoint so render/export reuse the
// training settings (toggles, grid, scene split).
fs::path sidecar_config(const fs::path& ckpt) { return fs::path(ckpt.string() + ".cfg"); }
fs::path history_path(const fs::path& ckpt) { return fs::path(ckpt.string() + ".history"); }

RunConfig resolve_config(const std::string& config_file, const std::optional<fs::path>& ckpt) {
  if (!config_file.empty()) return load_run_config(config_file);
  if (ckpt && fs::exists(sidecar_config(*ckpt))) return load_run_config(sidecar_config(*ckpt));
  return RunConfig{};
}

struct SynthArgs {
  std::string out;
  int poses = 8;
  std::uint64_t seed = 0;
};

struct TrainArgs {
  std::string scene, config, out;
  std::vector<std::string> ablate;
  std::optional<int> epochs;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
};

struct RenderArgs {
  std::string ckpt, scene, pose, out, config;
};

struct EvalArgs {
  std::string pred, ref, out;
};

struct ExportArgs {
  std::string ckpt, scene, out, config;
  std::optional<double> percentile;
};

int cmd_synth(const SynthArgs& a, std::ostream& out) {
  if (a.poses < 2) throw UsageError("--poses must be at least 2");
  const auto scene = generate_synthetic_scene(a.poses, a.seed);
  scene.save(a.out);
  out << "wrote " << a.poses << " poses to " << a.out << '\n';
  return 0;
}

int cmd_train(const TrainArgs& a, std::ostream& out) {
  RunConfig cfg = resolve_config(a.config, std::nullopt);
  for (const auto& name : a.ablate) {
    if (name == "da") cfg.train.toggles.distance_attenuation = false;
    else if (name == "sh") cfg.train.toggles.spherical_harmonics = false;
    else if (name == "pc") cfg.train.toggles.phase_correction = false;
    else throw UsageError("--ablate expects da, sh or pc, got '" + name + "'");
  }
  if (a.epochs) cfg.train.epochs = *a.epochs;
  if (a.seed) cfg.train.seed = *a.seed;
  if (a.threads) cfg.train.threads = *a.threads;
  cfg.validate();

  const Scene scene = load_scene(a.scene, cfg.scene);
  const auto result = train(scene, cfg.train, cfg.field, cfg.grid, [&](const EpochRecord& r) {
    out << "epoch " << r.epoch << " total " << r.loss.total << " mono " << r.loss.mono_mag << '\n';
  });
  const fs::path ckpt = a.out;
  save_checkpoint(result.field, ckpt);
  write_history(result.history, history_path(ckpt));
  save_run_config(cfg, sidecar_config(ckpt));
  out << "wrote " << ckpt.string() << '\n';
  return 0;
}

int cmd_render(const RenderArgs& a, std::ostream& out) {
  const fs::path ckpt = a.ckpt;
  const RunConfig cfg = resolve_config(a.config, ckpt);
  const GaussianField field = load_checkpoint(ckpt);
  const Scene scene = load_scene(a.scene, cfg.scene);

  std::optional<ListenerPose> pose;
  if (a.pose == scene.reference.id) pose = scene.reference.pose();
  else if (const auto* p = scene.find(a.pose)) pose = p->pose.pose();
  if (!pose) {
    std::string ids = scene.reference.id;
    for (const auto& t : scene.targets)
      if (t.pose.id != scene.reference.id) ids += ", " + t.pose.id;
    for (const auto& t : scene.held_out) ids += ", " + t.pose.id;
    throw Error("unknown pose id '" + a.pose + "'; available: " + ids);
  }

  SpectralGrid grid = cfg.grid;
  grid.sample_rate = scene.sample_rate;
  const auto source = stft(scene.source_clip, grid);
  if (source.bins() != field.bins() || source.frames != field.frames())
    throw Error("checkpoint grid (" + std::to_string(field.bins()) + "x" + std::to_string(field.frames()) +
                ") does not match the scene (" + std::to_string(source.bins()) + "x" +
                std::to_string(source.frames) + ")");
  const auto rendered = render(field, source, *pose, cfg.field, cfg.train.toggles);
  save_wav(istft(rendered.spectrogram), a.out);
  out << "wrote " << a.out << '\n';
  return 0;
}

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  const Waveform pred = load_wav(a.pred);
  const Waveform ref = load_wav(a.ref);
  SpectralGrid grid;
  grid.sample_rate = ref.sample_rate;
  const MetricReport report = evaluate(pred, ref, grid);
  write_report(report, a.out);
  for (const auto& [k, v] : report.to_key_values()) out << k << " = " << v << '\n';
  return 0;
}

int cmd_export(const ExportArgs& a, std::ostream& out) {
  const fs::path ckpt = a.ckpt;
  const RunConfig cfg = resolve_config(a.config, ckpt);
  const double percentile = a.percentile.value_or(cfg.export_percentile);
  if (!(percentile >= 0 && percentile <= 100)) throw UsageError("--percentile must be in [0, 100]");
  const GaussianField field = load_checkpoint(ckpt);
  const Scene scene = load_scene(a.scene, cfg.scene);
  SpectralGrid grid = cfg.grid;
  grid.sample_rate = scene.sample_rate;
  const auto A = content_magnitude(stft(scene.source_clip, grid));
  const std::size_t rows = export_point_cloud(field, A, percentile, a.out);
  out << "wrote " << rows << " points to " << a.out << '\n';
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Time-frequency Gaussian splatting for binaural audio", "tfsplat"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "Write a synthetic free-field scene");
  s->add_option("--out", synth.out, "Output scene directory")->required();
  s->add_option("--poses", synth.poses, "Number of listener poses")->capture_default_str();
  s->add_option("--seed", synth.seed, "Random seed")->capture_default_str();

  TrainArgs tr;
  int epochs = 0;
  std::uint64_t seed = 0;
  unsigned threads = 0;
  auto* t = app.add_subcommand("train", "Fit a field to a scene");
  t->add_option("--scene", tr.scene, "Scene directory")->required();
  t->add_option("--config", tr.config, "Run configuration file");
  t->add_option("--out", tr.out, "Checkpoint path")->required();
  t->add_option("--ablate", tr.ablate, "Disable a component: da, sh or pc (repeatable)");
  auto* o_epochs = t->add_option("--epochs", epochs, "Override train.epochs");
  auto* o_seed = t->add_option("--seed", seed, "Override train.seed");
  auto* o_threads = t->add_option("--threads", threads, "Override train.threads");

  RenderArgs rd;
  auto* r = app.add_subcommand("render", "Render the binaural waveform at a pose");
  r->add_option("--ckpt", rd.ckpt, "Checkpoint")->required();
  r->add_option("--scene", rd.scene, "Scene directory")->required();
  r->add_option("--pose", rd.pose, "Pose id")->required();
  r->add_option("--out", rd.out, "Output WAV")->required();
  r->add_option("--config", rd.config, "Run configuration (default: the checkpoint's)");

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Compare a prediction with a reference recording");
  e->add_option("--pred", ev.pred, "Predicted WAV")->required();
  e->add_option("--ref", ev.ref, "Reference WAV")->required();
  e->add_option("--out", ev.out, "Report path")->required();

  ExportArgs ex;
  double percentile = 0;
  auto* x = app.add_subcommand("export", "Export Gaussian centers as CSV");
  x->add_option("--ckpt", ex.ckpt, "Checkpoint")->required();
  x->add_option("--scene", ex.scene, "Scene directory")->required();
  auto* o_pct = x->add_option("--percentile", percentile, "Magnitude percentile to drop");
  x->add_option("--out", ex.out, "Output CSV")->required();
  x->add_option("--config", ex.config, "Run configuration (default: the checkpoint's)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& ex_) {
    err << "error: " << ex_.what() << '\n';
    err << "run with --help for usage\n";
    return 2;
  }

  try {
    if (*s) return cmd_synth(synth, out);
    if (*t) {
      if (*o_epochs) tr.epochs = epochs;
      if (*o_seed) tr.seed = seed;
      if (*o_threads) tr.threads = threads;
      return cmd_train(tr, out);
    }
    if (*r) return cmd_render(rd, out);
    if (*e) return cmd_eval(ev, out);
    if (*x) {
      if (*o_pct) ex.percentile = percentile;
      return cmd_export(ex, out);
    }
  } catch (const UsageError& ex_) {
    err << "error: " << ex_.what() << '\n';
    return 2;
  } catch (const std::exception& ex_) {
    err << "error: " << ex_.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace tfsplat
