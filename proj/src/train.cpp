#include "tfsplat/train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <thread>

#include "bin_model.hpp"
#include "tfsplat/error.hpp"

namespace tfsplat {
namespace {

// Ground truth reduced to what the loss consumes.
struct TargetBins {
  std::vector<double> log_mono;
  std::vector<double> log_diff;
  std::vector<detail::cplx> phase_left;
  std::vector<detail::cplx> phase_right;

  TargetBins(const ComplexSpectrogram& S, double floor) {
    const std::size_t n = S.size();
    log_mono.resize(n);
    log_diff.resize(n);
    phase_left.resize(n);
    phase_right.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto l = S.channels[0][i];
      const auto r = S.channels[1][i];
      log_mono[i] = std::log(std::abs(l + r) + floor);
      log_diff[i] = std::log(std::abs(l - r) + floor);
      phase_left[i] = detail::SourceBins::unit(l);
      phase_right[i] = detail::SourceBins::unit(r);
    }
  }
};

struct RowSums {
  double mono = 0, diff = 0, phase_left = 0, phase_right = 0;
};

class BackwardPass {
 public:
  BackwardPass(const detail::ModelContext& ctx, const detail::SourceBins& src, const LossWeights& w)
      : ctx_(ctx), src_(src), w_(w) {}

  LossComponents run(const detail::PoseFrame& pose, const TargetBins& tgt, GradientBuffer& grads,
                     unsigned threads) const {
    const GaussianField& field = *ctx_.field;
    const std::size_t rows = field.bins();
    std::vector<RowSums> sums(rows);
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, rows));
    if (threads <= 1) {
      for (std::size_t f = 0; f < rows; ++f) sums[f] = row(pose, tgt, grads, f);
    } else {
      std::vector<std::jthread> workers;
      std::vector<std::exception_ptr> errors(threads);
      for (unsigned w = 0; w < threads; ++w) {
        workers.emplace_back([&, w] {
          try {
            for (std::size_t f = w; f < rows; f += threads) sums[f] = row(pose, tgt, grads, f);
          } catch (...) {
            errors[w] = std::current_exception();
          }
        });
      }
      workers.clear();
      for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    }

    // Row order is fixed, so the reduction is independent of the thread count.
    RowSums total;
    for (const auto& s : sums) {
      total.mono += s.mono;
      total.diff += s.diff;
      total.phase_left += s.phase_left;
      total.phase_right += s.phase_right;
    }
    const double n = static_cast<double>(field.size());
    LossComponents out;
    out.mono_mag = total.mono / n;
    out.diff_mag = total.diff / n;
    out.phase_left = total.phase_left / n;
    out.phase_right = total.phase_right / n;
    out.total = out.mono_mag + w_.lambda_diff * out.diff_mag + w_.lambda_phs * (out.phase_left + out.phase_right);
    return out;
  }

 private:
  RowSums row(const detail::PoseFrame& pose, const TargetBins& tgt, GradientBuffer& grads, std::size_t f) const {
    const GaussianField& field = *ctx_.field;
    const double inv_n = 1.0 / static_cast<double>(field.size());
    const double floor = w_.log_floor;
    const std::size_t k = ctx_.k;
    detail::BinForward fw;
    detail::BinGrad g;
    RowSums sums;
    for (std::size_t t = 0; t < ctx_.frames; ++t) {
      const std::size_t i = f * ctx_.frames + t;
      detail::forward_bin(ctx_, src_, pose, i, true, fw);

      const detail::cplx pm = fw.SL + fw.SR;
      const detail::cplx pd = fw.SL - fw.SR;
      const double am = std::abs(pm);
      const double ad = std::abs(pd);
      const double rm = tgt.log_mono[i] - std::log(am + floor);
      const double rd = tgt.log_diff[i] - std::log(ad + floor);

      const detail::cplx pred_l = fw.mL > 0 ? fw.eL : detail::cplx(1, 0);
      const detail::cplx pred_r = fw.mR > 0 ? fw.eR : detail::cplx(1, 0);
      const double ph_l = std::norm(tgt.phase_left[i] - pred_l);
      const double ph_r = std::norm(tgt.phase_right[i] - pred_r);

      const double bin_loss = rm * rm + w_.lambda_diff * rd * rd + w_.lambda_phs * (ph_l + ph_r);
      if (!std::isfinite(bin_loss))
        throw Error("non-finite loss at bin (f=" + std::to_string(f) + ", t=" + std::to_string(t) + ")");
      sums.mono += rm * rm;
      sums.diff += rd * rd;
      sums.phase_left += ph_l;
      sums.phase_right += ph_r;

      detail::BinUpstream up;
      const detail::cplx g_pm = am > 0 ? (-2.0 * rm / (am + floor) * inv_n / am) * pm : detail::cplx(0, 0);
      const detail::cplx g_pd =
          ad > 0 ? (-2.0 * w_.lambda_diff * rd / (ad + floor) * inv_n / ad) * pd : detail::cplx(0, 0);
      up.grad_SL = g_pm + g_pd;
      up.grad_SR = g_pm - g_pd;
      // d/dbeta of |u_gt - e^{i beta}|^2 = -2 Im(u_gt conj(e^{i beta}))
      if (fw.mL > 0) up.grad_beta_L = -2.0 * w_.lambda_phs * inv_n * (tgt.phase_left[i] * std::conj(fw.eL)).imag();
      if (fw.mR > 0) up.grad_beta_R = -2.0 * w_.lambda_phs * inv_n * (tgt.phase_right[i] * std::conj(fw.eR)).imag();

      detail::backward_bin(ctx_, src_, fw, up, i, g);
      grads.positions[3 * i] = g.position.x;
      grads.positions[3 * i + 1] = g.position.y;
      grads.positions[3 * i + 2] = g.position.z;
      std::copy_n(g.c_mono.begin(), k, grads.c_mono.begin() + static_cast<std::ptrdiff_t>(k * i));
      std::copy_n(g.c_diff.begin(), k, grads.c_diff.begin() + static_cast<std::ptrdiff_t>(k * i));
      grads.alpha_raw[i] = g.alpha_raw;
      grads.delta[i] = g.delta;
    }
    return sums;
  }

  const detail::ModelContext& ctx_;
  const detail::SourceBins& src_;
  LossWeights w_;
};

void check_shapes(const GaussianField& field, const ComplexSpectrogram& source, const ComplexSpectrogram& target) {
  if (source.channel_count() != 2 || target.channel_count() != 2)
    throw Error("backward: source and target spectrograms must be stereo");
  if (source.bins() != field.bins() || source.frames != field.frames() || target.bins() != field.bins() ||
      target.frames != field.frames())
    throw Error("backward: spectrogram dimensions do not match the field");
}

template <typename Fn>
void for_each_array(GradientBuffer& g, Fn&& fn) {
  fn(g.positions);
  fn(g.c_mono);
  fn(g.c_diff);
  fn(g.alpha_raw);
  fn(g.delta);
}

template <typename Fn>
void for_each_array(const GradientBuffer& g, Fn&& fn) {
  fn(g.positions);
  fn(g.c_mono);
  fn(g.c_diff);
  fn(g.alpha_raw);
  fn(g.delta);
}

}  // namespace

GradientBuffer::GradientBuffer(const GaussianField& field)
    : positions(field.positions().size(), 0.0),
      c_mono(field.c_mono().size(), 0.0),
      c_diff(field.c_diff().size(), 0.0),
      alpha_raw(field.alpha_raw().size(), 0.0),
      delta(field.delta().size(), 0.0) {}

void GradientBuffer::zero() {
  for_each_array(*this, [](std::vector<double>& v) { std::fill(v.begin(), v.end(), 0.0); });
}

double GradientBuffer::squared_norm() const {
  double acc = 0.0;
  for_each_array(*this, [&](const std::vector<double>& v) {
    for (double x : v) acc += x * x;
  });
  return acc;
}

bool GradientBuffer::all_finite() const {
  bool ok = true;
  for_each_array(*this, [&](const std::vector<double>& v) {
    ok = ok && std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
  });
  return ok;
}

void GradientBuffer::scale(double s) {
  for_each_array(*this, [&](std::vector<double>& v) {
    for (double& x : v) x *= s;
  });
}

void TrainConfig::validate() const {
  if (epochs < 0) throw Error("train config: epochs must be >= 0");
  if (!(lr_position > 0) || !(lr_other > 0)) throw Error("train config: learning rates must be positive");
  if (!(beta1 >= 0 && beta1 < 1) || !(beta2 >= 0 && beta2 < 1)) throw Error("train config: betas must be in [0, 1)");
  if (!(adam_eps > 0)) throw Error("train config: adam_eps must be positive");
  if (!(grad_clip >= 0)) throw Error("train config: grad_clip must be >= 0");
  loss.validate();
}

LossComponents backward(const GaussianField& field, const ComplexSpectrogram& source, const ListenerPose& pose,
                        const ComplexSpectrogram& target, const LossWeights& weights, const RenderToggles& toggles,
                        const FieldConfig& cfg, GradientBuffer& grads, unsigned threads) {
  weights.validate();
  cfg.validate();
  pose.validate();
  check_shapes(field, source, target);
  if (grads.alpha_raw.size() != field.size() || grads.c_mono.size() != field.c_mono().size()) grads = GradientBuffer(field);

  const detail::ModelContext ctx(field, source.grid, cfg, toggles);
  const detail::SourceBins src(source);
  const TargetBins tgt(target, weights.log_floor);
  return BackwardPass(ctx, src, weights).run(detail::PoseFrame::from(pose), tgt, grads, threads);
}

void adam_step(GaussianField& field, const GradientBuffer& grads, AdamState& state, std::uint64_t step,
               const TrainConfig& cfg) {
  if (step < 1) throw Error("adam_step: step counts from 1");
  if (state.m.alpha_raw.size() != field.size()) state = AdamState(field);
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));

  auto update = [&](std::vector<float>& params, const std::vector<double>& g, std::vector<double>& m,
                    std::vector<double>& v, double lr) {
    for (std::size_t i = 0; i < params.size(); ++i) {
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
      const double m_hat = m[i] / bc1;
      const double v_hat = v[i] / bc2;
      params[i] = static_cast<float>(params[i] - lr * m_hat / (std::sqrt(v_hat) + cfg.adam_eps));
    }
  };
  update(field.positions(), grads.positions, state.m.positions, state.v.positions, cfg.lr_position);
  update(field.c_mono(), grads.c_mono, state.m.c_mono, state.v.c_mono, cfg.lr_other);
  update(field.c_diff(), grads.c_diff, state.m.c_diff, state.v.c_diff, cfg.lr_other);
  update(field.alpha_raw(), grads.alpha_raw, state.m.alpha_raw, state.v.alpha_raw, cfg.lr_other);
  update(field.delta(), grads.delta, state.m.delta, state.v.delta, cfg.lr_other);
}

Vec3 training_center(const Scene& scene) {
  if (scene.targets.empty()) throw Error("scene has no training poses");
  Vec3 c;
  for (const auto& t : scene.targets) c += t.pose.position;
  return c / static_cast<double>(scene.targets.size());
}

TrainResult train(const Scene& scene, const TrainConfig& cfg, const FieldConfig& field_cfg, const SpectralGrid& grid_in,
                  const std::function<void(const EpochRecord&)>& on_epoch) {
  cfg.validate();
  field_cfg.validate();
  if (scene.targets.empty()) throw Error("train: scene has no training poses");

  SpectralGrid grid = grid_in;
  grid.sample_rate = scene.sample_rate;
  const ComplexSpectrogram source = stft(scene.source_clip, grid);
  if (source.channel_count() != 2) throw Error("train: source clip must be stereo");

  TrainResult result;
  result.field = init_field(grid, source.frames, training_center(scene), scene.reference.position,
                            scene.reference.orientation, field_cfg, cfg.seed);
  GaussianField& field = result.field;
  if (cfg.epochs == 0) return result;

  std::vector<TargetBins> targets;
  std::vector<detail::PoseFrame> frames;
  targets.reserve(scene.targets.size());
  for (const auto& t : scene.targets) {
    t.pose.pose().validate();
    const auto S = stft(t.audio, grid);
    if (S.frames != source.frames || S.channel_count() != 2) throw Error("train: target '" + t.pose.id + "' shape mismatch");
    targets.emplace_back(S, cfg.loss.log_floor);
    frames.push_back(detail::PoseFrame::from(t.pose.pose()));
  }

  const detail::ModelContext ctx(field, grid, field_cfg, cfg.toggles);
  const detail::SourceBins src(source);
  const BackwardPass pass(ctx, src, cfg.loss);
  GradientBuffer grads(field);
  AdamState state(field);
  std::uint64_t step = 0;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    EpochRecord record;
    record.epoch = epoch;
    for (std::size_t p = 0; p < targets.size(); ++p) {
      const LossComponents l = pass.run(frames[p], targets[p], grads, cfg.threads);
      if (!std::isfinite(l.total) || !grads.all_finite())
        throw Error("train: non-finite loss or gradient at epoch " + std::to_string(epoch) + ", pose '" +
                    scene.targets[p].pose.id + "'");
      if (cfg.grad_clip > 0) {
        const double gn = std::sqrt(grads.squared_norm());
        if (gn > cfg.grad_clip) grads.scale(cfg.grad_clip / gn);
      }
      adam_step(field, grads, state, ++step, cfg);
      record.loss.total += l.total;
      record.loss.mono_mag += l.mono_mag;
      record.loss.diff_mag += l.diff_mag;
      record.loss.phase_left += l.phase_left;
      record.loss.phase_right += l.phase_right;
    }
    const double n = static_cast<double>(targets.size());
    record.loss.total /= n;
    record.loss.mono_mag /= n;
    record.loss.diff_mag /= n;
    record.loss.phase_left /= n;
    record.loss.phase_right /= n;
    if (!field.all_finite()) throw Error("train: parameters became non-finite in epoch " + std::to_string(epoch));
    result.history.push_back(record);
    if (on_epoch) on_epoch(record);
  }
  return result;
}

void write_history(const std::vector<EpochRecord>& history, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw Error("cannot open history file for writing: " + path.string());
  os << "# epoch total mono_mag diff_mag phase_L phase_R\n" << std::setprecision(17);
  for (const auto& r : history)
    os << r.epoch << ' ' << r.loss.total << ' ' << r.loss.mono_mag << ' ' << r.loss.diff_mag << ' '
       << r.loss.phase_left << ' ' << r.loss.phase_right << '\n';
  if (!os) throw Error("failed writing history: " + path.string());
}

std::vector<EpochRecord> read_history(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open history file: " + path.string());
  std::vector<EpochRecord> out;
  std::string line;
  for (int line_no = 1; std::getline(is, line); ++line_no) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    EpochRecord r;
    if (!(ss >> r.epoch >> r.loss.total >> r.loss.mono_mag >> r.loss.diff_mag >> r.loss.phase_left >> r.loss.phase_right))
      throw Error(path.string() + ":" + std::to_string(line_no) + ": malformed history row");
    out.push_back(r);
  }
  return out;
}

}  // namespace tfsplat
