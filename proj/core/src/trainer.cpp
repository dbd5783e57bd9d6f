#include "motion/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>
#include <random>
#include <thread>
#include <utility>

namespace motion {

namespace {

void require_same_shape(const Matrix& a, const Matrix& b, const char* who) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(who) + ": shapes " + shape_str(a) + " and " + shape_str(b) +
                     " differ");
  }
}

}  // namespace

double train_loss(const Matrix& prediction, const Matrix& target) {
  require_same_shape(prediction, target, "train_loss");
  const double scale = 1.0 / static_cast<double>(prediction.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < prediction.size(); ++i) {
    const double d = prediction.data()[i] - target.data()[i];
    sum += d * d;
  }
  return sum * scale;
}

double train_loss_grad(const Matrix& prediction, const Matrix& target, Matrix& d_prediction) {
  require_same_shape(prediction, target, "train_loss");
  if (!d_prediction.same_shape(prediction)) {
    d_prediction = Matrix(prediction.rows(), prediction.cols());
  }
  const double scale = 1.0 / static_cast<double>(prediction.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < prediction.size(); ++i) {
    const double d = prediction.data()[i] - target.data()[i];
    sum += d * d;
    d_prediction.data()[i] = 2.0 * d * scale;
  }
  return sum * scale;
}

double mpjpe_at_horizon(const Matrix& prediction, const Matrix& target, std::size_t past_frames,
                        std::size_t horizon_frames) {
  require_same_shape(prediction, target, "mpjpe_at_horizon");
  if (prediction.rows() % 3 != 0) {
    throw ShapeError("mpjpe_at_horizon: coordinate count " + std::to_string(prediction.rows()) +
                     " is not divisible by 3 (expected x,y,z per joint)");
  }
  if (horizon_frames < 1) throw ValidationError("mpjpe_at_horizon: horizon_frames must be >= 1");
  const std::size_t col = past_frames + horizon_frames - 1;
  if (col >= prediction.cols()) {
    throw ValidationError("mpjpe_at_horizon: horizon " + std::to_string(horizon_frames) +
                          " past frame " + std::to_string(past_frames) + " exceeds " +
                          std::to_string(prediction.cols()) + " output frames");
  }
  const std::size_t joints = prediction.rows() / 3;
  double sum = 0.0;
  for (std::size_t j = 0; j < joints; ++j) {
    double sq = 0.0;
    for (std::size_t c = 0; c < 3; ++c) {
      const double d = prediction(3 * j + c, col) - target(3 * j + c, col);
      sq += d * d;
    }
    sum += std::sqrt(sq);
  }
  return sum / static_cast<double>(joints);
}

Matrix zero_velocity_prediction(const Matrix& observed, std::size_t total_frames) {
  if (observed.cols() < 1) throw ShapeError("zero_velocity_prediction: no observed frames");
  Matrix out(observed.rows(), total_frames);
  const std::size_t last = observed.cols() - 1;
  for (std::size_t k = 0; k < observed.rows(); ++k) {
    const double v = observed(k, last);
    for (std::size_t t = 0; t < total_frames; ++t) out(k, t) = v;
  }
  return out;
}

std::vector<HorizonEval> evaluate_horizons(const Model& model,
                                           const std::vector<TrainWindow>& windows,
                                           const std::vector<std::size_t>& horizons_frames) {
  if (windows.empty()) throw ValidationError("evaluate_horizons: no windows");
  std::vector<HorizonEval> evals;
  evals.reserve(horizons_frames.size());
  for (std::size_t h : horizons_frames) evals.push_back({h, 0.0, 0.0});
  for (const auto& w : windows) {
    const Matrix pred = predict(model, w.input);
    const Matrix base = zero_velocity_prediction(w.input, model.total_frames());
    for (auto& e : evals) {
      e.model_mpjpe += mpjpe_at_horizon(pred, w.target, model.past_frames(), e.horizon_frames);
      e.baseline_mpjpe += mpjpe_at_horizon(base, w.target, model.past_frames(), e.horizon_frames);
    }
  }
  const double n = static_cast<double>(windows.size());
  for (auto& e : evals) {
    e.model_mpjpe /= n;
    e.baseline_mpjpe /= n;
  }
  return evals;
}

void TrainConfig::validate() const {
  std::vector<std::string> violations;
  if (epochs < 1) violations.push_back("train: epochs must be >= 1");
  if (batch_size < 1) violations.push_back("train: batch_size must be >= 1");
  if (!(lr0 > 0.0)) violations.push_back("train: lr0 must be > 0");
  if (!(decay > 0.0)) violations.push_back("train: decay must be > 0");
  if (decay_every < 1) violations.push_back("train: decay_every must be >= 1");
  if (!(clip_norm >= 0.0)) violations.push_back("train: clip_norm must be >= 0");
  if (threads < 1) violations.push_back("train: threads must be >= 1");
  if (!violations.empty()) throw ValidationError(std::move(violations));
}

double lr_at_epoch(const TrainConfig& cfg, std::size_t epoch) {
  return cfg.lr0 * std::pow(cfg.decay, static_cast<double>(epoch / cfg.decay_every));
}

AdamState make_adam_state(const ParamSet& params) {
  AdamState state;
  for (const auto& ref : param_refs(params)) {
    state.m.emplace_back(ref.size, 0.0);
    state.v.emplace_back(ref.size, 0.0);
  }
  return state;
}

void adam_update(ParamSet& params, const ParamSet& grads, AdamState& state, double lr,
                 const AdamConfig& adam) {
  auto prefs = param_refs(params);
  auto grefs = param_refs(grads);
  if (prefs.size() != grefs.size() || prefs.size() != state.m.size()) {
    throw ShapeError("adam_update: parameter, gradient and state layouts disagree");
  }
  state.step += 1;
  const double bc1 = 1.0 - std::pow(adam.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(adam.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < prefs.size(); ++i) {
    double* p = prefs[i].data;
    const double* g = grefs[i].data;
    Vec& m = state.m[i];
    Vec& v = state.v[i];
    for (std::size_t j = 0; j < prefs[i].size; ++j) {
      m[j] = adam.beta1 * m[j] + (1.0 - adam.beta1) * g[j];
      v[j] = adam.beta2 * v[j] + (1.0 - adam.beta2) * g[j] * g[j];
      const double mhat = m[j] / bc1;
      const double vhat = v[j] / bc2;
      p[j] -= lr * mhat / (std::sqrt(vhat) + adam.eps);
    }
  }
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  return splitmix64(splitmix64(splitmix64(a) ^ b) ^ c);
}

void accumulate(ParamSet& dst, const ParamSet& src) {
  auto d = param_refs(dst);
  auto s = param_refs(src);
  for (std::size_t i = 0; i < d.size(); ++i) {
    for (std::size_t j = 0; j < d[i].size; ++j) d[i].data[j] += s[i].data[j];
  }
}

void scale(ParamSet& params, double factor) {
  for (auto& ref : param_refs(params)) {
    for (std::size_t j = 0; j < ref.size; ++j) ref.data[j] *= factor;
  }
}

double grad_norm(const ParamSet& grads) {
  double sq = 0.0;
  for (const auto& ref : param_refs(grads)) {
    for (std::size_t j = 0; j < ref.size; ++j) sq += ref.data[j] * ref.data[j];
  }
  return std::sqrt(sq);
}

double run_window(const Model& model, const TrainWindow& window, ParamSet& grads,
                  PredictCache& cache, Matrix& d_pred, std::mt19937_64* dropout_rng) {
  const Matrix pred = predict_cached(model, window.input, cache, dropout_rng);
  const double loss = train_loss_grad(pred, window.target, d_pred);
  predict_backward(model, cache, d_pred, grads);
  return loss;
}

void check_windows(const std::vector<TrainWindow>& windows, std::size_t past_frames) {
  if (windows.empty()) throw ValidationError("train: no windows");
  const std::size_t coords = windows[0].input.rows();
  const std::size_t total = windows[0].target.cols();
  for (std::size_t i = 0; i < windows.size(); ++i) {
    const auto& w = windows[i];
    if (w.input.rows() != coords || w.target.rows() != coords ||
        w.input.cols() != past_frames || w.target.cols() != total) {
      throw ShapeError("train: window " + std::to_string(i) + " has shapes " +
                       shape_str(w.input) + " / " + shape_str(w.target) +
                       ", expected " + std::to_string(coords) + "x" +
                       std::to_string(past_frames) + " / " + std::to_string(coords) + "x" +
                       std::to_string(total));
    }
  }
  if (total <= past_frames) {
    throw ShapeError("train: target covers " + std::to_string(total) +
                     " frames, needs more than the " + std::to_string(past_frames) +
                     " observed ones");
  }
}

}  // namespace

TrainResult train(const std::vector<TrainWindow>& windows, const ModelSpec& spec,
                  const TrainConfig& cfg) {
  cfg.validate();
  spec.validate();
  const std::size_t past = spec.tim.max_subseq_len();
  check_windows(windows, past);
  const std::size_t coords = windows[0].input.rows();
  const std::size_t future = windows[0].target.cols() - past;

  std::mt19937_64 init_rng(cfg.seed);
  TrainResult result;
  result.model = make_model(spec, coords, future, init_rng);
  Model& model = result.model;

  AdamState adam = make_adam_state(model.params);
  const std::size_t slots_needed = std::min(cfg.batch_size, windows.size());

  struct Slot {
    double loss = 0.0;
    ParamSet grads;
    PredictCache cache;
    Matrix d_pred;
  };
  std::vector<Slot> slots(slots_needed);
  for (auto& s : slots) s.grads = zeros_like(model.params);
  ParamSet batch_grads = zeros_like(model.params);

  std::vector<std::size_t> order(windows.size());
  std::iota(order.begin(), order.end(), 0);

  const bool use_dropout = model.spec.dropout > 0.0;
  std::size_t step = 0;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = lr_at_epoch(cfg, epoch);
    std::mt19937_64 shuffle_rng(mix_seed(cfg.seed, 0x7368756666ULL, epoch));
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t count = std::min(cfg.batch_size, order.size() - start);

      auto work = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
          const std::size_t widx = order[start + i];
          Slot& slot = slots[i];
          set_zero(slot.grads);
          if (use_dropout) {
            std::mt19937_64 drng(mix_seed(cfg.seed ^ 0x64726f70ULL, step, widx));
            slot.loss = run_window(model, windows[widx], slot.grads, slot.cache, slot.d_pred,
                                   &drng);
          } else {
            slot.loss =
                run_window(model, windows[widx], slot.grads, slot.cache, slot.d_pred, nullptr);
          }
        }
      };

      const std::size_t workers = std::min(cfg.threads, count);
      if (workers <= 1) {
        work(0, count);
      } else {
        // Each worker fills its own slots; the reduction below walks the
        // slots in window order, so results do not depend on thread count.
        std::vector<std::thread> pool;
        std::vector<std::exception_ptr> errors(workers);
        const std::size_t chunk = (count + workers - 1) / workers;
        for (std::size_t t = 0; t < workers; ++t) {
          const std::size_t begin = t * chunk;
          const std::size_t end = std::min(begin + chunk, count);
          pool.emplace_back([&work, &errors, t, begin, end] {
            try {
              work(begin, end);
            } catch (...) {
              errors[t] = std::current_exception();
            }
          });
        }
        for (auto& th : pool) th.join();
        for (auto& err : errors) {
          if (err) std::rethrow_exception(err);
        }
      }

      set_zero(batch_grads);
      for (std::size_t i = 0; i < count; ++i) {
        loss_sum += slots[i].loss;
        accumulate(batch_grads, slots[i].grads);
      }
      scale(batch_grads, 1.0 / static_cast<double>(count));

      if (cfg.clip_norm > 0.0) {
        const double norm = grad_norm(batch_grads);
        if (norm > cfg.clip_norm) scale(batch_grads, cfg.clip_norm / norm);
      }

      adam_update(model.params, batch_grads, adam, lr);
      ++step;
    }
    result.history.push_back({epoch, loss_sum / static_cast<double>(windows.size()), lr});
  }
  return result;
}

GradCheckReport grad_check(Model model, const TrainWindow& window, double eps, double tol) {
  ParamSet grads = zeros_like(model.params);
  PredictCache cache;
  Matrix d_pred;
  run_window(model, window, grads, cache, d_pred, nullptr);
  const Vec analytic = flatten(grads);

  const Vec theta0 = flatten(model.params);
  const Vec numeric = finite_diff_grad(
      [&model, &window](const Vec& theta) {
        unflatten(theta, model.params);
        return train_loss(predict(model, window.input), window.target);
      },
      theta0, eps);
  unflatten(theta0, model.params);

  GradCheckReport report;
  report.tol = tol;
  std::size_t offset = 0;
  for (const auto& ref : param_refs(model.params)) {
    double group_max = 0.0;
    for (std::size_t j = 0; j < ref.size; ++j) {
      const double a = analytic[offset + j];
      const double n = numeric[offset + j];
      const double rel = std::abs(a - n) / std::max(1e-12, std::abs(a) + std::abs(n));
      group_max = std::max(group_max, rel);
    }
    report.groups.push_back({ref.name, group_max});
    report.max_rel_err = std::max(report.max_rel_err, group_max);
    offset += ref.size;
  }
  report.pass = report.max_rel_err < tol;
  return report;
}

}  // namespace motion
