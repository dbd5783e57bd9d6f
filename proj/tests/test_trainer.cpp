#include <cmath>
#include <random>

#include <doctest.h>

#include "motion/data.hpp"
#include "motion/errors.hpp"
#include "motion/trainer.hpp"
#include "test_helpers.hpp"

using namespace motion;
using testutil::random_matrix;

namespace {

// Independent metric oracles, written as literal definitions.
double loss_naive(const Matrix& p, const Matrix& t) {
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    double d = p.data()[i] - t.data()[i];
    s += d * d;
  }
  return s / static_cast<double>(p.size());
}

double mpjpe_naive(const Matrix& p, const Matrix& t, std::size_t past, std::size_t h) {
  std::size_t col = past + h - 1;
  std::size_t joints = p.rows() / 3;
  double s = 0.0;
  for (std::size_t j = 0; j < joints; ++j) {
    double dx = p(3 * j + 0, col) - t(3 * j + 0, col);
    double dy = p(3 * j + 1, col) - t(3 * j + 1, col);
    double dz = p(3 * j + 2, col) - t(3 * j + 2, col);
    s += std::sqrt(dx * dx + dy * dy + dz * dz);
  }
  return s / static_cast<double>(joints);
}

ModelSpec toy_spec() {
  ModelSpec spec;
  spec.tim.branches.push_back({3, {{2, 2}}});
  spec.tim.branches.push_back({5, {{2, 3}, {1, 1}}});
  spec.hidden_dim = 6;
  spec.num_blocks = 1;
  return spec;
}

std::vector<TrainWindow> toy_windows(std::size_t coords, std::size_t past, std::size_t future,
                                     std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<TrainWindow> windows;
  for (std::size_t i = 0; i < count; ++i) {
    TrainWindow w;
    w.target = random_matrix(coords, past + future, rng, -5.0, 5.0);
    w.input = Matrix(coords, past);
    for (std::size_t k = 0; k < coords; ++k)
      for (std::size_t t = 0; t < past; ++t) w.input(k, t) = w.target(k, t);
    windows.push_back(std::move(w));
  }
  return windows;
}

}  // namespace

TEST_CASE("train_loss averages squared error over every output entry") {
  std::mt19937_64 rng(1);
  Matrix p = random_matrix(6, 15, rng);
  Matrix t = random_matrix(6, 15, rng);
  CHECK(train_loss(p, t) == doctest::Approx(loss_naive(p, t)).epsilon(1e-12));
  CHECK(train_loss(p, p) == 0.0);
  CHECK_THROWS_AS(train_loss(p, Matrix(6, 14)), ShapeError);
}

TEST_CASE("train_loss_grad returns the loss and its exact gradient") {
  std::mt19937_64 rng(2);
  Matrix p = random_matrix(4, 7, rng);
  Matrix t = random_matrix(4, 7, rng);
  Matrix d;
  double loss = train_loss_grad(p, t, d);
  CHECK(loss == doctest::Approx(loss_naive(p, t)).epsilon(1e-12));
  REQUIRE(d.same_shape(p));
  // d loss / d p_ij = 2 (p_ij - t_ij) / (K * F), and central differences agree.
  auto f = [&](const Vec& theta) {
    Matrix pt = p;
    pt.data() = theta;
    return train_loss(pt, t);
  };
  Vec num = finite_diff_grad(f, p.data());
  for (std::size_t i = 0; i < d.size(); ++i) {
    CHECK(d.data()[i] == doctest::Approx(2.0 * (p.data()[i] - t.data()[i]) / 28.0).epsilon(1e-12));
    CHECK(d.data()[i] == doctest::Approx(num[i]).epsilon(1e-7));
  }
}

TEST_CASE("mpjpe: 3-4-5 hand case and the brute-force oracle") {
  // Single joint, error vector (3, 4, 0) at horizon 2 of a 2-past window.
  Matrix t(3, 5);
  Matrix p(3, 5);
  p(0, 3) = 3.0;
  p(1, 3) = 4.0;
  CHECK(mpjpe_at_horizon(p, t, 2, 2) == doctest::Approx(5.0).epsilon(1e-15));

  std::mt19937_64 rng(3);
  for (int rep = 0; rep < 20; ++rep) {
    Matrix pr = random_matrix(9, 8, rng);
    Matrix tr = random_matrix(9, 8, rng);
    for (std::size_t h = 1; h <= 3; ++h)
      CHECK(mpjpe_at_horizon(pr, tr, 5, h) ==
            doctest::Approx(mpjpe_naive(pr, tr, 5, h)).epsilon(1e-12));
  }
}

TEST_CASE("mpjpe validates layout and horizon range") {
  Matrix p(4, 5);  // rows not divisible by 3
  CHECK_THROWS_AS(mpjpe_at_horizon(p, p, 2, 1), ShapeError);
  Matrix q(3, 5);
  CHECK_THROWS_AS(mpjpe_at_horizon(q, q, 2, 0), ValidationError);
  CHECK_THROWS_AS(mpjpe_at_horizon(q, q, 2, 4), ValidationError);  // column 5 of 5
  CHECK_NOTHROW(mpjpe_at_horizon(q, q, 2, 3));
}

TEST_CASE("zero-velocity baseline repeats the last observed frame") {
  std::mt19937_64 rng(4);
  Matrix obs = random_matrix(3, 4, rng);
  Matrix z = zero_velocity_prediction(obs, 7);
  REQUIRE(z.rows() == 3);
  REQUIRE(z.cols() == 7);
  for (std::size_t k = 0; k < 3; ++k)
    for (std::size_t t = 0; t < 7; ++t) CHECK(z(k, t) == obs(k, 3));
}

TEST_CASE("evaluate_horizons averages over windows and reports the baseline") {
  std::mt19937_64 rng(5);
  Model m = make_model(toy_spec(), 6, 4, rng);
  auto windows = toy_windows(6, 5, 4, 3, 11);
  auto evals = evaluate_horizons(m, windows, {1, 4});
  REQUIRE(evals.size() == 2);
  CHECK(evals[0].horizon_frames == 1);
  CHECK(evals[1].horizon_frames == 4);

  // Recompute both metrics per window by hand.
  for (std::size_t e = 0; e < 2; ++e) {
    double want_model = 0.0, want_base = 0.0;
    for (const auto& w : windows) {
      Matrix pred = predict(m, w.input);
      Matrix base = zero_velocity_prediction(w.input, 9);
      want_model += mpjpe_naive(pred, w.target, 5, evals[e].horizon_frames);
      want_base += mpjpe_naive(base, w.target, 5, evals[e].horizon_frames);
    }
    CHECK(evals[e].model_mpjpe == doctest::Approx(want_model / 3.0).epsilon(1e-12));
    CHECK(evals[e].baseline_mpjpe == doctest::Approx(want_base / 3.0).epsilon(1e-12));
  }

  CHECK_THROWS_AS(evaluate_horizons(m, windows, {5}), ValidationError);  // beyond future
  CHECK_THROWS_AS(evaluate_horizons(m, windows, {0}), ValidationError);
}

TEST_CASE("learning rate decays stepwise via integer division") {
  TrainConfig cfg;
  cfg.lr0 = 5e-4;
  cfg.decay = 0.96;
  cfg.decay_every = 2;
  for (std::size_t epoch = 0; epoch < 50; ++epoch) {
    double want = cfg.lr0 * std::pow(0.96, static_cast<double>(epoch / 2));
    CHECK(lr_at_epoch(cfg, epoch) == want);  // exact, same expression shape
  }
  CHECK(lr_at_epoch(cfg, 0) == lr_at_epoch(cfg, 1));  // step plateau
  CHECK(lr_at_epoch(cfg, 2) < lr_at_epoch(cfg, 1));
}

TEST_CASE("train config validation collects violations") {
  TrainConfig cfg;
  cfg.epochs = 0;
  cfg.batch_size = 0;
  cfg.lr0 = 0.0;
  cfg.threads = 0;
  try {
    cfg.validate();
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(e.violations().size() == 4);
  }
}

TEST_CASE("adam_update reproduces a scalar reference implementation") {
  std::mt19937_64 rng(6);
  Model m = make_model(toy_spec(), 3, 2, rng);
  Vec theta = flatten(m.params);

  // Deterministic synthetic gradient, varied across coordinates.
  Vec g(theta.size());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = 0.1 * std::sin(static_cast<double>(i) + 1.0);
  ParamSet grads = zeros_like(m.params);
  unflatten(g, grads);

  AdamState state = make_adam_state(m.params);
  AdamConfig acfg;
  const double lr = 1e-3;

  // Reference: textbook update per scalar, three steps.
  Vec ref = theta, mm(theta.size(), 0.0), vv(theta.size(), 0.0);
  for (int step = 1; step <= 3; ++step) {
    adam_update(m.params, grads, state, lr, acfg);
    double bc1 = 1.0 - std::pow(acfg.beta1, step);
    double bc2 = 1.0 - std::pow(acfg.beta2, step);
    for (std::size_t i = 0; i < ref.size(); ++i) {
      mm[i] = acfg.beta1 * mm[i] + (1.0 - acfg.beta1) * g[i];
      vv[i] = acfg.beta2 * vv[i] + (1.0 - acfg.beta2) * g[i] * g[i];
      ref[i] -= lr * (mm[i] / bc1) / (std::sqrt(vv[i] / bc2) + acfg.eps);
    }
    Vec got = flatten(m.params);
    for (std::size_t i = 0; i < ref.size(); ++i)
      CHECK(got[i] == doctest::Approx(ref[i]).epsilon(1e-14));
  }
  CHECK(state.step == 3);

  // First-step magnitude sanity: bias correction makes |delta| close to lr.
  AdamState fresh = make_adam_state(m.params);
  Vec before = flatten(m.params);
  adam_update(m.params, grads, fresh, lr, acfg);
  Vec after = flatten(m.params);
  for (std::size_t i = 0; i < before.size(); ++i)
    CHECK(std::abs(after[i] - before[i]) <= lr * 1.0000001);
}

TEST_CASE("training is deterministic and thread-count invariant") {
  SynthSpec synth = random_synth_spec(2, 25.0, 6.0, 2, 2.0, 8.0, 0.3, 1.0, 0.1, 5);
  auto windows = make_windows(synth_motion(synth), 5, 3, 7);
  REQUIRE(windows.size() >= 8);

  ModelSpec spec = toy_spec();
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.batch_size = 4;
  cfg.lr0 = 1e-3;
  cfg.seed = 9;

  TrainResult a = train(windows, spec, cfg);
  TrainResult b = train(windows, spec, cfg);
  CHECK(flatten(a.model.params) == flatten(b.model.params));
  REQUIRE(a.history.size() == b.history.size());
  for (std::size_t i = 0; i < a.history.size(); ++i) {
    CHECK(a.history[i].mean_loss == b.history[i].mean_loss);
    CHECK(a.history[i].lr == b.history[i].lr);
  }

  cfg.threads = 3;
  TrainResult c = train(windows, spec, cfg);
  CHECK(flatten(a.model.params) == flatten(c.model.params));
  for (std::size_t i = 0; i < a.history.size(); ++i)
    CHECK(a.history[i].mean_loss == c.history[i].mean_loss);

  // A different seed must actually change the run.
  cfg.threads = 1;
  cfg.seed = 10;
  TrainResult d = train(windows, spec, cfg);
  CHECK_FALSE(flatten(a.model.params) == flatten(d.model.params));
}

TEST_CASE("dropout training stays deterministic too") {
  auto windows = toy_windows(6, 5, 3, 6, 21);
  ModelSpec spec = toy_spec();
  spec.dropout = 0.3;
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.batch_size = 3;
  cfg.seed = 4;
  TrainResult a = train(windows, spec, cfg);
  TrainResult b = train(windows, spec, cfg);
  CHECK(flatten(a.model.params) == flatten(b.model.params));
  cfg.threads = 2;
  TrainResult c = train(windows, spec, cfg);
  CHECK(flatten(a.model.params) == flatten(c.model.params));
}

TEST_CASE("first-epoch mean loss equals the freshly initialized model's loss") {
  // With batch_size >= window count there is exactly one update per epoch,
  // so every epoch-0 forward pass still sees the initial parameters.
  auto windows = toy_windows(6, 5, 3, 4, 31);
  ModelSpec spec = toy_spec();
  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.batch_size = 16;
  cfg.seed = 12;
  TrainResult r = train(windows, spec, cfg);
  REQUIRE(r.history.size() == 1);
  CHECK(r.history[0].epoch == 0);
  CHECK(r.history[0].lr == cfg.lr0);

  std::mt19937_64 rng(cfg.seed);
  Model init = make_model(spec, 6, 3, rng);
  double want = 0.0;
  for (const auto& w : windows) want += train_loss(predict(init, w.input), w.target);
  want /= static_cast<double>(windows.size());
  CHECK(r.history[0].mean_loss == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("history records every epoch with the scheduled learning rate") {
  auto windows = toy_windows(3, 5, 2, 2, 41);
  TrainConfig cfg;
  cfg.epochs = 7;
  cfg.batch_size = 2;
  cfg.lr0 = 2e-3;
  cfg.decay = 0.5;
  cfg.decay_every = 3;
  TrainResult r = train(windows, toy_spec(), cfg);
  REQUIRE(r.history.size() == 7);
  for (std::size_t e = 0; e < 7; ++e) {
    CHECK(r.history[e].epoch == e);
    CHECK(r.history[e].lr == lr_at_epoch(cfg, e));
    CHECK(std::isfinite(r.history[e].mean_loss));
  }
}

TEST_CASE("a generous clip threshold changes nothing; a tiny one freezes learning") {
  auto windows = toy_windows(3, 5, 2, 3, 51);
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.batch_size = 3;
  cfg.seed = 2;

  TrainResult plain = train(windows, toy_spec(), cfg);
  cfg.clip_norm = 1e9;
  TrainResult loose = train(windows, toy_spec(), cfg);
  CHECK(flatten(plain.model.params) == flatten(loose.model.params));

  cfg.clip_norm = 1e-12;
  TrainResult tight = train(windows, toy_spec(), cfg);
  CHECK_FALSE(flatten(plain.model.params) == flatten(tight.model.params));
  // Clipped to nearly zero gradient, parameters barely move from init.
  std::mt19937_64 rng(cfg.seed);
  Model init = make_model(toy_spec(), 3, 2, rng);
  Vec t0 = flatten(init.params);
  Vec t1 = flatten(tight.model.params);
  for (std::size_t i = 0; i < t0.size(); ++i) CHECK(std::abs(t1[i] - t0[i]) <= 1e-2);
}

TEST_CASE("train rejects malformed window sets") {
  ModelSpec spec = toy_spec();
  TrainConfig cfg;
  CHECK_THROWS_AS(train({}, spec, cfg), ValidationError);

  auto windows = toy_windows(3, 5, 2, 2, 61);
  windows[1].input = Matrix(3, 4);  // wrong past length
  CHECK_THROWS_AS(train(windows, spec, cfg), ShapeError);

  auto flat = toy_windows(3, 5, 2, 1, 62);
  flat[0].target = flat[0].input;  // no future frames at all
  CHECK_THROWS_AS(train(flat, spec, cfg), ShapeError);
}

TEST_CASE("a short run on one window already cuts the loss") {
  auto windows = toy_windows(3, 5, 2, 1, 71);
  TrainConfig cfg;
  cfg.epochs = 60;
  cfg.batch_size = 1;
  cfg.lr0 = 1e-2;
  cfg.decay = 1.0;
  TrainResult r = train(windows, toy_spec(), cfg);
  CHECK(r.history.back().mean_loss < 0.5 * r.history.front().mean_loss);
}

TEST_CASE("grad_check passes on a toy model and reports per-group errors") {
  std::mt19937_64 rng(81);
  Model m = make_model(toy_spec(), 6, 3, rng);
  auto windows = toy_windows(6, 5, 3, 1, 82);

  GradCheckReport report = grad_check(m, windows[0]);
  CHECK(report.pass);
  CHECK(report.tol == 1e-4);
  CHECK(report.max_rel_err < 1e-4);
  REQUIRE(!report.groups.empty());
  const ParamSet& cp = m.params;
  CHECK(report.groups.size() == param_refs(cp).size());
  double worst = 0.0;
  for (const auto& g : report.groups) worst = std::max(worst, g.max_rel_err);
  CHECK(report.max_rel_err == worst);

  // Tightening the tolerance below attainable precision must flip the verdict.
  GradCheckReport strict = grad_check(m, windows[0], 1e-5, 0.0);
  CHECK_FALSE(strict.pass);
}

TEST_CASE("every parameter group receives gradient on a generic window") {
  std::mt19937_64 rng(91);
  Model m = make_model(toy_spec(), 6, 3, rng);
  auto windows = toy_windows(6, 5, 3, 1, 92);

  PredictCache cache;
  Matrix pred = predict_cached(m, windows[0].input, cache);
  Matrix d_pred;
  train_loss_grad(pred, windows[0].target, d_pred);
  ParamSet grads = zeros_like(m.params);
  predict_backward(m, cache, d_pred, grads);

  const ParamSet& cg = grads;
  for (const auto& r : param_refs(cg)) {
    bool any = false;
    for (std::size_t i = 0; i < r.size; ++i)
      if (r.data[i] != 0.0) any = true;
    INFO("group ", r.name);
    CHECK(any);
  }
}

TEST_CASE("a model with every parameter at zero sits at a flat point") {
  // All-zero parameters zero out every layer product, so the loss is locally
  // constant in every direction: both the analytic gradient and the central
  // differences vanish identically and the check passes with zero error.
  std::mt19937_64 rng(101);
  Model m = make_model(toy_spec(), 6, 3, rng);
  set_zero(m.params);
  auto windows = toy_windows(6, 5, 3, 1, 102);

  GradCheckReport report = grad_check(m, windows[0]);
  CHECK(report.pass);
  CHECK(report.max_rel_err == 0.0);
  for (const auto& g : report.groups) CHECK(g.max_rel_err == 0.0);
}
