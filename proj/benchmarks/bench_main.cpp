#include <random>

#include <benchmark/benchmark.h>

#include "motion/data.hpp"
#include "motion/model.hpp"
#include "motion/trainer.hpp"

// Microbenchmarks for the hot paths: the dense kernels, the two network
// stages, and a full optimizer step. Run with --benchmark_filter=... to
// narrow down a regression.

namespace {

using namespace motion;

Matrix random_matrix(std::size_t r, std::size_t c, std::mt19937_64& rng) {
  Matrix m(r, c);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (auto& v : m.data()) v = dist(rng);
  return m;
}

void bm_matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(1);
  Matrix a = random_matrix(n, n, rng);
  Matrix b = random_matrix(n, n, rng);
  for (auto _ : state) {
    Matrix c = matmul(a, b);
    benchmark::DoNotOptimize(c.data().data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) *
                          static_cast<std::int64_t>(n * n * n));
}
BENCHMARK(bm_matmul)->Arg(16)->Arg(64)->Arg(223);

void bm_conv1d(benchmark::State& state) {
  const auto len = static_cast<std::size_t>(state.range(0));
  const auto ks = static_cast<std::size_t>(state.range(1));
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Vec x(len), w(ks);
  for (auto& v : x) v = dist(rng);
  for (auto& v : w) v = dist(rng);
  for (auto _ : state) {
    Vec y = conv1d_valid(x, w, 0.1);
    benchmark::DoNotOptimize(y.data());
  }
}
BENCHMARK(bm_conv1d)->Args({10, 3})->Args({10, 7})->Args({15, 10});

void bm_encoder_forward(benchmark::State& state) {
  // The reference preset applied to all 12 coordinates of a 4-joint body.
  TimConfig cfg = tim_preset("tim-5-10");
  std::mt19937_64 rng(3);
  std::vector<TimParams> params = {init_tim_params(cfg, rng)};
  Matrix traj = random_matrix(12, cfg.max_subseq_len(), rng);
  for (auto _ : state) {
    Matrix e = tim_forward_all(traj, cfg, params);
    benchmark::DoNotOptimize(e.data().data());
  }
}
BENCHMARK(bm_encoder_forward);

void bm_gcn_forward(benchmark::State& state) {
  GcnConfig cfg;
  cfg.nodes = 12;
  cfg.input_dim = 223;
  cfg.hidden_dim = 64;
  cfg.num_blocks = 4;
  cfg.output_dim = 35;
  std::mt19937_64 rng(4);
  GcnParams params = init_gcn_params(cfg, rng);
  Matrix e = random_matrix(cfg.nodes, cfg.input_dim, rng);
  for (auto _ : state) {
    Matrix y = gcn_forward(e, cfg, params);
    benchmark::DoNotOptimize(y.data().data());
  }
}
BENCHMARK(bm_gcn_forward);

void bm_predict(benchmark::State& state) {
  ModelSpec spec;
  spec.tim = tim_preset("tim-5-10");
  std::mt19937_64 rng(5);
  Model model = make_model(spec, 12, 25, rng);
  Matrix obs = random_matrix(12, model.past_frames(), rng);
  for (auto _ : state) {
    Matrix pred = predict(model, obs);
    benchmark::DoNotOptimize(pred.data().data());
  }
}
BENCHMARK(bm_predict);

void bm_train_epoch(benchmark::State& state) {
  // One epoch over 17 windows with the default batch size, model init
  // included: the granularity a tuning loop experiences.
  SynthSpec synth = random_synth_spec(4, 25.0, 4.0, 2, 2.0, 8.0, 0.3, 1.0, 0.0, 6);
  auto windows = make_windows(synth_motion(synth), 10, 25, 4);
  ModelSpec spec;
  spec.tim = tim_preset("tim-5-10");
  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.batch_size = 16;
  for (auto _ : state) {
    TrainResult res = train(windows, spec, cfg);
    benchmark::DoNotOptimize(res.model.params.gcn.output.w.data().data());
  }
}
BENCHMARK(bm_train_epoch);

void bm_dct_roundtrip(benchmark::State& state) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Vec x(static_cast<std::size_t>(state.range(0)));
  for (auto& v : x) v = dist(rng);
  for (auto _ : state) {
    Vec back = idct(dct2(x));
    benchmark::DoNotOptimize(back.data());
  }
}
BENCHMARK(bm_dct_roundtrip)->Arg(10)->Arg(25);

}  // namespace

BENCHMARK_MAIN();
