#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "motion/model.hpp"

namespace motion {

// One training example: `input` is the observed past (K x past_frames),
// `target` the same coordinates over past + future frames.
struct TrainWindow {
  Matrix input;
  Matrix target;
};

// Squared training loss, averaged over every entry of the full output
// sequence. It penalizes both the reconstructed past and the predicted
// future, which keeps the encoder honest about the frames it has seen.
double train_loss(const Matrix& prediction, const Matrix& target);
double train_loss_grad(const Matrix& prediction, const Matrix& target, Matrix& d_prediction);

// Evaluation metric: mean over joints of the Euclidean distance between
// predicted and true 3-D positions at one future frame. `horizon_frames`
// counts from 1 (the first predicted frame). Coordinates are laid out
// x,y,z per joint, so the row count must be divisible by 3.
double mpjpe_at_horizon(const Matrix& prediction, const Matrix& target, std::size_t past_frames,
                        std::size_t horizon_frames);

// Repeats the last observed frame forever; the baseline any learned
// predictor has to beat.
Matrix zero_velocity_prediction(const Matrix& observed, std::size_t total_frames);

struct HorizonEval {
  std::size_t horizon_frames = 0;
  double model_mpjpe = 0.0;
  double baseline_mpjpe = 0.0;
};

std::vector<HorizonEval> evaluate_horizons(const Model& model,
                                           const std::vector<TrainWindow>& windows,
                                           const std::vector<std::size_t>& horizons_frames);

struct TrainConfig {
  std::size_t epochs = 50;
  std::size_t batch_size = 16;
  double lr0 = 5e-4;
  double decay = 0.96;        // multiplied in every `decay_every` epochs
  std::size_t decay_every = 2;
  std::uint64_t seed = 0;
  double clip_norm = 0.0;     // global gradient norm cap, 0 disables
  std::size_t threads = 1;

  void validate() const;
};

// Stepwise exponential decay: lr0 * decay^(epoch / decay_every), integer division.
double lr_at_epoch(const TrainConfig& cfg, std::size_t epoch);

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// First and second moment estimates, one slot per parameter array in the
// canonical param_refs order.
struct AdamState {
  std::size_t step = 0;
  std::vector<Vec> m;
  std::vector<Vec> v;
};

AdamState make_adam_state(const ParamSet& params);
void adam_update(ParamSet& params, const ParamSet& grads, AdamState& state, double lr,
                 const AdamConfig& adam = {});

struct EpochStats {
  std::size_t epoch = 0;
  double mean_loss = 0.0;
  double lr = 0.0;
};

struct TrainResult {
  Model model;
  std::vector<EpochStats> history;
};

// Full training run. Deterministic for a fixed config: identical seeds give
// byte-identical parameters and loss histories, independent of cfg.threads.
TrainResult train(const std::vector<TrainWindow>& windows, const ModelSpec& spec,
                  const TrainConfig& cfg);

struct GradCheckGroup {
  std::string name;
  double max_rel_err = 0.0;
};

struct GradCheckReport {
  double max_rel_err = 0.0;
  double tol = 0.0;
  bool pass = false;
  std::vector<GradCheckGroup> groups;
};

// Compares the analytic gradient of the training loss against central
// differences, coordinate by coordinate. Relative error per coordinate is
// |a - n| / max(1e-12, |a| + |n|).
GradCheckReport grad_check(Model model, const TrainWindow& window, double eps = 1e-5,
                           double tol = 1e-4);

}  // namespace motion
