#pragma once

#include <cstddef>
#include <random>
#include <string>
#include <vector>

#include "motion/gcn.hpp"
#include "motion/linalg.hpp"
#include "motion/tim.hpp"

namespace motion {

// Full predictor: the temporal convolution encoder feeds per-coordinate
// embeddings into the graph network, and the last observed frame is added
// back onto every output frame so the network only has to learn motion
// relative to where the body currently is.

struct ParamSet {
  std::vector<TimParams> tim;  // size 1 (shared across coordinates) or K
  GcnParams gcn;
};

ParamSet zeros_like(const ParamSet& params);
std::size_t param_count(const ParamSet& params);

// Named view of one parameter array, in the canonical traversal order used
// by the optimizer state, flatten/unflatten and the gradient checker.
struct ParamRef {
  std::string name;
  double* data = nullptr;
  std::size_t size = 0;
};

struct ConstParamRef {
  std::string name;
  const double* data = nullptr;
  std::size_t size = 0;
};

std::vector<ParamRef> param_refs(ParamSet& params);
std::vector<ConstParamRef> param_refs(const ParamSet& params);
void set_zero(ParamSet& params);
Vec flatten(const ParamSet& params);
void unflatten(const Vec& theta, ParamSet& params);

struct ModelSpec {
  TimConfig tim;
  std::size_t hidden_dim = 64;
  std::size_t num_blocks = 4;
  double dropout = 0.0;
  bool per_coordinate_params = false;

  void validate() const;
};

struct Model {
  ModelSpec spec;
  std::size_t coords = 0;         // K = 3 * joints
  std::size_t future_frames = 0;  // T
  GcnConfig gcn_cfg;
  ParamSet params;

  std::size_t past_frames() const { return spec.tim.max_subseq_len(); }
  std::size_t total_frames() const { return past_frames() + future_frames; }
};

Model make_model(const ModelSpec& spec, std::size_t coords, std::size_t future_frames,
                 std::mt19937_64& rng);

// observed is K x past_frames; the result is K x (past_frames + future_frames),
// i.e. the reconstructed past followed by the predicted future.
Matrix predict(const Model& model, const Matrix& observed);

struct PredictCache {
  Matrix observed;
  Matrix embeddings;
  GcnCache gcn;
};

Matrix predict_cached(const Model& model, const Matrix& observed, PredictCache& cache,
                      std::mt19937_64* dropout_rng = nullptr);

// Accumulates dL/dparams into `grads` given dL/d(prediction).
void predict_backward(const Model& model, const PredictCache& cache, const Matrix& d_prediction,
                      ParamSet& grads);

}  // namespace motion
