#pragma once

#include <array>
#include <cstddef>
#include <random>
#include <vector>

#include "motion/errors.hpp"
#include "motion/linalg.hpp"

namespace motion {

// Graph convolutional predictor. Each layer computes A * H * W where the
// adjacency A (nodes x nodes) is itself learnable, so the graph structure is
// discovered during training rather than fixed up front.

struct GcnLayerParams {
  Matrix a;  // nodes x nodes
  Matrix w;  // in_dim x out_dim
};

struct GcnConfig {
  std::size_t nodes = 0;       // one node per trajectory coordinate
  std::size_t input_dim = 0;   // embedding width fed to the input layer
  std::size_t hidden_dim = 64;
  std::size_t num_blocks = 4;  // residual blocks of two hidden layers each
  std::size_t output_dim = 0;  // past + future frames per node
  double dropout_rate = 0.0;   // applied after tanh, never on the output layer

  void validate() const;
};

struct GcnParams {
  GcnLayerParams input;
  std::vector<std::array<GcnLayerParams, 2>> blocks;
  GcnLayerParams output;
};

GcnParams init_gcn_params(const GcnConfig& cfg, std::mt19937_64& rng);
GcnParams zeros_like(const GcnParams& params);
std::size_t param_count(const GcnParams& params);

// Forward pass bookkeeping needed to run the backward pass. `input` is the
// layer's H, `activated` the post-tanh values (pre-dropout), `mask` the
// inverted-dropout multipliers (empty when dropout is off or inactive).
struct GcnLayerCache {
  Matrix input;
  Matrix activated;
  Vec mask;
};

struct GcnCache {
  std::vector<GcnLayerCache> layers;
};

// Single layer: tanh(A * H * W) when activated, A * H * W otherwise.
Matrix gcn_layer(const Matrix& h, const GcnLayerParams& layer, bool activate);

// Runs the full stack: input layer, residual blocks, linear output layer.
// Pass `dropout_rng` to enable dropout (training); leave null for inference.
Matrix gcn_forward(const Matrix& embedding, const GcnConfig& cfg, const GcnParams& params,
                   GcnCache* cache = nullptr, std::mt19937_64* dropout_rng = nullptr);

// Backpropagates d_output through the cached forward pass, accumulating
// parameter gradients into `grads` and returning d(embedding).
Matrix gcn_backward(const GcnConfig& cfg, const GcnParams& params, const GcnCache& cache,
                    const Matrix& d_output, GcnParams& grads);

}  // namespace motion
