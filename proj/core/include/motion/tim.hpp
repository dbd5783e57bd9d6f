#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "motion/linalg.hpp"

namespace motion {

struct KernelSpec {
  std::size_t count = 1;  // number of kernels of this size
  std::size_t size = 1;   // taps per kernel
};

// One branch of the temporal inception encoder: the most recent subseq_len
// frames convolved with every kernel listed, outputs concatenated in order.
struct BranchSpec {
  std::size_t subseq_len = 1;  // M_j
  std::vector<KernelSpec> kernels;
};

struct TimConfig {
  std::vector<BranchSpec> branches;  // listed order is the concatenation order

  std::size_t max_subseq_len() const;  // M_J, the full observed window
  void validate() const;               // throws ValidationError with all violations
};

// Named presets. "tim-5-10" is the reference kernel table; "tim-5-10-15"
// extends it with a length-15 branch whose kernel sizes grow with the input
// length: (9,4), (7,7), (6,10).
TimConfig tim_preset(const std::string& name);
std::vector<std::string> tim_preset_names();

// Sum over branches and kernel specs of count * (M_j - size + 1).
std::size_t embedding_dim(const TimConfig& cfg);

// Suffix sampling: for each branch, the most recent subseq_len entries of x,
// order preserved. x is ordered oldest -> newest.
std::vector<Vec> sample_subsequences(const Vec& x, const TimConfig& cfg);

// Kernels for one KernelSpec entry: row i of w is kernel i (count x size),
// b holds the per-kernel biases.
struct ConvGroupParams {
  Matrix w;
  Vec b;
};

struct TimBranchParams {
  std::vector<ConvGroupParams> groups;
};

struct TimParams {
  std::vector<TimBranchParams> branches;
};

// Kernels ~ U(-1/sqrt(s), 1/sqrt(s)), biases 0. Size-1 kernels start at 1.0
// so they act as a pass-through until training moves them.
TimParams init_tim_params(const TimConfig& cfg, std::mt19937_64& rng);
TimParams zeros_like(const TimParams& params);
std::size_t param_count(const TimParams& params);

Vec tim_branch_forward(const Vec& x_j, const TimBranchParams& params);

// Embedding of one joint trajectory: branch outputs concatenated in config
// order. Output length is embedding_dim(cfg).
Vec tim_forward(const Vec& x, const TimConfig& cfg, const TimParams& params);

// Accumulates kernel/bias gradients into grads and returns d(loss)/d(x).
Vec tim_backward(const Vec& x, const TimConfig& cfg, const TimParams& params,
                 const Vec& d_embedding, TimParams& grads);

// Row k of the result is tim_forward applied to row k of trajectories.
// params holds one entry (shared across coordinates) or one entry per row.
Matrix tim_forward_all(const Matrix& trajectories, const TimConfig& cfg,
                       const std::vector<TimParams>& params);

Matrix tim_backward_all(const Matrix& trajectories, const TimConfig& cfg,
                        const std::vector<TimParams>& params, const Matrix& d_embeddings,
                        std::vector<TimParams>& grads);

}  // namespace motion
