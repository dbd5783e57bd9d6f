#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "run_config.hpp"

namespace motion::cli {

// Command-line overrides applied on top of the loaded config.
struct GlobalOpts {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::size_t> threads;
  std::optional<double> tol;
  std::optional<double> clip_norm;
};

void apply_overrides(RunConfig& cfg, const GlobalOpts& opts);

int cmd_train(const GlobalOpts& opts);
int cmd_eval(const GlobalOpts& opts, const std::string& checkpoint_path);
int cmd_gradcheck(const GlobalOpts& opts);
int cmd_ablate(const GlobalOpts& opts);
int cmd_synth(const std::string& spec_path, const std::string& out_csv);

// Swaps every branch's kernels for sizes {2, 3} with counts rebalanced so the
// embedding size stays within 5% of the original's.
TimConfig constant_kernel_variant(const TimConfig& proportional);

}  // namespace motion::cli
