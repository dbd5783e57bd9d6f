#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "commands.hpp"

namespace {

void add_common_flags(CLI::App* sub, motion::cli::GlobalOpts& opts, bool config_required) {
  auto* config = sub->add_option("--config", opts.config_path, "run config JSON path");
  if (config_required) config->required();
  sub->add_option("--seed", opts.seed, "override train.seed");
  sub->add_option("--out", opts.out, "override the output directory");
  sub->add_option("--threads", opts.threads, "override train.threads");
  sub->add_option("--clip-norm", opts.clip_norm, "override train.clip_norm (0 disables)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"temporal-convolution + graph-network motion predictor"};
  app.require_subcommand(1);

  motion::cli::GlobalOpts opts;
  std::string checkpoint_path;
  std::string spec_path;
  std::string synth_out;

  CLI::App* train = app.add_subcommand("train", "train a model from a run config");
  add_common_flags(train, opts, /*config_required=*/true);

  CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint per horizon");
  add_common_flags(eval, opts, /*config_required=*/true);
  eval->add_option("--checkpoint", checkpoint_path, "checkpoint file to evaluate")->required();

  CLI::App* gradcheck =
      app.add_subcommand("gradcheck", "compare analytic gradients against central differences");
  add_common_flags(gradcheck, opts, /*config_required=*/false);
  gradcheck->add_option("--tol", opts.tol, "max relative error allowed (default 1e-4)");

  CLI::App* ablate =
      app.add_subcommand("ablate", "train the kernel/subsequence variants on shared data");
  add_common_flags(ablate, opts, /*config_required=*/true);

  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic motion CSV");
  synth->add_option("--spec", spec_path, "synth spec JSON path")->required();
  synth->add_option("--out", synth_out, "output motion CSV path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (train->parsed()) return motion::cli::cmd_train(opts);
    if (eval->parsed()) return motion::cli::cmd_eval(opts, checkpoint_path);
    if (gradcheck->parsed()) return motion::cli::cmd_gradcheck(opts);
    if (ablate->parsed()) return motion::cli::cmd_ablate(opts);
    if (synth->parsed()) return motion::cli::cmd_synth(spec_path, synth_out);
  } catch (const motion::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const motion::ShapeError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const motion::NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const motion::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "unexpected error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
