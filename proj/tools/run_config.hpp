#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "motion/data.hpp"
#include "motion/model.hpp"
#include "motion/trainer.hpp"

namespace motion::cli {

// Data section of a run config: either a motion CSV path or a synthetic
// recipe, plus windowing and evaluation settings.
struct DataConfig {
  std::string csv;
  bool use_synth = false;
  SynthSpec synth;
  std::size_t past_frames = 10;
  std::size_t future_frames = 25;
  std::size_t stride = 1;
  std::optional<std::size_t> root_joint;
  std::optional<double> fps;  // must agree with the CSV when both are given
  HorizonSet horizons;
  bool horizons_explicit = false;
  double train_fraction = 1.0;  // leading fraction of windows used for training
};

struct RunConfig {
  ModelSpec model;
  TrainConfig train;
  DataConfig data;
  std::string out_dir = "out";
  std::string tim_preset_name;  // non-empty when model.tim came from a preset
};

// Parses and validates; throws ValidationError listing every violated field,
// or ParseError for malformed JSON.
RunConfig parse_run_config(const std::string& json_text, const std::string& origin);
RunConfig load_run_config(const std::string& path);

// Small built-in model + synthetic window for `gradcheck` without a config.
RunConfig default_gradcheck_config();

// Parses a bare SynthSpec JSON document (the `synth` command input). Accepts
// either explicit per-coordinate components or ranges to draw them from.
SynthSpec parse_synth_spec(const std::string& json_text, const std::string& origin);
SynthSpec load_synth_spec(const std::string& path);

// Fully explicit, sorted-key serialization of the effective config. Hashing
// this string gives the config hash stamped on every output.
std::string canonical_config_json(const RunConfig& cfg);
std::uint64_t fnv1a64(const std::string& text);
std::string hex64(std::uint64_t v);

// Materialized dataset: windows plus the horizon frame mapping.
struct Dataset {
  MotionSequence seq;
  std::vector<TrainWindow> train_windows;
  std::vector<TrainWindow> eval_windows;
  double fps = 0.0;
  std::vector<std::size_t> horizon_frames;  // aligned with horizons.ms
  std::uint64_t split_hash = 0;
};

Dataset build_dataset(const DataConfig& cfg);

}  // namespace motion::cli
