#pragma once

#include <string>

#include "motion/model.hpp"

namespace motion {

// Versioned binary container: model structure, every parameter array in
// canonical order, plus an opaque caller-supplied meta string (the CLI puts
// the canonical config echo there). Serialization is fully deterministic,
// so identical models produce byte-identical files.
void save_checkpoint(const std::string& path, const Model& model, const std::string& meta = "");

struct CheckpointData {
  Model model;
  std::string meta;
};

CheckpointData load_checkpoint(const std::string& path);

}  // namespace motion
