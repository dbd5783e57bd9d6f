#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "motion/linalg.hpp"
#include "motion/trainer.hpp"

namespace motion {

// A motion capture clip: one row per frame, three columns (x, y, z, in mm)
// per joint. joint_names is empty when the source had no recognizable
// <joint>_x/_y/_z header triples.
struct MotionSequence {
  double fps = 0.0;
  Matrix values;  // frames x K
  std::vector<std::string> joint_names;

  std::size_t frames() const { return values.rows(); }
  std::size_t coords() const { return values.cols(); }
  void validate() const;
};

// CSV layout: `# fps=<float>` comment line, then a header row, then one
// line per frame. Values print with 17 significant digits so a save/load
// round trip reproduces every double bit-exactly.
MotionSequence load_motion_csv(const std::string& path);
void save_motion_csv(const std::string& path, const MotionSequence& seq);

// Subtracts the root joint's position from every joint, frame by frame.
// Removes global translation; the root trajectory becomes exactly zero.
MotionSequence center_root(const MotionSequence& seq, std::size_t root_joint);

// Slices the clip into supervised windows: input covers past_frames, the
// target those same frames plus future_frames more, both K x time.
std::vector<TrainWindow> make_windows(const MotionSequence& seq, std::size_t past_frames,
                                      std::size_t future_frames, std::size_t stride);

// Nearest-frame horizon mapping, clamped to at least one frame.
std::size_t ms_to_frames(double ms, double fps);

// Prediction horizons in milliseconds, defaulting to the usual reporting grid.
struct HorizonSet {
  std::vector<double> ms = {80.0, 160.0, 320.0, 400.0, 560.0, 1000.0};
  void validate() const;
};

struct SinComponent {
  double amplitude = 0.0;  // mm
  double frequency = 0.0;  // Hz
  double phase = 0.0;      // rad
};

// Synthetic clip recipe: each coordinate is a sum of sinusoids plus optional
// seeded Gaussian noise. Frequencies must stay below Nyquist.
struct SynthSpec {
  std::size_t joints = 1;
  double fps = 25.0;
  double duration_s = 10.0;
  std::vector<std::vector<SinComponent>> components;  // one list per coordinate (3 * joints)
  double noise_std = 0.0;  // mm
  std::uint64_t seed = 0;

  void validate() const;
};

MotionSequence synth_motion(const SynthSpec& spec);

// Draws per-coordinate component parameters uniformly from the given ranges.
// The resulting spec keeps `seed` for its noise stream, so the whole recipe
// stays reproducible from one integer.
SynthSpec random_synth_spec(std::size_t joints, double fps, double duration_s,
                            std::size_t components_per_coord, double amp_min, double amp_max,
                            double freq_min, double freq_max, double noise_std,
                            std::uint64_t seed);

// Orthonormal DCT-II and its inverse (DCT-III). With this scaling the pair
// is an isometry: round trips are exact up to rounding and norms are
// preserved (Parseval).
Vec dct2(const Vec& x);
Vec idct(const Vec& c);

}  // namespace motion
