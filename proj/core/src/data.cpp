#include "motion/data.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>
#include <utility>

namespace motion {

void MotionSequence::validate() const {
  std::vector<std::string> violations;
  if (!(fps > 0.0)) violations.push_back("sequence: fps must be > 0");
  if (!joint_names.empty() && joint_names.size() * 3 != coords()) {
    violations.push_back("sequence: " + std::to_string(joint_names.size()) +
                         " joint names do not match " + std::to_string(coords()) + " columns");
  }
  for (double v : values.data()) {
    if (!std::isfinite(v)) {
      violations.push_back("sequence: values must all be finite");
      break;
    }
  }
  if (!violations.empty()) throw ValidationError(std::move(violations));
}

namespace {

std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      cells.push_back(line.substr(start));
      return cells;
    }
    cells.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

double parse_double(const std::string& cell, std::size_t line_no, std::size_t col) {
  double value = 0.0;
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  while (begin < end && (*begin == ' ' || *begin == '\t')) ++begin;
  auto [ptr, ec] = std::from_chars(begin, end, value);
  while (ptr < end && (*ptr == ' ' || *ptr == '\t')) ++ptr;
  if (ec != std::errc{} || ptr != end) {
    throw ParseError("line " + std::to_string(line_no) + ", column " + std::to_string(col + 1) +
                     ": cannot parse '" + cell + "' as a number");
  }
  return value;
}

// Derives joint names when the header is exact <name>_x,<name>_y,<name>_z
// triples; otherwise returns an empty list and the columns stay anonymous.
std::vector<std::string> derive_joint_names(const std::vector<std::string>& headers) {
  if (headers.empty() || headers.size() % 3 != 0) return {};
  std::vector<std::string> names;
  static const char* axes[3] = {"_x", "_y", "_z"};
  for (std::size_t j = 0; j < headers.size() / 3; ++j) {
    std::string name;
    for (std::size_t c = 0; c < 3; ++c) {
      const std::string& h = headers[3 * j + c];
      const std::string axis = axes[c];
      if (h.size() <= axis.size() || h.substr(h.size() - axis.size()) != axis) return {};
      const std::string stem = h.substr(0, h.size() - axis.size());
      if (c == 0) {
        name = stem;
      } else if (stem != name) {
        return {};
      }
    }
    if (name.empty()) return {};
    names.push_back(name);
  }
  return names;
}

}  // namespace

MotionSequence load_motion_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");

  std::string line;
  std::size_t line_no = 0;

  if (!std::getline(in, line)) throw ParseError("line 1: empty file, expected '# fps=<value>'");
  ++line_no;
  line = strip_cr(line);
  const std::size_t fps_at = line.find("fps=");
  if (line.empty() || line[0] != '#' || fps_at == std::string::npos) {
    throw ParseError("line 1: expected '# fps=<value>', got '" + line + "'");
  }
  MotionSequence seq;
  seq.fps = parse_double(line.substr(fps_at + 4), line_no, 0);

  if (!std::getline(in, line)) throw ParseError("line 2: missing header row");
  ++line_no;
  const std::vector<std::string> headers = split_commas(strip_cr(line));
  const std::size_t coords = headers.size();
  if (coords == 0 || (coords == 1 && headers[0].empty())) {
    throw ParseError("line 2: header row has no columns");
  }
  seq.joint_names = derive_joint_names(headers);

  std::vector<double> flat;
  std::size_t frames = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty()) continue;
    const std::vector<std::string> cells = split_commas(line);
    if (cells.size() != coords) {
      throw ParseError("line " + std::to_string(line_no) + ": row has " +
                       std::to_string(cells.size()) + " columns, header has " +
                       std::to_string(coords));
    }
    for (std::size_t c = 0; c < coords; ++c) {
      const double v = parse_double(cells[c], line_no, c);
      if (!std::isfinite(v)) {
        throw ParseError("line " + std::to_string(line_no) + ", column " + std::to_string(c + 1) +
                         ": non-finite value");
      }
      flat.push_back(v);
    }
    ++frames;
  }

  seq.values = Matrix(frames, coords);
  seq.values.data() = std::move(flat);
  seq.validate();
  return seq;
}

void save_motion_csv(const std::string& path, const MotionSequence& seq) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");

  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", seq.fps);
  out << "# fps=" << buf << "\n";

  if (seq.joint_names.empty()) {
    for (std::size_t c = 0; c < seq.coords(); ++c) {
      out << (c ? "," : "") << "k" << c;
    }
  } else {
    for (std::size_t j = 0; j < seq.joint_names.size(); ++j) {
      const std::string& n = seq.joint_names[j];
      out << (j ? "," : "") << n << "_x," << n << "_y," << n << "_z";
    }
  }
  out << "\n";

  for (std::size_t f = 0; f < seq.frames(); ++f) {
    for (std::size_t c = 0; c < seq.coords(); ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", seq.values(f, c));
      out << (c ? "," : "") << buf;
    }
    out << "\n";
  }
  if (!out) throw IoError("write to '" + path + "' failed");
}

MotionSequence center_root(const MotionSequence& seq, std::size_t root_joint) {
  if (seq.coords() % 3 != 0) {
    throw ValidationError("center_root: " + std::to_string(seq.coords()) +
                          " columns are not x,y,z triples");
  }
  const std::size_t joints = seq.coords() / 3;
  if (root_joint >= joints) {
    throw ValidationError("center_root: root joint " + std::to_string(root_joint) +
                          " out of range [0, " + std::to_string(joints) + ")");
  }
  MotionSequence out = seq;
  for (std::size_t f = 0; f < out.frames(); ++f) {
    const double rx = seq.values(f, 3 * root_joint);
    const double ry = seq.values(f, 3 * root_joint + 1);
    const double rz = seq.values(f, 3 * root_joint + 2);
    for (std::size_t j = 0; j < joints; ++j) {
      out.values(f, 3 * j) -= rx;
      out.values(f, 3 * j + 1) -= ry;
      out.values(f, 3 * j + 2) -= rz;
    }
  }
  return out;
}

std::vector<TrainWindow> make_windows(const MotionSequence& seq, std::size_t past_frames,
                                      std::size_t future_frames, std::size_t stride) {
  if (past_frames < 1 || future_frames < 1) {
    throw ValidationError("make_windows: past_frames and future_frames must be >= 1");
  }
  if (stride < 1) throw ValidationError("make_windows: stride must be >= 1");
  const std::size_t span = past_frames + future_frames;
  if (seq.frames() < span) {
    throw ValidationError("make_windows: sequence has " + std::to_string(seq.frames()) +
                          " frames, needs at least " + std::to_string(span));
  }
  std::vector<TrainWindow> windows;
  for (std::size_t offset = 0; offset + span <= seq.frames(); offset += stride) {
    TrainWindow w;
    w.input = Matrix(seq.coords(), past_frames);
    w.target = Matrix(seq.coords(), span);
    for (std::size_t k = 0; k < seq.coords(); ++k) {
      for (std::size_t t = 0; t < span; ++t) {
        const double v = seq.values(offset + t, k);
        w.target(k, t) = v;
        if (t < past_frames) w.input(k, t) = v;
      }
    }
    windows.push_back(std::move(w));
  }
  return windows;
}

std::size_t ms_to_frames(double ms, double fps) {
  if (!(ms > 0.0)) throw ValidationError("ms_to_frames: ms must be > 0");
  if (!(fps > 0.0)) throw ValidationError("ms_to_frames: fps must be > 0");
  const long frames = std::lround(ms * fps / 1000.0);
  return frames < 1 ? 1 : static_cast<std::size_t>(frames);
}

void HorizonSet::validate() const {
  std::vector<std::string> violations;
  if (ms.empty()) violations.push_back("horizons: at least one horizon is required");
  for (std::size_t i = 0; i < ms.size(); ++i) {
    if (!(ms[i] > 0.0)) {
      violations.push_back("horizons[" + std::to_string(i) + "]: must be > 0 ms");
    }
    if (i > 0 && !(ms[i] > ms[i - 1])) {
      violations.push_back("horizons[" + std::to_string(i) + "]: must be strictly increasing");
    }
  }
  if (!violations.empty()) throw ValidationError(std::move(violations));
}

void SynthSpec::validate() const {
  std::vector<std::string> violations;
  if (joints < 1) violations.push_back("synth: joints must be >= 1");
  if (!(fps > 0.0)) violations.push_back("synth: fps must be > 0");
  if (!(duration_s > 0.0)) violations.push_back("synth: duration_s must be > 0");
  if (!(noise_std >= 0.0)) violations.push_back("synth: noise_std must be >= 0");
  if (components.size() != 3 * joints) {
    violations.push_back("synth: " + std::to_string(components.size()) +
                         " component lists do not match " + std::to_string(3 * joints) +
                         " coordinates");
  }
  for (std::size_t k = 0; k < components.size(); ++k) {
    for (std::size_t c = 0; c < components[k].size(); ++c) {
      const auto& comp = components[k][c];
      const std::string where =
          "synth.components[" + std::to_string(k) + "][" + std::to_string(c) + "]";
      if (!std::isfinite(comp.amplitude) || !std::isfinite(comp.phase)) {
        violations.push_back(where + ": amplitude and phase must be finite");
      }
      if (!(comp.frequency > 0.0 && comp.frequency < fps / 2.0)) {
        violations.push_back(where + ": frequency must be in (0, fps/2) to stay below Nyquist");
      }
    }
  }
  if (!violations.empty()) throw ValidationError(std::move(violations));
}

MotionSequence synth_motion(const SynthSpec& spec) {
  spec.validate();
  const long frames_l = std::lround(spec.duration_s * spec.fps);
  const std::size_t frames = frames_l < 1 ? 1 : static_cast<std::size_t>(frames_l);
  const std::size_t coords = 3 * spec.joints;

  MotionSequence seq;
  seq.fps = spec.fps;
  seq.values = Matrix(frames, coords);
  seq.joint_names.reserve(spec.joints);
  for (std::size_t j = 0; j < spec.joints; ++j) seq.joint_names.push_back("j" + std::to_string(j));

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> noise(0.0, spec.noise_std > 0.0 ? spec.noise_std : 1.0);
  for (std::size_t f = 0; f < frames; ++f) {
    const double t = static_cast<double>(f) / spec.fps;
    for (std::size_t k = 0; k < coords; ++k) {
      double v = 0.0;
      for (const auto& comp : spec.components[k]) {
        v += comp.amplitude * std::sin(2.0 * std::numbers::pi * comp.frequency * t + comp.phase);
      }
      if (spec.noise_std > 0.0) v += noise(rng);
      seq.values(f, k) = v;
    }
  }
  return seq;
}

SynthSpec random_synth_spec(std::size_t joints, double fps, double duration_s,
                            std::size_t components_per_coord, double amp_min, double amp_max,
                            double freq_min, double freq_max, double noise_std,
                            std::uint64_t seed) {
  if (components_per_coord < 1) {
    throw ValidationError("synth: components_per_coord must be >= 1");
  }
  if (!(amp_min <= amp_max) || !(freq_min <= freq_max)) {
    throw ValidationError("synth: component ranges must satisfy min <= max");
  }
  SynthSpec spec;
  spec.joints = joints;
  spec.fps = fps;
  spec.duration_s = duration_s;
  spec.noise_std = noise_std;
  spec.seed = seed;

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> amp(amp_min, amp_max);
  std::uniform_real_distribution<double> freq(freq_min, freq_max);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  spec.components.resize(3 * joints);
  for (auto& list : spec.components) {
    list.reserve(components_per_coord);
    for (std::size_t c = 0; c < components_per_coord; ++c) {
      list.push_back({amp(rng), freq(rng), phase(rng)});
    }
  }
  spec.validate();
  return spec;
}

Vec dct2(const Vec& x) {
  const std::size_t n = x.size();
  if (n == 0) throw ValidationError("dct2: input must be non-empty");
  Vec c(n, 0.0);
  const double norm0 = std::sqrt(1.0 / static_cast<double>(n));
  const double normk = std::sqrt(2.0 / static_cast<double>(n));
  for (std::size_t k = 0; k < n; ++k) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      sum += x[i] * std::cos(std::numbers::pi * (2.0 * i + 1.0) * k / (2.0 * n));
    }
    c[k] = (k == 0 ? norm0 : normk) * sum;
  }
  return c;
}

Vec idct(const Vec& c) {
  const std::size_t n = c.size();
  if (n == 0) throw ValidationError("idct: input must be non-empty");
  Vec x(n, 0.0);
  const double norm0 = std::sqrt(1.0 / static_cast<double>(n));
  const double normk = std::sqrt(2.0 / static_cast<double>(n));
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      sum += (k == 0 ? norm0 : normk) * c[k] *
             std::cos(std::numbers::pi * (2.0 * i + 1.0) * k / (2.0 * n));
    }
    x[i] = sum;
  }
  return x;
}

}  // namespace motion
