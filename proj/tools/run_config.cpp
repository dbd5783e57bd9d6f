#include "run_config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string_view>
#include <utility>

#include <json.hpp>

namespace motion::cli {

using nlohmann::json;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

json parse_json_text(const std::string& text, const std::string& origin) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw motion::ParseError(origin + ": " + e.what());
  }
}

// Collects every problem instead of bailing at the first, so one run of a
// broken config reports the full repair list.
struct Ctx {
  std::vector<std::string> violations;
  void bad(std::string msg) { violations.push_back(std::move(msg)); }
  void merge(const ValidationError& e) {
    for (const auto& v : e.violations()) violations.push_back(v);
  }
};

void check_keys(const json& j, const std::string& where,
                std::initializer_list<std::string_view> allowed, Ctx& ctx) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (auto a : allowed) {
      if (it.key() == a) {
        known = true;
        break;
      }
    }
    if (!known) ctx.bad(where + ": unknown key '" + it.key() + "'");
  }
}

double get_num(const json& j, const char* key, double def, const std::string& where, Ctx& ctx) {
  if (!j.contains(key)) return def;
  if (!j[key].is_number()) {
    ctx.bad(where + "." + key + ": expected a number");
    return def;
  }
  return j[key].get<double>();
}

std::size_t get_count(const json& j, const char* key, std::size_t def, const std::string& where,
                      Ctx& ctx) {
  if (!j.contains(key)) return def;
  if (!j[key].is_number_integer() || (j[key].is_number_integer() && j[key].get<long long>() < 0)) {
    ctx.bad(where + "." + key + ": expected a non-negative integer");
    return def;
  }
  return j[key].get<std::size_t>();
}

std::uint64_t get_u64(const json& j, const char* key, std::uint64_t def, const std::string& where,
                      Ctx& ctx) {
  if (!j.contains(key)) return def;
  if (!j[key].is_number_integer() || (j[key].is_number_integer() && j[key].get<long long>() < 0)) {
    ctx.bad(where + "." + key + ": expected a non-negative integer");
    return def;
  }
  return j[key].get<std::uint64_t>();
}

bool get_bool(const json& j, const char* key, bool def, const std::string& where, Ctx& ctx) {
  if (!j.contains(key)) return def;
  if (!j[key].is_boolean()) {
    ctx.bad(where + "." + key + ": expected true or false");
    return def;
  }
  return j[key].get<bool>();
}

std::string get_str(const json& j, const char* key, std::string def, const std::string& where,
                    Ctx& ctx) {
  if (!j.contains(key)) return def;
  if (!j[key].is_string()) {
    ctx.bad(where + "." + key + ": expected a string");
    return def;
  }
  return j[key].get<std::string>();
}

bool get_range(const json& j, const char* key, double& lo, double& hi, const std::string& where,
               Ctx& ctx) {
  if (!j.contains(key)) {
    ctx.bad(where + "." + key + ": required when 'components' is absent");
    return false;
  }
  const json& r = j[key];
  if (!r.is_array() || r.size() != 2 || !r[0].is_number() || !r[1].is_number()) {
    ctx.bad(where + "." + key + ": expected [min, max]");
    return false;
  }
  lo = r[0].get<double>();
  hi = r[1].get<double>();
  return true;
}

TimConfig parse_tim(const json& j, const std::string& where, Ctx& ctx, std::string& preset_name) {
  if (j.is_string()) {
    try {
      preset_name = j.get<std::string>();
      return tim_preset(preset_name);
    } catch (const ValidationError& e) {
      ctx.merge(e);
      return tim_preset("tim-5-10");
    }
  }
  if (!j.is_object() || !j.contains("branches") || !j["branches"].is_array()) {
    ctx.bad(where + ": expected a preset name or {\"branches\": [...]}");
    return tim_preset("tim-5-10");
  }
  check_keys(j, where, {"branches"}, ctx);
  TimConfig cfg;
  std::size_t bi = 0;
  for (const json& b : j["branches"]) {
    const std::string bwhere = where + ".branches[" + std::to_string(bi++) + "]";
    if (!b.is_object()) {
      ctx.bad(bwhere + ": expected an object");
      continue;
    }
    check_keys(b, bwhere, {"subseq_len", "kernels"}, ctx);
    BranchSpec bs;
    bs.subseq_len = get_count(b, "subseq_len", 0, bwhere, ctx);
    if (b.contains("kernels") && b["kernels"].is_array()) {
      std::size_t ki = 0;
      for (const json& k : b["kernels"]) {
        const std::string kwhere = bwhere + ".kernels[" + std::to_string(ki++) + "]";
        if (!k.is_object()) {
          ctx.bad(kwhere + ": expected an object");
          continue;
        }
        check_keys(k, kwhere, {"count", "size"}, ctx);
        KernelSpec ks;
        ks.count = get_count(k, "count", 0, kwhere, ctx);
        ks.size = get_count(k, "size", 0, kwhere, ctx);
        bs.kernels.push_back(ks);
      }
    } else {
      ctx.bad(bwhere + ": 'kernels' array is required");
    }
    cfg.branches.push_back(std::move(bs));
  }
  return cfg;
}

SynthSpec parse_synth_section(const json& j, const std::string& where, Ctx& ctx) {
  check_keys(j, where,
             {"joints", "fps", "duration_s", "noise_std", "seed", "components",
              "components_per_coord", "amplitude_range", "frequency_range"},
             ctx);
  const std::size_t joints = get_count(j, "joints", 1, where, ctx);
  const double fps = get_num(j, "fps", 25.0, where, ctx);
  const double duration = get_num(j, "duration_s", 10.0, where, ctx);
  const double noise_std = get_num(j, "noise_std", 0.0, where, ctx);
  const std::uint64_t seed = get_u64(j, "seed", 0, where, ctx);

  if (j.contains("components")) {
    SynthSpec spec;
    spec.joints = joints;
    spec.fps = fps;
    spec.duration_s = duration;
    spec.noise_std = noise_std;
    spec.seed = seed;
    if (!j["components"].is_array()) {
      ctx.bad(where + ".components: expected a list of per-coordinate component lists");
      return spec;
    }
    std::size_t kc = 0;
    for (const json& list : j["components"]) {
      const std::string lwhere = where + ".components[" + std::to_string(kc++) + "]";
      std::vector<SinComponent> comps;
      if (!list.is_array()) {
        ctx.bad(lwhere + ": expected a list");
      } else {
        std::size_t ci = 0;
        for (const json& c : list) {
          const std::string cwhere = lwhere + "[" + std::to_string(ci++) + "]";
          if (!c.is_object()) {
            ctx.bad(cwhere + ": expected an object");
            continue;
          }
          check_keys(c, cwhere, {"amplitude", "frequency", "phase"}, ctx);
          comps.push_back({get_num(c, "amplitude", 0.0, cwhere, ctx),
                           get_num(c, "frequency", 0.0, cwhere, ctx),
                           get_num(c, "phase", 0.0, cwhere, ctx)});
        }
      }
      spec.components.push_back(std::move(comps));
    }
    try {
      spec.validate();
    } catch (const ValidationError& e) {
      ctx.merge(e);
    }
    return spec;
  }

  const std::size_t per_coord = get_count(j, "components_per_coord", 2, where, ctx);
  double amp_lo = 1.0, amp_hi = 1.0, freq_lo = 0.5, freq_hi = 0.5;
  const bool amp_ok = get_range(j, "amplitude_range", amp_lo, amp_hi, where, ctx);
  const bool freq_ok = get_range(j, "frequency_range", freq_lo, freq_hi, where, ctx);
  if (amp_ok && freq_ok) {
    try {
      return random_synth_spec(joints, fps, duration, per_coord, amp_lo, amp_hi, freq_lo, freq_hi,
                               noise_std, seed);
    } catch (const ValidationError& e) {
      ctx.merge(e);
    }
  }
  SynthSpec fallback;
  fallback.joints = joints;
  fallback.fps = fps;
  fallback.duration_s = duration;
  fallback.noise_std = noise_std;
  fallback.seed = seed;
  fallback.components.assign(3 * joints, {{1.0, 0.5, 0.0}});
  return fallback;
}

}  // namespace

RunConfig parse_run_config(const std::string& json_text, const std::string& origin) {
  const json j = parse_json_text(json_text, origin);
  if (!j.is_object()) throw motion::ParseError(origin + ": top level must be a JSON object");

  Ctx ctx;
  RunConfig cfg;
  check_keys(j, "config", {"model", "train", "data", "out_dir"}, ctx);
  cfg.out_dir = get_str(j, "out_dir", "out", "config", ctx);

  if (j.contains("model") && j["model"].is_object()) {
    const json& m = j["model"];
    check_keys(m, "model", {"tim", "hidden_dim", "num_blocks", "dropout", "per_coordinate_params"},
               ctx);
    if (m.contains("tim")) {
      cfg.model.tim = parse_tim(m["tim"], "model.tim", ctx, cfg.tim_preset_name);
    } else {
      cfg.model.tim = tim_preset("tim-5-10");
      cfg.tim_preset_name = "tim-5-10";
    }
    cfg.model.hidden_dim = get_count(m, "hidden_dim", 64, "model", ctx);
    cfg.model.num_blocks = get_count(m, "num_blocks", 4, "model", ctx);
    cfg.model.dropout = get_num(m, "dropout", 0.0, "model", ctx);
    cfg.model.per_coordinate_params = get_bool(m, "per_coordinate_params", false, "model", ctx);
  } else {
    ctx.bad("config: 'model' object is required");
  }

  if (j.contains("train") && j["train"].is_object()) {
    const json& t = j["train"];
    check_keys(t, "train",
               {"epochs", "batch_size", "lr0", "decay", "decay_every", "seed", "clip_norm",
                "threads"},
               ctx);
    cfg.train.epochs = get_count(t, "epochs", 50, "train", ctx);
    cfg.train.batch_size = get_count(t, "batch_size", 16, "train", ctx);
    cfg.train.lr0 = get_num(t, "lr0", 5e-4, "train", ctx);
    cfg.train.decay = get_num(t, "decay", 0.96, "train", ctx);
    cfg.train.decay_every = get_count(t, "decay_every", 2, "train", ctx);
    cfg.train.seed = get_u64(t, "seed", 0, "train", ctx);
    cfg.train.clip_norm = get_num(t, "clip_norm", 0.0, "train", ctx);
    cfg.train.threads = get_count(t, "threads", 1, "train", ctx);
  } else if (j.contains("train")) {
    ctx.bad("config: 'train' must be an object");
  }

  if (j.contains("data") && j["data"].is_object()) {
    const json& d = j["data"];
    check_keys(d, "data",
               {"csv", "synth", "past_frames", "future_frames", "stride", "root_joint", "fps",
                "horizons_ms", "train_fraction"},
               ctx);
    const bool has_csv = d.contains("csv");
    const bool has_synth = d.contains("synth");
    if (has_csv == has_synth) {
      ctx.bad("data: exactly one of 'csv' and 'synth' is required");
    }
    if (has_csv) cfg.data.csv = get_str(d, "csv", "", "data", ctx);
    if (has_synth) {
      if (d["synth"].is_object()) {
        cfg.data.use_synth = true;
        cfg.data.synth = parse_synth_section(d["synth"], "data.synth", ctx);
      } else {
        ctx.bad("data.synth: expected an object");
      }
    }
    cfg.data.past_frames = get_count(d, "past_frames", 10, "data", ctx);
    cfg.data.future_frames = get_count(d, "future_frames", 25, "data", ctx);
    cfg.data.stride = get_count(d, "stride", 1, "data", ctx);
    if (d.contains("root_joint")) {
      cfg.data.root_joint = get_count(d, "root_joint", 0, "data", ctx);
    }
    if (d.contains("fps")) cfg.data.fps = get_num(d, "fps", 0.0, "data", ctx);
    if (d.contains("horizons_ms")) {
      cfg.data.horizons_explicit = true;
      cfg.data.horizons.ms.clear();
      if (d["horizons_ms"].is_array()) {
        for (const json& h : d["horizons_ms"]) {
          if (h.is_number()) {
            cfg.data.horizons.ms.push_back(h.get<double>());
          } else {
            ctx.bad("data.horizons_ms: expected numbers");
          }
        }
      } else {
        ctx.bad("data.horizons_ms: expected an array of milliseconds");
      }
    }
    cfg.data.train_fraction = get_num(d, "train_fraction", 1.0, "data", ctx);
    if (!(cfg.data.train_fraction > 0.0 && cfg.data.train_fraction <= 1.0)) {
      ctx.bad("data.train_fraction: must be in (0, 1]");
    }
    if (cfg.data.stride < 1) ctx.bad("data.stride: must be >= 1");
    if (cfg.data.past_frames < 1) ctx.bad("data.past_frames: must be >= 1");
    if (cfg.data.future_frames < 1) ctx.bad("data.future_frames: must be >= 1");
  } else {
    ctx.bad("config: 'data' object is required");
  }

  try {
    cfg.model.validate();
  } catch (const ValidationError& e) {
    ctx.merge(e);
  }
  try {
    cfg.train.validate();
  } catch (const ValidationError& e) {
    ctx.merge(e);
  }
  try {
    cfg.data.horizons.validate();
  } catch (const ValidationError& e) {
    ctx.merge(e);
  }

  // Cross-section checks. The observed window must be exactly what the
  // longest encoder branch consumes, and every horizon must land inside the
  // predicted frames (checkable now only when the frame rate is known).
  const std::size_t max_len = cfg.model.tim.max_subseq_len();
  if (max_len > 0 && cfg.data.past_frames != max_len) {
    ctx.bad("data.past_frames=" + std::to_string(cfg.data.past_frames) +
            " does not match the longest model subsequence length " + std::to_string(max_len));
  }
  double known_fps = 0.0;
  if (cfg.data.use_synth) known_fps = cfg.data.synth.fps;
  if (cfg.data.fps) {
    if (known_fps > 0.0 && *cfg.data.fps != known_fps) {
      ctx.bad("data.fps=" + std::to_string(*cfg.data.fps) + " conflicts with synth fps " +
              std::to_string(known_fps));
    }
    known_fps = *cfg.data.fps;
  }
  if (known_fps > 0.0) {
    for (double ms : cfg.data.horizons.ms) {
      if (!(ms > 0.0)) continue;  // already reported by HorizonSet::validate
      const std::size_t frames = ms_to_frames(ms, known_fps);
      if (frames > cfg.data.future_frames) {
        ctx.bad("data.horizons_ms: " + std::to_string(ms) + " ms maps to " +
                std::to_string(frames) + " frames, beyond future_frames=" +
                std::to_string(cfg.data.future_frames));
      }
    }
  }

  if (!ctx.violations.empty()) throw ValidationError(std::move(ctx.violations));
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  return parse_run_config(read_file(path), path);
}

RunConfig default_gradcheck_config() {
  RunConfig cfg;
  cfg.model.tim = TimConfig{{
      {5, {{2, 2}, {2, 3}}},
      {10, {{2, 3}, {1, 1}}},
  }};
  cfg.model.hidden_dim = 8;
  cfg.model.num_blocks = 2;
  cfg.train.epochs = 1;
  cfg.train.batch_size = 1;
  cfg.train.seed = 1;
  cfg.data.use_synth = true;
  cfg.data.synth = random_synth_spec(2, 25.0, 2.0, 2, 2.0, 8.0, 0.3, 1.0, 0.0, 11);
  cfg.data.past_frames = 10;
  cfg.data.future_frames = 5;
  cfg.data.stride = 1;
  cfg.data.horizons.ms = {80.0, 160.0};
  cfg.data.horizons_explicit = true;
  return cfg;
}

SynthSpec parse_synth_spec(const std::string& json_text, const std::string& origin) {
  const json j = parse_json_text(json_text, origin);
  if (!j.is_object()) throw motion::ParseError(origin + ": top level must be a JSON object");
  Ctx ctx;
  SynthSpec spec = parse_synth_section(j, "synth", ctx);
  if (!ctx.violations.empty()) throw ValidationError(std::move(ctx.violations));
  return spec;
}

SynthSpec load_synth_spec(const std::string& path) {
  return parse_synth_spec(read_file(path), path);
}

namespace {

json tim_to_json(const TimConfig& cfg) {
  json branches = json::array();
  for (const auto& b : cfg.branches) {
    json kernels = json::array();
    for (const auto& k : b.kernels) {
      kernels.push_back({{"count", k.count}, {"size", k.size}});
    }
    branches.push_back({{"subseq_len", b.subseq_len}, {"kernels", std::move(kernels)}});
  }
  return {{"branches", std::move(branches)}};
}

json synth_to_json(const SynthSpec& spec) {
  json comps = json::array();
  for (const auto& list : spec.components) {
    json jl = json::array();
    for (const auto& c : list) {
      jl.push_back({{"amplitude", c.amplitude}, {"frequency", c.frequency}, {"phase", c.phase}});
    }
    comps.push_back(std::move(jl));
  }
  return {{"joints", spec.joints},     {"fps", spec.fps},   {"duration_s", spec.duration_s},
          {"components", std::move(comps)}, {"noise_std", spec.noise_std}, {"seed", spec.seed}};
}

}  // namespace

// The echo covers every field that affects computation, fully explicit, so
// it reloads as a config and reproduces the run. out_dir is deliberately
// left out: where outputs land has no bearing on what gets computed, and
// the config hash should not change when results are redirected.
std::string canonical_config_json(const RunConfig& cfg) {
  json j;
  j["model"]["tim"] = tim_to_json(cfg.model.tim);
  j["model"]["hidden_dim"] = cfg.model.hidden_dim;
  j["model"]["num_blocks"] = cfg.model.num_blocks;
  j["model"]["dropout"] = cfg.model.dropout;
  j["model"]["per_coordinate_params"] = cfg.model.per_coordinate_params;

  // threads is omitted for the same reason as out_dir: results are
  // contractually identical for any thread count.
  j["train"] = {{"epochs", cfg.train.epochs},   {"batch_size", cfg.train.batch_size},
                {"lr0", cfg.train.lr0},         {"decay", cfg.train.decay},
                {"decay_every", cfg.train.decay_every}, {"seed", cfg.train.seed},
                {"clip_norm", cfg.train.clip_norm}};

  if (cfg.data.use_synth) {
    j["data"]["synth"] = synth_to_json(cfg.data.synth);
  } else {
    j["data"]["csv"] = cfg.data.csv;
  }
  j["data"]["past_frames"] = cfg.data.past_frames;
  j["data"]["future_frames"] = cfg.data.future_frames;
  j["data"]["stride"] = cfg.data.stride;
  if (cfg.data.root_joint) j["data"]["root_joint"] = *cfg.data.root_joint;
  if (cfg.data.fps) j["data"]["fps"] = *cfg.data.fps;
  j["data"]["horizons_ms"] = cfg.data.horizons.ms;
  j["data"]["train_fraction"] = cfg.data.train_fraction;
  return j.dump(2) + "\n";
}

std::uint64_t fnv1a64(const std::string& text) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

Dataset build_dataset(const DataConfig& cfg) {
  Dataset ds;
  ds.seq = cfg.use_synth ? synth_motion(cfg.synth) : load_motion_csv(cfg.csv);
  if (cfg.fps && !cfg.use_synth && *cfg.fps != ds.seq.fps) {
    throw ValidationError("data.fps=" + std::to_string(*cfg.fps) + " but '" + cfg.csv +
                          "' declares fps=" + std::to_string(ds.seq.fps));
  }
  ds.fps = ds.seq.fps;
  if (cfg.root_joint) ds.seq = center_root(ds.seq, *cfg.root_joint);

  std::vector<std::string> violations;
  for (double ms : cfg.horizons.ms) {
    const std::size_t frames = ms_to_frames(ms, ds.fps);
    if (frames > cfg.future_frames) {
      violations.push_back("horizon " + std::to_string(ms) + " ms maps to " +
                           std::to_string(frames) + " frames, beyond future_frames=" +
                           std::to_string(cfg.future_frames));
    }
    ds.horizon_frames.push_back(frames);
  }
  if (!violations.empty()) throw ValidationError(std::move(violations));

  std::vector<TrainWindow> windows =
      make_windows(ds.seq, cfg.past_frames, cfg.future_frames, cfg.stride);
  if (cfg.train_fraction >= 1.0) {
    ds.train_windows = windows;
    ds.eval_windows = std::move(windows);
  } else {
    std::size_t n_train =
        static_cast<std::size_t>(std::floor(cfg.train_fraction * static_cast<double>(windows.size())));
    if (n_train < 1) n_train = 1;
    if (n_train >= windows.size()) n_train = windows.size() - 1;
    if (n_train == 0) {
      throw ValidationError("train_fraction=" + std::to_string(cfg.train_fraction) +
                            " leaves no split with only " + std::to_string(windows.size()) +
                            " windows");
    }
    ds.train_windows.assign(windows.begin(), windows.begin() + static_cast<std::ptrdiff_t>(n_train));
    ds.eval_windows.assign(windows.begin() + static_cast<std::ptrdiff_t>(n_train), windows.end());
  }

  ds.split_hash = fnv1a64("frames=" + std::to_string(ds.seq.frames()) +
                          ";coords=" + std::to_string(ds.seq.coords()) +
                          ";past=" + std::to_string(cfg.past_frames) +
                          ";future=" + std::to_string(cfg.future_frames) +
                          ";stride=" + std::to_string(cfg.stride) +
                          ";train=" + std::to_string(ds.train_windows.size()) +
                          ";eval=" + std::to_string(ds.eval_windows.size()));
  return ds;
}

}  // namespace motion::cli
