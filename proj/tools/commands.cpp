#include "commands.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <utility>

#include <json.hpp>

#include "motion/checkpoint.hpp"

namespace motion::cli {

namespace fs = std::filesystem;

void apply_overrides(RunConfig& cfg, const GlobalOpts& opts) {
  if (opts.seed) cfg.train.seed = *opts.seed;
  if (opts.out) cfg.out_dir = *opts.out;
  if (opts.threads) cfg.train.threads = *opts.threads;
  if (opts.clip_norm) cfg.train.clip_norm = *opts.clip_norm;
  cfg.train.validate();
}

namespace {

std::string g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string g6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

RunConfig load_required_config(const GlobalOpts& opts, const char* cmd) {
  if (opts.config_path.empty()) {
    throw ValidationError(std::string(cmd) + ": --config is required");
  }
  RunConfig cfg = load_run_config(opts.config_path);
  apply_overrides(cfg, opts);
  return cfg;
}

void write_csv_table(const std::string& path, const std::vector<std::string>& comments,
                     const std::vector<std::string>& header,
                     const std::vector<std::vector<std::string>>& rows) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  for (const auto& c : comments) out << "# " << c << "\n";
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << "\n";
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
    out << "\n";
  }
  if (!out) throw IoError("write to '" + path + "' failed");
}

void print_table(const std::vector<std::string>& header,
                 const std::vector<std::vector<std::string>>& rows) {
  for (std::size_t i = 0; i < header.size(); ++i) std::cout << (i ? "\t" : "") << header[i];
  std::cout << "\n";
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) std::cout << (i ? "\t" : "") << row[i];
    std::cout << "\n";
  }
}

std::vector<std::string> horizon_header(const HorizonSet& horizons) {
  std::vector<std::string> header{"variant"};
  for (double ms : horizons.ms) header.push_back("mpjpe_" + g6(ms) + "ms");
  return header;
}

void write_history_csv(const std::string& path, const std::vector<EpochStats>& history,
                       const std::string& hash_hex) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << "# config_hash=" << hash_hex << "\n";
  out << "epoch,mean_loss,lr\n";
  for (const auto& e : history) {
    out << e.epoch << "," << g17(e.mean_loss) << "," << g17(e.lr) << "\n";
  }
  if (!out) throw IoError("write to '" + path + "' failed");
}

std::string out_path(const RunConfig& cfg, const char* name) {
  fs::create_directories(cfg.out_dir);
  return (fs::path(cfg.out_dir) / name).string();
}

// Drops the oldest `drop` frames from every window, keeping targets aligned
// on the same future frames. Used by ablate so variants with different
// observation lengths still predict from identical data.
std::vector<TrainWindow> suffix_windows(const std::vector<TrainWindow>& windows,
                                        std::size_t drop) {
  if (drop == 0) return windows;
  std::vector<TrainWindow> out;
  out.reserve(windows.size());
  for (const auto& w : windows) {
    TrainWindow s;
    s.input = Matrix(w.input.rows(), w.input.cols() - drop);
    s.target = Matrix(w.target.rows(), w.target.cols() - drop);
    for (std::size_t k = 0; k < w.input.rows(); ++k) {
      for (std::size_t t = drop; t < w.input.cols(); ++t) s.input(k, t - drop) = w.input(k, t);
      for (std::size_t t = drop; t < w.target.cols(); ++t) s.target(k, t - drop) = w.target(k, t);
    }
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace

int cmd_train(const GlobalOpts& opts) {
  RunConfig cfg = load_required_config(opts, "train");
  Dataset ds = build_dataset(cfg.data);
  const std::string echo = canonical_config_json(cfg);
  const std::string hash = hex64(fnv1a64(echo));

  std::cout << "config " << opts.config_path << " (hash " << hash << ")\n";
  std::cout << "dataset: " << ds.seq.frames() << " frames, K=" << ds.seq.coords() << ", "
            << ds.train_windows.size() << " training windows\n";

  const auto t0 = std::chrono::steady_clock::now();
  TrainResult res = train(ds.train_windows, cfg.model, cfg.train);
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  const std::size_t every = std::max<std::size_t>(1, cfg.train.epochs / 10);
  for (const auto& e : res.history) {
    if (e.epoch % every == 0 || e.epoch + 1 == res.history.size()) {
      std::cout << "epoch " << e.epoch << " mean_loss=" << g6(e.mean_loss) << " lr=" << g6(e.lr)
                << "\n";
    }
  }
  std::cout << "trained " << param_count(res.model.params) << " parameters in " << g6(wall)
            << " s\n";

  {
    std::ofstream out(out_path(cfg, "config_echo.json"));
    if (!out) throw IoError("cannot open config_echo.json for writing");
    out << echo;
  }
  write_history_csv(out_path(cfg, "history.csv"), res.history, hash);
  save_checkpoint(out_path(cfg, "checkpoint.bin"), res.model, echo);

  const auto evals = evaluate_horizons(res.model, ds.eval_windows, ds.horizon_frames);
  std::vector<std::vector<std::string>> rows(2);
  rows[0].push_back("model");
  rows[1].push_back("zero_velocity");
  for (const auto& e : evals) {
    rows[0].push_back(g17(e.model_mpjpe));
    rows[1].push_back(g17(e.baseline_mpjpe));
  }
  const auto header = horizon_header(cfg.data.horizons);
  write_csv_table(out_path(cfg, "final_eval.csv"),
                  {"config_hash=" + hash + " seed=" + std::to_string(cfg.train.seed) +
                   " wall_time_s=" + g6(wall)},
                  header, rows);
  print_table(header, rows);
  std::cout << "wrote " << cfg.out_dir << "/{checkpoint.bin, history.csv, final_eval.csv, "
            << "config_echo.json}\n";
  return 0;
}

int cmd_eval(const GlobalOpts& opts, const std::string& checkpoint_path) {
  RunConfig cfg = load_required_config(opts, "eval");
  CheckpointData ck = load_checkpoint(checkpoint_path);
  Dataset ds = build_dataset(cfg.data);

  if (ds.seq.coords() != ck.model.coords) {
    throw ValidationError("eval: data has K=" + std::to_string(ds.seq.coords()) +
                          " coordinates, checkpoint model expects K=" +
                          std::to_string(ck.model.coords));
  }
  if (cfg.data.past_frames != ck.model.past_frames()) {
    throw ValidationError("eval: config past_frames=" + std::to_string(cfg.data.past_frames) +
                          ", checkpoint model observes " +
                          std::to_string(ck.model.past_frames()));
  }
  if (cfg.data.future_frames != ck.model.future_frames) {
    throw ValidationError("eval: config future_frames=" + std::to_string(cfg.data.future_frames) +
                          ", checkpoint model predicts " +
                          std::to_string(ck.model.future_frames));
  }

  const std::string echo = canonical_config_json(cfg);
  const std::string hash = hex64(fnv1a64(echo));
  const auto t0 = std::chrono::steady_clock::now();
  const auto evals = evaluate_horizons(ck.model, ds.eval_windows, ds.horizon_frames);
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  std::vector<std::vector<std::string>> rows(2);
  rows[0].push_back("model");
  rows[1].push_back("zero_velocity");
  for (const auto& e : evals) {
    rows[0].push_back(g17(e.model_mpjpe));
    rows[1].push_back(g17(e.baseline_mpjpe));
  }
  const auto header = horizon_header(cfg.data.horizons);
  write_csv_table(out_path(cfg, "eval.csv"),
                  {"config_hash=" + hash + " seed=" + std::to_string(cfg.train.seed) +
                   " wall_time_s=" + g6(wall),
                   "checkpoint=" + checkpoint_path +
                   " eval_windows=" + std::to_string(ds.eval_windows.size())},
                  header, rows);
  print_table(header, rows);
  std::cout << "wrote " << cfg.out_dir << "/eval.csv\n";
  return 0;
}

int cmd_gradcheck(const GlobalOpts& opts) {
  RunConfig cfg;
  if (opts.config_path.empty()) {
    cfg = default_gradcheck_config();
    apply_overrides(cfg, opts);
  } else {
    cfg = load_required_config(opts, "gradcheck");
  }
  const double tol = opts.tol.value_or(1e-4);

  Dataset ds = build_dataset(cfg.data);
  std::mt19937_64 rng(cfg.train.seed);
  Model model = make_model(cfg.model, ds.seq.coords(), cfg.data.future_frames, rng);

  const std::size_t n = param_count(model.params);
  if (n > 2000) {
    throw ValidationError("gradcheck: model has " + std::to_string(n) +
                          " parameters; finite-difference checking is capped at 2000");
  }

  const GradCheckReport report = grad_check(model, ds.train_windows.front(), 1e-5, tol);
  std::printf("checking %zu parameters in %zu groups (eps=1e-5, tol=%g)\n", n,
              report.groups.size(), tol);
  for (const auto& g : report.groups) {
    std::printf("  %-28s max_rel_err %.3e\n", g.name.c_str(), g.max_rel_err);
  }
  std::printf("gradcheck %s: max rel err %.3e vs tol %g\n", report.pass ? "PASS" : "FAIL",
              report.max_rel_err, tol);
  if (!report.pass) {
    throw NumericError("gradient check failed: max rel err " + g17(report.max_rel_err) +
                       " exceeds tol " + g17(tol));
  }
  return 0;
}

TimConfig constant_kernel_variant(const TimConfig& proportional) {
  const std::size_t d_prop = embedding_dim(proportional);
  std::size_t sum1 = 0;  // Σ (M_j - 1): outputs of one size-2 kernel per branch
  std::size_t sum2 = 0;  // Σ (M_j - 2): outputs of one size-3 kernel per branch
  for (const auto& b : proportional.branches) {
    if (b.subseq_len < 3) {
      throw ValidationError("constant-kernel variant needs every subsequence length >= 3, got " +
                            std::to_string(b.subseq_len));
    }
    sum1 += b.subseq_len - 1;
    sum2 += b.subseq_len - 2;
  }

  const double base = 12.0 * static_cast<double>(sum1);
  const double ideal =
      (static_cast<double>(d_prop) - base) / static_cast<double>(sum2);
  long n3 = std::lround(ideal);
  if (n3 < 1) n3 = 1;

  auto dim_for = [&](long n) {
    return 12 * sum1 + static_cast<std::size_t>(n) * sum2;
  };
  long best = n3;
  for (long cand = std::max<long>(1, n3 - 2); cand <= n3 + 2; ++cand) {
    const auto diff = [&](long n) {
      const double d = static_cast<double>(dim_for(n)) - static_cast<double>(d_prop);
      return std::abs(d);
    };
    if (diff(cand) < diff(best)) best = cand;
  }

  const std::size_t d_const = dim_for(best);
  const double rel = std::abs(static_cast<double>(d_const) - static_cast<double>(d_prop)) /
                     static_cast<double>(d_prop);
  if (rel > 0.05) {
    throw ValidationError("constant-kernel variant embedding size " + std::to_string(d_const) +
                          " is more than 5% away from " + std::to_string(d_prop));
  }

  TimConfig cfg;
  for (const auto& b : proportional.branches) {
    cfg.branches.push_back(
        {b.subseq_len, {{12, 2}, {static_cast<std::size_t>(best), 3}}});
  }
  return cfg;
}

int cmd_ablate(const GlobalOpts& opts) {
  RunConfig cfg = load_required_config(opts, "ablate");
  if (!cfg.data.horizons_explicit) {
    cfg.data.horizons.ms = {560.0, 1000.0};
  }

  struct Variant {
    std::string name;
    TimConfig tim;
  };
  std::vector<Variant> variants;
  variants.push_back({"tim-5-10-proportional", tim_preset("tim-5-10")});
  variants.push_back({"tim-5-10-constant", constant_kernel_variant(tim_preset("tim-5-10"))});
  variants.push_back({"tim-5-10-15-proportional", tim_preset("tim-5-10-15")});
  variants.push_back(
      {"tim-5-10-15-constant", constant_kernel_variant(tim_preset("tim-5-10-15"))});

  std::size_t common_past = 0;
  for (const auto& v : variants) common_past = std::max(common_past, v.tim.max_subseq_len());

  // All variants train and evaluate on one window set built with the longest
  // observation length; shorter variants read the most recent frames of it.
  DataConfig dc = cfg.data;
  dc.past_frames = common_past;
  Dataset ds = build_dataset(dc);

  // The controlled-comparison invariant: variant configs must differ only in
  // the encoder architecture.
  {
    std::string first;
    for (const auto& v : variants) {
      RunConfig vcfg = cfg;
      vcfg.data.past_frames = common_past;
      vcfg.model.tim = v.tim;
      vcfg.tim_preset_name.clear();
      nlohmann::json j = nlohmann::json::parse(canonical_config_json(vcfg));
      j["model"].erase("tim");
      const std::string stripped = j.dump();
      if (first.empty()) {
        first = stripped;
      } else if (stripped != first) {
        throw std::logic_error("ablate variants diverged outside model.tim");
      }
    }
  }

  const std::string echo = canonical_config_json(cfg);
  const std::string hash = hex64(fnv1a64(echo));
  std::cout << "ablate: " << ds.train_windows.size() << " shared training windows (split hash "
            << hex64(ds.split_hash) << ")\n";

  const auto t0 = std::chrono::steady_clock::now();
  std::vector<std::vector<std::string>> rows;
  double prop_sum = 0.0, const_sum = 0.0;
  std::size_t prop_n = 0, const_n = 0;
  for (const auto& v : variants) {
    const std::size_t drop = common_past - v.tim.max_subseq_len();
    const auto train_w = suffix_windows(ds.train_windows, drop);
    const auto eval_w = suffix_windows(ds.eval_windows, drop);

    ModelSpec spec = cfg.model;
    spec.tim = v.tim;
    TrainResult res = train(train_w, spec, cfg.train);
    const auto evals = evaluate_horizons(res.model, eval_w, ds.horizon_frames);

    std::vector<std::string> row{v.name, std::to_string(embedding_dim(v.tim))};
    for (const auto& e : evals) {
      row.push_back(g17(e.model_mpjpe));
      const bool is_prop = v.name.find("proportional") != std::string::npos;
      (is_prop ? prop_sum : const_sum) += e.model_mpjpe;
      (is_prop ? prop_n : const_n) += 1;
    }
    rows.push_back(std::move(row));
    std::cout << "  " << v.name << " done (D_E=" << embedding_dim(v.tim) << ")\n";
  }
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  const double prop_mean = prop_sum / static_cast<double>(prop_n);
  const double const_mean = const_sum / static_cast<double>(const_n);

  std::vector<std::string> header{"variant", "embedding_dim"};
  for (double ms : cfg.data.horizons.ms) header.push_back("mpjpe_" + g6(ms) + "ms");

  write_csv_table(
      out_path(cfg, "ablate.csv"),
      {"config_hash=" + hash + " seed=" + std::to_string(cfg.train.seed) +
       " split_hash=" + hex64(ds.split_hash) + " wall_time_s=" + g6(wall),
       "variants_differ_only_in=model.tim",
       "finding: proportional_mean_mpjpe=" + g6(prop_mean) +
       " constant_mean_mpjpe=" + g6(const_mean) + " proportional_better=" +
       (prop_mean <= const_mean ? "true" : "false") + " (reported, not gated)"},
      header, rows);
  print_table(header, rows);
  std::cout << "finding: proportional mean " << g6(prop_mean) << " vs constant mean "
            << g6(const_mean) << " (reported, not gated)\n";
  std::cout << "wrote " << cfg.out_dir << "/ablate.csv\n";
  return 0;
}

int cmd_synth(const std::string& spec_path, const std::string& out_csv) {
  const SynthSpec spec = load_synth_spec(spec_path);
  const MotionSequence seq = synth_motion(spec);
  save_motion_csv(out_csv, seq);
  std::cout << "wrote " << seq.frames() << " frames x " << seq.coords() << " coordinates (fps="
            << g6(seq.fps) << ") to " << out_csv << "\n";
  return 0;
}

}  // namespace motion::cli
