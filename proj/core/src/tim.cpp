#include "motion/tim.hpp"

#include <algorithm>
#include <cmath>

namespace motion {

std::size_t TimConfig::max_subseq_len() const {
  std::size_t m = 0;
  for (const auto& b : branches) m = std::max(m, b.subseq_len);
  return m;
}

void TimConfig::validate() const {
  std::vector<std::string> violations;
  if (branches.empty()) {
    violations.push_back("tim: at least one branch is required");
  }
  for (std::size_t bi = 0; bi < branches.size(); ++bi) {
    const auto& b = branches[bi];
    const std::string where = "tim.branches[" + std::to_string(bi) + "]";
    if (b.subseq_len < 1) {
      violations.push_back(where + ": subseq_len must be >= 1");
    }
    if (b.kernels.empty()) {
      violations.push_back(where + ": at least one kernel spec is required");
    }
    for (std::size_t ki = 0; ki < b.kernels.size(); ++ki) {
      const auto& k = b.kernels[ki];
      if (k.count < 1) {
        violations.push_back(where + ".kernels[" + std::to_string(ki) +
                             "]: count must be >= 1");
      }
      if (k.size < 1 || k.size > b.subseq_len) {
        violations.push_back(where + ".kernels[" + std::to_string(ki) + "]: size " +
                             std::to_string(k.size) + " must be in [1, subseq_len=" +
                             std::to_string(b.subseq_len) + "]");
      }
    }
  }
  if (!violations.empty()) throw ValidationError(std::move(violations));
}

TimConfig tim_preset(const std::string& name) {
  if (name == "tim-5-10") {
    return TimConfig{{
        {5, {{12, 2}, {9, 3}}},
        {10, {{9, 3}, {7, 5}, {6, 7}, {1, 1}}},
    }};
  }
  if (name == "tim-5-10-15") {
    return TimConfig{{
        {5, {{12, 2}, {9, 3}}},
        {10, {{9, 3}, {7, 5}, {6, 7}, {1, 1}}},
        {15, {{9, 4}, {7, 7}, {6, 10}}},
    }};
  }
  throw ValidationError("unknown tim preset '" + name + "' (known: tim-5-10, tim-5-10-15)");
}

std::vector<std::string> tim_preset_names() { return {"tim-5-10", "tim-5-10-15"}; }

std::size_t embedding_dim(const TimConfig& cfg) {
  std::size_t dim = 0;
  for (const auto& b : cfg.branches) {
    for (const auto& k : b.kernels) {
      dim += k.count * (b.subseq_len - k.size + 1);
    }
  }
  return dim;
}

std::vector<Vec> sample_subsequences(const Vec& x, const TimConfig& cfg) {
  const std::size_t full = cfg.max_subseq_len();
  if (x.size() != full) {
    throw ShapeError("sample_subsequences: input length " + std::to_string(x.size()) +
                     " must equal the longest subsequence length " + std::to_string(full));
  }
  std::vector<Vec> subs;
  subs.reserve(cfg.branches.size());
  for (const auto& b : cfg.branches) {
    subs.emplace_back(x.end() - static_cast<std::ptrdiff_t>(b.subseq_len), x.end());
  }
  return subs;
}

TimParams init_tim_params(const TimConfig& cfg, std::mt19937_64& rng) {
  TimParams params;
  params.branches.reserve(cfg.branches.size());
  for (const auto& b : cfg.branches) {
    TimBranchParams bp;
    for (const auto& k : b.kernels) {
      ConvGroupParams g{Matrix(k.count, k.size), Vec(k.count, 0.0)};
      if (k.size == 1) {
        for (std::size_t i = 0; i < k.count; ++i) g.w(i, 0) = 1.0;
      } else {
        const double bound = 1.0 / std::sqrt(static_cast<double>(k.size));
        std::uniform_real_distribution<double> dist(-bound, bound);
        for (double& v : g.w.data()) v = dist(rng);
      }
      bp.groups.push_back(std::move(g));
    }
    params.branches.push_back(std::move(bp));
  }
  return params;
}

TimParams zeros_like(const TimParams& params) {
  TimParams z;
  z.branches.reserve(params.branches.size());
  for (const auto& b : params.branches) {
    TimBranchParams bz;
    for (const auto& g : b.groups) {
      bz.groups.push_back({Matrix(g.w.rows(), g.w.cols()), Vec(g.b.size(), 0.0)});
    }
    z.branches.push_back(std::move(bz));
  }
  return z;
}

std::size_t param_count(const TimParams& params) {
  std::size_t n = 0;
  for (const auto& b : params.branches) {
    for (const auto& g : b.groups) n += g.w.size() + g.b.size();
  }
  return n;
}

namespace {

Vec kernel_row(const Matrix& w, std::size_t i) {
  return Vec(w.row(i), w.row(i) + w.cols());
}

}  // namespace

Vec tim_branch_forward(const Vec& x_j, const TimBranchParams& params) {
  Vec out;
  for (const auto& g : params.groups) {
    for (std::size_t i = 0; i < g.w.rows(); ++i) {
      Vec y = conv1d_valid(x_j, kernel_row(g.w, i), g.b[i]);
      out.insert(out.end(), y.begin(), y.end());
    }
  }
  return out;
}

Vec tim_forward(const Vec& x, const TimConfig& cfg, const TimParams& params) {
  if (params.branches.size() != cfg.branches.size()) {
    throw ShapeError("tim_forward: params hold " + std::to_string(params.branches.size()) +
                     " branches, config has " + std::to_string(cfg.branches.size()));
  }
  const std::vector<Vec> subs = sample_subsequences(x, cfg);
  Vec out;
  out.reserve(embedding_dim(cfg));
  for (std::size_t bi = 0; bi < cfg.branches.size(); ++bi) {
    Vec y = tim_branch_forward(subs[bi], params.branches[bi]);
    out.insert(out.end(), y.begin(), y.end());
  }
  return out;
}

Vec tim_backward(const Vec& x, const TimConfig& cfg, const TimParams& params,
                 const Vec& d_embedding, TimParams& grads) {
  if (d_embedding.size() != embedding_dim(cfg)) {
    throw ShapeError("tim_backward: gradient length " + std::to_string(d_embedding.size()) +
                     " does not match embedding dim " + std::to_string(embedding_dim(cfg)));
  }
  const std::vector<Vec> subs = sample_subsequences(x, cfg);
  Vec dx(x.size(), 0.0);
  std::size_t offset = 0;
  for (std::size_t bi = 0; bi < cfg.branches.size(); ++bi) {
    const auto& sub = subs[bi];
    const std::size_t sub_start = x.size() - sub.size();  // suffix position within x
    for (std::size_t gi = 0; gi < params.branches[bi].groups.size(); ++gi) {
      const auto& g = params.branches[bi].groups[gi];
      auto& gg = grads.branches[bi].groups[gi];
      const std::size_t out_len = sub.size() - g.w.cols() + 1;
      for (std::size_t i = 0; i < g.w.rows(); ++i) {
        const Vec dy(d_embedding.begin() + static_cast<std::ptrdiff_t>(offset),
                     d_embedding.begin() + static_cast<std::ptrdiff_t>(offset + out_len));
        Conv1dGrads cg = conv1d_valid_backward(sub, kernel_row(g.w, i), dy);
        for (std::size_t u = 0; u < g.w.cols(); ++u) gg.w(i, u) += cg.dw[u];
        gg.b[i] += cg.db;
        for (std::size_t t = 0; t < sub.size(); ++t) dx[sub_start + t] += cg.dx[t];
        offset += out_len;
      }
    }
  }
  return dx;
}

namespace {

const TimParams& params_for_row(const std::vector<TimParams>& params, std::size_t k) {
  return params.size() == 1 ? params[0] : params[k];
}

}  // namespace

Matrix tim_forward_all(const Matrix& trajectories, const TimConfig& cfg,
                       const std::vector<TimParams>& params) {
  if (params.size() != 1 && params.size() != trajectories.rows()) {
    throw ShapeError("tim_forward_all: expected 1 (shared) or " +
                     std::to_string(trajectories.rows()) + " (per-coordinate) parameter sets, got " +
                     std::to_string(params.size()));
  }
  const std::size_t dim = embedding_dim(cfg);
  Matrix emb(trajectories.rows(), dim);
  Vec x(trajectories.cols());
  for (std::size_t k = 0; k < trajectories.rows(); ++k) {
    std::copy(trajectories.row(k), trajectories.row(k) + trajectories.cols(), x.begin());
    Vec e = tim_forward(x, cfg, params_for_row(params, k));
    std::copy(e.begin(), e.end(), emb.row(k));
  }
  return emb;
}

Matrix tim_backward_all(const Matrix& trajectories, const TimConfig& cfg,
                        const std::vector<TimParams>& params, const Matrix& d_embeddings,
                        std::vector<TimParams>& grads) {
  if (d_embeddings.rows() != trajectories.rows() ||
      d_embeddings.cols() != embedding_dim(cfg)) {
    throw ShapeError("tim_backward_all: gradient shape " + shape_str(d_embeddings) +
                     " does not match embeddings " + std::to_string(trajectories.rows()) +
                     "x" + std::to_string(embedding_dim(cfg)));
  }
  Matrix dx(trajectories.rows(), trajectories.cols());
  Vec x(trajectories.cols());
  Vec de(d_embeddings.cols());
  for (std::size_t k = 0; k < trajectories.rows(); ++k) {
    std::copy(trajectories.row(k), trajectories.row(k) + trajectories.cols(), x.begin());
    std::copy(d_embeddings.row(k), d_embeddings.row(k) + d_embeddings.cols(), de.begin());
    TimParams& g = grads.size() == 1 ? grads[0] : grads[k];
    Vec dxk = tim_backward(x, cfg, params_for_row(params, k), de, g);
    std::copy(dxk.begin(), dxk.end(), dx.row(k));
  }
  return dx;
}

}  // namespace motion
