#include "motion/model.hpp"

#include <algorithm>
#include <utility>

namespace motion {

namespace {

// Visits every parameter array in canonical order. Kept as a template so the
// same traversal serves both mutable (optimizer) and const (flatten) callers.
template <class PS, class Fn>
void for_each_array(PS& params, Fn&& fn) {
  for (std::size_t s = 0; s < params.tim.size(); ++s) {
    auto& tp = params.tim[s];
    for (std::size_t b = 0; b < tp.branches.size(); ++b) {
      auto& bp = tp.branches[b];
      for (std::size_t g = 0; g < bp.groups.size(); ++g) {
        auto& gp = bp.groups[g];
        const std::string prefix = "tim" + std::to_string(s) + ".branch" + std::to_string(b) +
                                   ".group" + std::to_string(g);
        fn(prefix + ".w", gp.w.data().data(), gp.w.size());
        fn(prefix + ".b", gp.b.data(), gp.b.size());
      }
    }
  }
  auto layer = [&fn](const std::string& name, auto& l) {
    fn(name + ".A", l.a.data().data(), l.a.size());
    fn(name + ".W", l.w.data().data(), l.w.size());
  };
  layer("gcn.input", params.gcn.input);
  for (std::size_t b = 0; b < params.gcn.blocks.size(); ++b) {
    layer("gcn.block" + std::to_string(b) + ".layer0", params.gcn.blocks[b][0]);
    layer("gcn.block" + std::to_string(b) + ".layer1", params.gcn.blocks[b][1]);
  }
  layer("gcn.output", params.gcn.output);
}

}  // namespace

ParamSet zeros_like(const ParamSet& params) {
  ParamSet z;
  z.tim.reserve(params.tim.size());
  for (const auto& t : params.tim) z.tim.push_back(zeros_like(t));
  z.gcn = zeros_like(params.gcn);
  return z;
}

std::size_t param_count(const ParamSet& params) {
  std::size_t n = param_count(params.gcn);
  for (const auto& t : params.tim) n += param_count(t);
  return n;
}

std::vector<ParamRef> param_refs(ParamSet& params) {
  std::vector<ParamRef> refs;
  for_each_array(params, [&refs](const std::string& name, double* data, std::size_t size) {
    refs.push_back({name, data, size});
  });
  return refs;
}

std::vector<ConstParamRef> param_refs(const ParamSet& params) {
  std::vector<ConstParamRef> refs;
  for_each_array(params, [&refs](const std::string& name, const double* data, std::size_t size) {
    refs.push_back({name, data, size});
  });
  return refs;
}

void set_zero(ParamSet& params) {
  for_each_array(params, [](const std::string&, double* data, std::size_t size) {
    std::fill(data, data + size, 0.0);
  });
}

Vec flatten(const ParamSet& params) {
  Vec theta;
  theta.reserve(param_count(params));
  for_each_array(params, [&theta](const std::string&, const double* data, std::size_t size) {
    theta.insert(theta.end(), data, data + size);
  });
  return theta;
}

void unflatten(const Vec& theta, ParamSet& params) {
  if (theta.size() != param_count(params)) {
    throw ShapeError("unflatten: vector holds " + std::to_string(theta.size()) +
                     " values, parameter set holds " + std::to_string(param_count(params)));
  }
  std::size_t offset = 0;
  for_each_array(params, [&theta, &offset](const std::string&, double* data, std::size_t size) {
    std::copy(theta.begin() + static_cast<std::ptrdiff_t>(offset),
              theta.begin() + static_cast<std::ptrdiff_t>(offset + size), data);
    offset += size;
  });
}

void ModelSpec::validate() const {
  tim.validate();
  std::vector<std::string> violations;
  if (hidden_dim < 1) violations.push_back("model: hidden_dim must be >= 1");
  if (!(dropout >= 0.0 && dropout < 1.0)) {
    violations.push_back("model: dropout must be in [0, 1)");
  }
  if (!violations.empty()) throw ValidationError(std::move(violations));
}

Model make_model(const ModelSpec& spec, std::size_t coords, std::size_t future_frames,
                 std::mt19937_64& rng) {
  spec.validate();
  if (coords < 1) throw ValidationError("model: coords must be >= 1");
  if (future_frames < 1) throw ValidationError("model: future_frames must be >= 1");

  Model m;
  m.spec = spec;
  m.coords = coords;
  m.future_frames = future_frames;
  m.gcn_cfg = GcnConfig{coords,
                        embedding_dim(spec.tim),
                        spec.hidden_dim,
                        spec.num_blocks,
                        spec.tim.max_subseq_len() + future_frames,
                        spec.dropout};

  const std::size_t tim_sets = spec.per_coordinate_params ? coords : 1;
  m.params.tim.reserve(tim_sets);
  for (std::size_t i = 0; i < tim_sets; ++i) {
    m.params.tim.push_back(init_tim_params(spec.tim, rng));
  }
  m.params.gcn = init_gcn_params(m.gcn_cfg, rng);
  return m;
}

Matrix predict_cached(const Model& model, const Matrix& observed, PredictCache& cache,
                      std::mt19937_64* dropout_rng) {
  if (observed.rows() != model.coords || observed.cols() != model.past_frames()) {
    throw ShapeError("predict: observed shape " + shape_str(observed) + " does not match " +
                     std::to_string(model.coords) + "x" + std::to_string(model.past_frames()));
  }
  cache.observed = observed;
  cache.embeddings = tim_forward_all(observed, model.spec.tim, model.params.tim);
  Matrix out =
      gcn_forward(cache.embeddings, model.gcn_cfg, model.params.gcn, &cache.gcn, dropout_rng);
  // Broadcast the last observed frame across every output frame.
  const std::size_t last = model.past_frames() - 1;
  for (std::size_t k = 0; k < out.rows(); ++k) {
    const double anchor = observed(k, last);
    for (std::size_t t = 0; t < out.cols(); ++t) out(k, t) += anchor;
  }
  return out;
}

Matrix predict(const Model& model, const Matrix& observed) {
  PredictCache cache;
  return predict_cached(model, observed, cache);
}

void predict_backward(const Model& model, const PredictCache& cache, const Matrix& d_prediction,
                      ParamSet& grads) {
  // The residual add touches only the input data, so d(gcn output) is
  // d_prediction unchanged.
  Matrix d_emb =
      gcn_backward(model.gcn_cfg, model.params.gcn, cache.gcn, d_prediction, grads.gcn);
  tim_backward_all(cache.observed, model.spec.tim, model.params.tim, d_emb, grads.tim);
}

}  // namespace motion
