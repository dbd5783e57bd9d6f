#include "motion/gcn.hpp"

#include <cmath>
#include <string>
#include <utility>

namespace motion {

void GcnConfig::validate() const {
  std::vector<std::string> violations;
  if (nodes < 1) violations.push_back("gcn: nodes must be >= 1");
  if (input_dim < 1) violations.push_back("gcn: input_dim must be >= 1");
  if (hidden_dim < 1) violations.push_back("gcn: hidden_dim must be >= 1");
  if (output_dim < 1) violations.push_back("gcn: output_dim must be >= 1");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
    violations.push_back("gcn: dropout_rate must be in [0, 1)");
  }
  if (!violations.empty()) throw ValidationError(std::move(violations));
}

namespace {

GcnLayerParams init_layer(std::size_t nodes, std::size_t in_dim, std::size_t out_dim,
                          std::mt19937_64& rng) {
  GcnLayerParams layer{Matrix::identity(nodes), Matrix(in_dim, out_dim)};
  std::uniform_real_distribution<double> adj_noise(-0.01, 0.01);
  for (double& v : layer.a.data()) v += adj_noise(rng);
  const double bound = 1.0 / std::sqrt(static_cast<double>(in_dim));
  std::uniform_real_distribution<double> wdist(-bound, bound);
  for (double& v : layer.w.data()) v = wdist(rng);
  return layer;
}

}  // namespace

GcnParams init_gcn_params(const GcnConfig& cfg, std::mt19937_64& rng) {
  cfg.validate();
  GcnParams params;
  params.input = init_layer(cfg.nodes, cfg.input_dim, cfg.hidden_dim, rng);
  params.blocks.reserve(cfg.num_blocks);
  for (std::size_t i = 0; i < cfg.num_blocks; ++i) {
    params.blocks.push_back({init_layer(cfg.nodes, cfg.hidden_dim, cfg.hidden_dim, rng),
                             init_layer(cfg.nodes, cfg.hidden_dim, cfg.hidden_dim, rng)});
  }
  params.output = init_layer(cfg.nodes, cfg.hidden_dim, cfg.output_dim, rng);
  return params;
}

namespace {

GcnLayerParams zero_layer(const GcnLayerParams& layer) {
  return {Matrix(layer.a.rows(), layer.a.cols()), Matrix(layer.w.rows(), layer.w.cols())};
}

}  // namespace

GcnParams zeros_like(const GcnParams& params) {
  GcnParams z;
  z.input = zero_layer(params.input);
  z.blocks.reserve(params.blocks.size());
  for (const auto& b : params.blocks) {
    z.blocks.push_back({zero_layer(b[0]), zero_layer(b[1])});
  }
  z.output = zero_layer(params.output);
  return z;
}

std::size_t param_count(const GcnParams& params) {
  auto layer_count = [](const GcnLayerParams& l) { return l.a.size() + l.w.size(); };
  std::size_t n = layer_count(params.input) + layer_count(params.output);
  for (const auto& b : params.blocks) n += layer_count(b[0]) + layer_count(b[1]);
  return n;
}

Matrix gcn_layer(const Matrix& h, const GcnLayerParams& layer, bool activate) {
  Matrix z = matmul(matmul(layer.a, h), layer.w);
  return activate ? tanh_activation(z) : z;
}

namespace {

// One activated layer with optional dropout; records what backward needs.
Matrix forward_hidden(const Matrix& h, const GcnLayerParams& layer, double dropout_rate,
                      GcnCache* cache, std::mt19937_64* dropout_rng) {
  Matrix y = gcn_layer(h, layer, /*activate=*/true);
  GcnLayerCache entry;
  if (cache) {
    entry.input = h;
    entry.activated = y;
  }
  if (dropout_rng && dropout_rate > 0.0) {
    const double keep = 1.0 - dropout_rate;
    std::bernoulli_distribution kept(keep);
    Vec mask(y.size());
    for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = kept(*dropout_rng) ? 1.0 / keep : 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) y.data()[i] *= mask[i];
    if (cache) entry.mask = std::move(mask);
  }
  if (cache) cache->layers.push_back(std::move(entry));
  return y;
}

Matrix backward_hidden(const GcnLayerParams& layer, const GcnLayerCache& entry,
                       const Matrix& d_out, GcnLayerParams& grads) {
  Matrix dy = d_out;
  if (!entry.mask.empty()) {
    for (std::size_t i = 0; i < dy.size(); ++i) dy.data()[i] *= entry.mask[i];
  }
  Matrix dz = tanh_activation_backward(entry.activated, dy);
  const Matrix ah = matmul(layer.a, entry.input);
  const Matrix hw = matmul(entry.input, layer.w);
  add_inplace(grads.w, matmul(transpose(ah), dz));
  add_inplace(grads.a, matmul(dz, transpose(hw)));
  return matmul(matmul(transpose(layer.a), dz), transpose(layer.w));
}

}  // namespace

Matrix gcn_forward(const Matrix& embedding, const GcnConfig& cfg, const GcnParams& params,
                   GcnCache* cache, std::mt19937_64* dropout_rng) {
  if (embedding.rows() != cfg.nodes || embedding.cols() != cfg.input_dim) {
    throw ShapeError("gcn_forward: embedding shape " + shape_str(embedding) + " does not match " +
                     std::to_string(cfg.nodes) + "x" + std::to_string(cfg.input_dim));
  }
  if (params.blocks.size() != cfg.num_blocks) {
    throw ShapeError("gcn_forward: params hold " + std::to_string(params.blocks.size()) +
                     " blocks, config has " + std::to_string(cfg.num_blocks));
  }
  if (cache) cache->layers.clear();
  Matrix h = forward_hidden(embedding, params.input, cfg.dropout_rate, cache, dropout_rng);
  for (const auto& block : params.blocks) {
    Matrix skip = h;
    h = forward_hidden(h, block[0], cfg.dropout_rate, cache, dropout_rng);
    h = forward_hidden(h, block[1], cfg.dropout_rate, cache, dropout_rng);
    add_inplace(h, skip);
  }
  if (cache) {
    GcnLayerCache entry;
    entry.input = h;
    cache->layers.push_back(std::move(entry));
  }
  return gcn_layer(h, params.output, /*activate=*/false);
}

Matrix gcn_backward(const GcnConfig& cfg, const GcnParams& params, const GcnCache& cache,
                    const Matrix& d_output, GcnParams& grads) {
  const std::size_t expect_layers = 2 * cfg.num_blocks + 2;
  if (cache.layers.size() != expect_layers) {
    throw ShapeError("gcn_backward: cache holds " + std::to_string(cache.layers.size()) +
                     " layers, expected " + std::to_string(expect_layers));
  }
  if (d_output.rows() != cfg.nodes || d_output.cols() != cfg.output_dim) {
    throw ShapeError("gcn_backward: gradient shape " + shape_str(d_output) + " does not match " +
                     std::to_string(cfg.nodes) + "x" + std::to_string(cfg.output_dim));
  }

  // Output layer is linear, so dZ is d_output itself.
  const GcnLayerCache& out_entry = cache.layers.back();
  Matrix dh;
  {
    const Matrix ah = matmul(params.output.a, out_entry.input);
    const Matrix hw = matmul(out_entry.input, params.output.w);
    add_inplace(grads.output.w, matmul(transpose(ah), d_output));
    add_inplace(grads.output.a, matmul(d_output, transpose(hw)));
    dh = matmul(matmul(transpose(params.output.a), d_output), transpose(params.output.w));
  }

  std::size_t idx = cache.layers.size() - 1;
  for (std::size_t bi = cfg.num_blocks; bi-- > 0;) {
    const Matrix d_block_out = dh;  // flows through the residual skip too
    Matrix d = backward_hidden(params.blocks[bi][1], cache.layers[--idx], d_block_out,
                               grads.blocks[bi][1]);
    d = backward_hidden(params.blocks[bi][0], cache.layers[--idx], d, grads.blocks[bi][0]);
    add_inplace(d, d_block_out);
    dh = std::move(d);
  }
  return backward_hidden(params.input, cache.layers[0], dh, grads.input);
}

}  // namespace motion
