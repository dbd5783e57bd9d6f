#include "motion/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <fstream>
#include <random>

namespace motion {

static_assert(std::endian::native == std::endian::little,
              "checkpoint serialization assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'M', 'P', 'C', 'K', 'P', 'T', '0', '1'};

void put_u64(std::ofstream& out, std::uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void put_f64(std::ofstream& out, double v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void put_str(std::ofstream& out, const std::string& s) {
  put_u64(out, s.size());
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::uint64_t get_u64(std::ifstream& in, const std::string& path) {
  std::uint64_t v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) {
    throw ParseError("checkpoint '" + path + "' is truncated");
  }
  return v;
}

double get_f64(std::ifstream& in, const std::string& path) {
  double v = 0.0;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) {
    throw ParseError("checkpoint '" + path + "' is truncated");
  }
  return v;
}

std::string get_str(std::ifstream& in, const std::string& path) {
  const std::uint64_t len = get_u64(in, path);
  std::string s(len, '\0');
  if (!in.read(s.data(), static_cast<std::streamsize>(len))) {
    throw ParseError("checkpoint '" + path + "' is truncated");
  }
  return s;
}

}  // namespace

void save_checkpoint(const std::string& path, const Model& model, const std::string& meta) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");

  out.write(kMagic, sizeof kMagic);
  put_str(out, meta);
  put_u64(out, model.coords);
  put_u64(out, model.future_frames);
  put_u64(out, model.spec.hidden_dim);
  put_u64(out, model.spec.num_blocks);
  put_f64(out, model.spec.dropout);
  put_u64(out, model.spec.per_coordinate_params ? 1 : 0);

  put_u64(out, model.spec.tim.branches.size());
  for (const auto& b : model.spec.tim.branches) {
    put_u64(out, b.subseq_len);
    put_u64(out, b.kernels.size());
    for (const auto& k : b.kernels) {
      put_u64(out, k.count);
      put_u64(out, k.size);
    }
  }

  const auto refs = param_refs(model.params);
  put_u64(out, refs.size());
  for (const auto& ref : refs) {
    put_str(out, ref.name);
    put_u64(out, ref.size);
    out.write(reinterpret_cast<const char*>(ref.data),
              static_cast<std::streamsize>(ref.size * sizeof(double)));
  }
  if (!out) throw IoError("write to '" + path + "' failed");
}

CheckpointData load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");

  char magic[8] = {};
  if (!in.read(magic, sizeof magic) || !std::equal(magic, magic + 8, kMagic)) {
    throw ParseError("'" + path + "' is not a checkpoint file (bad magic)");
  }

  CheckpointData data;
  data.meta = get_str(in, path);
  const std::uint64_t coords = get_u64(in, path);
  const std::uint64_t future = get_u64(in, path);

  ModelSpec spec;
  spec.hidden_dim = get_u64(in, path);
  spec.num_blocks = get_u64(in, path);
  spec.dropout = get_f64(in, path);
  spec.per_coordinate_params = get_u64(in, path) != 0;

  const std::uint64_t branches = get_u64(in, path);
  for (std::uint64_t b = 0; b < branches; ++b) {
    BranchSpec bs;
    bs.subseq_len = get_u64(in, path);
    const std::uint64_t kernels = get_u64(in, path);
    for (std::uint64_t k = 0; k < kernels; ++k) {
      KernelSpec ks;
      ks.count = get_u64(in, path);
      ks.size = get_u64(in, path);
      bs.kernels.push_back(ks);
    }
    spec.tim.branches.push_back(std::move(bs));
  }

  // Build the model skeleton, then overwrite every array with stored values.
  std::mt19937_64 scratch_rng(0);
  data.model = make_model(spec, coords, future, scratch_rng);

  const std::uint64_t arrays = get_u64(in, path);
  auto refs = param_refs(data.model.params);
  if (arrays != refs.size()) {
    throw ParseError("checkpoint '" + path + "' holds " + std::to_string(arrays) +
                     " arrays, model needs " + std::to_string(refs.size()));
  }
  for (auto& ref : refs) {
    const std::string name = get_str(in, path);
    const std::uint64_t size = get_u64(in, path);
    if (name != ref.name || size != ref.size) {
      throw ParseError("checkpoint '" + path + "' array '" + name + "' (" +
                       std::to_string(size) + " values) does not match expected '" + ref.name +
                       "' (" + std::to_string(ref.size) + ")");
    }
    if (!in.read(reinterpret_cast<char*>(ref.data),
                 static_cast<std::streamsize>(ref.size * sizeof(double)))) {
      throw ParseError("checkpoint '" + path + "' is truncated");
    }
  }
  return data;
}

}  // namespace motion
