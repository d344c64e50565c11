#include "spamgraph/checkpoint.hpp"

#include "binary_io.hpp"
#include "spamgraph/error.hpp"

namespace spamgraph {

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& checkpoint) {
  detail::ByteWriter w;
  w.bytes("FSQ1");
  const auto config = model_config_to_json(checkpoint.config);
  w.u64(config.size());
  w.bytes(config);
  std::uint64_t count = 0;
  visit_params(checkpoint.params, [&](const std::string&, const Matrix<float>&) { ++count; });
  w.u64(count);
  visit_params(checkpoint.params, [&](const std::string& name, const Matrix<float>& m) {
    w.u32(static_cast<std::uint32_t>(name.size()));
    w.bytes(name);
    w.u32(2);
    w.u64(m.rows());
    w.u64(m.cols());
    for (float v : m.flat()) w.f32(v);
  });
  return std::move(w.buffer());
}

namespace {

// Parameter count implied by a config, computed without allocating.
long double implied_floats(const ModelConfig& c) {
  const long double e = c.emb_dim;
  const long double in = c.input_width();
  const long double dl = c.layer_width;
  long double total = 3 * e + 3 * e * e + 1;
  for (std::size_t l = 0; l < c.layers && c.use_graph; ++l) {
    const long double d_in = l == 0 ? in : dl;
    total += 3 * d_in * dl + d_in * dl + 3 * dl * dl;
  }
  total += static_cast<long double>(c.mlp_input_width()) * dl + 2 * dl + 1;
  return total;
}

}  // namespace

Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
  detail::ByteReader r(bytes, "checkpoint");
  if (r.bytes(4) != "FSQ1") throw FormatError("checkpoint: bad magic (expected FSQ1)");
  const auto config_length = r.u64();
  r.need(config_length);
  Checkpoint cp;
  cp.config = model_config_from_json(std::string(r.bytes(config_length)));
  if (implied_floats(cp.config) > static_cast<long double>(r.remaining()) / 4) {
    throw FormatError("checkpoint: truncated payload for the stored config");
  }
  cp.params = shaped_params<float>(cp.config);

  const auto count = r.u64();
  std::uint64_t expected = 0;
  visit_params(cp.params, [&](const std::string&, const Matrix<float>&) { ++expected; });
  if (count != expected) {
    throw FormatError("checkpoint: holds " + std::to_string(count) + " tensors, config implies " +
                      std::to_string(expected));
  }
  visit_params(cp.params, [&](const std::string& name, Matrix<float>& m) {
    const auto name_length = r.u32();
    const auto stored = r.bytes(name_length);
    if (stored != name) {
      throw FormatError("checkpoint: expected tensor '" + name + "', found '" +
                        std::string(stored) + "'");
    }
    const auto rank = r.u32();
    if (rank != 2) throw FormatError("checkpoint: tensor '" + name + "' has rank " + std::to_string(rank));
    const auto rows = r.u64();
    const auto cols = r.u64();
    if (rows != m.rows() || cols != m.cols()) {
      throw FormatError("checkpoint: tensor '" + name + "' has shape " + std::to_string(rows) +
                        "x" + std::to_string(cols) + ", expected " + shape_string(m));
    }
    r.need(m.size() * 4);
    for (auto& v : m.flat()) v = r.f32();
    if (!all_finite(m)) throw FormatError("checkpoint: tensor '" + name + "' is not finite");
  });
  if (r.remaining() != 0) throw FormatError("checkpoint: trailing bytes");
  return cp;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  detail::write_file_bytes(path, encode_checkpoint(checkpoint));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(detail::read_file_bytes(path));
}

}  // namespace spamgraph
