#include "spamgraph/embedding.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <future>

#include <json.hpp>

#include "binary_io.hpp"
#include "spamgraph/error.hpp"
#include "spamgraph/rng.hpp"

namespace spamgraph {

void require_finite_rows(const Matrix<float>& m, const std::string& what) {
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (float v : m.row(i)) {
      if (!std::isfinite(v)) {
        throw NumericError(what + ": non-finite value in row " + std::to_string(i));
      }
    }
  }
}

std::vector<std::uint8_t> encode_embeddings(const EmbeddingMatrix& m) {
  detail::ByteWriter w;
  w.bytes("EMB1");
  w.u64(m.rows());
  w.u64(m.cols());
  w.buffer().reserve(20 + m.size() * 4);
  for (float v : m.flat()) w.f32(v);
  return std::move(w.buffer());
}

EmbeddingMatrix decode_embeddings(std::span<const std::uint8_t> bytes) {
  detail::ByteReader r(bytes, "embedding file");
  if (r.bytes(4) != "EMB1") throw FormatError("embedding file: bad magic (expected EMB1)");
  const auto n = r.u64();
  const auto d = r.u64();
  if (d != 0 && n > r.remaining() / 4 / d) {
    throw FormatError("embedding file: truncated payload (header says " + std::to_string(n) +
                      "x" + std::to_string(d) + ", file holds " +
                      std::to_string(r.remaining() / 4) + " floats)");
  }
  EmbeddingMatrix m(n, d);
  for (auto& v : m.flat()) v = r.f32();
  if (r.remaining() != 0) throw FormatError("embedding file: trailing bytes after payload");
  require_finite_rows(m, "embedding file");
  return m;
}

void save_embeddings(const std::filesystem::path& path, const EmbeddingMatrix& m) {
  detail::write_file_bytes(path, encode_embeddings(m));
}

EmbeddingMatrix load_embeddings(const std::filesystem::path& path) {
  return decode_embeddings(detail::read_file_bytes(path));
}

namespace {

std::uint64_t hash_token(const std::string& token, std::uint64_t seed) {
  // FNV-1a over the bytes, then a SplitMix finalizer keyed by the seed.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : token) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return mix64(h ^ mix64(seed));
}

}  // namespace

EmbeddingMatrix hash_embed(std::span<const std::string> texts, std::size_t dim,
                           std::uint64_t seed) {
  if (dim < 8) throw InvalidArgument("hash embedding dimension must be at least 8");
  EmbeddingMatrix out(texts.size(), dim);
  std::vector<double> acc(dim);
  for (std::size_t i = 0; i < texts.size(); ++i) {
    std::fill(acc.begin(), acc.end(), 0.0);
    std::string token;
    auto flush = [&] {
      if (token.empty()) return;
      const auto h = hash_token(token, seed);
      const double sign = (h >> 63) ? -1.0 : 1.0;
      acc[(h & 0x7fffffffffffffffULL) % dim] += sign;
      token.clear();
    };
    for (unsigned char c : texts[i]) {
      if (std::isspace(c)) {
        flush();
      } else {
        token.push_back(static_cast<char>(std::tolower(c)));
      }
    }
    flush();
    double norm = 0.0;
    for (double v : acc) norm += v * v;
    norm = std::sqrt(norm);
    if (norm > 0.0) {
      for (std::size_t k = 0; k < dim; ++k) out(i, k) = static_cast<float>(acc[k] / norm);
    }
  }
  return out;
}

EmbeddingServiceConfig embedding_config_from_env(std::string endpoint) {
  EmbeddingServiceConfig config;
  config.endpoint = std::move(endpoint);
  if (const char* key = std::getenv("EMBED_API_KEY")) config.api_key = key;
  return config;
}

namespace {

std::vector<std::vector<float>> fetch_batch(const EmbeddingServiceConfig& config,
                                            std::span<const std::string> texts) {
  nlohmann::json request;
  request["texts"] = std::vector<std::string>(texts.begin(), texts.end());
  const auto body = post_json_with_retry(config.endpoint, request.dump(), config.api_key,
                                         config.retry);
  std::vector<std::vector<float>> vectors;
  try {
    const auto reply = nlohmann::json::parse(body);
    vectors = reply.at("vectors").get<std::vector<std::vector<float>>>();
  } catch (const nlohmann::json::exception& e) {
    throw ServiceError(std::string("embedding service returned malformed JSON: ") + e.what());
  }
  if (vectors.size() != texts.size()) {
    throw ServiceError("embedding service returned " + std::to_string(vectors.size()) +
                       " vectors for " + std::to_string(texts.size()) + " texts");
  }
  return vectors;
}

}  // namespace

EmbeddingMatrix fetch_embeddings(const EmbeddingServiceConfig& config,
                                 std::span<const std::string> texts) {
  if (texts.empty()) return EmbeddingMatrix(0, 0);
  if (config.batch_size == 0) throw InvalidArgument("embedding batch size must be positive");
  const std::size_t n_batches = (texts.size() + config.batch_size - 1) / config.batch_size;
  const std::size_t concurrency = std::max<std::size_t>(1, config.max_concurrency);

  std::vector<std::vector<std::vector<float>>> batches(n_batches);
  for (std::size_t first = 0; first < n_batches; first += concurrency) {
    const std::size_t last = std::min(n_batches, first + concurrency);
    std::vector<std::future<std::vector<std::vector<float>>>> pending;
    for (std::size_t b = first; b < last; ++b) {
      const auto begin = b * config.batch_size;
      const auto count = std::min(config.batch_size, texts.size() - begin);
      pending.push_back(std::async(std::launch::async, fetch_batch, std::cref(config),
                                   texts.subspan(begin, count)));
    }
    for (std::size_t b = first; b < last; ++b) batches[b] = pending[b - first].get();
  }

  const std::size_t dim = batches.front().front().size();
  EmbeddingMatrix out(texts.size(), dim);
  std::size_t row = 0;
  for (const auto& batch : batches) {
    for (const auto& vec : batch) {
      if (vec.size() != dim) {
        throw ServiceError("embedding dimension mismatch: expected " + std::to_string(dim) +
                           ", got " + std::to_string(vec.size()) + " at row " +
                           std::to_string(row));
      }
      std::copy(vec.begin(), vec.end(), out.row(row).begin());
      ++row;
    }
  }
  require_finite_rows(out, "embedding service");
  return out;
}

}  // namespace spamgraph
