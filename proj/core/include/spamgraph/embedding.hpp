#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "spamgraph/http.hpp"
#include "spamgraph/tensor.hpp"

namespace spamgraph {

// Node-by-dimension text embeddings (X) or engineered features (F). Both use
// the same container and file format.
using EmbeddingMatrix = Matrix<float>;
using FeatureMatrix = Matrix<float>;

// Throws NumericError naming the first row that holds NaN/Inf.
void require_finite_rows(const Matrix<float>& m, const std::string& what);

// EMB1 format: magic "EMB1", u64 n, u64 d, then n*d float32 LE row-major.
std::vector<std::uint8_t> encode_embeddings(const EmbeddingMatrix& m);
EmbeddingMatrix decode_embeddings(std::span<const std::uint8_t> bytes);
void save_embeddings(const std::filesystem::path& path, const EmbeddingMatrix& m);
EmbeddingMatrix load_embeddings(const std::filesystem::path& path);

// Feature hashing: lowercase, split on whitespace, hash each token with the
// seed into a bucket with a +-1 sign, accumulate, L2-normalize the row.
EmbeddingMatrix hash_embed(std::span<const std::string> texts, std::size_t dim,
                           std::uint64_t seed);

struct EmbeddingServiceConfig {
  std::string endpoint;  // full URL accepting POST {"texts": [...]}
  std::string api_key;   // sent as a bearer token when nonempty
  std::size_t batch_size = 32;
  std::size_t max_concurrency = 1;
  RetryPolicy retry;
};

// Reads EMBED_API_KEY into config.api_key when set.
EmbeddingServiceConfig embedding_config_from_env(std::string endpoint);

// Rows come back in input order. Batches are sent up to max_concurrency at a
// time; every batch must return one vector per text and all vectors must
// share one dimension.
EmbeddingMatrix fetch_embeddings(const EmbeddingServiceConfig& config,
                                 std::span<const std::string> texts);

}  // namespace spamgraph
