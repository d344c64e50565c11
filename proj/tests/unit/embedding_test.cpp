#include <gtest/gtest.h>

#include <httplib.h>
#include <json.hpp>

#include <atomic>
#include <cmath>
#include <thread>

#include "spamgraph/embedding.hpp"
#include "spamgraph/error.hpp"
#include "spamgraph/rng.hpp"

namespace spamgraph {
namespace {

using nlohmann::json;

// Serves POST /embed on a background thread for the lifetime of the object.
class StubServer {
 public:
  explicit StubServer(httplib::Server::Handler handler) {
    server_.Post("/embed", std::move(handler));
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~StubServer() {
    server_.stop();
    thread_.join();
  }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/embed"; }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

RetryPolicy fast_retry() {
  RetryPolicy p;
  p.initial_backoff = std::chrono::milliseconds(1);
  p.timeout = std::chrono::seconds(5);
  return p;
}

TEST(HashEmbed, DeterministicAndUnitNorm) {
  const std::vector<std::string> texts{"Great product", "great   PRODUCT", "", "something else"};
  const auto m = hash_embed(texts, 32, 7);
  ASSERT_EQ(m.rows(), 4u);
  ASSERT_EQ(m.cols(), 32u);
  for (std::size_t c = 0; c < 32; ++c) EXPECT_EQ(m(0, c), m(1, c));
  for (std::size_t c = 0; c < 32; ++c) EXPECT_EQ(m(2, c), 0.0f);
  for (std::size_t r : {0u, 3u}) {
    double sq = 0;
    for (float v : m.row(r)) sq += double(v) * v;
    EXPECT_NEAR(std::sqrt(sq), 1.0, 1e-6);
  }
  EXPECT_EQ(hash_embed(texts, 32, 7), m);
  EXPECT_NE(hash_embed(texts, 32, 8), m);
}

TEST(HashEmbed, RejectsTinyDimension) {
  const std::vector<std::string> texts{"a"};
  EXPECT_THROW(hash_embed(texts, 4, 0), InvalidArgument);
}

TEST(HashEmbed, RepeatedTokenCountsAccumulate) {
  // "x x" is the same direction as "x" after normalization.
  const std::vector<std::string> texts{"x", "x x"};
  const auto m = hash_embed(texts, 16, 1);
  for (std::size_t c = 0; c < 16; ++c) EXPECT_FLOAT_EQ(m(0, c), m(1, c));
}

TEST(EmbeddingFile, SmallRoundTrip) {
  Rng rng(3);
  EmbeddingMatrix m(3, 4);
  for (auto& v : m.flat()) v = static_cast<float>(rng.normal());
  const auto bytes = encode_embeddings(m);
  EXPECT_EQ(bytes.size(), 4u + 16u + 48u);
  EXPECT_EQ(decode_embeddings(bytes), m);
  EXPECT_EQ(encode_embeddings(decode_embeddings(bytes)), bytes);
}

TEST(EmbeddingFile, LargeRoundTripThroughDisk) {
  Rng rng(4);
  EmbeddingMatrix m(100, 16);
  for (auto& v : m.flat()) v = static_cast<float>(rng.uniform(-3, 3));
  const auto path = std::filesystem::temp_directory_path() / "spamgraph_emb_test.bin";
  save_embeddings(path, m);
  EXPECT_EQ(encode_embeddings(load_embeddings(path)), encode_embeddings(m));
  std::filesystem::remove(path);
}

TEST(EmbeddingFile, TruncatedPayload) {
  EmbeddingMatrix m(2, 3, 1.0f);
  auto bytes = encode_embeddings(m);
  bytes.resize(bytes.size() - 12);  // one row missing
  try {
    decode_embeddings(bytes);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("truncated"), std::string::npos);
  }
}

TEST(EmbeddingFile, BadMagicAndNaN) {
  EmbeddingMatrix m(2, 2, 0.5f);
  auto bad = encode_embeddings(m);
  bad[3] = '2';
  EXPECT_THROW(decode_embeddings(bad), FormatError);
  m(1, 0) = std::nanf("");
  EXPECT_THROW(decode_embeddings(encode_embeddings(m)), NumericError);
}

TEST(FetchEmbeddings, NoTextsNoRequest) {
  EmbeddingServiceConfig cfg;
  cfg.endpoint = "http://127.0.0.1:1/never";
  const auto m = fetch_embeddings(cfg, {});
  EXPECT_EQ(m.rows(), 0u);
}

TEST(FetchEmbeddings, RowsComeBackInOrderAcrossBatches) {
  std::atomic<int> calls{0};
  StubServer server([&](const httplib::Request& req, httplib::Response& res) {
    ++calls;
    const auto body = json::parse(req.body);
    json vectors = json::array();
    for (const auto& t : body.at("texts")) {
      const auto id = std::stoi(t.get<std::string>().substr(4));
      vectors.push_back({id, 1.0, 2.0, 3.0});
    }
    res.set_content(json{{"vectors", vectors}}.dump(), "application/json");
  });
  EmbeddingServiceConfig cfg;
  cfg.endpoint = server.url();
  cfg.batch_size = 2;
  cfg.max_concurrency = 2;
  cfg.retry = fast_retry();
  const std::vector<std::string> texts{"text0", "text1", "text2", "text3", "text4"};
  const auto m = fetch_embeddings(cfg, texts);
  ASSERT_EQ(m.rows(), 5u);
  ASSERT_EQ(m.cols(), 4u);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_EQ(m(i, 0), static_cast<float>(i));
  EXPECT_EQ(calls.load(), 3);
}

TEST(FetchEmbeddings, SendsBearerToken) {
  std::string seen;
  StubServer server([&](const httplib::Request& req, httplib::Response& res) {
    seen = req.get_header_value("Authorization");
    res.set_content(R"({"vectors":[[1,2,3,4]]})", "application/json");
  });
  EmbeddingServiceConfig cfg;
  cfg.endpoint = server.url();
  cfg.api_key = "secret";
  cfg.retry = fast_retry();
  const std::vector<std::string> texts{"only"};
  fetch_embeddings(cfg, texts);
  EXPECT_EQ(seen, "Bearer secret");
}

TEST(FetchEmbeddings, DimensionMismatchAcrossBatches) {
  std::atomic<int> calls{0};
  StubServer server([&](const httplib::Request&, httplib::Response& res) {
    const int k = calls++;
    res.set_content(k == 0 ? R"({"vectors":[[1,2,3,4]]})" : R"({"vectors":[[1,2,3,4,5]]})",
                    "application/json");
  });
  EmbeddingServiceConfig cfg;
  cfg.endpoint = server.url();
  cfg.batch_size = 1;
  cfg.retry = fast_retry();
  const std::vector<std::string> texts{"a", "b"};
  try {
    fetch_embeddings(cfg, texts);
    FAIL();
  } catch (const ServiceError& e) {
    EXPECT_NE(std::string(e.what()).find("dimension"), std::string::npos) << e.what();
  }
}

TEST(FetchEmbeddings, RetriesTransientFailures) {
  std::atomic<int> calls{0};
  StubServer server([&](const httplib::Request&, httplib::Response& res) {
    if (calls++ < 2) {
      res.status = 503;
      return;
    }
    res.set_content(R"({"vectors":[[1,2,3,4]]})", "application/json");
  });
  EmbeddingServiceConfig cfg;
  cfg.endpoint = server.url();
  cfg.retry = fast_retry();
  const std::vector<std::string> texts{"a"};
  EXPECT_EQ(fetch_embeddings(cfg, texts).rows(), 1u);
  EXPECT_EQ(calls.load(), 3);
}

TEST(FetchEmbeddings, GivesUpAfterMaxAttempts) {
  std::atomic<int> calls{0};
  StubServer server([&](const httplib::Request&, httplib::Response& res) {
    ++calls;
    res.status = 500;
  });
  EmbeddingServiceConfig cfg;
  cfg.endpoint = server.url();
  cfg.retry = fast_retry();
  const std::vector<std::string> texts{"a"};
  EXPECT_THROW(fetch_embeddings(cfg, texts), ServiceError);
  EXPECT_EQ(calls.load(), 3);
}

TEST(FetchEmbeddings, ClientErrorsAreNotRetried) {
  std::atomic<int> calls{0};
  StubServer server([&](const httplib::Request&, httplib::Response& res) {
    ++calls;
    res.status = 401;
  });
  EmbeddingServiceConfig cfg;
  cfg.endpoint = server.url();
  cfg.retry = fast_retry();
  const std::vector<std::string> texts{"a"};
  EXPECT_THROW(fetch_embeddings(cfg, texts), ServiceError);
  EXPECT_EQ(calls.load(), 1);
}

TEST(FetchEmbeddings, WrongVectorCountIsAnError) {
  StubServer server([&](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"vectors":[[1,2]]})", "application/json");
  });
  EmbeddingServiceConfig cfg;
  cfg.endpoint = server.url();
  cfg.retry = fast_retry();
  const std::vector<std::string> texts{"a", "b"};
  EXPECT_THROW(fetch_embeddings(cfg, texts), ServiceError);
}

TEST(ParseUrl, Components) {
  const auto u = parse_url("https://api.example.com/v1/embed");
  EXPECT_EQ(u.scheme, "https");
  EXPECT_EQ(u.host, "api.example.com");
  EXPECT_EQ(u.port, 443);
  EXPECT_EQ(u.path, "/v1/embed");
  const auto v = parse_url("http://localhost:8080");
  EXPECT_EQ(v.port, 8080);
  EXPECT_EQ(v.path, "/");
  EXPECT_THROW(parse_url("ftp://x"), InvalidArgument);
}

}  // namespace
}  // namespace spamgraph
