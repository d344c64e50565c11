#include "spamgraph/http.hpp"

#include <thread>

#include <httplib.h>

#include "spamgraph/error.hpp"

namespace spamgraph {

ParsedUrl parse_url(const std::string& url) {
  ParsedUrl out;
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw InvalidArgument("url without scheme: " + url);
  out.scheme = url.substr(0, scheme_end);
  if (out.scheme != "http" && out.scheme != "https") {
    throw InvalidArgument("unsupported url scheme '" + out.scheme + "'");
  }
  const auto rest = url.substr(scheme_end + 3);
  const auto slash = rest.find('/');
  const auto authority = rest.substr(0, slash);
  out.path = slash == std::string::npos ? "/" : rest.substr(slash);
  const auto colon = authority.rfind(':');
  if (colon != std::string::npos && authority.find(']') == std::string::npos) {
    out.host = authority.substr(0, colon);
    try {
      out.port = std::stoi(authority.substr(colon + 1));
    } catch (const std::exception&) {
      throw InvalidArgument("bad port in url: " + url);
    }
  } else {
    out.host = authority;
    out.port = out.scheme == "https" ? 443 : 80;
  }
  if (out.host.empty()) throw InvalidArgument("url without host: " + url);
  return out;
}

namespace {

bool is_transient(int status) { return status == 429 || status >= 500; }

}  // namespace

std::string post_json_with_retry(const std::string& url, const std::string& body,
                                 const std::string& bearer_token, const RetryPolicy& policy) {
  const auto target = parse_url(url);
  httplib::Client client(target.scheme + "://" + target.host + ":" + std::to_string(target.port));
  client.set_connection_timeout(policy.timeout);
  client.set_read_timeout(policy.timeout);
  client.set_write_timeout(policy.timeout);

  httplib::Headers headers;
  if (!bearer_token.empty()) headers.emplace("Authorization", "Bearer " + bearer_token);

  auto backoff = policy.initial_backoff;
  std::string last_error = "no attempt made";
  const int attempts = std::max(1, policy.max_attempts);
  for (int attempt = 1; attempt <= attempts; ++attempt) {
    auto result = client.Post(target.path, headers, body, "application/json");
    if (!result) {
      last_error = "transport error: " + httplib::to_string(result.error());
    } else if (result->status >= 200 && result->status < 300) {
      return result->body;
    } else if (!is_transient(result->status)) {
      throw ServiceError("POST " + url + " failed with HTTP " + std::to_string(result->status) +
                         ": " + result->body.substr(0, 200));
    } else {
      last_error = "HTTP " + std::to_string(result->status);
    }
    if (attempt < attempts) {
      std::this_thread::sleep_for(backoff);
      backoff = std::chrono::milliseconds(
          static_cast<long long>(static_cast<double>(backoff.count()) * policy.backoff_multiplier));
    }
  }
  throw ServiceError("POST " + url + " failed after " + std::to_string(attempts) +
                     " attempts: " + last_error);
}

}  // namespace spamgraph
