#pragma once

#include <chrono>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace spamgraph {

struct RetryPolicy {
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{200};
  double backoff_multiplier = 2.0;
  std::chrono::seconds timeout{60};
};

struct HttpResponse {
  int status = 0;
  std::string body;
};

// POSTs a JSON body to `url` (http:// or https://), retrying transport
// failures, 429 and 5xx responses with exponential backoff. Other 4xx
// responses fail immediately. Returns the body of the first 2xx response;
// throws ServiceError once attempts are exhausted.
std::string post_json_with_retry(const std::string& url, const std::string& body,
                                 const std::string& bearer_token, const RetryPolicy& policy);

struct ParsedUrl {
  std::string scheme;  // "http" or "https"
  std::string host;
  int port = 0;
  std::string path;  // always starts with '/'
};
ParsedUrl parse_url(const std::string& url);

}  // namespace spamgraph
