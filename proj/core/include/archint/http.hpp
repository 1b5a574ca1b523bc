#pragma once

#include <chrono>
#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace archint {

/// Request pacing for one harvest job.
struct Politeness {
    std::size_t max_in_flight = 4;
    std::chrono::milliseconds min_delay{0};
    std::chrono::milliseconds timeout{30000};
    unsigned retries = 3;
    /// First retry waits this long; each further retry doubles it.
    std::chrono::milliseconds backoff_base{500};
};

struct HttpResponse {
    int status = 0;
    std::string body;
    /// Media type without parameters, lowercased; empty when not sent.
    std::string media_type;
};

struct ParsedUrl {
    std::string origin;  // scheme://host[:port]
    std::string target;  // path plus query, at least "/"
};
ParsedUrl parse_url(const std::string& url);

/// Final path segment, percent-decoded; empty for directory URLs.
std::string url_basename(const std::string& url);

/// Blocking GET client shared by every request of one job. Enforces the
/// in-flight cap and minimum spacing between request starts across threads,
/// retries transport failures, 429 and 5xx responses with exponential
/// backoff, and follows redirects.
class HttpClient {
public:
    explicit HttpClient(Politeness politeness, std::optional<std::string> bearer_token = {});
    ~HttpClient();
    HttpClient(const HttpClient&) = delete;
    HttpClient& operator=(const HttpClient&) = delete;

    /// Throws Error{"transport-error"} once retries are exhausted and
    /// Error{"http-error"} for other non-2xx statuses.
    HttpResponse get(const std::string& url);

    struct Outcome {
        std::optional<HttpResponse> response;
        std::string error;
    };
    /// Fetches every URL with up to max_in_flight worker threads. Results are
    /// returned in `urls` order whatever the completion order.
    std::vector<Outcome> get_all(const std::vector<std::string>& urls);

    std::size_t requests_sent() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace archint
