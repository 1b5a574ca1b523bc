#include "archint/http.hpp"

#include <httplib.h>

#include <atomic>
#include <condition_variable>
#include <mutex>
#include <thread>
#include <algorithm>

#include "archint/error.hpp"
#include "archint/text.hpp"

namespace archint {

ParsedUrl parse_url(const std::string& url) {
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw Error("bad-url", "not an absolute URL: " + url);
    auto path_start = url.find_first_of("/?", scheme_end + 3);
    ParsedUrl out;
    if (path_start == std::string::npos) {
        out.origin = url;
        out.target = "/";
    } else {
        out.origin = url.substr(0, path_start);
        out.target = url.substr(path_start);
        if (out.target[0] == '?') out.target = "/" + out.target;
    }
    return out;
}

std::string url_basename(const std::string& url) {
    std::string path = parse_url(url).target;
    if (auto q = path.find_first_of("?#"); q != std::string::npos) path.resize(q);
    auto slash = path.rfind('/');
    return text::percent_decode(slash == std::string::npos ? path : path.substr(slash + 1));
}

struct HttpClient::Impl {
    Politeness politeness;
    std::optional<std::string> bearer;
    std::mutex mutex;
    std::condition_variable slots;
    std::size_t in_flight = 0;
    std::chrono::steady_clock::time_point next_start{};
    std::atomic<std::size_t> sent{0};

    void acquire() {
        std::unique_lock lock(mutex);
        slots.wait(lock, [&] { return in_flight < std::max<std::size_t>(1, politeness.max_in_flight); });
        ++in_flight;
        auto now = std::chrono::steady_clock::now();
        auto start = std::max(now, next_start);
        next_start = start + politeness.min_delay;
        lock.unlock();
        if (start > now) std::this_thread::sleep_until(start);
    }

    void release() {
        {
            std::lock_guard lock(mutex);
            --in_flight;
        }
        slots.notify_one();
    }

    // One attempt; nullopt signals a transport failure.
    std::optional<HttpResponse> attempt(const std::string& url, std::string& failure) {
        ParsedUrl parsed = parse_url(url);
        httplib::Client client(parsed.origin);
        client.set_follow_location(true);
        auto secs = std::chrono::duration_cast<std::chrono::seconds>(politeness.timeout);
        auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(politeness.timeout - secs);
        client.set_connection_timeout(secs.count(), usecs.count());
        client.set_read_timeout(secs.count(), usecs.count());
        httplib::Headers headers{{"User-Agent", "archint-harvester/0.3"}};
        if (bearer) headers.emplace("Authorization", "Bearer " + *bearer);

        acquire();
        ++sent;
        auto result = client.Get(parsed.target, headers);
        release();

        if (!result) {
            failure = httplib::to_string(result.error());
            return std::nullopt;
        }
        HttpResponse response;
        response.status = result->status;
        response.body = std::move(result->body);
        std::string ct = result->get_header_value("Content-Type");
        if (auto semi = ct.find(';'); semi != std::string::npos) ct.resize(semi);
        response.media_type = text::to_lower(text::trim(ct));
        return response;
    }
};

HttpClient::HttpClient(Politeness politeness, std::optional<std::string> bearer_token)
    : impl_(std::make_unique<Impl>()) {
    impl_->politeness = politeness;
    impl_->bearer = std::move(bearer_token);
}

HttpClient::~HttpClient() = default;

std::size_t HttpClient::requests_sent() const { return impl_->sent.load(); }

HttpResponse HttpClient::get(const std::string& url) {
    std::string failure;
    for (unsigned attempt = 0;; ++attempt) {
        auto response = impl_->attempt(url, failure);
        bool retryable = !response || response->status == 429 || response->status >= 500;
        if (response && !retryable) {
            if (response->status >= 200 && response->status < 300) return std::move(*response);
            throw Error("http-error", "GET " + url + " returned HTTP " + std::to_string(response->status),
                        {{"url", url}, {"status", response->status}});
        }
        if (response) failure = "HTTP " + std::to_string(response->status);
        if (attempt >= impl_->politeness.retries)
            throw Error("transport-error",
                        "GET " + url + " failed after " + std::to_string(attempt + 1) + " attempt(s): " + failure,
                        {{"url", url}, {"attempts", attempt + 1}});
        std::this_thread::sleep_for(impl_->politeness.backoff_base * (1u << std::min(attempt, 16u)));
    }
}

std::vector<HttpClient::Outcome> HttpClient::get_all(const std::vector<std::string>& urls) {
    std::vector<Outcome> outcomes(urls.size());
    if (urls.empty()) return outcomes;
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < urls.size(); i = next++) {
            try {
                outcomes[i].response = get(urls[i]);
            } catch (const Error& e) {
                outcomes[i].error = e.what();
            }
        }
    };
    std::size_t n = std::clamp<std::size_t>(impl_->politeness.max_in_flight, 1, urls.size());
    std::vector<std::thread> workers;
    for (std::size_t i = 0; i < n; ++i) workers.emplace_back(worker);
    for (auto& w : workers) w.join();
    return outcomes;
}

}  // namespace archint
