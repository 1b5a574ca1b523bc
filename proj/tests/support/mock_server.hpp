#pragma once

#include <atomic>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>

namespace archint::testing {

/// Loopback HTTP server on an ephemeral port. Counts requests and the peak
/// number of concurrently handled requests.
class MockServer {
public:
    MockServer();
    virtual ~MockServer();
    MockServer(const MockServer&) = delete;
    MockServer& operator=(const MockServer&) = delete;

    std::string base_url() const { return "http://127.0.0.1:" + std::to_string(port_); }
    std::size_t requests() const { return requests_.load(); }
    std::size_t peak_in_flight() const { return peak_.load(); }
    std::vector<std::string> request_log() const;
    void reset_counters();

protected:
    /// Binds and starts serving; subclasses call this at the end of their
    /// constructor after registering state.
    void start();
    void stop();
    virtual void handle(const httplib::Request& req, httplib::Response& res) = 0;

private:
    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
    std::atomic<std::size_t> requests_{0};
    std::atomic<std::size_t> in_flight_{0};
    std::atomic<std::size_t> peak_{0};
    mutable std::mutex log_mutex_;
    std::vector<std::string> log_;
};

struct OaiRecord {
    std::string identifier;
    /// Metadata payload element, serialized XML.
    std::string payload;
    std::string datestamp = "2024-01-01T00:00:00Z";
    bool deleted = false;
};

/// OAI-PMH 2.0 repository serving ListRecords pages of `page_size` records
/// with resumption tokens, and Identify.
class OaiMock : public MockServer {
public:
    OaiMock(std::vector<OaiRecord> records, std::size_t page_size, std::string granularity = "YYYY-MM-DDThh:mm:ssZ");
    ~OaiMock() override;

    std::string endpoint() const { return base_url() + "/oai"; }
    void set_records(std::vector<OaiRecord> records);
    /// Answer every ListRecords request with this OAI error code.
    void set_error(std::string code);
    /// Answer with a resumption token that never changes.
    void set_repeat_token(bool on) { repeat_token_ = on; }

protected:
    void handle(const httplib::Request& req, httplib::Response& res) override;

private:
    std::string page(const std::vector<const OaiRecord*>& list, std::size_t offset, const std::string& filter_key);

    std::mutex mutex_;
    std::vector<OaiRecord> records_;
    std::size_t page_size_;
    std::string granularity_;
    std::string error_;
    bool repeat_token_ = false;
    std::map<std::string, std::pair<std::string, std::size_t>> tokens_;  // token -> (filter key, offset)
};

/// Static documents per path, with scripted failures and delays.
class StaticMock : public MockServer {
public:
    StaticMock();
    ~StaticMock() override;

    std::string url(const std::string& path) const { return base_url() + path; }
    void put(const std::string& path, std::string body, std::string media_type = "application/xml");
    void remove(const std::string& path);
    /// The next `times` requests for `path` answer `status`; negative times means always.
    void fail(const std::string& path, int status, int times = -1);
    void set_delay(std::chrono::milliseconds delay) { delay_ms_ = delay.count(); }
    std::size_t hits(const std::string& path) const;

protected:
    void handle(const httplib::Request& req, httplib::Response& res) override;

private:
    struct Doc {
        std::string body;
        std::string media_type;
    };
    struct Failure {
        int status;
        int remaining;
    };
    mutable std::mutex mutex_;
    std::map<std::string, Doc> docs_;
    std::map<std::string, Failure> failures_;
    std::map<std::string, std::size_t> hits_;
    std::atomic<long long> delay_ms_{0};
};

/// ResourceSync 1.1 source: capability list, resource list and change list
/// over a set of resources held by a StaticMock.
class ResourceSyncMock {
public:
    struct Change {
        std::string path;
        std::string change;  // created | updated | deleted
        std::string datetime;
    };

    ResourceSyncMock();

    std::string capability_list_url() const { return server.url("/capabilitylist.xml"); }
    std::string resource_list_url() const { return server.url("/resourcelist.xml"); }

    /// Adds or replaces a resource and republishes the lists.
    void set_resource(const std::string& path, const std::string& content);
    void remove_resource(const std::string& path);
    void add_change(const std::string& path, const std::string& change, const std::string& datetime);
    /// Advertise a wrong sha-256 for `path` from now on.
    void corrupt_hash(const std::string& path);
    void set_change_list(bool enabled);
    void publish();

    StaticMock server;

private:
    std::map<std::string, std::string> resources_;
    std::vector<Change> changes_;
    std::map<std::string, bool> corrupted_;
    bool change_list_ = true;
};

}  // namespace archint::testing
