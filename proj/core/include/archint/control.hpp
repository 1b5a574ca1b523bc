#pragma once

#include <atomic>
#include <condition_variable>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "archint/harvest.hpp"
#include "archint/ingest.hpp"
#include "archint/store.hpp"
#include "archint/transform.hpp"

namespace archint {

struct AuditEntry {
    text::Instant at{};
    std::string actor;
    std::string action;
    DatasetStatus from = DatasetStatus::draft;
    DatasetStatus to = DatasetStatus::draft;
};

struct Dataset {
    std::string id;
    std::string repository_id;
    FetchConfig fetch;
    TransformPipeline pipeline;
    std::optional<std::string> parent_scope;
    IngestOptions ingest_options;
    DatasetStatus status = DatasetStatus::draft;
    std::vector<AuditEntry> audit;
    std::optional<std::string> last_error;
    /// Definition as submitted, with referenced files inlined.
    nlohmann::json definition;

    /// Parses and type-checks a definition. Relative paths (mapping_file,
    /// table_file, upload_dir) resolve against `base_dir`. Throws
    /// Error{"invalid-definition"} whose details list every field error.
    static Dataset from_definition(const nlohmann::json& definition, const std::filesystem::path& base_dir = {});

    nlohmann::json to_json() const;
};

/// Persisted dataset lifecycle over one store. Status order:
/// draft -> fetched -> transformed -> staged -> approved -> promoted, with
/// error reachable from every step and redefinition resetting to draft.
/// Every transition appends exactly one audit entry.
class Workbench {
public:
    Workbench(Store& store, std::filesystem::path data_dir);

    Store& store() noexcept { return store_; }
    const std::filesystem::path& data_dir() const noexcept { return data_dir_; }

    Dataset create_dataset(const nlohmann::json& definition, const std::filesystem::path& base_dir = {},
                           const std::string& actor = "system");
    /// Replaces the definition and resets the status to draft.
    Dataset update_dataset(const std::string& id, const nlohmann::json& definition,
                           const std::filesystem::path& base_dir = {}, const std::string& actor = "system");
    Dataset get(const std::string& id) const;
    std::vector<Dataset> list() const;

    /// Fetches (incrementally when an earlier FileSet exists) and persists
    /// the FileSet. Allowed from any status.
    FileSet fetch(const std::string& id, const std::string& actor = "system");
    /// Needs a fetched FileSet. On failure the status becomes error and the
    /// FileSet is kept.
    PipelineResult transform(const std::string& id, const std::string& actor = "system");
    /// Needs status transformed. Dry runs leave the status unchanged.
    IngestReport ingest(const std::string& id, std::optional<IngestOptions> options = {},
                        const std::string& actor = "system");
    IngestReport cleanup(const std::string& id, const IngestOptions& options, const std::string& actor = "system");
    /// staged -> approved, recording the approver.
    Dataset approve(const std::string& id, const std::string& approver);
    /// approved -> promoted. On failure the status stays approved.
    PromotionReport promote(const std::string& id, const std::string& actor = "system");
    PromotionReport approve_and_promote(const std::string& id, const std::string& approver);

    /// Runs the pipeline on the first `limit` fetched files without touching
    /// any store. `mapping_override` replaces the first xml-mapping table.
    PreviewResult preview(const std::string& id, std::size_t limit,
                          const std::optional<std::string>& mapping_override = {});
    /// Staging vs production for the dataset's units.
    nlohmann::json diff(const std::string& id) const;

    /// Fetch, transform and ingest each dataset in its own transaction.
    BatchResult batch(const std::vector<std::string>& ids, const IngestOptions& options,
                      const std::string& actor = "system");

    /// Writes definition, pipeline, mapping tables and concordances with a
    /// README listing them.
    void export_resources(const std::string& id, const std::filesystem::path& out_dir) const;

    std::optional<FileSet> fileset(const std::string& id) const;
    std::optional<std::vector<Record>> transformed_records(const std::string& id) const;

    StageCache& cache() noexcept { return cache_; }

private:
    std::filesystem::path dataset_dir(const std::string& id) const;
    void save(const Dataset& d) const;
    void load_all();
    Dataset& require(const std::string& id);
    void transition(Dataset& d, DatasetStatus to, const std::string& actor, const std::string& action);
    void fail(const std::string& id, const std::string& actor, const std::string& action, const std::string& message);

    Store& store_;
    std::filesystem::path data_dir_;
    mutable std::mutex mutex_;
    std::map<std::string, Dataset> datasets_;
    StageCache cache_;
};

enum class JobStatus { queued, running, done, failed };
std::string_view to_string(JobStatus s);

struct Job {
    std::string id;
    std::string dataset_id;
    std::string kind;
    JobStatus status = JobStatus::queued;
    nlohmann::json result;
    nlohmann::json error;
    nlohmann::json to_json() const;
};

/// Background execution with at most one active job per dataset.
class JobRunner {
public:
    JobRunner() = default;
    ~JobRunner();
    JobRunner(const JobRunner&) = delete;
    JobRunner& operator=(const JobRunner&) = delete;

    /// Throws Error{"job-conflict"} while another job of the dataset is active.
    std::string submit(const std::string& dataset_id, const std::string& kind, std::function<nlohmann::json()> work);
    std::optional<Job> get(const std::string& id) const;
    /// Blocks until the job finishes.
    Job wait(const std::string& id) const;

private:
    mutable std::mutex mutex_;
    mutable std::condition_variable changed_;
    std::map<std::string, Job> jobs_;
    std::map<std::string, std::string> active_;  // dataset -> job
    std::vector<std::thread> threads_;
    std::size_t next_id_ = 1;
};

/// HTTP+JSON front end of a Workbench.
class Service {
public:
    explicit Service(Workbench& workbench);
    ~Service();
    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    /// Binds and serves in a background thread; returns the bound port.
    int start(const std::string& host, int port);
    /// Serves on the calling thread until stop().
    void run(const std::string& host, int port);
    void stop();

    JobRunner& jobs() noexcept { return jobs_; }

private:
    struct Impl;
    Workbench& workbench_;
    JobRunner jobs_;
    std::unique_ptr<Impl> impl_;
};

/// Loads countries, repositories, vocabularies, concepts, agents and links
/// from a JSON object with those array members into one space.
void import_entities(Store& store, const nlohmann::json& entities, SpaceName space = SpaceName::staging);

/// HTTP status for an Error code.
int http_status_for(const std::string& code);
/// CLI exit code for an Error code: 2 for validation failures, else 1.
int exit_code_for(const std::string& code);

struct Config {
    std::filesystem::path data_dir = "archint-data";
    std::string host = "127.0.0.1";
    int port = 8080;
    std::size_t snapshot_every = 64;
};

/// Defaults < config file < ARCHINT_* environment < `flags` (JSON object of
/// explicitly given command-line values).
Config load_config(const std::optional<std::filesystem::path>& file, const nlohmann::json& flags = nlohmann::json::object());

}  // namespace archint
