#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "archint/store.hpp"

namespace archint {

struct IngestOptions {
    bool dry_run = false;
    bool allow_deletions = false;
    /// Batch policy: keep going after a failed dataset.
    bool continue_on_error = false;
    /// Drop invalid records with a warning instead of aborting.
    bool lenient = false;
};

/// Where a dataset's records are attached.
struct IngestTarget {
    std::string dataset_id;
    std::string repository_id;
    std::optional<std::string> parent_scope;
};

struct IngestReport {
    std::string dataset_id;
    std::size_t created = 0;
    std::size_t updated = 0;
    std::size_t unchanged = 0;
    std::size_t deleted = 0;
    std::size_t skipped = 0;
    std::vector<UnitChange> actions;
    std::vector<std::string> warnings;
    /// Ids in the previous manifest that this import did not produce.
    std::vector<std::string> stale;
    /// Units of this import with their content digests.
    SyncManifest current;
    std::string manifest_digest_before;
    std::string manifest_digest_after;
    bool committed = false;
};
nlohmann::json to_json(const IngestReport& r);

/// SHA-256 over the sorted manifest entries; empty-manifest digest when null.
std::string manifest_digest(const SyncManifest* manifest);

/// Upserts `records` into staging in one transaction and records the new
/// manifest (this import's units plus earlier units that still exist, so
/// stale ones stay visible to cleanup). With allow_deletions, stale units are
/// removed in the same transaction. Strict validation failures roll back and
/// rethrow Error{"validation-failure"}; dry_run reports without committing.
IngestReport ingest_dataset(Store& store, const IngestTarget& target, const std::vector<Record>& records,
                            const IngestOptions& options = {});

/// Stale set = stored manifest ids - `current` ids. Without allow_deletions
/// (or with dry_run) only lists them. Otherwise deletes them deepest first,
/// retaining with a warning any unit that is a link target or keeps a child
/// that is not being deleted. Throws Error{"missing-manifest"}.
IngestReport cleanup_stale(Store& store, const std::string& dataset_id, const SyncManifest& current,
                           const IngestOptions& options = {});

enum class BatchStatus { committed, failed, not_run };
std::string_view to_string(BatchStatus s);

struct BatchOutcome {
    std::string dataset_id;
    BatchStatus status = BatchStatus::not_run;
    std::optional<IngestReport> report;
    /// Error::to_json() of the failure.
    nlohmann::json error;
};

struct BatchResult {
    std::vector<BatchOutcome> outcomes;
    bool ok() const;
    /// Ingest reports of committed datasets, in batch order.
    std::vector<IngestReport> reports() const;
};
nlohmann::json to_json(const BatchResult& r);

/// Produces a dataset's records (fetch and transform).
using RecordProducer = std::function<std::vector<Record>(const IngestTarget&)>;

/// Runs produce-then-ingest for each dataset in order, each in its own
/// transaction. The stop policy marks every dataset after the first failure
/// as not-run; earlier commits stay in place.
BatchResult batch_run(Store& store, const std::vector<IngestTarget>& datasets, const RecordProducer& produce,
                      const IngestOptions& options = {});

}  // namespace archint
