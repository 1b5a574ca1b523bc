#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "archint/model.hpp"
#include "archint/text.hpp"

namespace archint {

enum class SpaceName { staging, production };
std::string_view to_string(SpaceName name);
std::optional<SpaceName> parse_space_name(std::string_view token);

/// Per-dataset ledger of ingested units and their content digests.
struct SyncManifest {
    std::string dataset_id;
    text::Instant timestamp{};
    std::map<std::string, std::string> entries;  // global_id -> content digest
    bool operator==(const SyncManifest&) const = default;
};

void to_json(nlohmann::json& j, const SyncManifest& m);
void from_json(const nlohmann::json& j, SyncManifest& m);

/// Full content of one space. Values are copied into a Transaction for
/// mutation and published as an immutable snapshot on commit.
class SpaceState final : public SpaceView {
public:
    explicit SpaceState(SpaceName name = SpaceName::staging) : name_(name) {}

    SpaceName name() const noexcept { return name_; }

    const std::map<std::string, Country>& countries() const noexcept { return countries_; }
    const std::map<std::string, Repository>& repositories() const noexcept { return repositories_; }
    const std::map<std::string, DocumentaryUnit>& units() const noexcept { return units_; }
    const std::map<std::string, Vocabulary>& vocabularies() const noexcept { return vocabularies_; }
    const std::map<std::string, Concept>& concepts() const noexcept { return concepts_; }
    const std::map<std::string, HistoricalAgent>& agents() const noexcept { return agents_; }
    const std::map<std::string, Link>& links() const noexcept { return links_; }
    const std::map<std::string, SyncManifest>& manifests() const noexcept { return manifests_; }

    const SyncManifest* manifest(std::string_view dataset_id) const;
    const Repository* find_repository(std::string_view id) const;
    /// Links whose target is `id`.
    std::vector<const Link*> inbound_links(std::string_view id) const;
    bool entity_exists(std::string_view id) const;

    // SpaceView
    const DocumentaryUnit* find_unit(std::string_view global_id) const override;
    bool has_repository(std::string_view id) const override;
    const Concept* find_concept(std::string_view id) const override;
    const HistoricalAgent* find_agent(std::string_view id) const override;
    /// Sorted by sibling_index, then global_id.
    std::vector<const DocumentaryUnit*> children_of(std::string_view repository_id,
                                                    const std::optional<std::string>& parent_id) const override;
    std::vector<const DocumentaryUnit*> children_of(const DocumentaryUnit& unit) const;

    /// Applies one logged mutation (see Transaction). Used for log replay.
    void apply(const nlohmann::json& op);

private:
    friend class Transaction;
    friend class Store;

    static std::string parent_key(std::string_view repository_id, const std::optional<std::string>& parent_id);
    void put_unit(DocumentaryUnit unit);
    void erase_unit(const std::string& global_id);

    SpaceName name_;
    std::map<std::string, Country> countries_;
    std::map<std::string, Repository> repositories_;
    std::map<std::string, DocumentaryUnit> units_;
    std::map<std::string, Vocabulary> vocabularies_;
    std::map<std::string, Concept> concepts_;
    std::map<std::string, HistoricalAgent> agents_;
    std::map<std::string, Link> links_;
    std::map<std::string, SyncManifest> manifests_;
    std::map<std::string, std::set<std::string>, std::less<>> children_index_;
};

class Store;

/// Exclusive write access to one space. Mutations are buffered against a
/// private copy of the last committed state and become visible to readers
/// only on commit(); destruction without commit discards them.
class Transaction {
public:
    Transaction(Transaction&&) noexcept;
    Transaction& operator=(Transaction&&) = delete;
    ~Transaction();

    SpaceName space() const noexcept { return working_->name(); }
    /// Snapshot read view including this transaction's own writes.
    const SpaceState& view() const noexcept { return *working_; }
    bool active() const noexcept { return store_ != nullptr; }

    void put_country(const Country& v);
    void put_repository(const Repository& v);
    void put_unit(const DocumentaryUnit& v);
    void erase_unit(const std::string& global_id);
    void put_vocabulary(const Vocabulary& v);
    void put_concept(const Concept& v);
    void put_agent(const HistoricalAgent& v);
    void put_link(const Link& v);
    void erase_link(const std::string& id);
    void put_manifest(const SyncManifest& v);
    void erase_manifest(const std::string& dataset_id);

    std::size_t pending_mutations() const noexcept { return ops_.size(); }

    void commit();
    void rollback();

private:
    friend class Store;
    Transaction(Store& store, std::unique_lock<std::mutex> lock, std::shared_ptr<SpaceState> working);
    void record(nlohmann::json op);

    Store* store_;
    std::unique_lock<std::mutex> lock_;
    std::shared_ptr<SpaceState> working_;
    std::vector<nlohmann::json> ops_;
};

struct StoreOptions {
    /// Persistence directory; in-memory when empty.
    std::optional<std::filesystem::path> directory;
    /// Write a full snapshot and truncate the log after this many commits.
    std::size_t snapshot_every = 64;
};

/// Embedded two-space repository (staging and production). Writers are
/// serialized across both spaces; readers take immutable snapshots.
class Store {
public:
    explicit Store(StoreOptions options = {});
    Store(const Store&) = delete;
    Store& operator=(const Store&) = delete;

    std::shared_ptr<const SpaceState> snapshot(SpaceName name) const;
    Transaction begin(SpaceName name);

    /// Writes both spaces as snapshot files and truncates the log.
    void checkpoint();

    text::Instant now() const;
    void set_clock(std::function<text::Instant()> clock);

    /// Called with the mutation list before a commit is published. A throwing
    /// hook fails the commit (the transaction is rolled back). Test seam.
    using CommitHook = std::function<void(SpaceName, const std::vector<nlohmann::json>&)>;
    void set_commit_hook(CommitHook hook);

    const StoreOptions& options() const noexcept { return options_; }

private:
    friend class Transaction;
    void publish(std::shared_ptr<SpaceState> state, const std::vector<nlohmann::json>& ops);
    std::shared_ptr<SpaceState>& slot(SpaceName name);
    void load();
    void append_log(SpaceName name, const std::vector<nlohmann::json>& ops);
    void write_snapshot_locked();

    StoreOptions options_;
    mutable std::mutex read_mutex_;
    std::mutex write_mutex_;
    std::shared_ptr<SpaceState> staging_;
    std::shared_ptr<SpaceState> production_;
    std::function<text::Instant()> clock_;
    CommitHook commit_hook_;
    std::size_t commits_since_snapshot_ = 0;
};

/// Writes the snapshot layout of one space under `dir`: one canonical JSON
/// file per entity kind plus `manifests/<dataset>.tsv`.
void write_space_files(const SpaceState& space, const std::filesystem::path& dir);
SpaceState read_space_files(SpaceName name, const std::filesystem::path& dir);

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

enum class UnitAction { created, updated, unchanged, deleted, skipped, retained };
std::string_view to_string(UnitAction action);

struct UnitChange {
    std::string global_id;
    UnitAction action;
    bool operator==(const UnitChange&) const = default;
};

struct SkippedRecord {
    std::string global_id;
    std::vector<Violation> violations;
    /// Descendants dropped together with this record.
    std::size_t dropped_descendants = 0;
};

struct ChangeSummary {
    std::size_t created = 0;
    std::size_t updated = 0;
    std::size_t unchanged = 0;
    std::vector<UnitChange> actions;
    std::vector<SkippedRecord> skipped;
    /// global_id -> content digest for every written or unchanged unit.
    std::map<std::string, std::string> digests;
};

struct UpsertOptions {
    /// Drop invalid records (and their subtrees) instead of failing.
    bool skip_invalid = false;
};

/// Maps each Record onto a DocumentaryUnit at its path id under `parent_id`
/// (or top-level in the repository). Units whose content digest is equal and
/// whose sibling position is unchanged are left untouched. Throws
/// `dangling-parent`, `duplicate-sibling` or `validation-failure`; the
/// transaction is not rolled back here.
ChangeSummary upsert_subtree(Transaction& txn, const std::string& repository_id,
                             const std::optional<std::string>& parent_id, const std::vector<Record>& records,
                             const std::string& dataset_id, const UpsertOptions& options = {});

struct UnitTree {
    DocumentaryUnit unit;
    std::vector<UnitTree> children;
    bool operator==(const UnitTree&) const = default;
};

/// Unit plus descendants down to `depth` levels (all when absent).
UnitTree get_subtree(const SpaceState& space, const std::string& global_id, std::optional<std::size_t> depth = {});
nlohmann::json to_json(const UnitTree& tree);

struct DigestScope {
    enum class Kind { all, repository, dataset };
    Kind kind = Kind::all;
    std::string id;

    static DigestScope everything() { return {}; }
    static DigestScope repository(std::string id) { return {Kind::repository, std::move(id)}; }
    static DigestScope dataset(std::string id) { return {Kind::dataset, std::move(id)}; }
};

/// Order-independent SHA-256 over every in-scope entity's canonical form.
std::string space_digest(const SpaceState& space, const DigestScope& scope = {});
/// Digest of every unit NOT belonging to `dataset_id` plus all other entities.
std::string space_digest_excluding_dataset(const SpaceState& space, const std::string& dataset_id);

struct PromotionReport {
    std::string dataset_id;
    std::size_t created = 0;
    std::size_t updated = 0;
    std::size_t unchanged = 0;
    std::size_t deleted = 0;
    std::vector<UnitChange> actions;
    std::vector<std::string> warnings;
    bool all_unchanged() const { return created == 0 && updated == 0 && deleted == 0; }
};
nlohmann::json to_json(const PromotionReport& report);

/// Replaces production's content for `dataset_id` with an exact copy of
/// staging's. Requires `status == approved` and a staging manifest.
/// Production units outside the dataset are never modified; units targeted
/// by links are retained with a warning instead of being deleted. The
/// dataset's repositories and access point targets must already exist in
/// production (Error{"unresolved-repository"}, Error{"unresolved-target"}).
PromotionReport promote_dataset(Store& store, const std::string& dataset_id, DatasetStatus status);

}  // namespace archint
