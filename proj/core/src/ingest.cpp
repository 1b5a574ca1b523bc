#include "archint/ingest.hpp"

#include <algorithm>
#include <set>

#include "archint/digest.hpp"
#include "archint/error.hpp"
#include "archint/interchange.hpp"

namespace archint {

using nlohmann::json;

json to_json(const IngestReport& r) {
    json actions = json::array();
    for (const auto& a : r.actions) actions.push_back({{"global_id", a.global_id}, {"action", to_string(a.action)}});
    return {{"dataset_id", r.dataset_id},
            {"created", r.created},
            {"updated", r.updated},
            {"unchanged", r.unchanged},
            {"deleted", r.deleted},
            {"skipped", r.skipped},
            {"actions", actions},
            {"warnings", r.warnings},
            {"stale", r.stale},
            {"manifest_digest_before", r.manifest_digest_before},
            {"manifest_digest_after", r.manifest_digest_after},
            {"committed", r.committed}};
}

std::string manifest_digest(const SyncManifest* manifest) {
    Sha256 h;
    if (manifest)
        for (const auto& [id, digest] : manifest->entries) h.update(id).update("\t").update(digest).update("\n");
    return h.hex();
}

namespace {

std::size_t depth_of(const std::string& global_id) {
    return static_cast<std::size_t>(std::count(global_id.begin(), global_id.end(), '/'));
}

// Deletes `doomed` deepest first inside `txn`, updating `report`. Returns the
// ids actually deleted.
std::set<std::string> delete_units(Transaction& txn, std::vector<std::string> doomed, IngestReport& report) {
    std::stable_sort(doomed.begin(), doomed.end(),
                     [](const std::string& a, const std::string& b) { return depth_of(a) > depth_of(b); });
    std::set<std::string> deleted;
    for (const auto& id : doomed) {
        const DocumentaryUnit* unit = txn.view().find_unit(id);
        if (!unit) continue;
        if (!txn.view().inbound_links(id).empty()) {
            report.warnings.push_back("stale unit '" + id + "' is the target of a link; retained");
            report.actions.push_back({id, UnitAction::retained});
            continue;
        }
        auto children = txn.view().children_of(*unit);
        if (!children.empty()) {
            std::string owner = children.front()->source_dataset;
            report.warnings.push_back("stale unit '" + id + "' still has child '" + children.front()->global_id +
                                      "' (dataset '" + owner + "'); retained");
            report.actions.push_back({id, UnitAction::retained});
            continue;
        }
        txn.erase_unit(id);
        deleted.insert(id);
        ++report.deleted;
        report.actions.push_back({id, UnitAction::deleted});
    }
    return deleted;
}

std::vector<std::string> stale_ids(const SyncManifest* previous, const SyncManifest& current) {
    std::vector<std::string> out;
    if (!previous) return out;
    for (const auto& [id, digest] : previous->entries)
        if (!current.entries.count(id)) out.push_back(id);
    return out;
}

}  // namespace

IngestReport ingest_dataset(Store& store, const IngestTarget& target, const std::vector<Record>& records,
                            const IngestOptions& options) {
    IngestReport report;
    report.dataset_id = target.dataset_id;
    Transaction txn = store.begin(SpaceName::staging);
    const SyncManifest* previous_ptr = txn.view().manifest(target.dataset_id);
    std::optional<SyncManifest> previous;
    if (previous_ptr) previous = *previous_ptr;
    report.manifest_digest_before = manifest_digest(previous ? &*previous : nullptr);

    ChangeSummary summary = upsert_subtree(txn, target.repository_id, target.parent_scope, records, target.dataset_id,
                                           UpsertOptions{.skip_invalid = options.lenient});
    report.created = summary.created;
    report.updated = summary.updated;
    report.unchanged = summary.unchanged;
    report.actions = summary.actions;
    for (const auto& s : summary.skipped) {
        ++report.skipped;
        std::string codes;
        for (const auto& v : s.violations) codes += (codes.empty() ? "" : ", ") + v.code;
        report.warnings.push_back("skipped '" + s.global_id + "' (" + codes + ")" +
                                  (s.dropped_descendants ? " with " + std::to_string(s.dropped_descendants) +
                                                               " descendant(s)"
                                                         : ""));
    }
    report.current.dataset_id = target.dataset_id;
    report.current.timestamp = store.now();
    report.current.entries = summary.digests;

    report.stale = stale_ids(previous ? &*previous : nullptr, report.current);
    std::set<std::string> deleted;
    if (!report.stale.empty()) {
        if (options.allow_deletions) {
            deleted = delete_units(txn, report.stale, report);
        } else {
            report.warnings.push_back(std::to_string(report.stale.size()) +
                                      " unit(s) from the previous import were not produced again (renamed ids count "
                                      "as deleted and created); run cleanup to remove them");
        }
    }

    SyncManifest stored = report.current;
    for (const auto& id : report.stale) {
        if (deleted.count(id)) continue;
        if (const DocumentaryUnit* unit = txn.view().find_unit(id); unit && unit->source_dataset == target.dataset_id)
            stored.entries[id] = unit_content_digest(*unit);
    }
    txn.put_manifest(stored);
    report.manifest_digest_after = manifest_digest(&stored);

    if (options.dry_run) {
        txn.rollback();
        return report;
    }
    txn.commit();
    report.committed = true;
    return report;
}

IngestReport cleanup_stale(Store& store, const std::string& dataset_id, const SyncManifest& current,
                           const IngestOptions& options) {
    IngestReport report;
    report.dataset_id = dataset_id;
    report.current = current;
    auto snapshot = store.snapshot(SpaceName::staging);
    const SyncManifest* previous = snapshot->manifest(dataset_id);
    if (!previous) throw Error("missing-manifest", "dataset '" + dataset_id + "' has no stored manifest");
    report.manifest_digest_before = manifest_digest(previous);
    report.stale = stale_ids(previous, current);
    if (!options.allow_deletions || options.dry_run || report.stale.empty()) {
        report.manifest_digest_after = report.manifest_digest_before;
        return report;
    }

    Transaction txn = store.begin(SpaceName::staging);
    std::set<std::string> deleted = delete_units(txn, report.stale, report);
    SyncManifest stored = *txn.view().manifest(dataset_id);
    for (const auto& id : deleted) stored.entries.erase(id);
    if (!deleted.empty()) txn.put_manifest(stored);
    report.manifest_digest_after = manifest_digest(&stored);
    txn.commit();
    report.committed = true;
    return report;
}

std::string_view to_string(BatchStatus s) {
    switch (s) {
        case BatchStatus::committed: return "committed";
        case BatchStatus::failed: return "failed";
        case BatchStatus::not_run: return "not-run";
    }
    return "not-run";
}

bool BatchResult::ok() const {
    return std::all_of(outcomes.begin(), outcomes.end(),
                       [](const BatchOutcome& o) { return o.status == BatchStatus::committed; });
}

std::vector<IngestReport> BatchResult::reports() const {
    std::vector<IngestReport> out;
    for (const auto& o : outcomes)
        if (o.report) out.push_back(*o.report);
    return out;
}

json to_json(const BatchResult& r) {
    json outcomes = json::array();
    for (const auto& o : r.outcomes) {
        json j{{"dataset_id", o.dataset_id}, {"status", to_string(o.status)}};
        if (o.report) j["report"] = to_json(*o.report);
        if (!o.error.is_null()) j["error"] = o.error;
        outcomes.push_back(j);
    }
    return {{"ok", r.ok()}, {"outcomes", outcomes}};
}

BatchResult batch_run(Store& store, const std::vector<IngestTarget>& datasets, const RecordProducer& produce,
                      const IngestOptions& options) {
    BatchResult result;
    bool halted = false;
    for (const auto& target : datasets) {
        BatchOutcome outcome;
        outcome.dataset_id = target.dataset_id;
        if (halted) {
            result.outcomes.push_back(std::move(outcome));
            continue;
        }
        try {
            std::vector<Record> records = produce(target);
            outcome.report = ingest_dataset(store, target, records, options);
            outcome.status = BatchStatus::committed;
        } catch (const Error& e) {
            outcome.status = BatchStatus::failed;
            outcome.error = e.to_json();
        } catch (const std::exception& e) {
            outcome.status = BatchStatus::failed;
            outcome.error = {{"code", "internal-error"}, {"message", e.what()}};
        }
        if (outcome.status == BatchStatus::failed && !options.continue_on_error) halted = true;
        result.outcomes.push_back(std::move(outcome));
    }
    return result;
}

}  // namespace archint
