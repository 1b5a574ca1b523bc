#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "archint/model.hpp"

namespace archint {

struct BuildResult {
    std::vector<Record> forest;
    /// Records whose parent_ref names no record, each with its attached subtree.
    std::vector<Record> orphans;
};

/// Links flat records through parent_ref. Roots keep input order, as do
/// siblings. Throws Error{"duplicate-local-id"} or Error{"cycle-detected"}
/// (details list the ids on the cycle). Records that already carry children
/// are flattened first.
BuildResult build_tree(std::vector<Record> flat);

/// Pre-order flattening; children get parent_ref = parent local_id, roots none.
std::vector<Record> flatten(const std::vector<Record>& forest);

/// An item described at item level together with its enclosing fonds.
struct SkeletonItem {
    Record record;
    std::string fonds_id;
    std::optional<std::string> fonds_title;
};

/// Reads skeleton trees (fonds stub with items as children) into items.
std::vector<SkeletonItem> skeleton_items(const std::vector<Record>& skeleton_trees);

struct SkeletonResult {
    std::vector<Record> forest;
    std::vector<std::string> warnings;
};

/// Phase 1 builds one stub parent (id + title) per fonds id in first-use
/// order with the items beneath it. Phase 2 lays full fonds records over the
/// stubs: fonds fields replace stub fields key by key, the fonds' own
/// children come first and the items follow. Output lists fonds in input
/// order, then stubs that no fonds record claimed.
SkeletonResult skeleton_enrich(const std::vector<SkeletonItem>& items, const std::vector<Record>& fonds);

struct MergeResult {
    std::vector<Record> forest;
    /// Supplement records with no primary counterpart.
    std::vector<Record> unmatched;
};

/// For every primary node with a supplement record of the same local_id,
/// copies the supplement's fields whose key the primary node lacks (and its
/// level and language when the primary has none). Hierarchy comes from the
/// primary only. Throws Error{"duplicate-local-id"} for repeated supplement ids.
MergeResult priority_merge(const std::vector<Record>& primary, const std::vector<Record>& supplement);

nlohmann::json orphan_report(const BuildResult& r);

}  // namespace archint
