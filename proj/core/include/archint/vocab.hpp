#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "archint/model.hpp"

namespace archint {

enum class MatchMode { exact, normalized };
std::string_view to_string(MatchMode mode);
std::optional<MatchMode> parse_match_mode(std::string_view token);

/// NFC, trim, collapse internal whitespace, full Unicode case fold.
std::string normalize_label(std::string_view label);

struct ConcordanceEntry {
    std::string source_label;
    AccessPointKind kind = AccessPointKind::subject;
    std::string target_id;
    std::size_t row = 0;
};

class Concordance {
public:
    Concordance() = default;
    Concordance(std::string scope, MatchMode mode) : scope_(std::move(scope)), mode_(mode) {}

    const std::string& scope() const noexcept { return scope_; }
    MatchMode mode() const noexcept { return mode_; }
    const std::vector<ConcordanceEntry>& entries() const noexcept { return entries_; }

    /// Throws Error{"duplicate-source"} when the (label, kind) key is taken.
    void add(ConcordanceEntry entry);
    const ConcordanceEntry* lookup(std::string_view label, AccessPointKind kind) const;

private:
    std::string key(std::string_view label, AccessPointKind kind) const;

    std::string scope_;
    MatchMode mode_ = MatchMode::normalized;
    std::vector<ConcordanceEntry> entries_;
    std::map<std::string, std::size_t> index_;
};

/// Reads a `source_label,kind,target_id` table and checks every target
/// against `space`: creator rows must name a historical agent, other kinds a
/// concept or an agent. Throws Error{"dangling-target"},
/// Error{"duplicate-source"} or Error{"parse-error"}, all row-numbered.
Concordance load_concordance(std::string_view table_text, const SpaceView& space, std::string scope = {},
                             MatchMode mode = MatchMode::normalized, char delimiter = ',');

struct UnmatchedLabel {
    std::string label;
    AccessPointKind kind;
    bool operator==(const UnmatchedLabel&) const = default;
};

struct AccessPointReport {
    std::size_t total = 0;
    std::size_t matched = 0;
    std::size_t unmatched = 0;
    /// Distinct unmatched (label, kind) pairs in first-appearance order.
    std::vector<UnmatchedLabel> unmatched_labels;
};
nlohmann::json to_json(const AccessPointReport& r);

/// Sets RecordField::target on every access-point field whose label hits the
/// concordance. Labels are never rewritten; fields without a hit keep any
/// target they already carry.
AccessPointReport map_access_points(std::vector<Record>& forest, const Concordance& concordance);

}  // namespace archint
