#include "archint/vocab.hpp"

#include <unicode/normalizer2.h>
#include <unicode/unistr.h>

#include <set>

#include "archint/csv.hpp"
#include "archint/error.hpp"
#include "archint/text.hpp"

namespace archint {

std::string_view to_string(MatchMode mode) { return mode == MatchMode::exact ? "exact" : "normalized"; }

std::optional<MatchMode> parse_match_mode(std::string_view token) {
    if (token == "exact") return MatchMode::exact;
    if (token == "normalized" || token == "case-and-whitespace-insensitive") return MatchMode::normalized;
    return std::nullopt;
}

std::string normalize_label(std::string_view label) {
    UErrorCode status = U_ZERO_ERROR;
    const icu::Normalizer2* nfc = icu::Normalizer2::getNFCInstance(status);
    icu::UnicodeString u = icu::UnicodeString::fromUTF8(icu::StringPiece(label.data(), static_cast<int32_t>(label.size())));
    icu::UnicodeString normalized = U_SUCCESS(status) ? nfc->normalize(u, status) : u;
    if (U_FAILURE(status)) normalized = u;
    normalized.foldCase();
    // Folding can denormalize (e.g. U+0130); normalize once more.
    status = U_ZERO_ERROR;
    icu::UnicodeString folded = nfc->normalize(normalized, status);
    if (U_FAILURE(status)) folded = normalized;
    std::string out;
    folded.toUTF8String(out);
    return text::collapse_whitespace(out);
}

std::string Concordance::key(std::string_view label, AccessPointKind kind) const {
    std::string k = mode_ == MatchMode::exact ? std::string(label) : normalize_label(label);
    k += '\x1f';
    k += to_string(kind);
    return k;
}

void Concordance::add(ConcordanceEntry entry) {
    std::string k = key(entry.source_label, entry.kind);
    if (auto it = index_.find(k); it != index_.end())
        throw Error("duplicate-source",
                    "row " + std::to_string(entry.row) + ": '" + entry.source_label + "' (" +
                        std::string(to_string(entry.kind)) + ") already mapped on row " +
                        std::to_string(entries_[it->second].row),
                    {{"row", entry.row}, {"first_row", entries_[it->second].row}});
    index_.emplace(std::move(k), entries_.size());
    entries_.push_back(std::move(entry));
}

const ConcordanceEntry* Concordance::lookup(std::string_view label, AccessPointKind kind) const {
    auto it = index_.find(key(label, kind));
    return it == index_.end() ? nullptr : &entries_[it->second];
}

Concordance load_concordance(std::string_view table_text, const SpaceView& space, std::string scope, MatchMode mode,
                             char delimiter) {
    auto rows = csv::parse(table_text, delimiter);
    if (rows.empty()) throw Error("parse-error", "concordance table has no header row");
    const auto& header = rows.front().cells;
    if (header.size() < 3 || text::trim(header[0]) != "source_label" || text::trim(header[1]) != "kind" ||
        text::trim(header[2]) != "target_id")
        throw Error("parse-error", "concordance header must be source_label,kind,target_id");
    Concordance out(std::move(scope), mode);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& cells = rows[i].cells;
        std::size_t row = i;
        if (cells.size() != header.size())
            throw Error("parse-error", "row " + std::to_string(row) + ": expected " + std::to_string(header.size()) +
                                           " cells", {{"row", row}});
        ConcordanceEntry e;
        e.row = row;
        e.source_label = mode == MatchMode::exact ? cells[0] : text::trim(cells[0]);
        auto kind = parse_access_point_kind(text::trim(cells[1]));
        if (!kind) throw Error("parse-error", "row " + std::to_string(row) + ": unknown kind '" + cells[1] + "'", {{"row", row}});
        e.kind = *kind;
        e.target_id = text::trim(cells[2]);
        if (e.source_label.empty() || e.target_id.empty())
            throw Error("parse-error", "row " + std::to_string(row) + ": empty label or target", {{"row", row}});
        bool is_agent = space.find_agent(e.target_id) != nullptr;
        bool resolves = e.kind == AccessPointKind::creator ? is_agent : is_agent || space.find_concept(e.target_id);
        if (!resolves)
            throw Error("dangling-target",
                        "row " + std::to_string(row) + ": target '" + e.target_id + "' does not exist" +
                            (e.kind == AccessPointKind::creator ? " as a historical agent" : ""),
                        {{"row", row}, {"target_id", e.target_id}});
        out.add(std::move(e));
    }
    return out;
}

nlohmann::json to_json(const AccessPointReport& r) {
    nlohmann::json labels = nlohmann::json::array();
    for (const auto& u : r.unmatched_labels) labels.push_back({{"label", u.label}, {"kind", to_string(u.kind)}});
    return {{"total", r.total}, {"matched", r.matched}, {"unmatched", r.unmatched}, {"unmatched_labels", labels}};
}

namespace {

void map_record(Record& record, const Concordance& c, AccessPointReport& report,
                std::set<std::pair<std::string, AccessPointKind>>& seen) {
    for (auto& field : record.fields) {
        auto kind = access_point_kind_of_key(field.key);
        if (!kind) continue;
        ++report.total;
        if (const auto* hit = c.lookup(field.value, *kind)) {
            field.target = hit->target_id;
            ++report.matched;
        } else {
            ++report.unmatched;
            if (seen.emplace(field.value, *kind).second) report.unmatched_labels.push_back({field.value, *kind});
        }
    }
    for (auto& child : record.children) map_record(child, c, report, seen);
}

}  // namespace

AccessPointReport map_access_points(std::vector<Record>& forest, const Concordance& concordance) {
    AccessPointReport report;
    std::set<std::pair<std::string, AccessPointKind>> seen;
    for (auto& r : forest) map_record(r, concordance, report, seen);
    return report;
}

}  // namespace archint
