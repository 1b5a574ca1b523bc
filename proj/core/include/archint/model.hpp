#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace archint {

// ---------------------------------------------------------------------------
// Enumerations
// ---------------------------------------------------------------------------

enum class Level { fonds, subfonds, series, subseries, recordgrp, collection, file, item, otherlevel };

std::string_view to_string(Level level);
/// Exact lowercase token, as serialized.
std::optional<Level> parse_level(std::string_view token);
/// Lenient variant used when reading provider data: case-insensitive and
/// tolerant of separators (`Sub-Fonds`, `record group`, `folder`).
std::optional<Level> level_from_label(std::string_view label);

enum class AccessPointKind { subject, place, person, corporateBody, family, creator, genre };

std::string_view to_string(AccessPointKind kind);
std::optional<AccessPointKind> parse_access_point_kind(std::string_view token);
inline constexpr std::array<AccessPointKind, 7> kAccessPointKinds{
    AccessPointKind::subject, AccessPointKind::place,  AccessPointKind::person, AccessPointKind::corporateBody,
    AccessPointKind::family,  AccessPointKind::creator, AccessPointKind::genre};

enum class AgentType { person, corporateBody, family };
std::string_view to_string(AgentType type);
std::optional<AgentType> parse_agent_type(std::string_view token);

enum class LinkKind { copy, hierarchical, temporal, familial, associative };
std::string_view to_string(LinkKind kind);
std::optional<LinkKind> parse_link_kind(std::string_view token);

enum class DatasetStatus { draft, fetched, transformed, staged, approved, promoted, error };
std::string_view to_string(DatasetStatus status);
std::optional<DatasetStatus> parse_dataset_status(std::string_view token);

/// The ISAD(G) subset accepted as description field keys.
inline constexpr std::array<std::string_view, 10> kFieldKeys{
    "scopecontent", "bioghist",  "custodhist", "acqinfo",  "arrangement",
    "accessrestrict", "userestrict", "processinfo", "physdesc", "note"};
bool is_field_key(std::string_view key);

// Record field keys beyond kFieldKeys.
inline constexpr std::string_view kTitleKey = "title";
inline constexpr std::string_view kDateKey = "unitdate";
inline constexpr std::string_view kAccessPointPrefix = "access_point:";

std::string access_point_key(AccessPointKind kind);
/// `access_point:subject` -> subject; nullopt for any other key.
std::optional<AccessPointKind> access_point_kind_of_key(std::string_view key);

/// Keys a Record field may carry: title, unitdate, the field keys and the
/// access_point:<kind> family.
bool is_record_field_key(std::string_view key);

inline constexpr std::string_view kUndeterminedLanguage = "und";

// ---------------------------------------------------------------------------
// Portal entities
// ---------------------------------------------------------------------------

struct Country {
    std::string code;
    std::string name;
    std::optional<std::string> report_summary;
    bool operator==(const Country&) const = default;
};

struct Repository {
    std::string id;
    std::string country_code;
    std::string name;
    std::map<std::string, std::string> contact;
    std::optional<std::string> history;
    bool operator==(const Repository&) const = default;
};

struct DateRange {
    std::optional<std::string> start;
    std::optional<std::string> end;
    std::string text;
    bool operator==(const DateRange&) const = default;
};

/// Parses `1939`, `1939-09`, `1939-09-01` and ranges joined by `/` or `-`
/// between full years. Unparseable text keeps both bounds empty.
DateRange parse_date_text(std::string_view text);

struct AccessPoint {
    AccessPointKind kind = AccessPointKind::subject;
    std::string label;
    std::optional<std::string> target;
    bool operator==(const AccessPoint&) const = default;
};

struct Description {
    std::string language;
    std::string title;
    std::vector<std::string> alternative_titles;
    /// Ordered multimap: keys keep first-appearance order.
    std::vector<std::pair<std::string, std::vector<std::string>>> fields;
    std::vector<DateRange> dates;
    std::vector<AccessPoint> access_points;

    void add_field(const std::string& key, std::string value);
    const std::vector<std::string>* field(std::string_view key) const;
    bool operator==(const Description&) const = default;
};

struct DocumentaryUnit {
    std::string global_id;
    std::string local_id;
    std::string repository_id;
    std::optional<std::string> parent_id;
    Level level = Level::otherlevel;
    std::size_t sibling_index = 0;
    std::vector<Description> descriptions;
    std::string source_dataset;

    const Description* description(std::string_view language) const;
    bool operator==(const DocumentaryUnit&) const = default;
};

struct Vocabulary {
    std::string id;
    std::string name;
    bool operator==(const Vocabulary&) const = default;
};

struct Concept {
    std::string id;
    std::string vocabulary_id;
    std::map<std::string, std::string> pref_labels;
    std::vector<std::string> broader;
    bool operator==(const Concept&) const = default;
};

struct HistoricalAgent {
    std::string id;
    AgentType agent_type = AgentType::person;
    std::string name;
    std::string set_id;
    bool operator==(const HistoricalAgent&) const = default;
};

struct Link {
    std::string id;
    std::string source_id;
    std::string target_id;
    LinkKind kind = LinkKind::associative;
    std::optional<std::string> note;
    bool operator==(const Link&) const = default;
};

// ---------------------------------------------------------------------------
// Intermediate record form
// ---------------------------------------------------------------------------

struct RecordField {
    std::string key;
    std::optional<std::string> language;
    std::string value;
    /// Controlled-vocabulary link, set on access-point fields by concordance.
    std::optional<std::string> target;
    bool operator==(const RecordField&) const = default;
};

/// Canonical unit every transformation stage produces.
struct Record {
    std::string local_id;
    std::optional<std::string> parent_ref;
    std::optional<Level> level;
    std::optional<std::string> language;
    std::vector<RecordField> fields;
    std::vector<Record> children;

    void add(std::string key, std::string value, std::optional<std::string> language = std::nullopt);
    /// First value for `key`, if any.
    const std::string* first(std::string_view key) const;
    bool has(std::string_view key) const;
    bool operator==(const Record&) const = default;
};

/// Total number of records in a forest.
std::size_t count_records(const std::vector<Record>& forest);

// ---------------------------------------------------------------------------
// Identifiers
// ---------------------------------------------------------------------------

/// Collapses whitespace and percent-encodes `/` and `%`.
std::string encode_local_id(std::string_view local_id);
/// `parent/encoded-local`; the parent is a repository id for top-level units.
std::string make_global_id(std::string_view parent_or_repository, std::string_view local_id);

/// Builds the stored unit for `record` (children are not converted). Fields
/// are grouped into one Description per language: a field's own language,
/// else the record language, else `und`.
DocumentaryUnit unit_from_record(const Record& record, const std::string& repository_id,
                                 const std::optional<std::string>& parent_id, std::size_t sibling_index,
                                 const std::string& dataset_id);

/// Inverse view of a stored unit as a childless Record.
Record record_from_unit(const DocumentaryUnit& unit);

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

/// Read-only access to a store space, as needed by validation.
class SpaceView {
public:
    virtual ~SpaceView() = default;
    virtual const DocumentaryUnit* find_unit(std::string_view global_id) const = 0;
    virtual bool has_repository(std::string_view id) const = 0;
    virtual const Concept* find_concept(std::string_view id) const = 0;
    virtual const HistoricalAgent* find_agent(std::string_view id) const = 0;
    /// Units directly under `parent_id`, or top-level units of the repository
    /// when `parent_id` is empty.
    virtual std::vector<const DocumentaryUnit*> children_of(std::string_view repository_id,
                                                            const std::optional<std::string>& parent_id) const = 0;
};

struct Violation {
    std::string code;
    std::string message;
    bool operator==(const Violation&) const = default;
};

struct ValidationReport {
    std::vector<Violation> violations;
    bool ok() const { return violations.empty(); }
    bool has(std::string_view code) const;
};

ValidationReport validate_unit(const DocumentaryUnit& unit, const SpaceView& space);

}  // namespace archint
