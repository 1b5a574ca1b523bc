#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "archint/harvest.hpp"
#include "archint/model.hpp"
#include "archint/path_expr.hpp"
#include "archint/vocab.hpp"

namespace archint {

// ---------------------------------------------------------------------------
// Tabular XML mapping
// ---------------------------------------------------------------------------

/// Meta targets that shape the record rather than add a field.
inline constexpr std::string_view kLocalIdTarget = "local_id";
inline constexpr std::string_view kParentRefTarget = "parent_ref";
inline constexpr std::string_view kLevelTarget = "level";
inline constexpr std::string_view kLanguageTarget = "language";

bool is_mapping_target(std::string_view target);

struct MappingRule {
    std::string record_path_source;
    PathExpr record_path;
    std::string target_field;
    std::optional<PathExpr> source;
    std::optional<Template> template_;
    std::optional<PathExpr> condition;
    /// 1-based data row in the table file.
    std::size_t row = 0;
};

struct MappingTable {
    std::vector<MappingRule> rules;
    /// Distinct record paths in first-appearance order.
    std::vector<std::string> record_paths() const;
};

/// Parses a `record_path,target_field,source,template,condition` table.
/// Throws Error{"parse-error"} naming the row and expression, or
/// Error{"missing-local-id-rule"} when a record path lacks exactly one
/// local_id rule.
MappingTable compile_mapping(std::string_view table_text, char delimiter = ',');

struct RecordsResult {
    std::vector<Record> records;
    std::vector<std::string> warnings;
};

/// Throws Error{"xml-parse-error"}, Error{"rule-conflict"} (two different
/// local_id values for one node) or Error{"missing-local-id"}.
RecordsResult apply_mapping(const MappingTable& table, const xml::Document& doc);
RecordsResult apply_mapping(const MappingTable& table, std::string_view xml_text);

// ---------------------------------------------------------------------------
// Structural rewrite
// ---------------------------------------------------------------------------

struct RewriteRule {
    enum class Kind { rename, prune, wrap, copy_attribute };
    Kind kind = Kind::rename;
    PathExpr path;
    /// rename: new element name; wrap: wrapper element name.
    std::string name;
    /// copy_attribute: source attribute, destination attribute, and the
    /// destination nodes relative to each matched element.
    std::string from;
    std::string to;
    std::optional<PathExpr> target;
};

void to_json(nlohmann::json& j, const RewriteRule& r);
void from_json(const nlohmann::json& j, RewriteRule& r);

/// Applies the rules in order. Rules that match nothing are no-ops.
void structural_rewrite(const std::vector<RewriteRule>& rules, xml::Document& doc);
std::string structural_rewrite(const std::vector<RewriteRule>& rules, std::string_view xml_text);

// ---------------------------------------------------------------------------
// CSV and JSON sources
// ---------------------------------------------------------------------------

/// `title@ukr` addresses the title field in Ukrainian.
struct ColumnTarget {
    std::string column;
    std::string target;
};

struct CsvSpec {
    char delimiter = ',';
    std::vector<std::string> group_by;
    std::vector<ColumnTarget> parent_columns;
    std::vector<ColumnTarget> child_columns;
    std::optional<Level> parent_level;
    std::optional<Level> child_level;
};

void to_json(nlohmann::json& j, const CsvSpec& s);
void from_json(const nlohmann::json& j, CsvSpec& s);

/// Throws Error{"missing-column"}, Error{"ragged-row"},
/// Error{"duplicate-local-id"} or Error{"missing-local-id"}.
RecordsResult csv_to_records(const CsvSpec& spec, std::string_view csv_text);

struct JsonFieldPath {
    std::string path;
    std::string target;
};

struct JsonSpec {
    /// Dot/bracket path to the array of objects; empty for a top-level array.
    std::string iterator;
    std::vector<JsonFieldPath> fields;
    std::optional<std::string> parent_ref;
    /// Link the flat records into trees through parent_ref (pipeline stage).
    bool link_hierarchy = true;
};

void to_json(nlohmann::json& j, const JsonSpec& s);
void from_json(const nlohmann::json& j, JsonSpec& s);

/// Flat records, one per array element. Throws Error{"json-parse-error"},
/// Error{"iterator-not-array"} or Error{"missing-local-id"}.
RecordsResult json_to_records(const JsonSpec& spec, std::string_view json_text);

// ---------------------------------------------------------------------------
// EAD profile
// ---------------------------------------------------------------------------

/// One document per top-level record. Throws Error{"invalid-record"}.
std::vector<std::string> serialize_ead(const std::vector<Record>& records);
std::string serialize_ead(const Record& record);

/// The mapping table that reads serialize_ead output back into records.
std::string default_ead_mapping_text();
const MappingTable& default_ead_mapping();

/// Reorders record fields into the order the EAD profile reads them back:
/// by field key, then main block before parallel-language blocks
/// (alphabetical), value order preserved. Recurses into children.
void normalize_for_ead(Record& record);

// ---------------------------------------------------------------------------
// Pipelines
// ---------------------------------------------------------------------------

enum class StageKind { xml_mapping, structural_rewrite, csv_reshape, json_mapping, concordance };
enum class DataType { files_xml, files_csv, files_json, records };

std::string_view to_string(StageKind kind);
std::optional<StageKind> parse_stage_kind(std::string_view token);
std::string_view to_string(DataType type);
DataType input_type(StageKind kind);
DataType output_type(StageKind kind);

struct ConcordanceRef {
    std::string table;
    MatchMode mode = MatchMode::normalized;
    std::string scope;
};

struct Stage {
    StageKind kind = StageKind::xml_mapping;
    /// Declarative definition, with referenced files inlined.
    nlohmann::json definition;

    std::shared_ptr<const MappingTable> mapping;
    bool link_hierarchy = false;
    std::vector<RewriteRule> rewrite;
    CsvSpec csv;
    JsonSpec json_spec;
    ConcordanceRef concordance;

    /// SHA-256 of the canonical definition.
    std::string digest() const;

    /// Compiles a stage definition. `*_file` members are read relative to
    /// `base_dir` and inlined into `definition`. Throws Error{"invalid-stage"}
    /// or the compile error of the embedded mapping.
    static Stage from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
};

struct TransformPipeline {
    std::vector<Stage> stages;

    /// Throws Error{"pipeline-type-mismatch"} (also for an empty pipeline or
    /// one that does not end in records).
    void type_check() const;
    nlohmann::json to_json() const;
    static TransformPipeline from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
};

struct StageTrace {
    std::size_t index = 0;
    StageKind kind = StageKind::xml_mapping;
    bool cache_hit = false;
    std::chrono::microseconds duration{0};
    std::size_t input_count = 0;
    std::size_t output_count = 0;
    std::vector<std::string> warnings;
    std::string input_digest;
    std::string output_digest;
    /// Concordance statistics, orphan lists and similar diagnostics.
    nlohmann::json report;
};
nlohmann::json to_json(const StageTrace& t);

/// Output of one stage: files or records.
struct StageData {
    std::vector<FileItem> files;
    std::vector<Record> records;
    bool is_records = false;
    std::string digest() const;
};

/// Content-addressed stage outputs keyed by (stage digest, input digest).
class StageCache {
public:
    struct Entry {
        StageData output;
        std::vector<std::string> warnings;
        nlohmann::json report;
    };

    std::shared_ptr<const Entry> find(const std::string& key) const;
    void put(const std::string& key, std::shared_ptr<const Entry> entry);
    std::size_t size() const;
    void clear();

private:
    mutable std::mutex mutex_;
    std::map<std::string, std::shared_ptr<const Entry>> entries_;
};

struct RunContext {
    StageCache* cache = nullptr;
    /// Space that concordance targets are verified against.
    const SpaceView* space = nullptr;
};

struct PipelineResult {
    std::vector<Record> records;
    std::vector<StageTrace> trace;
};

/// Runs every stage in order over the non-deleted items of `input`. The first
/// failing stage aborts with Error{"stage-failed"} whose details carry the
/// stage index and per-file errors.
PipelineResult run_pipeline(const TransformPipeline& pipeline, const FileSet& input, const RunContext& ctx = {});

struct PreviewResult {
    std::vector<Record> records;
    /// serialize_ead of `records`, one document per top-level record.
    std::vector<std::string> ead;
    std::vector<StageTrace> trace;
};

/// run_pipeline over the first `limit` files. Throws Error{"invalid-argument"}
/// when limit is 0.
PreviewResult preview(const TransformPipeline& pipeline, const FileSet& input, std::size_t limit,
                      const RunContext& ctx = {});

}  // namespace archint
