#include <fstream>
#include <sstream>

#include "archint/digest.hpp"
#include "archint/error.hpp"
#include "archint/hierarchy.hpp"
#include "archint/interchange.hpp"
#include "archint/transform.hpp"

namespace archint {

using nlohmann::json;
namespace fs = std::filesystem;

std::string_view to_string(StageKind kind) {
    switch (kind) {
        case StageKind::xml_mapping: return "xml-mapping";
        case StageKind::structural_rewrite: return "structural-rewrite";
        case StageKind::csv_reshape: return "csv-reshape";
        case StageKind::json_mapping: return "json-mapping";
        case StageKind::concordance: return "concordance";
    }
    return "xml-mapping";
}

std::optional<StageKind> parse_stage_kind(std::string_view token) {
    for (auto k : {StageKind::xml_mapping, StageKind::structural_rewrite, StageKind::csv_reshape, StageKind::json_mapping,
                   StageKind::concordance})
        if (to_string(k) == token) return k;
    return std::nullopt;
}

std::string_view to_string(DataType type) {
    switch (type) {
        case DataType::files_xml: return "files-xml";
        case DataType::files_csv: return "files-csv";
        case DataType::files_json: return "files-json";
        case DataType::records: return "records";
    }
    return "records";
}

DataType input_type(StageKind kind) {
    switch (kind) {
        case StageKind::xml_mapping:
        case StageKind::structural_rewrite: return DataType::files_xml;
        case StageKind::csv_reshape: return DataType::files_csv;
        case StageKind::json_mapping: return DataType::files_json;
        case StageKind::concordance: return DataType::records;
    }
    return DataType::records;
}

DataType output_type(StageKind kind) {
    return kind == StageKind::structural_rewrite ? DataType::files_xml : DataType::records;
}

// ---------------------------------------------------------------------------
// Stage definitions
// ---------------------------------------------------------------------------

namespace {

std::string read_text_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("invalid-stage", "cannot read '" + path.string() + "'", {{"path", path.string()}});
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Replaces `<key>_file` with the file's contents under `<key>`.
void inline_file(json& def, const std::string& key, const fs::path& base_dir) {
    std::string file_key = key + "_file";
    if (!def.contains(file_key)) return;
    fs::path p = def[file_key].get<std::string>();
    if (p.is_relative()) p = base_dir / p;
    def[key] = read_text_file(p);
    def.erase(file_key);
}

char delimiter_of(const json& def) {
    std::string d = def.value("delimiter", std::string(","));
    if (d == "\\t" || d == "tab") return '\t';
    if (d.size() != 1) throw Error("invalid-stage", "delimiter must be one character");
    return d[0];
}

}  // namespace

std::string Stage::digest() const { return sha256_hex(canonical(definition)); }

Stage Stage::from_json(const json& j, const fs::path& base_dir) {
    if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string())
        throw Error("invalid-stage", "stage definition needs a 'kind'");
    auto kind = parse_stage_kind(j["kind"].get<std::string>());
    if (!kind) throw Error("invalid-stage", "unknown stage kind '" + j["kind"].get<std::string>() + "'");
    Stage s;
    s.kind = *kind;
    s.definition = j;
    try {
        switch (s.kind) {
            case StageKind::xml_mapping: {
                inline_file(s.definition, "mapping", base_dir);
                s.link_hierarchy = s.definition.value("link_hierarchy", false);
                if (s.definition.value("profile", std::string{}) == "ead") {
                    if (!s.definition.contains("mapping")) s.definition["mapping"] = default_ead_mapping_text();
                }
                if (!s.definition.contains("mapping") || !s.definition["mapping"].is_string())
                    throw Error("invalid-stage", "xml-mapping needs 'mapping', 'mapping_file' or profile 'ead'");
                s.mapping = std::make_shared<MappingTable>(
                    compile_mapping(s.definition["mapping"].get<std::string>(), delimiter_of(s.definition)));
                break;
            }
            case StageKind::structural_rewrite:
                for (const auto& r : s.definition.value("rules", json::array())) s.rewrite.push_back(r.get<RewriteRule>());
                break;
            case StageKind::csv_reshape: s.csv = s.definition.get<CsvSpec>(); break;
            case StageKind::json_mapping: s.json_spec = s.definition.get<JsonSpec>(); break;
            case StageKind::concordance: {
                inline_file(s.definition, "table", base_dir);
                if (!s.definition.contains("table")) throw Error("invalid-stage", "concordance needs 'table' or 'table_file'");
                s.concordance.table = s.definition["table"].get<std::string>();
                auto mode = parse_match_mode(s.definition.value("mode", std::string("normalized")));
                if (!mode) throw Error("invalid-stage", "unknown concordance mode");
                s.concordance.mode = *mode;
                s.concordance.scope = s.definition.value("scope", std::string{});
                break;
            }
        }
    } catch (const json::exception& e) {
        throw Error("invalid-stage", std::string(to_string(s.kind)) + ": " + e.what());
    }
    return s;
}

void TransformPipeline::type_check() const {
    if (stages.empty()) throw Error("pipeline-type-mismatch", "a pipeline needs at least one stage");
    if (input_type(stages.front().kind) == DataType::records)
        throw Error("pipeline-type-mismatch", "the first stage must consume files",
                    {{"stage", 0}, {"input", to_string(input_type(stages.front().kind))}});
    for (std::size_t i = 1; i < stages.size(); ++i) {
        DataType out = output_type(stages[i - 1].kind);
        DataType in = input_type(stages[i].kind);
        if (out != in)
            throw Error("pipeline-type-mismatch",
                        "stage " + std::to_string(i) + " (" + std::string(to_string(stages[i].kind)) + ") expects " +
                            std::string(to_string(in)) + " but stage " + std::to_string(i - 1) + " produces " +
                            std::string(to_string(out)),
                        {{"stage", i}, {"expected", to_string(in)}, {"got", to_string(out)}});
    }
    if (output_type(stages.back().kind) != DataType::records)
        throw Error("pipeline-type-mismatch", "the last stage must produce records", {{"stage", stages.size() - 1}});
}

json TransformPipeline::to_json() const {
    json stages_json = json::array();
    for (const auto& s : stages) stages_json.push_back(s.definition);
    return {{"stages", stages_json}};
}

TransformPipeline TransformPipeline::from_json(const json& j, const fs::path& base_dir) {
    const json& list = j.is_array() ? j : j.at("stages");
    TransformPipeline p;
    for (std::size_t i = 0; i < list.size(); ++i) {
        try {
            p.stages.push_back(Stage::from_json(list[i], base_dir));
        } catch (const Error& e) {
            json details = e.details().is_object() ? e.details() : json::object();
            details["stage"] = i;
            throw Error(e.code(), "stage " + std::to_string(i) + ": " + e.what(), details);
        }
    }
    p.type_check();
    return p;
}

// ---------------------------------------------------------------------------
// Execution
// ---------------------------------------------------------------------------

json to_json(const StageTrace& t) {
    json j{{"index", t.index},
           {"kind", to_string(t.kind)},
           {"cache_hit", t.cache_hit},
           {"duration_us", t.duration.count()},
           {"input_count", t.input_count},
           {"output_count", t.output_count},
           {"warnings", t.warnings},
           {"input_digest", t.input_digest},
           {"output_digest", t.output_digest}};
    if (!t.report.is_null()) j["report"] = t.report;
    return j;
}

std::string StageData::digest() const {
    if (is_records) return sha256_hex(canonical_records(records));
    Sha256 h;
    for (const auto& f : files) h.update(f.name).update("\t").update(f.checksum).update("\n");
    return h.hex();
}

std::shared_ptr<const StageCache::Entry> StageCache::find(const std::string& key) const {
    std::lock_guard lock(mutex_);
    auto it = entries_.find(key);
    return it == entries_.end() ? nullptr : it->second;
}

void StageCache::put(const std::string& key, std::shared_ptr<const Entry> entry) {
    std::lock_guard lock(mutex_);
    entries_[key] = std::move(entry);
}

std::size_t StageCache::size() const {
    std::lock_guard lock(mutex_);
    return entries_.size();
}

void StageCache::clear() {
    std::lock_guard lock(mutex_);
    entries_.clear();
}

namespace {

struct FileError {
    std::string file;
    std::string code;
    std::string message;
};

bool media_matches(DataType type, const FileItem& item) {
    const std::string& m = item.media_type;
    auto has = [&](std::string_view s) { return m.find(s) != std::string::npos; };
    switch (type) {
        case DataType::files_xml: return has("xml");
        case DataType::files_csv: return has("csv") || has("tab-separated") || m == "text/plain";
        case DataType::files_json: return has("json");
        case DataType::records: return false;
    }
    return false;
}

std::size_t item_count(const StageData& d) { return d.is_records ? count_records(d.records) : d.files.size(); }

void link_records(std::vector<Record>& records, std::vector<std::string>& warnings, json& report) {
    BuildResult built = build_tree(std::move(records));
    report["hierarchy"] = orphan_report(built);
    records = std::move(built.forest);
    for (auto& o : built.orphans) {
        warnings.push_back("record '" + o.local_id + "' names missing parent '" + o.parent_ref.value_or("") +
                           "'; kept at top level");
        records.push_back(std::move(o));
    }
}

StageCache::Entry execute(const Stage& stage, const StageData& input, const RunContext& ctx,
                          std::vector<FileError>& errors) {
    StageCache::Entry out;
    out.output.is_records = output_type(stage.kind) == DataType::records;
    auto per_file = [&](auto&& fn) {
        for (const auto& file : input.files) {
            try {
                fn(file);
            } catch (const Error& e) {
                errors.push_back({file.name, e.code(), e.what()});
            }
        }
    };
    auto add_records = [&](const FileItem& file, RecordsResult r) {
        for (auto& w : r.warnings) out.warnings.push_back(file.name + ": " + w);
        for (auto& rec : r.records) out.output.records.push_back(std::move(rec));
    };
    switch (stage.kind) {
        case StageKind::structural_rewrite:
            per_file([&](const FileItem& file) {
                FileItem rewritten = make_file_item(file.name, structural_rewrite(stage.rewrite, file.bytes),
                                                    file.source_uri, file.media_type);
                out.output.files.push_back(std::move(rewritten));
            });
            break;
        case StageKind::xml_mapping:
            per_file([&](const FileItem& file) { add_records(file, apply_mapping(*stage.mapping, file.bytes)); });
            if (errors.empty() && stage.link_hierarchy) link_records(out.output.records, out.warnings, out.report);
            break;
        case StageKind::csv_reshape:
            per_file([&](const FileItem& file) { add_records(file, csv_to_records(stage.csv, file.bytes)); });
            break;
        case StageKind::json_mapping:
            per_file([&](const FileItem& file) { add_records(file, json_to_records(stage.json_spec, file.bytes)); });
            if (errors.empty() && stage.json_spec.link_hierarchy) {
                try {
                    link_records(out.output.records, out.warnings, out.report);
                } catch (const Error& e) {
                    errors.push_back({"", e.code(), e.what()});
                }
            }
            break;
        case StageKind::concordance: {
            if (!ctx.space) {
                errors.push_back({"", "missing-space", "the concordance stage needs a space to resolve targets"});
                break;
            }
            try {
                Concordance c = load_concordance(stage.concordance.table, *ctx.space, stage.concordance.scope,
                                                 stage.concordance.mode);
                out.output.records = input.records;
                out.report["access_points"] = to_json(map_access_points(out.output.records, c));
            } catch (const Error& e) {
                errors.push_back({"", e.code(), e.what()});
            }
            break;
        }
    }
    return out;
}

}  // namespace

PipelineResult run_pipeline(const TransformPipeline& pipeline, const FileSet& input, const RunContext& ctx) {
    pipeline.type_check();
    DataType first = input_type(pipeline.stages.front().kind);
    StageData data;
    for (const auto& item : input.items) {
        if (item.deleted) continue;
        if (!media_matches(first, item))
            throw Error("media-type-mismatch",
                        "file '" + item.name + "' has media type '" + item.media_type + "' but stage 0 expects " +
                            std::string(to_string(first)),
                        {{"stage", 0}, {"file", item.name}, {"media_type", item.media_type}});
        data.files.push_back(item);
    }

    PipelineResult result;
    for (std::size_t i = 0; i < pipeline.stages.size(); ++i) {
        const Stage& stage = pipeline.stages[i];
        auto started = std::chrono::steady_clock::now();
        StageTrace trace;
        trace.index = i;
        trace.kind = stage.kind;
        trace.input_digest = data.digest();
        trace.input_count = item_count(data);
        std::string key = sha256_hex(stage.digest() + ":" + trace.input_digest);

        std::shared_ptr<const StageCache::Entry> entry = ctx.cache ? ctx.cache->find(key) : nullptr;
        trace.cache_hit = entry != nullptr;
        if (!entry) {
            std::vector<FileError> errors;
            auto fresh = std::make_shared<StageCache::Entry>(execute(stage, data, ctx, errors));
            if (!errors.empty()) {
                json list = json::array();
                for (const auto& e : errors) list.push_back({{"file", e.file}, {"code", e.code}, {"message", e.message}});
                throw Error("stage-failed",
                            "stage " + std::to_string(i) + " (" + std::string(to_string(stage.kind)) + ") failed: " +
                                (errors.front().file.empty() ? "" : errors.front().file + ": ") + errors.front().message,
                            {{"stage", i}, {"kind", to_string(stage.kind)}, {"errors", list}});
            }
            if (ctx.cache) ctx.cache->put(key, fresh);
            entry = fresh;
        }
        data = entry->output;
        trace.output_count = item_count(data);
        trace.output_digest = data.digest();
        trace.warnings = entry->warnings;
        trace.report = entry->report;
        trace.duration = std::chrono::duration_cast<std::chrono::microseconds>(std::chrono::steady_clock::now() - started);
        result.trace.push_back(std::move(trace));
    }
    result.records = std::move(data.records);
    return result;
}

PreviewResult preview(const TransformPipeline& pipeline, const FileSet& input, std::size_t limit, const RunContext& ctx) {
    if (limit == 0) throw Error("invalid-argument", "preview limit must be at least 1");
    PipelineResult run = run_pipeline(pipeline, input.first(limit), ctx);
    PreviewResult out;
    out.ead = serialize_ead(run.records);
    out.records = std::move(run.records);
    out.trace = std::move(run.trace);
    return out;
}

}  // namespace archint
