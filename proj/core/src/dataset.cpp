#include <regex>

#include "archint/control.hpp"
#include "archint/error.hpp"

namespace archint {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json audit_json(const AuditEntry& e) {
    return {{"at", text::format_utc(e.at)},
            {"actor", e.actor},
            {"action", e.action},
            {"from", to_string(e.from)},
            {"to", to_string(e.to)}};
}

AuditEntry audit_from_json(const json& j) {
    AuditEntry e;
    e.at = text::parse_utc(j.at("at").get<std::string>()).value_or(text::Instant{});
    e.actor = j.at("actor").get<std::string>();
    e.action = j.at("action").get<std::string>();
    e.from = parse_dataset_status(j.at("from").get<std::string>()).value_or(DatasetStatus::draft);
    e.to = parse_dataset_status(j.at("to").get<std::string>()).value_or(DatasetStatus::draft);
    return e;
}

}  // namespace

Dataset Dataset::from_definition(const json& definition, const fs::path& base_dir) {
    json errors = json::array();
    auto problem = [&](const std::string& field, const std::string& message) {
        errors.push_back({{"field", field}, {"message", message}});
    };
    if (!definition.is_object())
        throw Error("invalid-definition", "dataset definition must be a JSON object",
                    {{"errors", json::array({{{"field", ""}, {"message", "not an object"}}})}});

    Dataset d;
    static const std::regex kId("[A-Za-z0-9][A-Za-z0-9._-]*");
    if (!definition.contains("id") || !definition["id"].is_string())
        problem("id", "required string");
    else if (d.id = definition["id"].get<std::string>(); !std::regex_match(d.id, kId))
        problem("id", "must match [A-Za-z0-9][A-Za-z0-9._-]*");
    if (!definition.contains("repository_id") || !definition["repository_id"].is_string() ||
        definition["repository_id"].get<std::string>().empty())
        problem("repository_id", "required string");
    else
        d.repository_id = definition["repository_id"].get<std::string>();
    if (definition.contains("parent_scope") && !definition["parent_scope"].is_null()) {
        if (!definition["parent_scope"].is_string())
            problem("parent_scope", "must be a global id string");
        else
            d.parent_scope = definition["parent_scope"].get<std::string>();
    }

    json fetch_json = definition.value("fetch", json{{"method", "upload"}});
    try {
        if (fetch_json.contains("upload_dir")) {
            fs::path p = fetch_json["upload_dir"].get<std::string>();
            if (p.is_relative() && !base_dir.empty()) fetch_json["upload_dir"] = (base_dir / p).lexically_normal().string();
        }
        d.fetch = fetch_json.get<FetchConfig>();
        d.fetch.validate();
    } catch (const Error& e) {
        problem("fetch", e.what());
    } catch (const json::exception& e) {
        problem("fetch", e.what());
    }

    if (!definition.contains("pipeline")) {
        problem("pipeline", "required");
    } else {
        try {
            d.pipeline = TransformPipeline::from_json(definition["pipeline"], base_dir);
        } catch (const Error& e) {
            json entry{{"field", "pipeline"}, {"message", e.what()}, {"code", e.code()}};
            if (!e.details().is_null()) entry["details"] = e.details();
            errors.push_back(entry);
        } catch (const json::exception& e) {
            problem("pipeline", e.what());
        }
    }

    if (definition.contains("ingest")) {
        const json& i = definition["ingest"];
        d.ingest_options.lenient = i.value("lenient", false);
        d.ingest_options.allow_deletions = i.value("allow_deletions", false);
    }

    if (!errors.empty()) {
        std::string summary;
        for (const auto& e : errors)
            summary += (summary.empty() ? "" : "; ") + e["field"].get<std::string>() + ": " + e["message"].get<std::string>();
        throw Error("invalid-definition", summary, {{"errors", errors}});
    }
    d.definition = definition;
    d.definition["fetch"] = d.fetch;
    d.definition["pipeline"] = d.pipeline.to_json();
    return d;
}

json Dataset::to_json() const {
    json audit_list = json::array();
    for (const auto& e : audit) audit_list.push_back(audit_json(e));
    json j{{"id", id},
           {"repository_id", repository_id},
           {"status", to_string(status)},
           {"audit", audit_list},
           {"definition", definition}};
    if (parent_scope) j["parent_scope"] = *parent_scope;
    if (last_error) j["last_error"] = *last_error;
    return j;
}

namespace detail {

Dataset dataset_from_saved(const json& j) {
    Dataset d = Dataset::from_definition(j.at("definition"));
    d.status = parse_dataset_status(j.at("status").get<std::string>()).value_or(DatasetStatus::draft);
    for (const auto& e : j.value("audit", json::array())) d.audit.push_back(audit_from_json(e));
    if (j.contains("last_error")) d.last_error = j["last_error"].get<std::string>();
    return d;
}

}  // namespace detail

}  // namespace archint
