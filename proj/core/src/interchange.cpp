#include "archint/interchange.hpp"

#include "archint/digest.hpp"
#include "archint/error.hpp"

namespace archint {

namespace {

template <typename T>
void put_optional(json& j, const char* key, const std::optional<T>& v) {
    if (v) j[key] = *v;
}

template <typename T>
void get_optional(const json& j, const char* key, std::optional<T>& v) {
    if (auto it = j.find(key); it != j.end() && !it->is_null())
        v = it->get<T>();
    else
        v.reset();
}

template <typename Enum, typename Parser>
Enum parse_enum(const json& j, const char* key, Parser parse) {
    auto token = j.at(key).get<std::string>();
    auto value = parse(token);
    if (!value) throw Error("interchange-error", std::string("unknown ") + key + " token '" + token + "'");
    return *value;
}

}  // namespace

void to_json(json& j, const Country& v) {
    j = json{{"code", v.code}, {"name", v.name}};
    put_optional(j, "report_summary", v.report_summary);
}
void from_json(const json& j, Country& v) {
    v.code = j.at("code").get<std::string>();
    v.name = j.at("name").get<std::string>();
    get_optional(j, "report_summary", v.report_summary);
}

void to_json(json& j, const Repository& v) {
    j = json{{"id", v.id}, {"country_code", v.country_code}, {"name", v.name}, {"contact", v.contact}};
    put_optional(j, "history", v.history);
}
void from_json(const json& j, Repository& v) {
    v.id = j.at("id").get<std::string>();
    v.country_code = j.at("country_code").get<std::string>();
    v.name = j.at("name").get<std::string>();
    v.contact = j.value("contact", std::map<std::string, std::string>{});
    get_optional(j, "history", v.history);
}

void to_json(json& j, const DateRange& v) {
    j = json{{"text", v.text}};
    put_optional(j, "start", v.start);
    put_optional(j, "end", v.end);
}
void from_json(const json& j, DateRange& v) {
    v.text = j.at("text").get<std::string>();
    get_optional(j, "start", v.start);
    get_optional(j, "end", v.end);
}

void to_json(json& j, const AccessPoint& v) {
    j = json{{"kind", to_string(v.kind)}, {"label", v.label}};
    put_optional(j, "target", v.target);
}
void from_json(const json& j, AccessPoint& v) {
    v.kind = parse_enum<AccessPointKind>(j, "kind", parse_access_point_kind);
    v.label = j.at("label").get<std::string>();
    get_optional(j, "target", v.target);
}

void to_json(json& j, const Description& v) {
    json fields = json::array();
    for (const auto& [key, values] : v.fields) fields.push_back(json{{"key", key}, {"values", values}});
    j = json{{"language", v.language},   {"title", v.title},   {"fields", fields},
             {"dates", v.dates},         {"access_points", v.access_points}};
    if (!v.alternative_titles.empty()) j["alternative_titles"] = v.alternative_titles;
}
void from_json(const json& j, Description& v) {
    v.language = j.at("language").get<std::string>();
    v.title = j.at("title").get<std::string>();
    v.alternative_titles = j.value("alternative_titles", std::vector<std::string>{});
    v.fields.clear();
    for (const auto& f : j.value("fields", json::array()))
        v.fields.emplace_back(f.at("key").get<std::string>(), f.at("values").get<std::vector<std::string>>());
    v.dates = j.value("dates", std::vector<DateRange>{});
    v.access_points = j.value("access_points", std::vector<AccessPoint>{});
}

void to_json(json& j, const DocumentaryUnit& v) {
    j = json{{"global_id", v.global_id},
             {"local_id", v.local_id},
             {"repository_id", v.repository_id},
             {"level", to_string(v.level)},
             {"sibling_index", v.sibling_index},
             {"descriptions", v.descriptions},
             {"source_dataset", v.source_dataset}};
    put_optional(j, "parent_id", v.parent_id);
}
void from_json(const json& j, DocumentaryUnit& v) {
    v.global_id = j.at("global_id").get<std::string>();
    v.local_id = j.at("local_id").get<std::string>();
    v.repository_id = j.at("repository_id").get<std::string>();
    v.level = parse_enum<Level>(j, "level", parse_level);
    v.sibling_index = j.value("sibling_index", std::size_t{0});
    v.descriptions = j.at("descriptions").get<std::vector<Description>>();
    v.source_dataset = j.value("source_dataset", std::string{});
    get_optional(j, "parent_id", v.parent_id);
}

void to_json(json& j, const Vocabulary& v) { j = json{{"id", v.id}, {"name", v.name}}; }
void from_json(const json& j, Vocabulary& v) {
    v.id = j.at("id").get<std::string>();
    v.name = j.value("name", std::string{});
}

void to_json(json& j, const Concept& v) {
    j = json{{"id", v.id}, {"vocabulary_id", v.vocabulary_id}, {"pref_labels", v.pref_labels}, {"broader", v.broader}};
}
void from_json(const json& j, Concept& v) {
    v.id = j.at("id").get<std::string>();
    v.vocabulary_id = j.at("vocabulary_id").get<std::string>();
    v.pref_labels = j.value("pref_labels", std::map<std::string, std::string>{});
    v.broader = j.value("broader", std::vector<std::string>{});
}

void to_json(json& j, const HistoricalAgent& v) {
    j = json{{"id", v.id}, {"agent_type", to_string(v.agent_type)}, {"name", v.name}, {"set_id", v.set_id}};
}
void from_json(const json& j, HistoricalAgent& v) {
    v.id = j.at("id").get<std::string>();
    v.agent_type = parse_enum<AgentType>(j, "agent_type", parse_agent_type);
    v.name = j.at("name").get<std::string>();
    v.set_id = j.value("set_id", std::string{});
}

void to_json(json& j, const Link& v) {
    j = json{{"id", v.id}, {"source_id", v.source_id}, {"target_id", v.target_id}, {"kind", to_string(v.kind)}};
    put_optional(j, "note", v.note);
}
void from_json(const json& j, Link& v) {
    v.id = j.at("id").get<std::string>();
    v.source_id = j.at("source_id").get<std::string>();
    v.target_id = j.at("target_id").get<std::string>();
    v.kind = parse_enum<LinkKind>(j, "kind", parse_link_kind);
    get_optional(j, "note", v.note);
}

void to_json(json& j, const RecordField& v) {
    j = json{{"key", v.key}, {"value", v.value}};
    put_optional(j, "lang", v.language);
    put_optional(j, "target", v.target);
}
void from_json(const json& j, RecordField& v) {
    v.key = j.at("key").get<std::string>();
    v.value = j.at("value").get<std::string>();
    get_optional(j, "lang", v.language);
    get_optional(j, "target", v.target);
}

void to_json(json& j, const Record& v) {
    j = json{{"local_id", v.local_id}, {"fields", v.fields}, {"children", v.children}};
    put_optional(j, "parent_ref", v.parent_ref);
    if (v.level) j["level"] = to_string(*v.level);
    put_optional(j, "language", v.language);
}
void from_json(const json& j, Record& v) {
    v.local_id = j.at("local_id").get<std::string>();
    get_optional(j, "parent_ref", v.parent_ref);
    if (j.contains("level") && !j["level"].is_null())
        v.level = parse_enum<Level>(j, "level", parse_level);
    else
        v.level.reset();
    get_optional(j, "language", v.language);
    v.fields = j.value("fields", std::vector<RecordField>{});
    v.children = j.value("children", std::vector<Record>{});
}

std::string canonical(const json& j) { return j.dump(-1, ' ', false, json::error_handler_t::replace); }

std::string canonical_records(const std::vector<Record>& forest) { return canonical(json(forest)); }

std::vector<Record> records_from_canonical(const std::string& text) {
    return json::parse(text).get<std::vector<Record>>();
}

std::string unit_content_digest(const DocumentaryUnit& unit) {
    json j = unit;
    j.erase("sibling_index");
    return sha256_hex(canonical(j));
}

std::string unit_full_digest(const DocumentaryUnit& unit) { return sha256_hex(canonical(json(unit))); }

}  // namespace archint
