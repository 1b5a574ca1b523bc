#include <algorithm>
#include <map>
#include <set>

#include "archint/csv.hpp"
#include "archint/error.hpp"
#include "archint/text.hpp"
#include "archint/transform.hpp"

namespace archint {

using nlohmann::json;

namespace {

struct ParsedTarget {
    std::string key;
    std::optional<std::string> language;
};

ParsedTarget parse_target(const std::string& target) {
    ParsedTarget out;
    auto at = target.rfind('@');
    out.key = text::trim(at == std::string::npos ? target : target.substr(0, at));
    if (at != std::string::npos) out.language = text::trim(target.substr(at + 1));
    if (!is_mapping_target(out.key))
        throw Error("invalid-spec", "unknown target field '" + target + "'", {{"target", target}});
    if (out.language && (!is_record_field_key(out.key) || out.language->empty()))
        throw Error("invalid-spec", "a language suffix is only allowed on field targets: '" + target + "'",
                    {{"target", target}});
    return out;
}

// Applies one value to a record; returns a warning for unusable levels.
std::optional<std::string> assign(Record& r, const ParsedTarget& t, const std::string& raw) {
    std::string value = text::collapse_whitespace(raw);
    if (value.empty()) return std::nullopt;
    if (t.key == kLocalIdTarget) {
        r.local_id = value;
    } else if (t.key == kParentRefTarget) {
        r.parent_ref = value;
    } else if (t.key == kLanguageTarget) {
        r.language = value;
    } else if (t.key == kLevelTarget) {
        auto level = level_from_label(value);
        r.level = level.value_or(Level::otherlevel);
        if (!level) return "unknown level '" + value + "', using otherlevel";
    } else {
        r.fields.push_back({t.key, t.language, value, {}});
    }
    return std::nullopt;
}

std::vector<ColumnTarget> column_targets_from_json(const json& j) {
    std::vector<ColumnTarget> out;
    if (j.is_object()) {
        // Object form loses ordering in canonical JSON; accepted for brevity.
        for (const auto& [k, v] : j.items()) out.push_back({k, v.get<std::string>()});
        return out;
    }
    for (const auto& e : j) out.push_back({e.at("column").get<std::string>(), e.at("target").get<std::string>()});
    return out;
}

json column_targets_to_json(const std::vector<ColumnTarget>& cols) {
    json out = json::array();
    for (const auto& c : cols) out.push_back({{"column", c.column}, {"target", c.target}});
    return out;
}

}  // namespace

void to_json(json& j, const CsvSpec& s) {
    j = {{"delimiter", std::string(1, s.delimiter)},
         {"group_by", s.group_by},
         {"parent_columns", column_targets_to_json(s.parent_columns)},
         {"child_columns", column_targets_to_json(s.child_columns)}};
    if (s.parent_level) j["parent_level"] = to_string(*s.parent_level);
    if (s.child_level) j["child_level"] = to_string(*s.child_level);
}

void from_json(const json& j, CsvSpec& s) {
    std::string delim = j.value("delimiter", std::string(","));
    if (delim == "\\t" || delim == "tab") delim = "\t";
    if (delim.size() != 1) throw Error("invalid-spec", "delimiter must be a single character");
    s.delimiter = delim[0];
    s.group_by = j.value("group_by", std::vector<std::string>{});
    s.parent_columns = column_targets_from_json(j.value("parent_columns", json::array()));
    s.child_columns = column_targets_from_json(j.value("child_columns", json::array()));
    s.parent_level.reset();
    s.child_level.reset();
    auto level = [&](const char* key, std::optional<Level>& out) {
        if (!j.contains(key)) return;
        out = parse_level(j[key].get<std::string>());
        if (!out) throw Error("invalid-spec", std::string("bad ") + key);
    };
    level("parent_level", s.parent_level);
    level("child_level", s.child_level);
}

RecordsResult csv_to_records(const CsvSpec& spec, std::string_view csv_text) {
    if (spec.group_by.empty()) throw Error("invalid-spec", "group_by must not be empty");
    std::vector<std::pair<std::size_t, ParsedTarget>> parent_cols, child_cols;
    auto rows = csv::parse(csv_text, spec.delimiter);
    if (rows.empty()) throw Error("missing-column", "CSV file has no header row");
    std::vector<std::string> header;
    for (const auto& c : rows.front().cells) header.push_back(text::trim(c));
    auto column = [&](const std::string& name) {
        auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) throw Error("missing-column", "column '" + name + "' is not in the header", {{"column", name}});
        return static_cast<std::size_t>(it - header.begin());
    };
    std::vector<std::size_t> group_cols;
    for (const auto& g : spec.group_by) group_cols.push_back(column(g));
    for (const auto& c : spec.parent_columns) parent_cols.emplace_back(column(c.column), parse_target(c.target));
    for (const auto& c : spec.child_columns) child_cols.emplace_back(column(c.column), parse_target(c.target));
    if (std::none_of(child_cols.begin(), child_cols.end(), [](const auto& c) { return c.second.key == kLocalIdTarget; }))
        throw Error("missing-column", "child_columns must map a column to local_id");
    std::optional<std::size_t> parent_id_col;
    for (const auto& [idx, t] : parent_cols)
        if (t.key == kLocalIdTarget) parent_id_col = idx;
    if (!parent_id_col) parent_id_col = group_cols.front();

    RecordsResult result;
    std::map<std::vector<std::string>, std::size_t> group_index;
    std::vector<std::vector<std::string>> first_rows;
    std::vector<std::set<std::string>> child_ids;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& cells = rows[i].cells;
        std::size_t line = rows[i].line;
        if (cells.size() != header.size())
            throw Error("ragged-row",
                        "line " + std::to_string(line) + " has " + std::to_string(cells.size()) + " cells, header has " +
                            std::to_string(header.size()),
                        {{"line", line}});
        std::vector<std::string> key;
        for (auto c : group_cols) key.push_back(text::collapse_whitespace(cells[c]));
        auto [it, fresh] = group_index.emplace(key, result.records.size());
        if (fresh) {
            Record parent;
            parent.level = spec.parent_level;
            for (const auto& [idx, t] : parent_cols)
                if (auto w = assign(parent, t, cells[idx])) result.warnings.push_back("line " + std::to_string(line) + ": " + *w);
            parent.local_id = text::collapse_whitespace(cells[*parent_id_col]);
            if (parent.local_id.empty())
                throw Error("missing-local-id", "line " + std::to_string(line) + ": empty parent identifier",
                            {{"line", line}});
            result.records.push_back(std::move(parent));
            first_rows.push_back(cells);
            child_ids.emplace_back();
        } else {
            const auto& first = first_rows[it->second];
            for (const auto& [idx, t] : parent_cols)
                if (text::collapse_whitespace(cells[idx]) != text::collapse_whitespace(first[idx]))
                    result.warnings.push_back("line " + std::to_string(line) + ": column '" + header[idx] +
                                              "' conflicts with the group's first row ('" + cells[idx] + "' vs '" +
                                              first[idx] + "'); keeping the first value");
        }
        Record& parent = result.records[it->second];
        Record child;
        child.level = spec.child_level;
        for (const auto& [idx, t] : child_cols)
            if (auto w = assign(child, t, cells[idx])) result.warnings.push_back("line " + std::to_string(line) + ": " + *w);
        if (child.local_id.empty())
            throw Error("missing-local-id", "line " + std::to_string(line) + ": empty child identifier", {{"line", line}});
        if (!child_ids[it->second].insert(child.local_id).second)
            throw Error("duplicate-local-id",
                        "line " + std::to_string(line) + ": child '" + child.local_id + "' repeats within group '" +
                            parent.local_id + "'",
                        {{"line", line}, {"local_id", child.local_id}});
        child.parent_ref = parent.local_id;
        parent.children.push_back(std::move(child));
    }
    return result;
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

void to_json(json& j, const JsonSpec& s) {
    json fields = json::array();
    for (const auto& f : s.fields) fields.push_back({{"path", f.path}, {"target", f.target}});
    j = {{"iterator", s.iterator}, {"fields", fields}, {"link_hierarchy", s.link_hierarchy}};
    if (s.parent_ref) j["parent_ref"] = *s.parent_ref;
}

void from_json(const json& j, JsonSpec& s) {
    s.iterator = j.value("iterator", std::string{});
    s.fields.clear();
    for (const auto& f : j.value("fields", json::array()))
        s.fields.push_back({f.at("path").get<std::string>(), f.at("target").get<std::string>()});
    s.parent_ref.reset();
    if (j.contains("parent_ref")) s.parent_ref = j["parent_ref"].get<std::string>();
    s.link_hierarchy = j.value("link_hierarchy", true);
}

namespace {

// Steps of `a.b[0]["c.d"]`: object keys or array indices.
std::vector<std::variant<std::string, std::size_t>> parse_json_path(const std::string& path) {
    std::vector<std::variant<std::string, std::size_t>> steps;
    std::size_t i = 0;
    std::string p = path;
    if (text::starts_with(p, "$")) i = 1;
    auto bad = [&] { throw Error("invalid-spec", "bad JSON path '" + path + "'", {{"path", path}}); };
    while (i < p.size()) {
        if (p[i] == '.') {
            ++i;
            continue;
        }
        if (p[i] == '[') {
            auto end = p.find(']', i);
            if (end == std::string::npos) bad();
            std::string inner = p.substr(i + 1, end - i - 1);
            if (inner.size() >= 2 && (inner.front() == '"' || inner.front() == '\'') && inner.back() == inner.front()) {
                steps.emplace_back(inner.substr(1, inner.size() - 2));
            } else {
                if (inner.empty() || !std::all_of(inner.begin(), inner.end(), ::isdigit)) bad();
                steps.emplace_back(static_cast<std::size_t>(std::stoull(inner)));
            }
            i = end + 1;
            continue;
        }
        auto end = p.find_first_of(".[", i);
        if (end == std::string::npos) end = p.size();
        steps.emplace_back(p.substr(i, end - i));
        i = end;
    }
    return steps;
}

const json* resolve(const json& root, const std::string& path) {
    const json* cur = &root;
    for (const auto& step : parse_json_path(path)) {
        if (const auto* key = std::get_if<std::string>(&step)) {
            if (!cur->is_object() || !cur->contains(*key)) return nullptr;
            cur = &(*cur)[*key];
        } else {
            std::size_t idx = std::get<std::size_t>(step);
            if (!cur->is_array() || idx >= cur->size()) return nullptr;
            cur = &(*cur)[idx];
        }
    }
    return cur;
}

void scalar_values(const json& v, std::vector<std::string>& out) {
    if (v.is_string())
        out.push_back(v.get<std::string>());
    else if (v.is_number() || v.is_boolean())
        out.push_back(v.dump());
    else if (v.is_array())
        for (const auto& e : v) scalar_values(e, out);
}

}  // namespace

RecordsResult json_to_records(const JsonSpec& spec, std::string_view json_text) {
    std::vector<std::pair<std::string, ParsedTarget>> fields;
    for (const auto& f : spec.fields) {
        parse_json_path(f.path);
        fields.emplace_back(f.path, parse_target(f.target));
    }
    if (std::none_of(fields.begin(), fields.end(), [](const auto& f) { return f.second.key == kLocalIdTarget; }))
        throw Error("invalid-spec", "json spec needs a local_id field path");

    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw Error("json-parse-error", e.what(), {{"byte", e.byte}});
    }
    const json* items = resolve(doc, spec.iterator);
    if (!items || !items->is_array())
        throw Error("iterator-not-array", "iterator '" + spec.iterator + "' does not resolve to an array",
                    {{"iterator", spec.iterator}});

    RecordsResult result;
    for (std::size_t i = 0; i < items->size(); ++i) {
        const json& element = (*items)[i];
        Record r;
        for (const auto& [path, target] : fields) {
            const json* v = resolve(element, path);
            if (!v) continue;
            std::vector<std::string> values;
            scalar_values(*v, values);
            bool single = target.key == kLocalIdTarget || target.key == kParentRefTarget || target.key == kLevelTarget ||
                          target.key == kLanguageTarget;
            for (const auto& value : values) {
                if (auto w = assign(r, target, value)) result.warnings.push_back("element " + std::to_string(i) + ": " + *w);
                if (single) break;
            }
        }
        if (spec.parent_ref)
            if (const json* v = resolve(element, *spec.parent_ref)) {
                std::vector<std::string> values;
                scalar_values(*v, values);
                if (!values.empty() && !text::collapse_whitespace(values.front()).empty())
                    r.parent_ref = text::collapse_whitespace(values.front());
            }
        if (r.local_id.empty())
            throw Error("missing-local-id", "element " + std::to_string(i) + " has no local_id value", {{"element", i}});
        result.records.push_back(std::move(r));
    }
    return result;
}

}  // namespace archint
