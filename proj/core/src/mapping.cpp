#include <algorithm>
#include <map>
#include <set>

#include "archint/csv.hpp"
#include "archint/error.hpp"
#include "archint/text.hpp"
#include "archint/transform.hpp"

namespace archint {

bool is_mapping_target(std::string_view target) {
    return target == kLocalIdTarget || target == kParentRefTarget || target == kLevelTarget ||
           target == kLanguageTarget || is_record_field_key(target);
}

std::vector<std::string> MappingTable::record_paths() const {
    std::vector<std::string> out;
    for (const auto& r : rules)
        if (std::find(out.begin(), out.end(), r.record_path_source) == out.end()) out.push_back(r.record_path_source);
    return out;
}

namespace {

[[noreturn]] void row_error(std::size_t row, const std::string& column, const std::string& expression,
                            const std::string& message) {
    throw Error("parse-error", "row " + std::to_string(row) + ", " + column + " '" + expression + "': " + message,
                {{"row", row}, {"column", column}, {"expression", expression}});
}

template <typename T, typename F>
T compile_cell(std::size_t row, const std::string& column, const std::string& cell, F&& parse) {
    try {
        return parse(cell);
    } catch (const Error& e) {
        if (e.code() != "parse-error") throw;
        row_error(row, column, cell, e.what());
    }
}

}  // namespace

MappingTable compile_mapping(std::string_view table_text, char delimiter) {
    auto rows = csv::parse(table_text, delimiter);
    static const std::vector<std::string> kHeader{"record_path", "target_field", "source", "template", "condition"};
    if (rows.empty()) throw Error("parse-error", "mapping table has no header row", {{"row", 0}});
    std::vector<std::string> header;
    for (const auto& c : rows.front().cells) header.push_back(text::trim(c));
    if (header != kHeader)
        throw Error("parse-error", "mapping header must be record_path,target_field,source,template,condition",
                    {{"row", 0}});

    MappingTable table;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        std::size_t row = i;
        auto cells = rows[i].cells;
        if (cells.size() > kHeader.size())
            throw Error("parse-error", "row " + std::to_string(row) + " has " + std::to_string(cells.size()) + " cells",
                        {{"row", row}});
        cells.resize(kHeader.size());
        MappingRule rule;
        rule.row = row;
        rule.record_path_source = text::trim(cells[0]);
        rule.record_path = compile_cell<PathExpr>(row, "record_path", rule.record_path_source,
                                                  [](const std::string& s) { return PathExpr::parse(s); });
        if (!rule.record_path.selects_elements())
            row_error(row, "record_path", rule.record_path_source, "record paths must select elements");
        rule.target_field = text::trim(cells[1]);
        if (!is_mapping_target(rule.target_field))
            row_error(row, "target_field", rule.target_field, "unknown target field");
        std::string source = text::trim(cells[2]);
        if (!source.empty())
            rule.source = compile_cell<PathExpr>(row, "source", source, [](const std::string& s) { return PathExpr::parse(s); });
        if (!cells[3].empty())
            rule.template_ = compile_cell<Template>(row, "template", cells[3], [](const std::string& s) { return Template::parse(s); });
        std::string condition = text::trim(cells[4]);
        if (!condition.empty())
            rule.condition =
                compile_cell<PathExpr>(row, "condition", condition, [](const std::string& s) { return PathExpr::parse(s); });
        if (!rule.source && !rule.template_) row_error(row, "source", source, "a rule needs a source or a template");
        table.rules.push_back(std::move(rule));
    }

    auto paths = table.record_paths();
    if (paths.empty()) throw Error("missing-local-id-rule", "mapping table has no rules, so no local_id rule");
    for (const auto& p : paths) {
        auto n = std::count_if(table.rules.begin(), table.rules.end(), [&](const MappingRule& r) {
            return r.record_path_source == p && r.target_field == kLocalIdTarget;
        });
        if (n != 1)
            throw Error("missing-local-id-rule",
                        "record path '" + p + "' has " + std::to_string(n) + " local_id rules; exactly one is required",
                        {{"record_path", p}, {"count", n}});
    }
    return table;
}

namespace {

struct Value {
    std::string text;
    std::optional<std::string> language;
};

std::vector<Value> rule_values(const MappingRule& rule, const xml::Node& record_node) {
    std::vector<Value> out;
    if (rule.condition && !rule.condition->matches_any(record_node)) return out;
    auto lang_of = [&](const xml::Node* n) -> std::optional<std::string> {
        if (!n || n == &record_node) return std::nullopt;
        if (const std::string* l = n->inherited_lang(&record_node)) return *l;
        return std::nullopt;
    };
    auto push = [&](std::string raw, std::optional<std::string> lang) {
        std::string v = text::collapse_whitespace(raw);
        if (!v.empty()) out.push_back({std::move(v), std::move(lang)});
    };
    if (rule.template_) {
        if (rule.source) {
            for (const xml::Node* n : rule.source->select(record_node)) push(rule.template_->render(*n), lang_of(n));
        } else {
            push(rule.template_->render(record_node), std::nullopt);
        }
        return out;
    }
    for (auto& m : rule.source->matches(record_node)) push(std::move(m.value), lang_of(m.element));
    return out;
}

struct Built {
    const xml::Node* node;
    Record record;
    std::optional<std::size_t> parent;  // index into the built list
};

std::string describe(const xml::Node& n) {
    std::string path;
    for (const xml::Node* p = &n; p && p->kind() == xml::NodeKind::Element; p = p->parent())
        path = "/" + p->name() + "[" + std::to_string(p->index_in_parent() + 1) + "]" + path;
    return path;
}

}  // namespace

RecordsResult apply_mapping(const MappingTable& table, const xml::Document& doc) {
    RecordsResult result;
    const xml::Node& start = doc.node();

    // Record nodes with the record paths that selected them.
    std::map<const xml::Node*, std::set<std::string>> selected_by;
    std::vector<const xml::Node*> order;
    for (const auto& path : table.record_paths()) {
        const MappingRule& first = *std::find_if(table.rules.begin(), table.rules.end(),
                                                 [&](const MappingRule& r) { return r.record_path_source == path; });
        for (const xml::Node* n : first.record_path.select(start)) {
            if (selected_by[n].insert(path).second && selected_by[n].size() == 1) order.push_back(n);
        }
    }
    // Document order across record paths.
    std::vector<std::pair<std::vector<std::size_t>, const xml::Node*>> keyed;
    for (const xml::Node* n : order) {
        std::vector<std::size_t> key;
        for (const xml::Node* p = n; p && p->parent(); p = p->parent()) key.push_back(p->index_in_parent());
        std::reverse(key.begin(), key.end());
        keyed.emplace_back(std::move(key), n);
    }
    std::sort(keyed.begin(), keyed.end());

    std::vector<Built> built;
    std::map<const xml::Node*, std::size_t> index_of;
    for (const auto& [key, node] : keyed) {
        Built b{node, {}, std::nullopt};
        for (const xml::Node* p = node->parent(); p; p = p->parent())
            if (auto it = index_of.find(p); it != index_of.end()) {
                b.parent = it->second;
                break;
            }
        const auto& paths = selected_by[node];
        std::optional<std::string> local_id;
        for (const auto& rule : table.rules) {
            if (!paths.count(rule.record_path_source)) continue;
            auto values = rule_values(rule, *node);
            if (values.empty()) continue;
            const std::string& target = rule.target_field;
            if (target == kLocalIdTarget) {
                for (const auto& v : values) {
                    if (local_id && *local_id != v.text)
                        throw Error("rule-conflict",
                                    "rules yield different local_id values '" + *local_id + "' and '" + v.text + "' for " +
                                        describe(*node),
                                    {{"node", describe(*node)}, {"row", rule.row}});
                    local_id = v.text;
                }
            } else if (target == kParentRefTarget) {
                if (!b.record.parent_ref) b.record.parent_ref = values.front().text;
            } else if (target == kLevelTarget) {
                if (b.record.level) continue;
                if (auto level = level_from_label(values.front().text)) {
                    b.record.level = level;
                } else {
                    result.warnings.push_back("unknown level '" + values.front().text + "' at " + describe(*node) +
                                              ", using otherlevel");
                    b.record.level = Level::otherlevel;
                }
            } else if (target == kLanguageTarget) {
                if (!b.record.language) b.record.language = values.front().text;
            } else {
                for (auto& v : values) b.record.fields.push_back({target, std::move(v.language), std::move(v.text), {}});
            }
        }
        if (!local_id)
            throw Error("missing-local-id", "no local_id for record node " + describe(*node), {{"node", describe(*node)}});
        b.record.local_id = *local_id;
        index_of.emplace(node, built.size());
        built.push_back(std::move(b));
    }

    std::vector<std::vector<std::size_t>> children(built.size());
    for (std::size_t i = 0; i < built.size(); ++i) {
        if (!built[i].parent) continue;
        Record& parent = built[*built[i].parent].record;
        Record& child = built[i].record;
        if (child.parent_ref && *child.parent_ref != parent.local_id)
            result.warnings.push_back("record '" + child.local_id + "' names parent '" + *child.parent_ref +
                                      "' but is nested under '" + parent.local_id + "'");
        child.parent_ref = parent.local_id;
        children[*built[i].parent].push_back(i);
    }
    // Descendants follow their ancestors in document order, so assembling
    // from the back moves every subtree after it is complete.
    for (std::size_t i = built.size(); i-- > 0;)
        for (std::size_t c : children[i]) built[i].record.children.push_back(std::move(built[c].record));
    for (auto& b : built)
        if (!b.parent) result.records.push_back(std::move(b.record));
    return result;
}

RecordsResult apply_mapping(const MappingTable& table, std::string_view xml_text) {
    xml::Document doc = xml::parse(xml_text);
    return apply_mapping(table, doc);
}

}  // namespace archint
