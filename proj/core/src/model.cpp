#include "archint/model.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include "archint/text.hpp"

namespace archint {

namespace {

constexpr std::array<std::string_view, 9> kLevelTokens{"fonds",     "subfonds",   "series", "subseries", "recordgrp",
                                                       "collection", "file", "item",   "otherlevel"};
constexpr std::array<std::string_view, 7> kAccessPointTokens{"subject", "place",   "person", "corporateBody",
                                                             "family",  "creator", "genre"};
constexpr std::array<std::string_view, 3> kAgentTokens{"person", "corporateBody", "family"};
constexpr std::array<std::string_view, 5> kLinkTokens{"copy", "hierarchical", "temporal", "familial", "associative"};
constexpr std::array<std::string_view, 7> kStatusTokens{"draft",    "fetched",  "transformed", "staged",
                                                        "approved", "promoted", "error"};

template <typename Enum, std::size_t N>
std::optional<Enum> lookup(const std::array<std::string_view, N>& tokens, std::string_view token) {
    for (std::size_t i = 0; i < N; ++i)
        if (tokens[i] == token) return static_cast<Enum>(i);
    return std::nullopt;
}

bool is_language_code(std::string_view s) {
    return s.size() == 3 && std::all_of(s.begin(), s.end(), [](char c) { return c >= 'a' && c <= 'z'; });
}

bool is_year(std::string_view s) {
    return s.size() == 4 && std::all_of(s.begin(), s.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
}

// YYYY, YYYY-MM or YYYY-MM-DD
bool is_iso_date(std::string_view s) {
    if (s.size() != 4 && s.size() != 7 && s.size() != 10) return false;
    for (std::size_t i = 0; i < s.size(); ++i) {
        bool dash = i == 4 || i == 7;
        if (dash ? s[i] != '-' : !std::isdigit(static_cast<unsigned char>(s[i]))) return false;
    }
    return true;
}

}  // namespace

std::string_view to_string(Level level) { return kLevelTokens[static_cast<std::size_t>(level)]; }
std::optional<Level> parse_level(std::string_view token) { return lookup<Level>(kLevelTokens, token); }

std::optional<Level> level_from_label(std::string_view label) {
    std::string squashed;
    for (char c : label)
        if (std::isalnum(static_cast<unsigned char>(c))) squashed.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    if (auto exact = parse_level(squashed)) return exact;
    if (squashed == "recordgroup" || squashed == "recordgroups") return Level::recordgrp;
    if (squashed == "folder" || squashed == "folders") return Level::file;
    if (squashed == "subfond") return Level::subfonds;
    if (squashed == "fond") return Level::fonds;
    return std::nullopt;
}

std::string_view to_string(AccessPointKind kind) { return kAccessPointTokens[static_cast<std::size_t>(kind)]; }
std::optional<AccessPointKind> parse_access_point_kind(std::string_view token) {
    return lookup<AccessPointKind>(kAccessPointTokens, token);
}

std::string_view to_string(AgentType type) { return kAgentTokens[static_cast<std::size_t>(type)]; }
std::optional<AgentType> parse_agent_type(std::string_view token) { return lookup<AgentType>(kAgentTokens, token); }

std::string_view to_string(LinkKind kind) { return kLinkTokens[static_cast<std::size_t>(kind)]; }
std::optional<LinkKind> parse_link_kind(std::string_view token) { return lookup<LinkKind>(kLinkTokens, token); }

std::string_view to_string(DatasetStatus status) { return kStatusTokens[static_cast<std::size_t>(status)]; }
std::optional<DatasetStatus> parse_dataset_status(std::string_view token) {
    return lookup<DatasetStatus>(kStatusTokens, token);
}

bool is_field_key(std::string_view key) {
    return std::find(kFieldKeys.begin(), kFieldKeys.end(), key) != kFieldKeys.end();
}

std::string access_point_key(AccessPointKind kind) {
    return std::string(kAccessPointPrefix) + std::string(to_string(kind));
}

std::optional<AccessPointKind> access_point_kind_of_key(std::string_view key) {
    if (!text::starts_with(key, kAccessPointPrefix)) return std::nullopt;
    return parse_access_point_kind(key.substr(kAccessPointPrefix.size()));
}

bool is_record_field_key(std::string_view key) {
    return key == kTitleKey || key == kDateKey || is_field_key(key) || access_point_kind_of_key(key).has_value();
}

DateRange parse_date_text(std::string_view raw) {
    DateRange range;
    range.text = std::string(raw);
    std::string t = text::collapse_whitespace(raw);
    auto assign = [&](std::string_view a, std::string_view b) {
        range.start = std::string(a);
        range.end = std::string(b);
    };
    if (is_iso_date(t)) {
        assign(t, t);
        return range;
    }
    if (auto slash = t.find('/'); slash != std::string::npos) {
        std::string a = text::trim(std::string_view(t).substr(0, slash));
        std::string b = text::trim(std::string_view(t).substr(slash + 1));
        if (is_iso_date(a) && is_iso_date(b)) assign(a, b);
        return range;
    }
    // "1939-1945" and "1939 - 1945"
    std::string compact;
    for (char c : t)
        if (c != ' ') compact.push_back(c);
    if (compact.size() == 9 && compact[4] == '-' && is_year(compact.substr(0, 4)) && is_year(compact.substr(5)))
        assign(compact.substr(0, 4), compact.substr(5));
    return range;
}

void Description::add_field(const std::string& key, std::string value) {
    for (auto& [k, values] : fields) {
        if (k == key) {
            values.push_back(std::move(value));
            return;
        }
    }
    fields.emplace_back(key, std::vector<std::string>{std::move(value)});
}

const std::vector<std::string>* Description::field(std::string_view key) const {
    for (const auto& [k, values] : fields)
        if (k == key) return &values;
    return nullptr;
}

const Description* DocumentaryUnit::description(std::string_view language) const {
    for (const auto& d : descriptions)
        if (d.language == language) return &d;
    return nullptr;
}

void Record::add(std::string key, std::string value, std::optional<std::string> lang) {
    fields.push_back(RecordField{std::move(key), std::move(lang), std::move(value), std::nullopt});
}

const std::string* Record::first(std::string_view key) const {
    for (const auto& f : fields)
        if (f.key == key) return &f.value;
    return nullptr;
}

bool Record::has(std::string_view key) const { return first(key) != nullptr; }

std::size_t count_records(const std::vector<Record>& forest) {
    std::size_t n = 0;
    for (const auto& r : forest) n += 1 + count_records(r.children);
    return n;
}

std::string encode_local_id(std::string_view local_id) {
    return text::percent_encode_only(text::collapse_whitespace(local_id), "/");
}

std::string make_global_id(std::string_view parent_or_repository, std::string_view local_id) {
    std::string id(parent_or_repository);
    id += '/';
    id += encode_local_id(local_id);
    return id;
}

DocumentaryUnit unit_from_record(const Record& record, const std::string& repository_id,
                                 const std::optional<std::string>& parent_id, std::size_t sibling_index,
                                 const std::string& dataset_id) {
    DocumentaryUnit unit;
    unit.local_id = record.local_id;
    unit.repository_id = repository_id;
    unit.parent_id = parent_id;
    unit.global_id = make_global_id(parent_id ? *parent_id : repository_id, record.local_id);
    unit.level = record.level.value_or(Level::otherlevel);
    unit.sibling_index = sibling_index;
    unit.source_dataset = dataset_id;

    const std::string default_lang = record.language.value_or(std::string(kUndeterminedLanguage));
    auto description_for = [&](const std::string& lang) -> Description& {
        for (auto& d : unit.descriptions)
            if (d.language == lang) return d;
        unit.descriptions.push_back(Description{});
        unit.descriptions.back().language = lang;
        return unit.descriptions.back();
    };

    for (const auto& f : record.fields) {
        Description& d = description_for(f.language.value_or(default_lang));
        if (f.key == kTitleKey) {
            if (d.title.empty())
                d.title = f.value;
            else
                d.alternative_titles.push_back(f.value);
        } else if (f.key == kDateKey) {
            d.dates.push_back(parse_date_text(f.value));
        } else if (auto kind = access_point_kind_of_key(f.key)) {
            d.access_points.push_back(AccessPoint{*kind, f.value, f.target});
        } else {
            d.add_field(f.key, f.value);
        }
    }
    if (unit.descriptions.empty()) description_for(default_lang);
    return unit;
}

Record record_from_unit(const DocumentaryUnit& unit) {
    Record r;
    r.local_id = unit.local_id;
    r.level = unit.level;
    if (!unit.descriptions.empty() && unit.descriptions.front().language != kUndeterminedLanguage)
        r.language = unit.descriptions.front().language;
    for (std::size_t i = 0; i < unit.descriptions.size(); ++i) {
        const auto& d = unit.descriptions[i];
        std::optional<std::string> lang;
        if (i > 0) lang = d.language;
        if (!d.title.empty()) r.add(std::string(kTitleKey), d.title, lang);
        for (const auto& t : d.alternative_titles) r.add(std::string(kTitleKey), t, lang);
        for (const auto& date : d.dates) r.add(std::string(kDateKey), date.text, lang);
        for (const auto& [key, values] : d.fields)
            for (const auto& v : values) r.add(key, v, lang);
        for (const auto& ap : d.access_points) {
            r.add(access_point_key(ap.kind), ap.label, lang);
            r.fields.back().target = ap.target;
        }
    }
    return r;
}

bool ValidationReport::has(std::string_view code) const {
    return std::any_of(violations.begin(), violations.end(), [&](const Violation& v) { return v.code == code; });
}

ValidationReport validate_unit(const DocumentaryUnit& unit, const SpaceView& space) {
    ValidationReport report;
    auto add = [&](std::string code, std::string message) {
        report.violations.push_back(Violation{std::move(code), std::move(message)});
    };

    if (text::trim(unit.local_id).empty()) add("missing-local-id", "unit has an empty local_id");
    if (static_cast<std::size_t>(unit.level) >= kLevelTokens.size()) add("bad-level", "level is not a known token");

    if (!space.has_repository(unit.repository_id))
        add("dangling-repository", "repository '" + unit.repository_id + "' does not exist");

    const std::string expected_id =
        make_global_id(unit.parent_id ? *unit.parent_id : unit.repository_id, unit.local_id);
    if (unit.global_id != expected_id)
        add("bad-global-id", "global_id '" + unit.global_id + "' differs from path id '" + expected_id + "'");

    if (unit.parent_id) {
        const DocumentaryUnit* parent = space.find_unit(*unit.parent_id);
        if (!parent) {
            add("dangling-parent", "parent '" + *unit.parent_id + "' does not exist");
        } else {
            if (parent->repository_id != unit.repository_id)
                add("parent-repository-mismatch", "parent belongs to repository '" + parent->repository_id + "'");
            std::set<std::string> seen{unit.global_id};
            for (const DocumentaryUnit* p = parent; p;) {
                if (!seen.insert(p->global_id).second) {
                    add("ancestry-cycle", "ancestry of '" + unit.global_id + "' loops at '" + p->global_id + "'");
                    break;
                }
                p = p->parent_id ? space.find_unit(*p->parent_id) : nullptr;
            }
        }
    }

    const std::string normalized_local = text::collapse_whitespace(unit.local_id);
    for (const DocumentaryUnit* sibling : space.children_of(unit.repository_id, unit.parent_id)) {
        if (sibling->global_id != unit.global_id && text::collapse_whitespace(sibling->local_id) == normalized_local) {
            add("duplicate-sibling", "sibling '" + sibling->global_id + "' already uses local_id '" + unit.local_id + "'");
            break;
        }
    }

    if (unit.descriptions.empty()) add("no-description", "unit has no description");
    std::set<std::string> languages;
    for (const auto& d : unit.descriptions) {
        if (!is_language_code(d.language)) add("bad-language", "'" + d.language + "' is not an ISO 639-2 code");
        if (!languages.insert(d.language).second)
            add("duplicate-language", "more than one description in language '" + d.language + "'");
        if (text::trim(d.title).empty()) add("missing-title", "description '" + d.language + "' has no title");
        for (const auto& [key, values] : d.fields)
            if (!is_field_key(key)) add("bad-field-key", "field key '" + key + "' is not in the accepted list");
        for (const auto& ap : d.access_points) {
            if (text::trim(ap.label).empty()) add("empty-access-point", "access point with empty label");
            if (!ap.target) continue;
            bool is_agent = space.find_agent(*ap.target) != nullptr;
            bool is_concept = space.find_concept(*ap.target) != nullptr;
            if (!is_agent && !is_concept)
                add("dangling-access-point", "access point target '" + *ap.target + "' does not exist");
            else if (ap.kind == AccessPointKind::creator && !is_agent)
                add("creator-target-not-agent", "creator '" + ap.label + "' must target a historical agent");
        }
    }
    return report;
}

}  // namespace archint
