#include "archint/harvest.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "archint/digest.hpp"
#include "archint/error.hpp"
#include "archint/xml.hpp"

namespace archint {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(FetchMethod method) {
    switch (method) {
        case FetchMethod::oaipmh: return "oaipmh";
        case FetchMethod::resourcesync: return "resourcesync";
        case FetchMethod::urlset: return "urlset";
        case FetchMethod::upload: return "upload";
    }
    return "upload";
}

std::optional<FetchMethod> parse_fetch_method(std::string_view token) {
    for (auto m : {FetchMethod::oaipmh, FetchMethod::resourcesync, FetchMethod::urlset, FetchMethod::upload})
        if (to_string(m) == token) return m;
    return std::nullopt;
}

void FetchConfig::validate() const {
    if (method != FetchMethod::upload && (!endpoint || endpoint->empty()) &&
        !(method == FetchMethod::urlset && !urls.empty()))
        throw Error("invalid-fetch-config", "endpoint is required for method " + std::string(to_string(method)));
    if (method == FetchMethod::oaipmh && (!oai || oai->metadata_prefix.empty()))
        throw Error("invalid-fetch-config", "metadataPrefix is required for OAI-PMH harvesting");
    if (method == FetchMethod::urlset && urls.empty())
        throw Error("invalid-fetch-config", "urlset fetching needs at least one URL");
    if (method == FetchMethod::upload && !upload_dir)
        throw Error("invalid-fetch-config", "upload needs an upload_dir");
}

void to_json(json& j, const FetchConfig& c) {
    j = json{{"method", to_string(c.method)}};
    if (c.endpoint) j["endpoint"] = *c.endpoint;
    if (c.oai) {
        json o{{"metadataPrefix", c.oai->metadata_prefix}, {"identify", c.oai->identify}};
        if (c.oai->set) o["set"] = *c.oai->set;
        if (c.oai->from) o["from"] = *c.oai->from;
        if (c.oai->until) o["until"] = *c.oai->until;
        j["oai"] = o;
    }
    if (!c.urls.empty()) j["urls"] = c.urls;
    if (c.upload_dir) j["upload_dir"] = c.upload_dir->string();
    j["politeness"] = {{"max_in_flight", c.politeness.max_in_flight},
                       {"min_delay_ms", c.politeness.min_delay.count()},
                       {"timeout_ms", c.politeness.timeout.count()},
                       {"retries", c.politeness.retries},
                       {"backoff_ms", c.politeness.backoff_base.count()}};
    if (c.bearer_token) j["bearer_token"] = *c.bearer_token;
}

void from_json(const json& j, FetchConfig& c) {
    auto method = parse_fetch_method(j.at("method").get<std::string>());
    if (!method) throw Error("invalid-fetch-config", "unknown fetch method '" + j.at("method").get<std::string>() + "'");
    c.method = *method;
    c.endpoint.reset();
    if (j.contains("endpoint")) c.endpoint = j["endpoint"].get<std::string>();
    c.oai.reset();
    if (j.contains("oai")) {
        const json& o = j["oai"];
        OaiParams p;
        p.metadata_prefix = o.value("metadataPrefix", std::string{});
        if (o.contains("set")) p.set = o["set"].get<std::string>();
        if (o.contains("from")) p.from = o["from"].get<std::string>();
        if (o.contains("until")) p.until = o["until"].get<std::string>();
        p.identify = o.value("identify", false);
        c.oai = p;
    }
    c.urls = j.value("urls", std::vector<std::string>{});
    c.upload_dir.reset();
    if (j.contains("upload_dir")) c.upload_dir = j["upload_dir"].get<std::string>();
    c.politeness = Politeness{};
    if (j.contains("politeness")) {
        const json& p = j["politeness"];
        c.politeness.max_in_flight = p.value("max_in_flight", c.politeness.max_in_flight);
        c.politeness.min_delay = std::chrono::milliseconds(p.value("min_delay_ms", 0));
        c.politeness.timeout = std::chrono::milliseconds(p.value("timeout_ms", 30000));
        c.politeness.retries = p.value("retries", 3u);
        c.politeness.backoff_base = std::chrono::milliseconds(p.value("backoff_ms", 500));
    }
    c.bearer_token.reset();
    if (j.contains("bearer_token")) c.bearer_token = j["bearer_token"].get<std::string>();
}

FileItem make_file_item(std::string name, std::string bytes, std::string source_uri, std::string media_type) {
    FileItem item;
    item.checksum = sha256_hex(bytes);
    item.name = std::move(name);
    item.bytes = std::move(bytes);
    item.source_uri = std::move(source_uri);
    item.media_type = std::move(media_type);
    return item;
}

FileItem make_deleted_item(std::string name, std::string source_uri, std::string media_type) {
    FileItem item = make_file_item(std::move(name), {}, std::move(source_uri), std::move(media_type));
    item.deleted = true;
    return item;
}

const FileItem* FileSet::find(std::string_view name) const {
    for (const auto& item : items)
        if (item.name == name) return &item;
    return nullptr;
}

bool FileSet::same_content(const FileSet& other) const { return items == other.items && errors == other.errors; }

FileSet FileSet::first(std::size_t k) const {
    FileSet out;
    out.fetched_at = fetched_at;
    out.items.assign(items.begin(), items.begin() + static_cast<std::ptrdiff_t>(std::min(k, items.size())));
    return out;
}

std::string FileSet::digest() const {
    Sha256 h;
    for (const auto& item : items)
        h.update(item.name).update("\t").update(item.checksum).update("\t").update(item.media_type).update(
            item.deleted ? "\td\n" : "\n");
    return h.hex();
}

json index_json(const FileSet& set) {
    json items = json::array();
    for (const auto& item : set.items) {
        json j{{"name", item.name},
               {"source_uri", item.source_uri},
               {"checksum", item.checksum},
               {"media_type", item.media_type},
               {"deleted", item.deleted},
               {"size", item.bytes.size()}};
        if (item.error) j["error"] = *item.error;
        items.push_back(j);
    }
    json errors = json::array();
    for (const auto& e : set.errors) errors.push_back({{"uri", e.uri}, {"message", e.message}});
    return {{"fetched_at", text::format_utc(set.fetched_at)}, {"items", items}, {"errors", errors}};
}

void save_fileset(const FileSet& set, const fs::path& dir) {
    fs::remove_all(dir);
    fs::create_directories(dir / "files");
    for (std::size_t i = 0; i < set.items.size(); ++i) {
        std::ofstream out(dir / "files" / std::to_string(i), std::ios::binary);
        out << set.items[i].bytes;
    }
    std::ofstream(dir / "index.json") << index_json(set).dump(2) << '\n';
}

FileSet load_fileset(const fs::path& dir) {
    std::ifstream in(dir / "index.json");
    if (!in) throw Error("not-found", "no file set stored at " + dir.string());
    json idx = json::parse(in);
    FileSet set;
    set.fetched_at = text::parse_utc(idx.at("fetched_at").get<std::string>()).value_or(text::Instant{});
    std::size_t i = 0;
    for (const auto& j : idx.at("items")) {
        std::ifstream f(dir / "files" / std::to_string(i++), std::ios::binary);
        std::ostringstream ss;
        ss << f.rdbuf();
        FileItem item;
        item.name = j.at("name").get<std::string>();
        item.bytes = ss.str();
        item.source_uri = j.at("source_uri").get<std::string>();
        item.checksum = j.at("checksum").get<std::string>();
        item.media_type = j.at("media_type").get<std::string>();
        item.deleted = j.value("deleted", false);
        if (j.contains("error")) item.error = j["error"].get<std::string>();
        set.items.push_back(std::move(item));
    }
    for (const auto& e : idx.value("errors", json::array()))
        set.errors.push_back({e.at("uri").get<std::string>(), e.at("message").get<std::string>()});
    return set;
}

std::string media_type_for_name(std::string_view name) {
    std::string lower = text::to_lower(name);
    if (text::ends_with(lower, ".xml") || text::ends_with(lower, ".rdf") || text::ends_with(lower, ".ead"))
        return "application/xml";
    if (text::ends_with(lower, ".csv")) return "text/csv";
    if (text::ends_with(lower, ".tsv")) return "text/tab-separated-values";
    if (text::ends_with(lower, ".json")) return "application/json";
    return "application/octet-stream";
}

std::string unique_name(const std::string& name, const std::vector<FileItem>& taken) {
    auto used = [&](const std::string& candidate) {
        return std::any_of(taken.begin(), taken.end(), [&](const FileItem& i) { return i.name == candidate; });
    };
    if (!used(name)) return name;
    auto dot = name.rfind('.');
    std::string stem = dot == std::string::npos || dot == 0 ? name : name.substr(0, dot);
    std::string ext = dot == std::string::npos || dot == 0 ? "" : name.substr(dot);
    for (std::size_t n = 1;; ++n) {
        std::string candidate = stem + "-" + std::to_string(n) + ext;
        if (!used(candidate)) return candidate;
    }
}

// ---------------------------------------------------------------------------
// OAI-PMH
// ---------------------------------------------------------------------------

namespace {

const xml::Node* child_named(const xml::Node& parent, std::string_view local) {
    for (const auto& c : parent.children())
        if (c->is_element() && c->local_name() == local) return c.get();
    return nullptr;
}

const xml::Node* first_element_child(const xml::Node& parent) {
    for (const auto& c : parent.children())
        if (c->is_element()) return c.get();
    return nullptr;
}

std::string build_query(const std::string& endpoint, const std::vector<std::pair<std::string, std::string>>& params) {
    std::string url = endpoint;
    char sep = endpoint.find('?') == std::string::npos ? '?' : '&';
    for (const auto& [k, v] : params) {
        url += sep;
        url += k + "=" + text::percent_encode(v);
        sep = '&';
    }
    return url;
}

// Throws on protocol errors; returns false for noRecordsMatch.
bool check_oai_errors(const xml::Node& root) {
    for (const auto& c : root.children()) {
        if (!c->is_element() || c->local_name() != "error") continue;
        std::string code = c->attribute("code") ? *c->attribute("code") : "unknown";
        if (code == "noRecordsMatch") return false;
        throw Error("protocol-error", "OAI-PMH error " + code + ": " + text::collapse_whitespace(c->string_value()),
                    {{"oai_code", code}});
    }
    return true;
}

std::string format_for_granularity(text::Instant t, bool day_granularity) {
    std::string full = text::format_utc(t);
    return day_granularity ? full.substr(0, 10) : full;
}

}  // namespace

FileSet oai_harvest(const FetchConfig& config, const FileSet* previous) {
    if (config.method != FetchMethod::oaipmh) throw Error("invalid-fetch-config", "method is not oaipmh");
    config.validate();
    const OaiParams& oai = *config.oai;
    HttpClient client(config.politeness, config.bearer_token);
    FileSet result;

    bool day_granularity = false;
    if (oai.identify) {
        auto response = client.get(build_query(*config.endpoint, {{"verb", "Identify"}}));
        xml::Document doc = xml::parse(response.body);
        check_oai_errors(*doc.root());
        if (const auto* identify = child_named(*doc.root(), "Identify"))
            if (const auto* g = child_named(*identify, "granularity"))
                day_granularity = text::trim(g->string_value()) == "YYYY-MM-DD";
    }

    std::vector<std::pair<std::string, std::string>> params{{"verb", "ListRecords"},
                                                            {"metadataPrefix", oai.metadata_prefix}};
    if (oai.set) params.emplace_back("set", *oai.set);
    if (oai.from)
        params.emplace_back("from", *oai.from);
    else if (previous)
        params.emplace_back("from", format_for_granularity(previous->fetched_at - std::chrono::hours(1), day_granularity));
    if (oai.until) params.emplace_back("until", *oai.until);

    std::map<std::string, std::size_t> index_by_name;
    std::set<std::string> seen_tokens;
    std::string url = build_query(*config.endpoint, params);
    for (;;) {
        auto response = client.get(url);
        xml::Document doc = xml::parse(response.body);
        const xml::Node& root = *doc.root();
        if (!check_oai_errors(root)) break;
        const xml::Node* list = child_named(root, "ListRecords");
        if (!list) throw Error("protocol-error", "response carries neither ListRecords nor error");

        std::string token;
        for (const auto& c : list->children()) {
            if (!c->is_element()) continue;
            if (c->local_name() == "resumptionToken") {
                token = text::trim(c->string_value());
                continue;
            }
            if (c->local_name() != "record") continue;
            const xml::Node* header = child_named(*c, "header");
            if (!header) throw Error("protocol-error", "record without header");
            const xml::Node* ident = child_named(*header, "identifier");
            if (!ident) throw Error("protocol-error", "record header without identifier");
            std::string identifier = text::trim(ident->string_value());
            std::string name = text::percent_encode(identifier) + ".xml";
            std::string source = build_query(*config.endpoint, {{"verb", "GetRecord"},
                                                                {"identifier", identifier},
                                                                {"metadataPrefix", oai.metadata_prefix}});
            const std::string* status = header->attribute("status");
            FileItem item;
            if (status && *status == "deleted") {
                item = make_deleted_item(name, source, "application/xml");
            } else {
                const xml::Node* metadata = child_named(*c, "metadata");
                const xml::Node* payload = metadata ? first_element_child(*metadata) : nullptr;
                if (!payload) throw Error("protocol-error", "record '" + identifier + "' has no metadata payload");
                item = make_file_item(name, xml::serialize_standalone(*payload), source, "application/xml");
            }
            if (auto it = index_by_name.find(name); it != index_by_name.end()) {
                result.items[it->second] = std::move(item);
            } else {
                index_by_name.emplace(name, result.items.size());
                result.items.push_back(std::move(item));
            }
        }
        if (token.empty()) break;
        if (!seen_tokens.insert(token).second)
            throw Error("protocol-error", "server repeated resumptionToken '" + token + "'");
        url = build_query(*config.endpoint, {{"verb", "ListRecords"}, {"resumptionToken", token}});
    }
    result.fetched_at = text::now_utc();

    if (!previous) return result;
    FileSet merged = *previous;
    merged.errors.clear();
    merged.fetched_at = result.fetched_at;
    for (auto& item : result.items) {
        auto it = std::find_if(merged.items.begin(), merged.items.end(),
                               [&](const FileItem& i) { return i.name == item.name; });
        if (it != merged.items.end())
            *it = std::move(item);
        else
            merged.items.push_back(std::move(item));
    }
    return merged;
}

// ---------------------------------------------------------------------------
// URL sets and uploads
// ---------------------------------------------------------------------------

FileSet fetch_urls(const FetchConfig& config) {
    if (config.method != FetchMethod::urlset) throw Error("invalid-fetch-config", "method is not urlset");
    config.validate();
    HttpClient client(config.politeness, config.bearer_token);

    auto outcomes = client.get_all(config.urls);

    FileSet result;
    for (std::size_t i = 0; i < config.urls.size(); ++i) {
        const std::string& url = config.urls[i];
        if (!outcomes[i].response) {
            result.errors.push_back({url, outcomes[i].error});
            continue;
        }
        std::string base = url_basename(url);
        if (base.empty()) base = "index";
        std::string media = outcomes[i].response->media_type;
        if (media.empty() || media == "application/octet-stream" || media == "text/plain")
            media = media_type_for_name(base);
        result.items.push_back(make_file_item(unique_name(base, result.items), std::move(outcomes[i].response->body),
                                              url, media));
    }
    if (result.items.empty())
        throw Error("all-failed", "every URL failed", {{"errors", index_json(result)["errors"]}});
    result.fetched_at = text::now_utc();
    return result;
}

FileSet load_uploads(const FetchConfig& config) {
    if (!config.upload_dir || !fs::is_directory(*config.upload_dir))
        throw Error("invalid-fetch-config", "upload directory does not exist");
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(*config.upload_dir))
        if (entry.is_regular_file()) files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    FileSet result;
    for (const auto& p : files) {
        std::ifstream in(p, std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        std::string name = p.filename().string();
        result.items.push_back(make_file_item(name, ss.str(), "upload:" + name, media_type_for_name(name)));
    }
    result.fetched_at = text::now_utc();
    return result;
}

FileSet fetch(const FetchConfig& config, const FileSet* previous) {
    switch (config.method) {
        case FetchMethod::oaipmh: return oai_harvest(config, previous);
        case FetchMethod::resourcesync: return rs_sync(config, previous);
        case FetchMethod::urlset: return fetch_urls(config);
        case FetchMethod::upload: return load_uploads(config);
    }
    throw Error("invalid-fetch-config", "unknown fetch method");
}

}  // namespace archint
