#include <algorithm>
#include <map>

#include "archint/error.hpp"
#include "archint/digest.hpp"
#include "archint/harvest.hpp"
#include "archint/xml.hpp"

namespace archint {

namespace {

struct RsEntry {
    std::string loc;
    std::optional<text::Instant> when;  // rs:md@datetime, else lastmod
    std::string change;                 // created | updated | deleted, empty in resource lists
    std::optional<std::string> md5;
    std::optional<std::string> sha256;
    std::optional<std::size_t> length;
    std::string capability;  // for capability list / index entries
};

struct RsDocument {
    std::string root;        // urlset | sitemapindex
    std::string capability;  // from the document-level rs:md
    std::vector<RsEntry> entries;
};

const xml::Node* child_local(const xml::Node& parent, std::string_view local) {
    for (const auto& c : parent.children())
        if (c->is_element() && c->local_name() == local) return c.get();
    return nullptr;
}

void read_md(const xml::Node& md, RsEntry& e) {
    if (const auto* v = md.attribute("capability")) e.capability = *v;
    if (const auto* v = md.attribute("change")) e.change = *v;
    if (const auto* v = md.attribute("datetime")) e.when = text::parse_utc(*v);
    if (const auto* v = md.attribute("length")) {
        try {
            e.length = std::stoull(*v);
        } catch (const std::exception&) {
            throw Error("protocol-error", "bad rs:md length '" + *v + "'");
        }
    }
    if (const auto* v = md.attribute("hash")) {
        for (const auto& token : text::split(*v, ' ')) {
            auto colon = token.find(':');
            if (colon == std::string::npos) continue;
            std::string algo = text::to_lower(token.substr(0, colon));
            std::string value = text::to_lower(token.substr(colon + 1));
            if (algo == "md5") e.md5 = value;
            if (algo == "sha-256") e.sha256 = value;
        }
    }
}

RsDocument read_document(HttpClient& client, const std::string& url) {
    auto response = client.get(url);
    xml::Document doc;
    try {
        doc = xml::parse(response.body);
    } catch (const Error& e) {
        throw Error("capability-discovery-failure", "document at " + url + " is not XML: " + e.what());
    }
    const xml::Node* root = doc.root();
    RsDocument out;
    out.root = std::string(root->local_name());
    if (out.root != "urlset" && out.root != "sitemapindex")
        throw Error("capability-discovery-failure", "document at " + url + " is not a sitemap");
    for (const auto& c : root->children()) {
        if (!c->is_element()) continue;
        if (c->local_name() == "md") {
            RsEntry tmp;
            read_md(*c, tmp);
            out.capability = tmp.capability;
            continue;
        }
        if (c->local_name() != "url" && c->local_name() != "sitemap") continue;
        RsEntry e;
        const xml::Node* loc = child_local(*c, "loc");
        if (!loc) throw Error("protocol-error", "sitemap entry without loc in " + url);
        e.loc = text::trim(loc->string_value());
        if (const xml::Node* lastmod = child_local(*c, "lastmod")) e.when = text::parse_utc(text::trim(lastmod->string_value()));
        if (const xml::Node* md = child_local(*c, "md")) read_md(*md, e);
        out.entries.push_back(std::move(e));
    }
    return out;
}

// Expands a sitemap index into the entries of its component sitemaps.
std::vector<RsEntry> list_entries(HttpClient& client, const RsDocument& doc) {
    if (doc.root == "urlset") return doc.entries;
    std::vector<RsEntry> all;
    for (const auto& part : doc.entries) {
        RsDocument sub = read_document(client, part.loc);
        auto entries = list_entries(client, sub);
        all.insert(all.end(), entries.begin(), entries.end());
    }
    return all;
}

struct Discovery {
    std::optional<std::string> resource_list;
    std::optional<std::string> change_list;
    std::optional<RsDocument> resource_doc;
};

Discovery discover(HttpClient& client, const std::string& endpoint) {
    RsDocument doc = read_document(client, endpoint);
    Discovery d;
    if (doc.capability == "capabilitylist") {
        for (const auto& e : doc.entries) {
            if (e.capability == "resourcelist" && !d.resource_list) d.resource_list = e.loc;
            if (e.capability == "changelist" && !d.change_list) d.change_list = e.loc;
        }
        if (!d.resource_list && !d.change_list)
            throw Error("capability-discovery-failure", "capability list at " + endpoint + " advertises neither a resource list nor a change list");
        return d;
    }
    if (doc.capability == "resourcelist" || (doc.capability.empty() && doc.root == "sitemapindex")) {
        d.resource_list = endpoint;
        d.resource_doc = std::move(doc);
        return d;
    }
    if (doc.capability == "changelist") {
        d.change_list = endpoint;
        return d;
    }
    throw Error("capability-discovery-failure",
                "document at " + endpoint + " has unsupported capability '" + doc.capability + "'");
}

// Returns an error message when the advertised length or hashes disagree.
std::optional<std::string> verify(const RsEntry& e, const std::string& bytes) {
    if (e.length && *e.length != bytes.size())
        return "checksum-mismatch: length " + std::to_string(bytes.size()) + " != advertised " + std::to_string(*e.length);
    if (e.md5 && md5_hex(bytes) != *e.md5) return "checksum-mismatch: md5 differs from advertised " + *e.md5;
    if (e.sha256 && sha256_hex(bytes) != *e.sha256) return "checksum-mismatch: sha-256 differs from advertised " + *e.sha256;
    return std::nullopt;
}

std::string name_for(const std::string& loc, const std::vector<FileItem>& taken) {
    std::string base = url_basename(loc);
    if (base.empty()) base = "index";
    return unique_name(base, taken);
}

void download_into(HttpClient& client, const std::vector<RsEntry>& entries, FileSet& out) {
    std::vector<std::string> urls;
    for (const auto& e : entries) urls.push_back(e.loc);
    auto outcomes = client.get_all(urls);
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const RsEntry& e = entries[i];
        if (!outcomes[i].response) {
            out.errors.push_back({e.loc, outcomes[i].error});
            continue;
        }
        auto existing = std::find_if(out.items.begin(), out.items.end(),
                                     [&](const FileItem& item) { return item.source_uri == e.loc; });
        std::string media = outcomes[i].response->media_type;
        std::string name = existing != out.items.end() ? existing->name : name_for(e.loc, out.items);
        if (media.empty() || media == "application/octet-stream" || media == "text/plain") media = media_type_for_name(name);
        FileItem item = make_file_item(name, std::move(outcomes[i].response->body), e.loc, media);
        if (auto problem = verify(e, item.bytes)) {
            item.error = *problem;
            out.errors.push_back({e.loc, *problem});
        }
        if (existing != out.items.end())
            *existing = std::move(item);
        else
            out.items.push_back(std::move(item));
    }
}

}  // namespace

FileSet rs_sync(const FetchConfig& config, const FileSet* previous) {
    if (config.method != FetchMethod::resourcesync) throw Error("invalid-fetch-config", "method is not resourcesync");
    config.validate();
    HttpClient client(config.politeness, config.bearer_token);
    Discovery d = discover(client, *config.endpoint);

    if (previous && d.change_list) {
        FileSet out = *previous;
        out.errors.clear();
        RsDocument changes = read_document(client, *d.change_list);
        std::vector<RsEntry> entries = list_entries(client, changes);
        // Replay in time order; entries without a timestamp are always applied.
        std::stable_sort(entries.begin(), entries.end(), [](const RsEntry& a, const RsEntry& b) {
            return a.when.value_or(text::Instant{}) < b.when.value_or(text::Instant{});
        });
        std::map<std::string, RsEntry> latest;  // loc -> last change after previous fetch
        std::vector<std::string> order;
        for (const auto& e : entries) {
            if (e.when && *e.when <= previous->fetched_at) continue;
            if (!latest.count(e.loc)) order.push_back(e.loc);
            latest[e.loc] = e;
        }
        std::vector<RsEntry> to_download;
        for (const auto& loc : order) {
            const RsEntry& e = latest[loc];
            if (e.change == "deleted") {
                auto it = std::find_if(out.items.begin(), out.items.end(),
                                       [&](const FileItem& item) { return item.source_uri == loc; });
                if (it != out.items.end())
                    *it = make_deleted_item(it->name, loc, it->media_type);
                continue;
            }
            to_download.push_back(e);
        }
        download_into(client, to_download, out);
        out.fetched_at = text::now_utc();
        return out;
    }

    if (!d.resource_list)
        throw Error("capability-discovery-failure", "no resource list available for a full synchronisation");
    RsDocument list = d.resource_doc ? *d.resource_doc : read_document(client, *d.resource_list);
    std::vector<RsEntry> entries = list_entries(client, list);

    FileSet out;
    if (previous) {
        // Keep the names already assigned so downstream identity is stable.
        for (const auto& item : previous->items) out.items.push_back(item);
    }
    download_into(client, entries, out);
    if (previous) {
        for (auto& item : out.items) {
            bool listed = std::any_of(entries.begin(), entries.end(), [&](const RsEntry& e) { return e.loc == item.source_uri; });
            if (!listed && !item.deleted) item = make_deleted_item(item.name, item.source_uri, item.media_type);
        }
    }
    out.fetched_at = text::now_utc();
    return out;
}

}  // namespace archint
