#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "archint/http.hpp"
#include "archint/text.hpp"

namespace archint {

enum class FetchMethod { oaipmh, resourcesync, urlset, upload };
std::string_view to_string(FetchMethod method);
std::optional<FetchMethod> parse_fetch_method(std::string_view token);

struct OaiParams {
    std::string metadata_prefix;
    std::optional<std::string> set;
    std::optional<std::string> from;
    std::optional<std::string> until;
    /// Issue an Identify request first (and honour the advertised granularity).
    bool identify = false;
};

struct FetchConfig {
    FetchMethod method = FetchMethod::upload;
    std::optional<std::string> endpoint;
    std::optional<OaiParams> oai;
    std::vector<std::string> urls;
    /// Source directory for the upload method.
    std::optional<std::filesystem::path> upload_dir;
    Politeness politeness;
    std::optional<std::string> bearer_token;

    /// Throws Error{"invalid-fetch-config"}.
    void validate() const;
};

void to_json(nlohmann::json& j, const FetchConfig& c);
void from_json(const nlohmann::json& j, FetchConfig& c);

struct FileItem {
    std::string name;
    std::string bytes;
    std::string source_uri;
    /// SHA-256 of `bytes`.
    std::string checksum;
    std::string media_type;
    bool deleted = false;
    /// Set when the item was kept despite a problem (e.g. checksum mismatch).
    std::optional<std::string> error;
    bool operator==(const FileItem&) const = default;
};

FileItem make_file_item(std::string name, std::string bytes, std::string source_uri, std::string media_type);
FileItem make_deleted_item(std::string name, std::string source_uri, std::string media_type);

struct FetchFailure {
    std::string uri;
    std::string message;
    bool operator==(const FetchFailure&) const = default;
};

struct FileSet {
    std::vector<FileItem> items;
    text::Instant fetched_at{};
    std::vector<FetchFailure> errors;

    const FileItem* find(std::string_view name) const;
    /// Equality up to fetched_at.
    bool same_content(const FileSet& other) const;
    /// First `k` items (same fetched_at, no errors).
    FileSet first(std::size_t k) const;
    /// SHA-256 over names and checksums; used as the pipeline input digest.
    std::string digest() const;
};

/// Index JSON (names, uris, checksums, media types, flags); bytes excluded.
nlohmann::json index_json(const FileSet& set);
void save_fileset(const FileSet& set, const std::filesystem::path& dir);
FileSet load_fileset(const std::filesystem::path& dir);

/// Media type guessed from a file name extension.
std::string media_type_for_name(std::string_view name);

/// Appends `-1`, `-2`, ... before the extension until `name` is unused.
std::string unique_name(const std::string& name, const std::vector<FileItem>& taken);

/// OAI-PMH ListRecords harvest following resumption tokens to exhaustion.
/// With `previous`, harvests from previous.fetched_at minus one hour and
/// overlays the delta onto the previous items.
FileSet oai_harvest(const FetchConfig& config, const FileSet* previous = nullptr);

/// ResourceSync resource-list download, or change-list replay when
/// `previous` is given and a change list is advertised.
FileSet rs_sync(const FetchConfig& config, const FileSet* previous = nullptr);

/// Downloads each URL; per-URL failures are recorded in FileSet::errors.
/// Throws Error{"all-failed"} when nothing could be fetched.
FileSet fetch_urls(const FetchConfig& config);

/// Reads every regular file of config.upload_dir in name order.
FileSet load_uploads(const FetchConfig& config);

/// Dispatches on config.method.
FileSet fetch(const FetchConfig& config, const FileSet* previous = nullptr);

}  // namespace archint
