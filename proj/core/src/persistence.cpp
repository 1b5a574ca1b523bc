#include <fstream>
#include <sstream>

#include "archint/error.hpp"
#include "archint/interchange.hpp"
#include "archint/store.hpp"

namespace archint {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kLogFile = "log.jsonl";

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& p, const std::string& content) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << content;
    if (!out) throw Error("store-io", "cannot write " + p.string());
}

template <typename Map>
void write_collection(const fs::path& dir, const char* file, const Map& items) {
    json arr = json::array();
    for (const auto& [_, v] : items) arr.push_back(v);
    write_file(dir / file, arr.dump(2, ' ', false, json::error_handler_t::replace) + "\n");
}

template <typename T>
std::vector<T> read_collection(const fs::path& dir, const char* file) {
    fs::path p = dir / file;
    if (!fs::exists(p)) return {};
    return json::parse(read_file(p)).get<std::vector<T>>();
}

std::string manifest_text(const SyncManifest& m) {
    std::string out = "# dataset\t" + m.dataset_id + "\n# timestamp\t" + text::format_utc(m.timestamp) + "\n";
    for (const auto& [id, digest] : m.entries) out += id + "\t" + digest + "\n";
    return out;
}

SyncManifest parse_manifest_text(const std::string& content) {
    SyncManifest m;
    std::istringstream in(content);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos) throw Error("store-corrupt", "malformed manifest line: " + line);
        std::string key = line.substr(0, tab), value = line.substr(tab + 1);
        if (key == "# dataset")
            m.dataset_id = value;
        else if (key == "# timestamp")
            m.timestamp = text::parse_utc(value).value_or(text::Instant{});
        else
            m.entries.emplace(key, value);
    }
    return m;
}

}  // namespace

void write_space_files(const SpaceState& space, const fs::path& dir) {
    fs::create_directories(dir / "manifests");
    write_collection(dir, "countries.json", space.countries());
    write_collection(dir, "repositories.json", space.repositories());
    write_collection(dir, "vocabularies.json", space.vocabularies());
    write_collection(dir, "concepts.json", space.concepts());
    write_collection(dir, "agents.json", space.agents());
    write_collection(dir, "units.json", space.units());
    write_collection(dir, "links.json", space.links());
    for (const auto& entry : fs::directory_iterator(dir / "manifests")) fs::remove(entry.path());
    for (const auto& [id, m] : space.manifests())
        write_file(dir / "manifests" / (text::percent_encode(id) + ".tsv"), manifest_text(m));
}

SpaceState read_space_files(SpaceName name, const fs::path& dir) {
    SpaceState state(name);
    auto put_all = [&](const char* kind, const auto& items) {
        for (const auto& item : items) state.apply({{"op", "put"}, {"kind", kind}, {"value", item}});
    };
    if (!fs::exists(dir)) return state;
    put_all("country", read_collection<Country>(dir, "countries.json"));
    put_all("repository", read_collection<Repository>(dir, "repositories.json"));
    put_all("vocabulary", read_collection<Vocabulary>(dir, "vocabularies.json"));
    put_all("concept", read_collection<Concept>(dir, "concepts.json"));
    put_all("agent", read_collection<HistoricalAgent>(dir, "agents.json"));
    put_all("unit", read_collection<DocumentaryUnit>(dir, "units.json"));
    put_all("link", read_collection<Link>(dir, "links.json"));
    if (fs::exists(dir / "manifests")) {
        std::vector<fs::path> files;
        for (const auto& entry : fs::directory_iterator(dir / "manifests")) files.push_back(entry.path());
        std::sort(files.begin(), files.end());
        for (const auto& p : files)
            state.apply({{"op", "put"}, {"kind", "manifest"}, {"value", parse_manifest_text(read_file(p))}});
    }
    return state;
}

void Store::load() {
    const fs::path& dir = *options_.directory;
    fs::create_directories(dir);
    staging_ = std::make_shared<SpaceState>(read_space_files(SpaceName::staging, dir / "staging"));
    production_ = std::make_shared<SpaceState>(read_space_files(SpaceName::production, dir / "production"));

    fs::path log = dir / kLogFile;
    if (!fs::exists(log)) return;
    std::istringstream in(read_file(log));
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json entry;
        try {
            entry = json::parse(line);
        } catch (const json::parse_error&) {
            break;  // torn final write: the commit never completed
        }
        auto space = parse_space_name(entry.at("space").get<std::string>());
        if (!space) throw Error("store-corrupt", "log entry names unknown space");
        SpaceState& target = *slot(*space);
        for (const auto& op : entry.at("ops")) target.apply(op);
        ++commits_since_snapshot_;
    }
}

void Store::append_log(SpaceName name, const std::vector<json>& ops) {
    std::ofstream out(*options_.directory / kLogFile, std::ios::binary | std::ios::app);
    json entry{{"space", to_string(name)}, {"ops", ops}};
    out << entry.dump(-1, ' ', false, json::error_handler_t::replace) << '\n';
    out.flush();
    if (!out) throw Error("store-io", "cannot append to transaction log");
}

void Store::write_snapshot_locked() {
    const fs::path& dir = *options_.directory;
    for (SpaceName name : {SpaceName::staging, SpaceName::production}) {
        fs::path final_dir = dir / std::string(to_string(name));
        fs::path tmp_dir = dir / (std::string(to_string(name)) + ".tmp");
        fs::remove_all(tmp_dir);
        write_space_files(*snapshot(name), tmp_dir);
        fs::remove_all(final_dir);
        fs::rename(tmp_dir, final_dir);
    }
    std::ofstream(dir / kLogFile, std::ios::trunc);
    commits_since_snapshot_ = 0;
}

}  // namespace archint
