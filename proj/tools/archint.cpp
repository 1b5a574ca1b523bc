// archint: command line front end of the integration workbench.

#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "archint/control.hpp"
#include "archint/error.hpp"
#include "archint/interchange.hpp"

using namespace archint;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw Error("not-found", "cannot read " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json read_json(const fs::path& p) {
    try {
        return json::parse(slurp(p));
    } catch (const json::parse_error& e) {
        throw Error("parse-error", p.string() + ": " + e.what());
    }
}

void print(const json& j) { std::cout << j.dump(2) << "\n"; }

json trace_json(const std::vector<StageTrace>& trace) {
    json out = json::array();
    for (const auto& t : trace) out.push_back(to_json(t));
    return out;
}

Service* g_service = nullptr;
void on_signal(int) {
    if (g_service) g_service->stop();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"archival metadata integration workbench"};
    app.require_subcommand(1);

    std::optional<std::string> config_file, data_dir;
    std::string actor = "cli";
    app.add_option("-c,--config", config_file, "JSON configuration file");
    app.add_option("-d,--data-dir", data_dir, "data directory (store and datasets)");
    app.add_option("--actor", actor, "name recorded in the audit log");

    // dataset ...
    auto* dataset = app.add_subcommand("dataset", "dataset lifecycle");
    dataset->require_subcommand(1);
    std::string id, file;
    std::size_t limit = 1;
    std::optional<std::string> mapping_file;
    bool dry_run = false, allow_deletions = false, lenient = false, keep_going = false;
    std::string approver;

    auto* create = dataset->add_subcommand("create", "create a dataset from a definition file");
    create->add_option("definition", file, "definition JSON")->required();
    auto* update = dataset->add_subcommand("update", "replace a dataset definition (resets to draft)");
    update->add_option("definition", file, "definition JSON")->required();
    auto* list = dataset->add_subcommand("list", "list datasets");
    auto* show = dataset->add_subcommand("show", "show one dataset");
    auto* fetch = dataset->add_subcommand("fetch", "fetch source files");
    auto* transform = dataset->add_subcommand("transform", "run the transformation pipeline");
    auto* preview = dataset->add_subcommand("preview", "preview the first files");
    preview->add_option("-k,--limit", limit, "number of files")->check(CLI::PositiveNumber);
    preview->add_option("--mapping", mapping_file, "mapping table replacing the first xml-mapping stage");
    auto* ingest = dataset->add_subcommand("ingest", "ingest transformed records into staging");
    auto* cleanup = dataset->add_subcommand("cleanup", "remove stale units of a dataset");
    auto* approve = dataset->add_subcommand("approve", "approve a staged dataset");
    approve->add_option("--approver", approver, "approver name")->required();
    auto* promote = dataset->add_subcommand("promote", "promote an approved dataset to production");
    auto* diff = dataset->add_subcommand("diff", "staging vs production for a dataset");
    for (auto* sub : {show, fetch, transform, preview, ingest, cleanup, approve, promote, diff})
        sub->add_option("id", id, "dataset id")->required();
    for (auto* sub : {ingest, cleanup}) {
        sub->add_flag("--dry-run", dry_run, "report without committing");
        sub->add_flag("--allow-deletions", allow_deletions, "delete stale units");
        sub->add_flag("--lenient", lenient, "skip invalid records");
    }

    // serve
    auto* serve = app.add_subcommand("serve", "run the HTTP service");
    std::optional<std::string> host;
    std::optional<int> port;
    serve->add_option("--host", host, "bind address");
    serve->add_option("--port", port, "port");

    // export-resources
    auto* exporter = app.add_subcommand("export-resources", "write a dataset's integration resources");
    std::string out_dir;
    exporter->add_option("dataset", id, "dataset id")->required();
    exporter->add_option("out", out_dir, "output folder")->required();

    // batch
    auto* batch = app.add_subcommand("batch", "fetch, transform and ingest several datasets");
    std::vector<std::string> ids;
    batch->add_option("ids", ids, "dataset ids in order")->required();
    batch->add_flag("--continue", keep_going, "continue after a failed dataset");
    batch->add_flag("--dry-run", dry_run, "roll back every transaction");
    batch->add_flag("--lenient", lenient, "skip invalid records");

    // entities / units
    auto* entities = app.add_subcommand("entities", "manage reference entities");
    entities->require_subcommand(1);
    auto* import = entities->add_subcommand("import", "load countries, repositories, vocabularies, agents and links");
    std::string space_name = "staging";
    import->add_option("file", file, "entity JSON")->required();
    import->add_option("--space", space_name, "target space")->check(CLI::IsMember({"staging", "production"}));
    auto* unit = app.add_subcommand("unit", "show a stored unit subtree");
    std::string global_id;
    std::optional<std::size_t> depth;
    unit->add_option("space", space_name, "space")->required()->check(CLI::IsMember({"staging", "production"}));
    unit->add_option("global_id", global_id, "global id")->required();
    unit->add_option("--depth", depth, "levels below the unit");

    CLI11_PARSE(app, argc, argv);

    try {
        json flags = json::object();
        if (data_dir) flags["data_dir"] = *data_dir;
        if (host) flags["host"] = *host;
        if (port) flags["port"] = *port;
        std::optional<fs::path> config_path;
        if (config_file) config_path = *config_file;
        Config config = load_config(config_path, flags);

        StoreOptions store_options;
        store_options.directory = config.data_dir / "store";
        store_options.snapshot_every = config.snapshot_every;
        Store store(store_options);
        Workbench wb(store, config.data_dir);

        IngestOptions options;
        auto ingest_opts = [&](IngestOptions base) {
            base.dry_run = base.dry_run || dry_run;
            base.allow_deletions = base.allow_deletions || allow_deletions;
            base.lenient = base.lenient || lenient;
            base.continue_on_error = keep_going;
            return base;
        };

        if (*create) {
            print(wb.create_dataset(read_json(file), fs::path(file).parent_path(), actor).to_json());
        } else if (*update) {
            json def = read_json(file);
            print(wb.update_dataset(def.value("id", std::string{}), def, fs::path(file).parent_path(), actor).to_json());
        } else if (*list) {
            json out = json::array();
            for (const auto& d : wb.list()) out.push_back({{"id", d.id}, {"status", to_string(d.status)}});
            print(out);
        } else if (*show) {
            print(wb.get(id).to_json());
        } else if (*fetch) {
            FileSet set = wb.fetch(id, actor);
            json errors = json::array();
            for (const auto& e : set.errors) errors.push_back({{"uri", e.uri}, {"message", e.message}});
            print({{"items", set.items.size()}, {"errors", errors}, {"digest", set.digest()}});
        } else if (*transform) {
            PipelineResult r = wb.transform(id, actor);
            print({{"records", r.records.size()}, {"trace", trace_json(r.trace)}});
        } else if (*preview) {
            std::optional<std::string> mapping;
            if (mapping_file) mapping = slurp(*mapping_file);
            PreviewResult p = wb.preview(id, limit, mapping);
            print({{"records", json::parse(canonical_records(p.records))}, {"ead", p.ead}, {"trace", trace_json(p.trace)}});
        } else if (*ingest) {
            print(to_json(wb.ingest(id, ingest_opts(wb.get(id).ingest_options), actor)));
        } else if (*cleanup) {
            print(to_json(wb.cleanup(id, ingest_opts(wb.get(id).ingest_options), actor)));
        } else if (*approve) {
            print(wb.approve(id, approver).to_json());
        } else if (*promote) {
            print(to_json(wb.promote(id, actor)));
        } else if (*diff) {
            print(wb.diff(id));
        } else if (*serve) {
            Service service(wb);
            g_service = &service;
            std::signal(SIGINT, on_signal);
            std::signal(SIGTERM, on_signal);
            std::cerr << "listening on " << config.host << ":" << config.port << "\n";
            service.run(config.host, config.port);
            g_service = nullptr;
        } else if (*exporter) {
            wb.export_resources(id, out_dir);
            print({{"dataset_id", id}, {"out", out_dir}});
        } else if (*batch) {
            BatchResult result = wb.batch(ids, ingest_opts(options), actor);
            print(to_json(result));
            if (!result.ok()) return 3;
        } else if (*import) {
            import_entities(store, read_json(file), *parse_space_name(space_name));
            print({{"imported", file}, {"space", space_name}});
        } else if (*unit) {
            auto snapshot = store.snapshot(*parse_space_name(space_name));
            if (!snapshot->find_unit(global_id)) throw Error("not-found", "no unit '" + global_id + "'");
            print(to_json(get_subtree(*snapshot, global_id, depth)));
        }
        return 0;
    } catch (const Error& e) {
        std::cerr << e.to_json().dump(2) << "\n";
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
