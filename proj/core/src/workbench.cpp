#include <fstream>
#include <set>
#include <sstream>

#include "archint/control.hpp"
#include "archint/digest.hpp"
#include "archint/error.hpp"
#include "archint/interchange.hpp"

namespace archint {

using nlohmann::json;
namespace fs = std::filesystem;

namespace detail {
Dataset dataset_from_saved(const json& j);
}

namespace {

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& p, const std::string& content) {
    fs::create_directories(p.parent_path());
    fs::path tmp = p;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out << content;
        if (!out) throw Error("io-error", "cannot write " + p.string());
    }
    fs::rename(tmp, p);
}

[[noreturn]] void precondition(const Dataset& d, const std::string& what) {
    throw Error("precondition-violation", "dataset '" + d.id + "' is " + std::string(to_string(d.status)) + ": " + what,
                {{"status", to_string(d.status)}});
}

}  // namespace

void import_entities(Store& store, const json& entities, SpaceName space) {
    Transaction txn = store.begin(space);
    try {
        for (const auto& v : entities.value("countries", json::array())) txn.put_country(v.get<Country>());
        for (const auto& v : entities.value("repositories", json::array())) txn.put_repository(v.get<Repository>());
        for (const auto& v : entities.value("vocabularies", json::array())) txn.put_vocabulary(v.get<Vocabulary>());
        for (const auto& v : entities.value("concepts", json::array())) txn.put_concept(v.get<Concept>());
        for (const auto& v : entities.value("agents", json::array())) txn.put_agent(v.get<HistoricalAgent>());
        for (const auto& v : entities.value("links", json::array())) txn.put_link(v.get<Link>());
    } catch (const json::exception& e) {
        throw Error("invalid-argument", std::string("bad entity file: ") + e.what());
    }
    for (const auto& [id, repo] : txn.view().repositories())
        if (!txn.view().countries().count(repo.country_code))
            throw Error("invalid-argument", "repository '" + id + "' names unknown country '" + repo.country_code + "'");
    txn.commit();
}

Workbench::Workbench(Store& store, fs::path data_dir) : store_(store), data_dir_(std::move(data_dir)) {
    fs::create_directories(data_dir_ / "datasets");
    load_all();
}

fs::path Workbench::dataset_dir(const std::string& id) const { return data_dir_ / "datasets" / text::percent_encode(id); }

void Workbench::save(const Dataset& d) const { write_file(dataset_dir(d.id) / "dataset.json", d.to_json().dump(2) + "\n"); }

void Workbench::load_all() {
    for (const auto& entry : fs::directory_iterator(data_dir_ / "datasets")) {
        fs::path file = entry.path() / "dataset.json";
        if (!fs::exists(file)) continue;
        Dataset d = detail::dataset_from_saved(json::parse(read_file(file)));
        datasets_.emplace(d.id, std::move(d));
    }
}

Dataset& Workbench::require(const std::string& id) {
    auto it = datasets_.find(id);
    if (it == datasets_.end()) throw Error("not-found", "no dataset '" + id + "'", {{"dataset_id", id}});
    return it->second;
}

void Workbench::transition(Dataset& d, DatasetStatus to, const std::string& actor, const std::string& action) {
    d.audit.push_back({store_.now(), actor, action, d.status, to});
    d.status = to;
    if (to != DatasetStatus::error) d.last_error.reset();
    save(d);
}

void Workbench::fail(const std::string& id, const std::string& actor, const std::string& action,
                     const std::string& message) {
    std::lock_guard lock(mutex_);
    Dataset& d = require(id);
    d.last_error = message;
    transition(d, DatasetStatus::error, actor, action + "-failed");
}

Dataset Workbench::create_dataset(const json& definition, const fs::path& base_dir, const std::string& actor) {
    Dataset d = Dataset::from_definition(definition, base_dir);
    std::lock_guard lock(mutex_);
    if (datasets_.count(d.id))
        throw Error("invalid-definition", "dataset '" + d.id + "' already exists",
                    {{"errors", json::array({{{"field", "id"}, {"message", "conflict: id already exists"}}})}});
    if (!store_.snapshot(SpaceName::staging)->find_repository(d.repository_id))
        throw Error("invalid-definition", "repository '" + d.repository_id + "' does not exist",
                    {{"errors", json::array({{{"field", "repository_id"}, {"message", "unknown repository"}}})}});
    d.audit.push_back({store_.now(), actor, "create", DatasetStatus::draft, DatasetStatus::draft});
    save(d);
    datasets_.emplace(d.id, d);
    return d;
}

Dataset Workbench::update_dataset(const std::string& id, const json& definition, const fs::path& base_dir,
                                  const std::string& actor) {
    Dataset fresh = Dataset::from_definition(definition, base_dir);
    if (fresh.id != id) throw Error("invalid-definition", "definition id does not match '" + id + "'");
    std::lock_guard lock(mutex_);
    Dataset& d = require(id);
    fresh.status = d.status;
    fresh.audit = d.audit;
    d = std::move(fresh);
    transition(d, DatasetStatus::draft, actor, "edit");
    return d;
}

Dataset Workbench::get(const std::string& id) const {
    std::lock_guard lock(mutex_);
    return const_cast<Workbench*>(this)->require(id);
}

std::vector<Dataset> Workbench::list() const {
    std::lock_guard lock(mutex_);
    std::vector<Dataset> out;
    for (const auto& [id, d] : datasets_) out.push_back(d);
    return out;
}

std::optional<FileSet> Workbench::fileset(const std::string& id) const {
    fs::path dir = dataset_dir(id) / "fileset";
    if (!fs::exists(dir / "index.json")) return std::nullopt;
    return load_fileset(dir);
}

std::optional<std::vector<Record>> Workbench::transformed_records(const std::string& id) const {
    fs::path file = dataset_dir(id) / "records.json";
    if (!fs::exists(file)) return std::nullopt;
    return records_from_canonical(read_file(file));
}

FileSet Workbench::fetch(const std::string& id, const std::string& actor) {
    Dataset d = get(id);
    std::optional<FileSet> previous = fileset(id);
    FileSet set;
    try {
        set = archint::fetch(d.fetch, previous ? &*previous : nullptr);
    } catch (const Error& e) {
        fail(id, actor, "fetch", e.what());
        throw;
    }
    std::lock_guard lock(mutex_);
    save_fileset(set, dataset_dir(id) / "fileset");
    transition(require(id), DatasetStatus::fetched, actor, "fetch");
    return set;
}

PipelineResult Workbench::transform(const std::string& id, const std::string& actor) {
    Dataset d = get(id);
    std::optional<FileSet> files = fileset(id);
    if (!files) precondition(d, "transform needs a fetched file set");
    auto space = store_.snapshot(SpaceName::staging);
    PipelineResult result;
    try {
        result = run_pipeline(d.pipeline, *files, RunContext{&cache_, space.get()});
    } catch (const Error& e) {
        fail(id, actor, "transform", e.what());
        throw;
    }
    std::lock_guard lock(mutex_);
    write_file(dataset_dir(id) / "records.json", canonical_records(result.records) + "\n");
    json trace = json::array();
    for (const auto& t : result.trace) trace.push_back(to_json(t));
    write_file(dataset_dir(id) / "trace.json", trace.dump(2) + "\n");
    transition(require(id), DatasetStatus::transformed, actor, "transform");
    return result;
}

IngestReport Workbench::ingest(const std::string& id, std::optional<IngestOptions> options, const std::string& actor) {
    Dataset d = get(id);
    if (d.status != DatasetStatus::transformed) precondition(d, "ingest needs status transformed");
    auto records = transformed_records(id);
    if (!records) precondition(d, "no transformed records on disk");
    IngestOptions opts = options.value_or(d.ingest_options);
    IngestReport report;
    try {
        report = ingest_dataset(store_, {d.id, d.repository_id, d.parent_scope}, *records, opts);
    } catch (const Error& e) {
        fail(id, actor, "ingest", e.what());
        throw;
    }
    if (!opts.dry_run) {
        std::lock_guard lock(mutex_);
        transition(require(id), DatasetStatus::staged, actor, "ingest");
    }
    return report;
}

IngestReport Workbench::cleanup(const std::string& id, const IngestOptions& options, const std::string& actor) {
    Dataset d = get(id);
    auto records = transformed_records(id);
    if (!records) precondition(d, "cleanup needs transformed records");
    // The current manifest is recomputed from the latest transform without writing.
    IngestOptions dry = options;
    dry.dry_run = true;
    dry.allow_deletions = false;
    IngestReport preview = ingest_dataset(store_, {d.id, d.repository_id, d.parent_scope}, *records, dry);
    IngestReport report = cleanup_stale(store_, id, preview.current, options);
    if (report.committed) {
        std::lock_guard lock(mutex_);
        Dataset& live = require(id);
        live.audit.push_back({store_.now(), actor, "cleanup", live.status, live.status});
        save(live);
    }
    return report;
}

Dataset Workbench::approve(const std::string& id, const std::string& approver) {
    std::lock_guard lock(mutex_);
    Dataset& d = require(id);
    if (d.status != DatasetStatus::staged)
        throw Error("wrong-status", "dataset '" + id + "' is " + std::string(to_string(d.status)) +
                                        "; only staged datasets can be approved",
                    {{"status", to_string(d.status)}});
    if (approver.empty()) throw Error("invalid-argument", "approval needs an approver");
    transition(d, DatasetStatus::approved, approver, "approve");
    return d;
}

PromotionReport Workbench::promote(const std::string& id, const std::string& actor) {
    Dataset d = get(id);
    if (d.status != DatasetStatus::approved)
        throw Error("wrong-status", "dataset '" + id + "' is " + std::string(to_string(d.status)) +
                                        "; only approved datasets can be promoted",
                    {{"status", to_string(d.status)}});
    // Failures leave the status at approved so the promotion can be retried.
    PromotionReport report = promote_dataset(store_, id, d.status);
    std::lock_guard lock(mutex_);
    transition(require(id), DatasetStatus::promoted, actor, "promote");
    return report;
}

PromotionReport Workbench::approve_and_promote(const std::string& id, const std::string& approver) {
    approve(id, approver);
    return promote(id, approver);
}

PreviewResult Workbench::preview(const std::string& id, std::size_t limit,
                                 const std::optional<std::string>& mapping_override) {
    Dataset d = get(id);
    std::optional<FileSet> files = fileset(id);
    if (!files) precondition(d, "preview needs a fetched file set");
    TransformPipeline pipeline = d.pipeline;
    if (mapping_override) {
        auto it = std::find_if(pipeline.stages.begin(), pipeline.stages.end(),
                               [](const Stage& s) { return s.kind == StageKind::xml_mapping; });
        if (it == pipeline.stages.end())
            throw Error("invalid-argument", "the pipeline has no xml-mapping stage to override");
        json def = it->definition;
        def.erase("profile");
        def["mapping"] = *mapping_override;
        std::size_t index = static_cast<std::size_t>(it - pipeline.stages.begin());
        try {
            *it = Stage::from_json(def);
        } catch (const Error& e) {
            json details = e.details().is_object() ? e.details() : json::object();
            details["stage"] = index;
            throw Error(e.code(), e.what(), details);
        }
    }
    auto space = store_.snapshot(SpaceName::staging);
    return archint::preview(pipeline, *files, limit, RunContext{&cache_, space.get()});
}

json Workbench::diff(const std::string& id) const {
    get(id);
    auto staging = store_.snapshot(SpaceName::staging);
    auto production = store_.snapshot(SpaceName::production);
    std::map<std::string, const DocumentaryUnit*> staged, promoted;
    for (const auto& [gid, u] : staging->units())
        if (u.source_dataset == id) staged.emplace(gid, &u);
    for (const auto& [gid, u] : production->units())
        if (u.source_dataset == id) promoted.emplace(gid, &u);
    json created = json::array(), updated = json::array(), deleted = json::array();
    std::size_t unchanged = 0;
    for (const auto& [gid, u] : staged) {
        auto it = promoted.find(gid);
        if (it == promoted.end()) {
            created.push_back({{"global_id", gid}, {"unit", *u}});
            continue;
        }
        json before = *it->second, after = *u;
        if (before == after) {
            ++unchanged;
            continue;
        }
        updated.push_back({{"global_id", gid}, {"changes", json::diff(before, after)}});
    }
    for (const auto& [gid, u] : promoted)
        if (!staged.count(gid)) deleted.push_back(gid);
    return {{"dataset_id", id},
            {"created", created},
            {"updated", updated},
            {"deleted", deleted},
            {"unchanged", unchanged},
            {"staging_digest", space_digest(*staging, DigestScope::dataset(id))},
            {"production_digest", space_digest(*production, DigestScope::dataset(id))}};
}

BatchResult Workbench::batch(const std::vector<std::string>& ids, const IngestOptions& options, const std::string& actor) {
    std::vector<IngestTarget> targets;
    for (const auto& id : ids) {
        Dataset d = get(id);
        targets.push_back({d.id, d.repository_id, d.parent_scope});
    }
    RecordProducer produce = [&](const IngestTarget& t) {
        fetch(t.dataset_id, actor);
        return transform(t.dataset_id, actor).records;
    };
    BatchResult result = batch_run(store_, targets, produce, options);
    std::lock_guard lock(mutex_);
    for (const auto& o : result.outcomes) {
        Dataset& d = require(o.dataset_id);
        if (o.status == BatchStatus::committed && !options.dry_run) {
            transition(d, DatasetStatus::staged, actor, "ingest");
        } else if (o.status == BatchStatus::failed && d.status != DatasetStatus::error) {
            d.last_error = o.error.value("message", std::string{});
            transition(d, DatasetStatus::error, actor, "ingest-failed");
        }
    }
    return result;
}

void Workbench::export_resources(const std::string& id, const fs::path& out_dir) const {
    Dataset d = get(id);
    fs::create_directories(out_dir);
    std::vector<std::pair<std::string, std::string>> files;  // relative path, description
    json definition = d.definition;
    json stages = json::array();
    const json& stage_list = definition["pipeline"]["stages"];
    for (std::size_t i = 0; i < stage_list.size(); ++i) {
        json stage = stage_list[i];
        std::string prefix = "stage" + std::to_string(i) + "-" + stage["kind"].get<std::string>();
        if (stage.contains("mapping")) {
            std::string rel = "mappings/" + prefix + ".csv";
            write_file(out_dir / rel, stage["mapping"].get<std::string>());
            stage.erase("mapping");
            stage.erase("profile");
            stage["mapping_file"] = rel;
            files.emplace_back(rel, "mapping table of stage " + std::to_string(i));
        }
        if (stage.contains("table")) {
            std::string rel = "concordances/" + prefix + ".csv";
            write_file(out_dir / rel, stage["table"].get<std::string>());
            stage.erase("table");
            stage["table_file"] = rel;
            files.emplace_back(rel, "vocabulary concordance of stage " + std::to_string(i));
        }
        stages.push_back(stage);
    }
    definition["pipeline"] = {{"stages", stages}};
    if (definition["fetch"].contains("upload_dir")) definition["fetch"]["upload_dir"] = "uploads";
    definition["fetch"].erase("bearer_token");
    write_file(out_dir / "dataset.json", definition.dump(2) + "\n");
    files.insert(files.begin(), {"dataset.json", "dataset definition (fetch method, pipeline, ingest options)"});

    std::ostringstream readme;
    readme << "# " << d.id << "\n\n"
           << "Integration resources for dataset `" << d.id << "` of repository `" << d.repository_id << "`.\n\n"
           << "Recreate it with `archint dataset create dataset.json` from this folder.\n\n"
           << "| File | Contents | SHA-256 |\n|---|---|---|\n";
    for (const auto& [rel, what] : files)
        readme << "| `" << rel << "` | " << what << " | `" << sha256_hex(read_file(out_dir / rel)) << "` |\n";
    write_file(out_dir / "README.md", readme.str());
}

}  // namespace archint
