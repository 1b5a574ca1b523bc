#include "archint/store.hpp"

#include <algorithm>

#include "archint/digest.hpp"
#include "archint/error.hpp"
#include "archint/interchange.hpp"

namespace archint {

using nlohmann::json;

std::string_view to_string(SpaceName name) { return name == SpaceName::staging ? "staging" : "production"; }

std::optional<SpaceName> parse_space_name(std::string_view token) {
    if (token == "staging") return SpaceName::staging;
    if (token == "production") return SpaceName::production;
    return std::nullopt;
}

void to_json(json& j, const SyncManifest& m) {
    j = json{{"dataset_id", m.dataset_id}, {"timestamp", text::format_utc(m.timestamp)}, {"entries", m.entries}};
}

void from_json(const json& j, SyncManifest& m) {
    m.dataset_id = j.at("dataset_id").get<std::string>();
    auto ts = text::parse_utc(j.at("timestamp").get<std::string>());
    m.timestamp = ts.value_or(text::Instant{});
    m.entries = j.at("entries").get<std::map<std::string, std::string>>();
}

// ---------------------------------------------------------------------------
// SpaceState
// ---------------------------------------------------------------------------

std::string SpaceState::parent_key(std::string_view repository_id, const std::optional<std::string>& parent_id) {
    if (parent_id) return *parent_id;
    return "\x01repo:" + std::string(repository_id);
}

const SyncManifest* SpaceState::manifest(std::string_view dataset_id) const {
    auto it = manifests_.find(std::string(dataset_id));
    return it == manifests_.end() ? nullptr : &it->second;
}

const Repository* SpaceState::find_repository(std::string_view id) const {
    auto it = repositories_.find(std::string(id));
    return it == repositories_.end() ? nullptr : &it->second;
}

std::vector<const Link*> SpaceState::inbound_links(std::string_view id) const {
    std::vector<const Link*> out;
    for (const auto& [_, link] : links_)
        if (link.target_id == id) out.push_back(&link);
    return out;
}

bool SpaceState::entity_exists(std::string_view id) const {
    std::string key(id);
    return units_.count(key) || repositories_.count(key) || countries_.count(key) || concepts_.count(key) ||
           agents_.count(key) || vocabularies_.count(key);
}

const DocumentaryUnit* SpaceState::find_unit(std::string_view global_id) const {
    auto it = units_.find(std::string(global_id));
    return it == units_.end() ? nullptr : &it->second;
}

bool SpaceState::has_repository(std::string_view id) const { return find_repository(id) != nullptr; }

const Concept* SpaceState::find_concept(std::string_view id) const {
    auto it = concepts_.find(std::string(id));
    return it == concepts_.end() ? nullptr : &it->second;
}

const HistoricalAgent* SpaceState::find_agent(std::string_view id) const {
    auto it = agents_.find(std::string(id));
    return it == agents_.end() ? nullptr : &it->second;
}

std::vector<const DocumentaryUnit*> SpaceState::children_of(std::string_view repository_id,
                                                            const std::optional<std::string>& parent_id) const {
    std::vector<const DocumentaryUnit*> out;
    auto it = children_index_.find(parent_key(repository_id, parent_id));
    if (it == children_index_.end()) return out;
    for (const auto& gid : it->second)
        if (const auto* u = find_unit(gid)) out.push_back(u);
    std::sort(out.begin(), out.end(), [](const DocumentaryUnit* a, const DocumentaryUnit* b) {
        return std::tie(a->sibling_index, a->global_id) < std::tie(b->sibling_index, b->global_id);
    });
    return out;
}

std::vector<const DocumentaryUnit*> SpaceState::children_of(const DocumentaryUnit& unit) const {
    return children_of(unit.repository_id, unit.global_id);
}

void SpaceState::put_unit(DocumentaryUnit unit) {
    auto existing = units_.find(unit.global_id);
    if (existing != units_.end()) {
        auto key = parent_key(existing->second.repository_id, existing->second.parent_id);
        if (auto idx = children_index_.find(key); idx != children_index_.end()) idx->second.erase(unit.global_id);
    }
    children_index_[parent_key(unit.repository_id, unit.parent_id)].insert(unit.global_id);
    std::string id = unit.global_id;
    units_.insert_or_assign(std::move(id), std::move(unit));
}

void SpaceState::erase_unit(const std::string& global_id) {
    auto it = units_.find(global_id);
    if (it == units_.end()) return;
    auto key = parent_key(it->second.repository_id, it->second.parent_id);
    if (auto idx = children_index_.find(key); idx != children_index_.end()) {
        idx->second.erase(global_id);
        if (idx->second.empty()) children_index_.erase(idx);
    }
    units_.erase(it);
}

void SpaceState::apply(const json& op) {
    const std::string kind = op.at("kind").get<std::string>();
    const bool put = op.at("op").get<std::string>() == "put";
    if (put) {
        const json& v = op.at("value");
        if (kind == "country") {
            auto c = v.get<Country>();
            countries_.insert_or_assign(c.code, c);
        } else if (kind == "repository") {
            auto r = v.get<Repository>();
            repositories_.insert_or_assign(r.id, r);
        } else if (kind == "unit") {
            put_unit(v.get<DocumentaryUnit>());
        } else if (kind == "vocabulary") {
            auto x = v.get<Vocabulary>();
            vocabularies_.insert_or_assign(x.id, x);
        } else if (kind == "concept") {
            auto x = v.get<Concept>();
            concepts_.insert_or_assign(x.id, x);
        } else if (kind == "agent") {
            auto x = v.get<HistoricalAgent>();
            agents_.insert_or_assign(x.id, x);
        } else if (kind == "link") {
            auto x = v.get<Link>();
            links_.insert_or_assign(x.id, x);
        } else if (kind == "manifest") {
            auto x = v.get<SyncManifest>();
            manifests_.insert_or_assign(x.dataset_id, x);
        } else {
            throw Error("store-corrupt", "unknown entity kind '" + kind + "' in log");
        }
        return;
    }
    const std::string id = op.at("id").get<std::string>();
    if (kind == "unit")
        erase_unit(id);
    else if (kind == "link")
        links_.erase(id);
    else if (kind == "manifest")
        manifests_.erase(id);
    else
        throw Error("store-corrupt", "cannot erase entity kind '" + kind + "'");
}

// ---------------------------------------------------------------------------
// Transaction
// ---------------------------------------------------------------------------

Transaction::Transaction(Store& store, std::unique_lock<std::mutex> lock, std::shared_ptr<SpaceState> working)
    : store_(&store), lock_(std::move(lock)), working_(std::move(working)) {}

Transaction::Transaction(Transaction&& other) noexcept
    : store_(std::exchange(other.store_, nullptr)),
      lock_(std::move(other.lock_)),
      working_(std::move(other.working_)),
      ops_(std::move(other.ops_)) {}

Transaction::~Transaction() {
    if (store_) rollback();
}

void Transaction::record(json op) {
    if (!store_) throw Error("transaction-closed", "transaction is no longer active");
    working_->apply(op);
    ops_.push_back(std::move(op));
}

void Transaction::put_country(const Country& v) { record({{"op", "put"}, {"kind", "country"}, {"value", v}}); }
void Transaction::put_repository(const Repository& v) { record({{"op", "put"}, {"kind", "repository"}, {"value", v}}); }
void Transaction::put_unit(const DocumentaryUnit& v) { record({{"op", "put"}, {"kind", "unit"}, {"value", v}}); }
void Transaction::erase_unit(const std::string& id) { record({{"op", "erase"}, {"kind", "unit"}, {"id", id}}); }
void Transaction::put_vocabulary(const Vocabulary& v) { record({{"op", "put"}, {"kind", "vocabulary"}, {"value", v}}); }
void Transaction::put_concept(const Concept& v) { record({{"op", "put"}, {"kind", "concept"}, {"value", v}}); }
void Transaction::put_agent(const HistoricalAgent& v) { record({{"op", "put"}, {"kind", "agent"}, {"value", v}}); }
void Transaction::put_link(const Link& v) { record({{"op", "put"}, {"kind", "link"}, {"value", v}}); }
void Transaction::erase_link(const std::string& id) { record({{"op", "erase"}, {"kind", "link"}, {"id", id}}); }
void Transaction::put_manifest(const SyncManifest& v) { record({{"op", "put"}, {"kind", "manifest"}, {"value", v}}); }
void Transaction::erase_manifest(const std::string& id) {
    record({{"op", "erase"}, {"kind", "manifest"}, {"id", id}});
}

void Transaction::commit() {
    if (!store_) throw Error("transaction-closed", "transaction is no longer active");
    Store* store = std::exchange(store_, nullptr);
    try {
        if (!ops_.empty()) store->publish(working_, ops_);
    } catch (...) {
        working_.reset();
        ops_.clear();
        lock_.unlock();
        throw;
    }
    working_.reset();
    ops_.clear();
    lock_.unlock();
}

void Transaction::rollback() {
    if (!store_) return;
    store_ = nullptr;
    working_.reset();
    ops_.clear();
    if (lock_.owns_lock()) lock_.unlock();
}

// ---------------------------------------------------------------------------
// Store
// ---------------------------------------------------------------------------

Store::Store(StoreOptions options)
    : options_(std::move(options)),
      staging_(std::make_shared<SpaceState>(SpaceName::staging)),
      production_(std::make_shared<SpaceState>(SpaceName::production)),
      clock_(text::now_utc) {
    if (options_.directory) load();
}

std::shared_ptr<SpaceState>& Store::slot(SpaceName name) {
    return name == SpaceName::staging ? staging_ : production_;
}

std::shared_ptr<const SpaceState> Store::snapshot(SpaceName name) const {
    std::lock_guard lock(read_mutex_);
    return name == SpaceName::staging ? staging_ : production_;
}

Transaction Store::begin(SpaceName name) {
    std::unique_lock lock(write_mutex_);
    auto working = std::make_shared<SpaceState>(*snapshot(name));
    return Transaction(*this, std::move(lock), std::move(working));
}

void Store::publish(std::shared_ptr<SpaceState> state, const std::vector<json>& ops) {
    if (commit_hook_) commit_hook_(state->name(), ops);
    if (options_.directory) append_log(state->name(), ops);
    {
        std::lock_guard lock(read_mutex_);
        slot(state->name()) = std::move(state);
    }
    if (options_.directory && ++commits_since_snapshot_ >= options_.snapshot_every) write_snapshot_locked();
}

text::Instant Store::now() const { return clock_(); }
void Store::set_clock(std::function<text::Instant()> clock) { clock_ = std::move(clock); }
void Store::set_commit_hook(CommitHook hook) { commit_hook_ = std::move(hook); }

void Store::checkpoint() {
    if (!options_.directory) return;
    std::lock_guard lock(write_mutex_);
    write_snapshot_locked();
}

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

std::string_view to_string(UnitAction action) {
    switch (action) {
        case UnitAction::created: return "created";
        case UnitAction::updated: return "updated";
        case UnitAction::unchanged: return "unchanged";
        case UnitAction::deleted: return "deleted";
        case UnitAction::skipped: return "skipped";
        case UnitAction::retained: return "retained";
    }
    return "unknown";
}

namespace {

struct UpsertContext {
    Transaction& txn;
    const std::string& repository_id;
    const std::string& dataset_id;
    const UpsertOptions& options;
    ChangeSummary summary;
    json failures = json::array();
};

void upsert_level(UpsertContext& ctx, const std::optional<std::string>& parent_id, const std::vector<Record>& records) {
    std::set<std::string> seen;
    for (const auto& r : records) {
        if (!seen.insert(text::collapse_whitespace(r.local_id)).second)
            throw Error("duplicate-sibling",
                        "local_id '" + r.local_id + "' occurs twice under " + parent_id.value_or(ctx.repository_id),
                        {{"local_id", r.local_id}, {"parent", parent_id.value_or(ctx.repository_id)}});
    }

    for (std::size_t i = 0; i < records.size(); ++i) {
        const Record& record = records[i];
        DocumentaryUnit unit = unit_from_record(record, ctx.repository_id, parent_id, i, ctx.dataset_id);
        ValidationReport report = validate_unit(unit, ctx.txn.view());
        if (!report.ok()) {
            SkippedRecord skipped{unit.global_id, report.violations, count_records(record.children)};
            json vj = json::array();
            for (const auto& v : report.violations) vj.push_back({{"code", v.code}, {"message", v.message}});
            ctx.failures.push_back({{"global_id", unit.global_id}, {"violations", vj}});
            ctx.summary.skipped.push_back(std::move(skipped));
            ctx.summary.actions.push_back({unit.global_id, UnitAction::skipped});
            continue;
        }

        const std::string digest = unit_content_digest(unit);
        const DocumentaryUnit* existing = ctx.txn.view().find_unit(unit.global_id);
        UnitAction action = UnitAction::created;
        if (existing) {
            bool same_content = unit_content_digest(*existing) == digest;
            action = same_content && existing->sibling_index == unit.sibling_index ? UnitAction::unchanged
                                                                                    : UnitAction::updated;
        }
        switch (action) {
            case UnitAction::created: ++ctx.summary.created; break;
            case UnitAction::updated: ++ctx.summary.updated; break;
            default: ++ctx.summary.unchanged; break;
        }
        if (action != UnitAction::unchanged) ctx.txn.put_unit(unit);
        ctx.summary.actions.push_back({unit.global_id, action});
        ctx.summary.digests[unit.global_id] = digest;

        upsert_level(ctx, unit.global_id, record.children);
    }
}

}  // namespace

ChangeSummary upsert_subtree(Transaction& txn, const std::string& repository_id,
                             const std::optional<std::string>& parent_id, const std::vector<Record>& records,
                             const std::string& dataset_id, const UpsertOptions& options) {
    if (parent_id && !txn.view().find_unit(*parent_id))
        throw Error("dangling-parent", "parent unit '" + *parent_id + "' does not exist", {{"parent_id", *parent_id}});
    UpsertContext ctx{txn, repository_id, dataset_id, options, {}, json::array()};
    upsert_level(ctx, parent_id, records);
    if (!options.skip_invalid && !ctx.failures.empty())
        throw Error("validation-failure",
                    std::to_string(ctx.failures.size()) + " record(s) failed validation", {{"failures", ctx.failures}});
    return std::move(ctx.summary);
}

namespace {

UnitTree build_unit_tree(const SpaceState& space, const DocumentaryUnit& unit, std::optional<std::size_t> depth) {
    UnitTree tree{unit, {}};
    if (depth && *depth == 0) return tree;
    std::optional<std::size_t> next;
    if (depth) next = *depth - 1;
    for (const auto* child : space.children_of(unit)) tree.children.push_back(build_unit_tree(space, *child, next));
    return tree;
}

}  // namespace

UnitTree get_subtree(const SpaceState& space, const std::string& global_id, std::optional<std::size_t> depth) {
    const DocumentaryUnit* unit = space.find_unit(global_id);
    if (!unit) throw Error("not-found", "unit '" + global_id + "' not found", {{"global_id", global_id}});
    return build_unit_tree(space, *unit, depth);
}

json to_json(const UnitTree& tree) {
    json j = tree.unit;
    j["children"] = json::array();
    for (const auto& c : tree.children) j["children"].push_back(to_json(c));
    return j;
}

namespace {

template <typename Map>
void digest_collection(Sha256& h, std::string_view kind, const Map& items) {
    for (const auto& [id, value] : items) {
        h.update(kind).update("\t").update(id).update("\t").update(sha256_hex(canonical(json(value)))).update("\n");
    }
}

void digest_manifests(Sha256& h, const std::map<std::string, SyncManifest>& manifests) {
    for (const auto& [id, m] : manifests) {
        h.update("manifest\t").update(id).update("\t").update(sha256_hex(canonical(json(m.entries)))).update("\n");
    }
}

}  // namespace

std::string space_digest(const SpaceState& space, const DigestScope& scope) {
    Sha256 h;
    switch (scope.kind) {
        case DigestScope::Kind::all:
            digest_collection(h, "country", space.countries());
            digest_collection(h, "repository", space.repositories());
            digest_collection(h, "vocabulary", space.vocabularies());
            digest_collection(h, "concept", space.concepts());
            digest_collection(h, "agent", space.agents());
            digest_collection(h, "unit", space.units());
            digest_collection(h, "link", space.links());
            digest_manifests(h, space.manifests());
            break;
        case DigestScope::Kind::repository:
            if (const auto* repo = space.find_repository(scope.id))
                digest_collection(h, "repository", std::map<std::string, Repository>{{repo->id, *repo}});
            for (const auto& [id, unit] : space.units())
                if (unit.repository_id == scope.id)
                    h.update("unit\t").update(id).update("\t").update(unit_full_digest(unit)).update("\n");
            break;
        case DigestScope::Kind::dataset:
            for (const auto& [id, unit] : space.units())
                if (unit.source_dataset == scope.id)
                    h.update("unit\t").update(id).update("\t").update(unit_full_digest(unit)).update("\n");
            break;
    }
    return h.hex();
}

std::string space_digest_excluding_dataset(const SpaceState& space, const std::string& dataset_id) {
    Sha256 h;
    digest_collection(h, "country", space.countries());
    digest_collection(h, "repository", space.repositories());
    digest_collection(h, "vocabulary", space.vocabularies());
    digest_collection(h, "concept", space.concepts());
    digest_collection(h, "agent", space.agents());
    for (const auto& [id, unit] : space.units())
        if (unit.source_dataset != dataset_id)
            h.update("unit\t").update(id).update("\t").update(unit_full_digest(unit)).update("\n");
    digest_collection(h, "link", space.links());
    std::map<std::string, SyncManifest> others;
    for (const auto& [id, m] : space.manifests())
        if (id != dataset_id) others.emplace(id, m);
    digest_manifests(h, others);
    return h.hex();
}

json to_json(const PromotionReport& r) {
    json actions = json::array();
    for (const auto& a : r.actions) actions.push_back({{"global_id", a.global_id}, {"action", to_string(a.action)}});
    return {{"dataset_id", r.dataset_id}, {"created", r.created}, {"updated", r.updated},
            {"unchanged", r.unchanged},   {"deleted", r.deleted}, {"actions", actions},
            {"warnings", r.warnings}};
}

namespace {

std::size_t depth_of(const std::string& global_id) {
    return static_cast<std::size_t>(std::count(global_id.begin(), global_id.end(), '/'));
}

}  // namespace

PromotionReport promote_dataset(Store& store, const std::string& dataset_id, DatasetStatus status) {
    if (status != DatasetStatus::approved)
        throw Error("not-approved", "dataset '" + dataset_id + "' is " + std::string(to_string(status)) +
                                        ", promotion requires approval",
                    {{"status", to_string(status)}});
    auto staging = store.snapshot(SpaceName::staging);
    const SyncManifest* manifest = staging->manifest(dataset_id);
    if (!manifest) throw Error("missing-manifest", "no staging manifest for dataset '" + dataset_id + "'");

    std::vector<const DocumentaryUnit*> staged;
    for (const auto& [id, unit] : staging->units())
        if (unit.source_dataset == dataset_id) staged.push_back(&unit);
    std::stable_sort(staged.begin(), staged.end(), [](const DocumentaryUnit* a, const DocumentaryUnit* b) {
        return depth_of(a->global_id) < depth_of(b->global_id);
    });

    PromotionReport report;
    report.dataset_id = dataset_id;
    Transaction txn = store.begin(SpaceName::production);
    const SpaceState& prod = txn.view();

    // Portal entities are administered per space; promotion never creates them.
    auto require_repository = [&](const std::string& repo_id) {
        if (!prod.find_repository(repo_id))
            throw Error("unresolved-repository", "repository '" + repo_id + "' is not present in production",
                        {{"repository_id", repo_id}});
    };
    auto require_target = [&](const std::string& target) {
        if (!prod.find_concept(target) && !prod.find_agent(target))
            throw Error("unresolved-target", "access point target '" + target + "' is not present in production",
                        {{"target_id", target}});
    };

    std::set<std::string> staged_ids;
    for (const DocumentaryUnit* unit : staged) {
        staged_ids.insert(unit->global_id);
        require_repository(unit->repository_id);
        for (const auto& d : unit->descriptions)
            for (const auto& ap : d.access_points)
                if (ap.target) require_target(*ap.target);
        if (unit->parent_id && !prod.find_unit(*unit->parent_id))
            throw Error("unresolved-parent", "parent '" + *unit->parent_id + "' of '" + unit->global_id +
                                                 "' is not present in production");
        const DocumentaryUnit* existing = prod.find_unit(unit->global_id);
        UnitAction action = UnitAction::created;
        if (existing) {
            if (existing->source_dataset != dataset_id) {
                report.warnings.push_back("unit '" + unit->global_id + "' belongs to dataset '" +
                                          existing->source_dataset + "' in production; left untouched");
                report.actions.push_back({unit->global_id, UnitAction::retained});
                continue;
            }
            action = unit_full_digest(*existing) == unit_full_digest(*unit) ? UnitAction::unchanged : UnitAction::updated;
        }
        if (action == UnitAction::created) ++report.created;
        if (action == UnitAction::updated) ++report.updated;
        if (action == UnitAction::unchanged) ++report.unchanged;
        if (action != UnitAction::unchanged) txn.put_unit(*unit);
        report.actions.push_back({unit->global_id, action});
    }

    // Deletions: deepest first so children go before their parents.
    std::vector<std::string> doomed;
    for (const auto& [id, unit] : prod.units())
        if (unit.source_dataset == dataset_id && !staged_ids.count(id)) doomed.push_back(id);
    std::stable_sort(doomed.begin(), doomed.end(),
                     [](const std::string& a, const std::string& b) { return depth_of(a) > depth_of(b); });
    for (const auto& id : doomed) {
        const DocumentaryUnit* unit = prod.find_unit(id);
        if (!prod.inbound_links(id).empty()) {
            report.warnings.push_back("unit '" + id + "' is the target of a link; not deleted");
            report.actions.push_back({id, UnitAction::retained});
            continue;
        }
        if (!prod.children_of(*unit).empty()) {
            report.warnings.push_back("unit '" + id + "' still has children in production; not deleted");
            report.actions.push_back({id, UnitAction::retained});
            continue;
        }
        txn.erase_unit(id);
        ++report.deleted;
        report.actions.push_back({id, UnitAction::deleted});
    }

    SyncManifest copy = *manifest;
    if (const SyncManifest* current = prod.manifest(dataset_id); !current || current->entries != copy.entries ||
                                                                   current->timestamp != copy.timestamp)
        txn.put_manifest(copy);
    txn.commit();
    return report;
}

}  // namespace archint
