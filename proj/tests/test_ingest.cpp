#include <doctest.h>

#include <algorithm>
#include <set>

#include "archint/error.hpp"
#include "archint/ingest.hpp"
#include "archint/interchange.hpp"
#include "archint/store.hpp"
#include "generators.hpp"

using namespace archint;

namespace {

Record node(const std::string& id, std::vector<Record> children = {}) {
    Record r;
    r.local_id = id;
    r.level = Level::file;
    r.add("title", "Title " + id);
    for (auto& c : children) c.parent_ref = id;
    r.children = std::move(children);
    return r;
}

std::vector<Record> five() { return {node("F", {node("s1", {node("a"), node("b")}), node("s2")})}; }

const std::string kRepo = archint::testing::repository_id(0);

std::string staging_digest(const Store& s) { return space_digest(*s.snapshot(SpaceName::staging)); }

std::set<std::string> tagged_units(const Store& s, const std::string& dataset) {
    std::set<std::string> out;
    for (const auto& [id, u] : s.snapshot(SpaceName::staging)->units())
        if (u.source_dataset == dataset) out.insert(id);
    return out;
}

std::set<std::string> manifest_ids(const Store& s, const std::string& dataset) {
    std::set<std::string> out;
    for (const auto& [id, d] : s.snapshot(SpaceName::staging)->manifest(dataset)->entries) out.insert(id);
    return out;
}

void check_tallies(const IngestReport& r) {
    std::size_t created = 0, updated = 0, unchanged = 0, deleted = 0;
    for (const auto& a : r.actions) {
        created += a.action == UnitAction::created;
        updated += a.action == UnitAction::updated;
        unchanged += a.action == UnitAction::unchanged;
        deleted += a.action == UnitAction::deleted;
    }
    CHECK(created == r.created);
    CHECK(updated == r.updated);
    CHECK(unchanged == r.unchanged);
    CHECK(deleted == r.deleted);
}

std::string code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    return "";
}

}  // namespace

TEST_CASE("ingest counts, idempotence and manifests") {
    Store store;
    archint::testing::seed_repositories(store, 1);
    auto first = ingest_dataset(store, {"ds", kRepo, std::nullopt}, five());
    CHECK(first.created == 5);
    CHECK(first.updated + first.unchanged + first.deleted == 0);
    CHECK(first.committed);
    check_tallies(first);
    CHECK(manifest_ids(store, "ds") == tagged_units(store, "ds"));
    CHECK(first.manifest_digest_before == manifest_digest(nullptr));
    CHECK(first.manifest_digest_after == manifest_digest(store.snapshot(SpaceName::staging)->manifest("ds")));

    auto units_before = store.snapshot(SpaceName::staging)->units();
    auto second = ingest_dataset(store, {"ds", kRepo, std::nullopt}, five());
    CHECK(second.created == 0);
    CHECK(second.updated == 0);
    CHECK(second.unchanged == 5);
    check_tallies(second);
    auto units_after = store.snapshot(SpaceName::staging)->units();
    REQUIRE(units_after.size() == units_before.size());
    for (const auto& [id, u] : units_before) CHECK(unit_full_digest(units_after.at(id)) == unit_full_digest(u));
}

TEST_CASE("strict validation rolls back; lenient skips") {
    Store store;
    archint::testing::seed_repositories(store, 1);
    ingest_dataset(store, {"ds", kRepo, std::nullopt}, {node("keep")});
    auto records = five();
    records[0].children[0].children[1].fields.clear();  // no title
    std::string before = staging_digest(store);
    CHECK(code_of([&] { ingest_dataset(store, {"ds", kRepo, std::nullopt}, records); }) == "validation-failure");
    CHECK(staging_digest(store) == before);

    IngestOptions lenient;
    lenient.lenient = true;
    auto r = ingest_dataset(store, {"ds", kRepo, std::nullopt}, records, lenient);
    CHECK(r.created == 4);
    CHECK(r.skipped == 1);
    CHECK_FALSE(r.warnings.empty());
}

TEST_CASE("dry runs never change the space") {
    Store store;
    archint::testing::seed_repositories(store, 1);
    ingest_dataset(store, {"ds", kRepo, std::nullopt}, {node("old")});
    std::string before = staging_digest(store);
    IngestOptions dry;
    dry.dry_run = true;
    dry.allow_deletions = true;
    auto r = ingest_dataset(store, {"ds", kRepo, std::nullopt}, five(), dry);
    CHECK(r.created == 5);
    CHECK(r.stale == std::vector<std::string>{kRepo + "/old"});
    CHECK_FALSE(r.committed);
    CHECK(staging_digest(store) == before);
}

TEST_CASE("parent scope places records under an existing unit") {
    Store store;
    archint::testing::seed_repositories(store, 1);
    ingest_dataset(store, {"fonds", kRepo, std::nullopt}, {node("F")});
    auto r = ingest_dataset(store, {"items", kRepo, kRepo + "/F"}, {node("i1"), node("i2")});
    CHECK(r.created == 2);
    CHECK(store.snapshot(SpaceName::staging)->find_unit(kRepo + "/F/i2")->parent_id == kRepo + "/F");
    CHECK(code_of([&] { ingest_dataset(store, {"x", kRepo, kRepo + "/missing"}, {node("i")}); }) == "dangling-parent");
}

TEST_CASE("stale cleanup") {
    Store store;
    archint::testing::seed_repositories(store, 1);
    ingest_dataset(store, {"ds", kRepo, std::nullopt}, {node("a"), node("b"), node("c")});
    IngestOptions dry;
    dry.dry_run = true;
    auto current = ingest_dataset(store, {"ds", kRepo, std::nullopt}, {node("a"), node("c")}, dry).current;

    std::string before = staging_digest(store);
    auto listed = cleanup_stale(store, "ds", current);
    CHECK(listed.stale == std::vector<std::string>{kRepo + "/b"});
    CHECK(listed.deleted == 0);
    CHECK(staging_digest(store) == before);

    IngestOptions del;
    del.allow_deletions = true;
    auto done = cleanup_stale(store, "ds", current, del);
    CHECK(done.deleted == 1);
    check_tallies(done);
    CHECK(store.snapshot(SpaceName::staging)->find_unit(kRepo + "/b") == nullptr);
    CHECK(manifest_ids(store, "ds") == std::set<std::string>{kRepo + "/a", kRepo + "/c"});

    CHECK(code_of([&] { cleanup_stale(store, "never", current); }) == "missing-manifest");
}

TEST_CASE("cleanup refuses units other datasets depend on") {
    Store store;
    archint::testing::seed_repositories(store, 1);
    ingest_dataset(store, {"ds1", kRepo, std::nullopt}, {node("F", {node("s")}), node("L")});
    ingest_dataset(store, {"ds2", kRepo, kRepo + "/F/s"}, {node("foreign")});
    {
        Transaction t = store.begin(SpaceName::staging);
        t.put_link({"link-1", kRepo + "/F/s/foreign", kRepo + "/L", LinkKind::associative, std::nullopt});
        t.commit();
    }
    IngestOptions dry;
    dry.dry_run = true;
    auto current = ingest_dataset(store, {"ds1", kRepo, std::nullopt}, {node("other")}, dry).current;
    IngestOptions del;
    del.allow_deletions = true;
    auto r = cleanup_stale(store, "ds1", current, del);
    auto snap = store.snapshot(SpaceName::staging);
    CHECK(snap->find_unit(kRepo + "/F/s") != nullptr);
    CHECK(snap->find_unit(kRepo + "/F") != nullptr);
    CHECK(snap->find_unit(kRepo + "/L") != nullptr);
    CHECK(snap->find_unit(kRepo + "/F/s/foreign") != nullptr);
    CHECK(r.deleted == 0);
    CHECK(r.warnings.size() >= 2);
}

TEST_CASE("batches") {
    SUBCASE("six accession years") {
        Store store;
        archint::testing::seed_repositories(store, 1);
        std::vector<IngestTarget> targets;
        for (int year = 2015; year <= 2020; ++year) targets.push_back({"acc-" + std::to_string(year), kRepo, std::nullopt});
        auto result = batch_run(store, targets, [](const IngestTarget& t) {
            return std::vector<Record>{node(t.dataset_id + "-series", {node("f1"), node("f2")})};
        });
        CHECK(result.ok());
        CHECK(result.reports().size() == 6);
        CHECK(store.snapshot(SpaceName::staging)->manifests().size() == 6);
        for (const auto& t : targets) CHECK(manifest_ids(store, t.dataset_id).size() == 3);
    }
    SUBCASE("stop and continue policies") {
        for (bool keep_going : {false, true}) {
            Store store;
            archint::testing::seed_repositories(store, 1);
            std::vector<IngestTarget> targets;
            for (int i = 1; i <= 5; ++i) targets.push_back({"d" + std::to_string(i), kRepo, std::nullopt});
            IngestOptions opts;
            opts.continue_on_error = keep_going;
            auto result = batch_run(store, targets, [](const IngestTarget& t) {
                Record r = node(t.dataset_id);
                if (t.dataset_id == "d3") r.fields.clear();
                return std::vector<Record>{r};
            }, opts);
            CHECK_FALSE(result.ok());
            CHECK(result.outcomes[2].status == BatchStatus::failed);
            CHECK(result.outcomes[2].error["code"] == "validation-failure");
            CHECK(result.outcomes[3].status == (keep_going ? BatchStatus::committed : BatchStatus::not_run));
            CHECK(result.outcomes[1].status == BatchStatus::committed);
            CHECK(to_json(result)["outcomes"][4]["status"] == (keep_going ? "committed" : "not-run"));
        }
    }
    SUBCASE("empty batch") {
        Store store;
        CHECK(batch_run(store, {}, [](const IngestTarget&) { return std::vector<Record>{}; }).outcomes.empty());
    }
    SUBCASE("producer failures count as failures") {
        Store store;
        archint::testing::seed_repositories(store, 1);
        auto result = batch_run(store, {{"x", kRepo, std::nullopt}}, [](const IngestTarget&) -> std::vector<Record> {
            throw Error("transport-error", "offline");
        });
        CHECK(result.outcomes[0].status == BatchStatus::failed);
        CHECK(result.outcomes[0].error["code"] == "transport-error");
    }
}
