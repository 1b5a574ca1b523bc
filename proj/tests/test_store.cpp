#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>

#include <unistd.h>

#include "archint/digest.hpp"
#include "archint/error.hpp"
#include "archint/ingest.hpp"
#include "archint/interchange.hpp"
#include "archint/store.hpp"
#include "generators.hpp"

using namespace archint;
using archint::testing::Rng;
namespace fs = std::filesystem;

namespace {

Record node(const std::string& id, std::vector<Record> children = {}) {
    Record r;
    r.local_id = id;
    r.level = children.empty() ? Level::item : Level::series;
    r.add("title", "Title " + id);
    for (auto& c : children) c.parent_ref = id;
    r.children = std::move(children);
    return r;
}

// Expected ids computed independently of make_global_id.
void expected_ids(const std::vector<Record>& rs, const std::string& parent, std::vector<std::string>& out) {
    for (const auto& r : rs) {
        out.push_back(parent + "/" + r.local_id);
        expected_ids(r.children, out.back(), out);
    }
}

std::vector<std::string> ids_of(const SpaceState& s) {
    std::vector<std::string> out;
    for (const auto& [id, u] : s.units()) out.push_back(id);
    return out;
}

// Independent digest oracle: sha256 over the sorted canonical units.
std::string units_oracle(const SpaceState& s) {
    std::string all;
    for (const auto& [id, u] : s.units()) all += canonical(json(u)) + "\n";
    return sha256_hex(all);
}

void check_integrity(const SpaceState& s) {
    for (const auto& [id, u] : s.units()) {
        if (u.parent_id) CHECK(s.find_unit(*u.parent_id) != nullptr);
        CHECK(s.has_repository(u.repository_id));
        for (const auto& d : u.descriptions)
            for (const auto& ap : d.access_points)
                if (ap.target) CHECK(s.entity_exists(*ap.target));
    }
    for (const auto& [id, l] : s.links()) {
        CHECK(s.entity_exists(l.source_id));
        CHECK(s.entity_exists(l.target_id));
    }
}

}  // namespace

TEST_CASE("upsert_subtree counts and idempotence") {
    Store store;
    archint::testing::seed_repositories(store, 1);
    const std::string repo = archint::testing::repository_id(0);

    SUBCASE("empty list") {
        Transaction txn = store.begin(SpaceName::staging);
        auto s = upsert_subtree(txn, repo, std::nullopt, {}, "ds");
        CHECK(s.created + s.updated + s.unchanged == 0);
    }
    SUBCASE("fresh tree then the same tree again") {
        std::vector<Record> tree{node("F", {node("s", {node("i")})})};
        {
            Transaction txn = store.begin(SpaceName::staging);
            auto s = upsert_subtree(txn, repo, std::nullopt, tree, "ds");
            CHECK(s.created == 3);
            txn.commit();
        }
        std::vector<std::string> want;
        expected_ids(tree, repo, want);
        std::sort(want.begin(), want.end());
        CHECK(ids_of(*store.snapshot(SpaceName::staging)) == want);

        std::string before = units_oracle(*store.snapshot(SpaceName::staging));
        Transaction txn = store.begin(SpaceName::staging);
        auto s = upsert_subtree(txn, repo, std::nullopt, tree, "ds");
        CHECK(s.created == 0);
        CHECK(s.updated == 0);
        CHECK(s.unchanged == 3);
        txn.commit();
        CHECK(units_oracle(*store.snapshot(SpaceName::staging)) == before);
    }
    SUBCASE("reordering siblings is an update, not a content change") {
        std::vector<Record> tree{node("F", {node("a"), node("b")})};
        {
            Transaction txn = store.begin(SpaceName::staging);
            upsert_subtree(txn, repo, std::nullopt, tree, "ds");
            txn.commit();
        }
        std::swap(tree[0].children[0], tree[0].children[1]);
        Transaction txn = store.begin(SpaceName::staging);
        auto s = upsert_subtree(txn, repo, std::nullopt, tree, "ds");
        CHECK(s.updated == 2);
        CHECK(s.unchanged == 1);
        CHECK(s.digests.at(repo + "/F/a") == unit_content_digest(*txn.view().find_unit(repo + "/F/a")));
    }
    SUBCASE("dangling parent and duplicate siblings") {
        Transaction txn = store.begin(SpaceName::staging);
        CHECK_THROWS_WITH_AS(upsert_subtree(txn, repo, std::string(repo + "/nowhere"), {node("x")}, "ds"),
                             doctest::Contains("nowhere"), Error);
        try {
            upsert_subtree(txn, repo, std::nullopt, {node("x"), node("x")}, "ds");
            FAIL("expected duplicate-sibling");
        } catch (const Error& e) {
            CHECK(e.code() == "duplicate-sibling");
        }
    }
}

TEST_CASE("idempotence over random forests") {
    Rng rng(99);
    for (int trial = 0; trial < 20; ++trial) {
        Store store;
        archint::testing::seed_repositories(store, 1);
        auto forest = archint::testing::random_forest(rng, {3, 6, 5, 300});
        archint::testing::ensure_titles(forest);
        std::size_t n = count_records(forest);
        for (int pass = 0; pass < 2; ++pass) {
            Transaction txn = store.begin(SpaceName::staging);
            auto s = upsert_subtree(txn, archint::testing::repository_id(0), std::nullopt, forest, "ds");
            txn.commit();
            if (pass == 0) {
                CHECK(s.created == n);
            } else {
                CHECK(s.created == 0);
                CHECK(s.updated == 0);
                CHECK(s.unchanged == n);
            }
        }
        check_integrity(*store.snapshot(SpaceName::staging));
    }
}

TEST_CASE("get_subtree") {
    Store store;
    archint::testing::seed_repositories(store, 1);
    const std::string repo = archint::testing::repository_id(0);
    std::vector<Record> tree{node("F", {node("s1", {node("i1"), node("i2")}), node("s2")})};
    Transaction txn = store.begin(SpaceName::staging);
    upsert_subtree(txn, repo, std::nullopt, tree, "ds");
    txn.commit();
    auto snap = store.snapshot(SpaceName::staging);

    CHECK(get_subtree(*snap, repo + "/F", 0).children.empty());
    UnitTree full = get_subtree(*snap, repo + "/F");
    REQUIRE(full.children.size() == 2);
    CHECK(full.children[0].unit.local_id == "s1");
    CHECK(full.children[1].unit.local_id == "s2");
    REQUIRE(full.children[0].children.size() == 2);
    CHECK(full.children[0].children[1].unit.local_id == "i2");
    CHECK(get_subtree(*snap, repo + "/F", 1).children[0].children.empty());
    try {
        get_subtree(*snap, repo + "/missing");
        FAIL("expected not-found");
    } catch (const Error& e) {
        CHECK(e.code() == "not-found");
    }
}

TEST_CASE("space digests") {
    SpaceState a, b;
    CHECK(space_digest(a) == space_digest(b));
    CHECK(space_digest(a) == space_digest(SpaceState{}));

    // Same content inserted in different orders.
    Rng rng(3);
    auto forest = archint::testing::random_forest(rng, {3, 4, 4, 60});
    archint::testing::ensure_titles(forest);
    Store s1, s2;
    archint::testing::seed_repositories(s1, 2);
    archint::testing::seed_repositories(s2, 2);
    {
        Transaction t = s1.begin(SpaceName::staging);
        upsert_subtree(t, archint::testing::repository_id(0), std::nullopt, forest, "ds");
        upsert_subtree(t, archint::testing::repository_id(1), std::nullopt, forest, "ds2");
        t.commit();
    }
    {
        Transaction t = s2.begin(SpaceName::staging);
        upsert_subtree(t, archint::testing::repository_id(1), std::nullopt, forest, "ds2");
        upsert_subtree(t, archint::testing::repository_id(0), std::nullopt, forest, "ds");
        t.commit();
    }
    CHECK(space_digest(*s1.snapshot(SpaceName::staging)) == space_digest(*s2.snapshot(SpaceName::staging)));
    CHECK(space_digest(*s1.snapshot(SpaceName::staging), DigestScope::dataset("ds")) !=
          space_digest(*s1.snapshot(SpaceName::staging), DigestScope::dataset("ds2")));
}

TEST_CASE("rollback leaves the digest unchanged for random mutation scripts") {
    Rng rng(17);
    Store store;
    archint::testing::seed_repositories(store, 2);
    auto base = archint::testing::random_forest(rng, {2, 4, 3, 40});
    archint::testing::ensure_titles(base);
    {
        Transaction t = store.begin(SpaceName::staging);
        upsert_subtree(t, archint::testing::repository_id(0), std::nullopt, base, "ds");
        t.commit();
    }
    for (int trial = 0; trial < 40; ++trial) {
        std::string before = space_digest(*store.snapshot(SpaceName::staging));
        {
            Transaction t = store.begin(SpaceName::staging);
            auto ids = ids_of(t.view());
            std::uniform_int_distribution<int> op(0, 3);
            for (int k = 0; k < 10; ++k) {
                switch (op(rng)) {
                    case 0: {
                        auto more = archint::testing::random_forest(rng, {1, 3, 3, 10}, "m" + std::to_string(k) + "-");
                        archint::testing::ensure_titles(more);
                        upsert_subtree(t, archint::testing::repository_id(1), std::nullopt, more, "other");
                        break;
                    }
                    case 1:
                        if (!ids.empty()) {
                            std::string victim = ids[rng() % ids.size()];
                            if (t.view().find_unit(victim) && t.view().children_of(*t.view().find_unit(victim)).empty())
                                t.erase_unit(victim);
                        }
                        break;
                    case 2:
                        t.put_country({"yy", "Other", std::nullopt});
                        break;
                    default:
                        t.put_manifest({"ds", text::now_utc(), {}});
                }
            }
            if (trial % 2) t.rollback();
        }
        CHECK(space_digest(*store.snapshot(SpaceName::staging)) == before);
    }
}

TEST_CASE("uncommitted writes are invisible to readers") {
    Store store;
    archint::testing::seed_repositories(store, 1);
    Transaction t = store.begin(SpaceName::staging);
    upsert_subtree(t, archint::testing::repository_id(0), std::nullopt, {node("F")}, "ds");
    CHECK(t.view().units().size() == 1);
    CHECK(store.snapshot(SpaceName::staging)->units().empty());
    t.commit();
    CHECK(store.snapshot(SpaceName::staging)->units().size() == 1);
}

TEST_CASE("persistence replays the log and snapshots") {
    fs::path dir = fs::temp_directory_path() / ("archint-store-" + std::to_string(::getpid()));
    fs::remove_all(dir);
    Rng rng(8);
    auto forest = archint::testing::random_forest(rng, {2, 4, 3, 50});
    archint::testing::ensure_titles(forest);
    std::string digest;
    {
        StoreOptions opts;
        opts.directory = dir;
        opts.snapshot_every = 3;
        Store store(opts);
        archint::testing::seed_repositories(store, 1);
        for (int i = 0; i < 5; ++i) {
            Transaction t = store.begin(SpaceName::staging);
            upsert_subtree(t, archint::testing::repository_id(0), std::nullopt, forest, "ds" + std::to_string(i % 2));
            t.put_manifest({"ds" + std::to_string(i), text::Instant{std::chrono::seconds(1700000000 + i)}, {}});
            t.commit();
        }
        digest = space_digest(*store.snapshot(SpaceName::staging));
    }
    StoreOptions opts;
    opts.directory = dir;
    Store reopened(opts);
    CHECK(space_digest(*reopened.snapshot(SpaceName::staging)) == digest);

    // Snapshot files are bit-stable.
    fs::path a = dir / "copy-a", b = dir / "copy-b";
    write_space_files(*reopened.snapshot(SpaceName::staging), a);
    write_space_files(read_space_files(SpaceName::staging, a), b);
    for (const auto& entry : fs::recursive_directory_iterator(a)) {
        if (!entry.is_regular_file()) continue;
        auto rel = fs::relative(entry.path(), a);
        std::ifstream fa(entry.path()), fb(b / rel);
        std::string sa((std::istreambuf_iterator<char>(fa)), {}), sb((std::istreambuf_iterator<char>(fb)), {});
        CHECK_MESSAGE(sa == sb, rel.string());
    }
    fs::remove_all(dir);
}

TEST_CASE("promotion needs the portal entities in production") {
    Store store;
    archint::testing::seed_repositories(store, 1);
    ingest_dataset(store, {"ds", archint::testing::repository_id(0), std::nullopt}, {node("a")});
    try {
        promote_dataset(store, "ds", DatasetStatus::approved);
        FAIL("expected unresolved-repository");
    } catch (const Error& e) {
        CHECK(e.code() == "unresolved-repository");
    }
    CHECK(store.snapshot(SpaceName::production)->repositories().empty());
    archint::testing::seed_repositories(store, 1, SpaceName::production);
    CHECK(promote_dataset(store, "ds", DatasetStatus::approved).created == 1);
}

TEST_CASE("promotion copies a dataset exactly and leaves others alone") {
    Store store;
    archint::testing::seed_repositories(store, 2);
    archint::testing::seed_repositories(store, 2, SpaceName::production);
    const std::string repo = archint::testing::repository_id(0);
    Rng rng(21);
    auto forest = archint::testing::random_forest(rng, {2, 4, 3, 30});
    archint::testing::ensure_titles(forest);

    // Production already holds another dataset's units.
    {
        Transaction t = store.begin(SpaceName::production);
        upsert_subtree(t, archint::testing::repository_id(1), std::nullopt, {node("other")}, "other");
        t.commit();
    }
    ingest_dataset(store, {"ds", repo, std::nullopt}, forest);

    auto prod_other = [&] { return space_digest_excluding_dataset(*store.snapshot(SpaceName::production), "ds"); };
    std::string other_before = prod_other();

    try {
        promote_dataset(store, "ds", DatasetStatus::staged);
        FAIL("expected not-approved");
    } catch (const Error& e) {
        CHECK(e.code() == "not-approved");
    }
    try {
        promote_dataset(store, "nothing", DatasetStatus::approved);
        FAIL("expected missing-manifest");
    } catch (const Error& e) {
        CHECK(e.code() == "missing-manifest");
    }

    auto report = promote_dataset(store, "ds", DatasetStatus::approved);
    CHECK(report.created == count_records(forest));
    CHECK(space_digest(*store.snapshot(SpaceName::production), DigestScope::dataset("ds")) ==
          space_digest(*store.snapshot(SpaceName::staging), DigestScope::dataset("ds")));
    CHECK(prod_other() == other_before);
    check_integrity(*store.snapshot(SpaceName::production));

    auto again = promote_dataset(store, "ds", DatasetStatus::approved);
    CHECK(again.all_unchanged());

    // A unit removed from staging disappears from production on the next promotion.
    std::vector<Record> smaller = forest;
    smaller.pop_back();
    if (!smaller.empty()) {
        ingest_dataset(store, {"ds", repo, std::nullopt}, smaller, {false, true, false, false});
        auto third = promote_dataset(store, "ds", DatasetStatus::approved);
        CHECK(third.deleted == count_records({forest.back()}));
        CHECK(space_digest(*store.snapshot(SpaceName::production), DigestScope::dataset("ds")) ==
              space_digest(*store.snapshot(SpaceName::staging), DigestScope::dataset("ds")));
    }
}
