#include <doctest.h>

#include "archint/error.hpp"
#include "archint/interchange.hpp"
#include "archint/model.hpp"
#include "archint/store.hpp"
#include "generators.hpp"

using namespace archint;
using archint::testing::Rng;

namespace {

// Independent path-id oracle: collapse runs of whitespace, escape '%' then '/'.
std::string oracle_segment(const std::string& local) {
    std::string collapsed;
    bool space = false;
    for (char c : local) {
        if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
            space = !collapsed.empty();
            continue;
        }
        if (space) collapsed += ' ';
        space = false;
        collapsed += c;
    }
    std::string out;
    for (char c : collapsed) {
        if (c == '%')
            out += "%25";
        else if (c == '/')
            out += "%2F";
        else
            out += c;
    }
    return out;
}

DocumentaryUnit unit(const std::string& repo, const std::string& local, std::optional<std::string> parent = {}) {
    Record r;
    r.local_id = local;
    r.level = Level::file;
    r.add("title", "Title of " + local);
    return unit_from_record(r, repo, parent, 0, "ds");
}

SpaceState space_with(const std::vector<DocumentaryUnit>& units) {
    Store store;
    archint::testing::seed_repositories(store, 2);
    Transaction txn = store.begin(SpaceName::staging);
    for (const auto& u : units) txn.put_unit(u);
    return txn.view();
}

}  // namespace

TEST_CASE("level tokens round-trip and lenient labels") {
    for (auto l : {Level::fonds, Level::subfonds, Level::series, Level::subseries, Level::recordgrp, Level::collection,
                   Level::file, Level::item, Level::otherlevel})
        CHECK(parse_level(to_string(l)) == l);
    CHECK_FALSE(parse_level("Fonds").has_value());
    CHECK(level_from_label("Sub-Fonds") == Level::subfonds);
    CHECK(level_from_label("record group") == Level::recordgrp);
    CHECK(level_from_label("folder") == Level::file);
}

TEST_CASE("global ids follow the repository and local id path") {
    CHECK(make_global_id("us-005578", "F1") == "us-005578/F1");
    CHECK(make_global_id("us-005578/F1", "a/b") == "us-005578/F1/a%2Fb");
    CHECK(make_global_id("r", "  x \t y ") == "r/x y");
    CHECK(make_global_id("r", "50%") == "r/50%25");

    Rng rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        auto forest = archint::testing::random_forest(rng, {3, 5, 4, 0});
        std::function<void(const std::vector<Record>&, const std::string&)> walk = [&](const auto& rs, const std::string& parent) {
            for (const auto& r : rs) {
                std::string expected = parent + "/" + oracle_segment(r.local_id);
                CHECK(make_global_id(parent, r.local_id) == expected);
                walk(r.children, expected);
            }
        };
        walk(forest, "xx-000001");
    }
}

TEST_CASE("date text keeps bounds only when parseable") {
    auto d = parse_date_text("1939-1945");
    CHECK(d.start == "1939");
    CHECK(d.end == "1945");
    CHECK(parse_date_text("1942-03-01").start == "1942-03-01");
    auto vague = parse_date_text("circa spring 1943");
    CHECK_FALSE(vague.start.has_value());
    CHECK(vague.text == "circa spring 1943");
}

TEST_CASE("validate_unit reports violations as data") {
    auto root = unit("xx-000001", "F1");
    SpaceState space = space_with({root});

    SUBCASE("well-formed child with its parent present") {
        auto child = unit("xx-000001", "s1", root.global_id);
        CHECK(validate_unit(child, space).ok());
    }
    SUBCASE("empty title") {
        auto u = unit("xx-000001", "F2");
        u.descriptions[0].title = "";
        CHECK(validate_unit(u, space).has("missing-title"));
    }
    SUBCASE("dangling parent") {
        auto u = unit("xx-000001", "s1", std::string("xx-000001/absent"));
        CHECK(validate_unit(u, space).has("dangling-parent"));
    }
    SUBCASE("sibling with the same local id") {
        auto twin = unit("xx-000001", "F1");
        twin.global_id = "xx-000001/F1-other";
        CHECK(validate_unit(twin, space).has("duplicate-sibling"));
    }
    SUBCASE("parallel descriptions") {
        auto u = unit("xx-000001", "F2");
        Description second = u.descriptions[0];
        second.language = "deu";
        u.descriptions.push_back(second);
        CHECK(validate_unit(u, space).ok());
        u.descriptions.push_back(second);
        CHECK(validate_unit(u, space).has("duplicate-language"));
    }
    SUBCASE("field keys come from the closed list") {
        auto u = unit("xx-000001", "F2");
        u.descriptions[0].add_field("extent", "3 boxes");
        CHECK(validate_unit(u, space).has("bad-field-key"));
    }
    SUBCASE("dangling access point target") {
        auto u = unit("xx-000001", "F2");
        u.descriptions[0].access_points.push_back({AccessPointKind::subject, "Ghetto", std::string("terms-1")});
        CHECK(validate_unit(u, space).has("dangling-access-point"));
    }
    SUBCASE("repository must exist") {
        auto u = unit("zz-999999", "F2");
        CHECK(validate_unit(u, space).has("dangling-repository"));
    }
}

TEST_CASE("unit_from_record groups fields by language") {
    Record r;
    r.local_id = "F1";
    r.language = "ukr";
    r.add("title", "Фонд");
    r.add("title", "Fonds", "eng");
    r.add("scopecontent", "Опис");
    r.add("access_point:subject", "Ghetto");
    auto u = unit_from_record(r, "ua-000001", std::nullopt, 0, "ds");
    REQUIRE(u.descriptions.size() == 2);
    CHECK(u.description("ukr")->title == "Фонд");
    CHECK(u.description("eng")->title == "Fonds");
    CHECK(u.description("ukr")->access_points.size() == 1);

    Record bare;
    bare.local_id = "x";
    bare.add("title", "t");
    CHECK(unit_from_record(bare, "r", std::nullopt, 0, "ds").descriptions[0].language == kUndeterminedLanguage);
}

TEST_CASE("canonical interchange is stable and round-trips") {
    Rng rng(5);
    for (int trial = 0; trial < 30; ++trial) {
        auto forest = archint::testing::random_forest(rng, {3, 4, 3, 0});
        std::string text = canonical_records(forest);
        CHECK(records_from_canonical(text) == forest);
        CHECK(canonical_records(records_from_canonical(text)) == text);
    }
    json a = json::parse(R"({"b":1,"a":{"d":2,"c":3}})");
    CHECK(canonical(a) == R"({"a":{"c":3,"d":2},"b":1})");
}

TEST_CASE("content digest ignores sibling position") {
    auto a = unit("xx-000001", "F1");
    auto b = a;
    b.sibling_index = 7;
    CHECK(unit_content_digest(a) == unit_content_digest(b));
    CHECK(unit_full_digest(a) != unit_full_digest(b));
}
