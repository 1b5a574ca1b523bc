// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <openssl/evp.h>

#ifdef __linux__
#include <net/if.h>
#include <sched.h>
#include <sys/ioctl.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>
#endif

#include "archint/error.hpp"
#include "archint/harvest.hpp"
#include "archint/hierarchy.hpp"
#include "archint/ingest.hpp"
#include "archint/interchange.hpp"
#include "archint/store.hpp"
#include "archint/text.hpp"
#include "archint/transform.hpp"
#include "generators.hpp"
#include "mock_server.hpp"

using namespace archint;
using archint::testing::Rng;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

// Tolerances.
constexpr double kIdempotenceSeconds = 10.0;
constexpr double kOaiSeconds = 60.0;
constexpr double kSuiteSeconds = 300.0;

const Clock::time_point g_start = Clock::now();

struct Outcome {
    bool pass = false;
    std::string detail;
};

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

std::string fmt_seconds(double s) {
    std::ostringstream out;
    out << std::fixed << std::setprecision(2) << s << " s";
    return out.str();
}

std::size_t tally(const std::vector<Record>& forest) {
    std::size_t n = 0;
    archint::testing::visit(forest, [&](const Record&) { ++n; });
    return n;
}

std::size_t depth_of(const std::vector<Record>& forest) {
    std::size_t best = 0;
    for (const auto& r : forest) best = std::max(best, 1 + depth_of(r.children));
    return best;
}

Record leaf(const std::string& id, const std::string& title) {
    Record r;
    r.local_id = id;
    r.level = Level::file;
    r.add("title", title);
    return r;
}

// Independent of the library's digest and percent-coding helpers.
std::string openssl_sha256(const std::string& bytes) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr);
    std::ostringstream out;
    for (unsigned int i = 0; i < len; ++i) out << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
    return out.str();
}

std::string percent_decode(const std::string& s) {
    std::string out;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '%' && i + 2 < s.size()) {
            out.push_back(static_cast<char>(std::stoi(s.substr(i + 1, 2), nullptr, 16)));
            i += 2;
        } else {
            out.push_back(s[i]);
        }
    }
    return out;
}

Politeness loopback_politeness() {
    Politeness p;
    p.retries = 2;
    p.backoff_base = std::chrono::milliseconds(1);
    p.timeout = std::chrono::milliseconds(5000);
    return p;
}

std::string staging_digest(const Store& store) { return space_digest(*store.snapshot(SpaceName::staging)); }

// ---------------------------------------------------------------------------

Outcome idempotence() {
    Rng rng(1001);
    Store store;
    archint::testing::seed_repositories(store, 3);
    const std::size_t sizes[3] = {67, 67, 66};
    std::vector<std::vector<Record>> corpora;
    for (std::size_t i = 0; i < 3; ++i) {
        std::vector<Record> forest;
        do {
            forest = archint::testing::random_forest(rng, {12, 5, 5, sizes[i]}, "r" + std::to_string(i) + "-");
        } while (tally(forest) != sizes[i]);
        archint::testing::ensure_titles(forest);
        if (depth_of(forest) > 5) return {false, "generated corpus deeper than 5"};
        corpora.push_back(std::move(forest));
    }

    auto run = [&] {
        std::array<std::size_t, 4> c{};
        for (std::size_t i = 0; i < 3; ++i) {
            auto r = ingest_dataset(store, {"corpus-" + std::to_string(i), archint::testing::repository_id(i), {}},
                                    corpora[i]);
            c[0] += r.created, c[1] += r.updated, c[2] += r.unchanged, c[3] += r.deleted;
        }
        return c;
    };
    auto t0 = Clock::now();
    auto first = run();
    auto second = run();
    double elapsed = seconds_since(t0);
    bool ok = first[0] == 200 && second[0] == 0 && second[1] == 0 && second[2] == 200 && second[3] == 0 &&
              elapsed < kIdempotenceSeconds;
    return {ok, "first created=" + std::to_string(first[0]) + "; second created=" + std::to_string(second[0]) +
                    " updated=" + std::to_string(second[1]) + " unchanged=" + std::to_string(second[2]) + "; " +
                    fmt_seconds(elapsed) + " (< 10 s)"};
}

Outcome rollback() {
    Store store;
    archint::testing::seed_repositories(store, 1);
    std::vector<IngestTarget> targets;
    for (int i = 1; i <= 5; ++i) targets.push_back({"d" + std::to_string(i), archint::testing::repository_id(0), {}});
    std::string before_d3;
    IngestOptions strict;
    strict.continue_on_error = false;
    auto result = batch_run(store, targets, [&](const IngestTarget& t) {
        Record root = leaf(t.dataset_id + "-fonds", "Fonds " + t.dataset_id);
        root.level = Level::fonds;
        for (int k = 0; k < 4; ++k) {
            Record child = leaf(t.dataset_id + "-f" + std::to_string(k), "File " + std::to_string(k));
            child.parent_ref = root.local_id;
            root.children.push_back(child);
        }
        if (t.dataset_id == "d3") {
            before_d3 = staging_digest(store);
            root.children[2].fields.clear();  // no title: invalid
        }
        return std::vector<Record>{root};
    }, strict);
    std::string after = staging_digest(store);
    const auto& o = result.outcomes;
    bool statuses = o.size() == 5 && o[0].status == BatchStatus::committed && o[1].status == BatchStatus::committed &&
                    o[2].status == BatchStatus::failed && o[2].error.value("code", "") == "validation-failure" &&
                    o[3].status == BatchStatus::not_run && o[4].status == BatchStatus::not_run;
    auto snap = store.snapshot(SpaceName::staging);
    bool manifests = snap->manifest("d1") && snap->manifest("d2") && !snap->manifest("d3");
    bool digest_equal = !before_d3.empty() && before_d3 == after;
    std::string line;
    for (const auto& x : o) line += x.dataset_id + "=" + std::string(to_string(x.status)) + " ";
    return {statuses && manifests && digest_equal,
            line + "; digest before/after d3 " + (digest_equal ? "identical" : "DIFFERENT")};
}

Outcome oai_completeness() {
    Rng rng(3003);
    auto t0 = Clock::now();
    std::size_t failures = 0, total_requests = 0;
    std::string first_failure;
    for (int trial = 0; trial < 50; ++trial) {
        std::size_t n = std::uniform_int_distribution<std::size_t>(1, 1000)(rng);
        std::size_t p = std::uniform_int_distribution<std::size_t>(1, 100)(rng);
        bool identify = trial % 2 == 1;
        std::vector<archint::testing::OaiRecord> records;
        std::set<std::string> expected;
        for (std::size_t i = 0; i < n; ++i) {
            std::string id = "oai:acc.example.org:t" + std::to_string(trial) + "/rec " + std::to_string(i);
            expected.insert(id);
            records.push_back({id, "<rec><marker>" + id + "</marker></rec>"});
        }
        archint::testing::OaiMock mock(records, p);
        FetchConfig c;
        c.method = FetchMethod::oaipmh;
        c.endpoint = mock.endpoint();
        c.oai = OaiParams{"ead", std::nullopt, std::nullopt, std::nullopt, identify};
        c.politeness = loopback_politeness();
        FileSet set = oai_harvest(c);

        std::multiset<std::string> harvested;
        bool payloads = true;
        for (const auto& item : set.items) {
            std::string name = item.name;
            if (name.size() > 4 && name.compare(name.size() - 4, 4, ".xml") == 0) name.resize(name.size() - 4);
            std::string id = percent_decode(name);
            harvested.insert(id);
            if (item.bytes.find("<marker>" + id + "</marker>") == std::string::npos) payloads = false;
        }
        std::size_t want_requests = (n + p - 1) / p + (identify ? 1 : 0);
        total_requests += mock.requests();
        bool ok = std::set<std::string>(harvested.begin(), harvested.end()) == expected && harvested.size() == n &&
                  payloads && mock.requests() == want_requests;
        if (!ok && failures++ == 0)
            first_failure = " first failure: trial " + std::to_string(trial) + " N=" + std::to_string(n) + " p=" +
                            std::to_string(p) + " got " + std::to_string(harvested.size()) + " items, " +
                            std::to_string(mock.requests()) + " requests (want " + std::to_string(want_requests) + ")";
    }
    double elapsed = seconds_since(t0);
    return {failures == 0 && elapsed < kOaiSeconds, "50 trials, " + std::to_string(failures) + " failed, " +
                                                        std::to_string(total_requests) + " requests, " +
                                                        fmt_seconds(elapsed) + " (< 60 s)" + first_failure};
}

Outcome resourcesync_incremental() {
    Rng rng(4004);
    archint::testing::ResourceSyncMock rs;
    std::map<std::string, std::string> content;  // path -> bytes
    auto path_of = [](int i) {
        std::ostringstream out;
        out << "/data/doc-" << std::setw(2) << std::setfill('0') << i << ".xml";
        return out.str();
    };
    for (int i = 0; i < 50; ++i) {
        content[path_of(i)] = "<doc n=\"" + std::to_string(i) + "\" rev=\"1\"/>";
        rs.set_resource(path_of(i), content[path_of(i)]);
    }
    FetchConfig c;
    c.method = FetchMethod::resourcesync;
    c.endpoint = rs.capability_list_url();
    c.politeness = loopback_politeness();
    FileSet baseline = rs_sync(c);
    if (baseline.items.size() != 50) return {false, "baseline has " + std::to_string(baseline.items.size()) + " items"};

    std::vector<int> order(50);
    for (int i = 0; i < 50; ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);
    std::set<std::string> updated, deleted;
    std::string later = text::format_utc(baseline.fetched_at + std::chrono::seconds(30));
    for (int k = 0; k < 5; ++k) {
        std::string p = path_of(order[k]);
        updated.insert(p);
        content[p] = "<doc n=\"" + std::to_string(order[k]) + "\" rev=\"2\">changed</doc>";
        rs.set_resource(p, content[p]);
        rs.add_change(p, "updated", later);
    }
    for (int k = 5; k < 8; ++k) {
        std::string p = path_of(order[k]);
        deleted.insert(p);
        rs.remove_resource(p);
        rs.add_change(p, "deleted", later);
    }
    std::map<std::string, std::size_t> hits_before;
    for (const auto& [p, b] : content) hits_before[p] = rs.server.hits(p);

    FileSet next = rs_sync(c, &baseline);

    // Expected set: every baseline name; deleted ones flagged, others with
    // their current bytes and an independently computed checksum.
    std::size_t mismatches = 0;
    std::set<std::string> names;
    for (const auto& item : next.items) names.insert(item.name);
    for (const auto& [p, bytes] : content) {
        std::string name = p.substr(p.rfind('/') + 1);
        const FileItem* item = next.find(name);
        if (!item) {
            ++mismatches;
            continue;
        }
        if (deleted.count(p)) {
            if (!item->deleted) ++mismatches;
        } else if (item->deleted || item->bytes != bytes || item->checksum != openssl_sha256(bytes) || item->error) {
            ++mismatches;
        }
    }
    std::size_t refetched_unchanged = 0;
    for (const auto& [p, b] : content)
        if (!updated.count(p) && !deleted.count(p) && rs.server.hits(p) != hits_before[p]) ++refetched_unchanged;
    bool ok = next.items.size() == 50 && names.size() == 50 && mismatches == 0 && next.errors.empty() &&
              refetched_unchanged == 0;
    return {ok, "50 baseline, 5 updated, 3 deleted: " + std::to_string(mismatches) + " mismatches against the expected set, " +
                    std::to_string(refetched_unchanged) + " unchanged resources refetched"};
}

Outcome hierarchy_round_trip() {
    Rng rng(5005);
    std::size_t failures = 0, records = 0;
    for (int i = 0; i < 500; ++i) {
        auto forest = archint::testing::random_forest(rng, {3, 6, 5, 0}, "h" + std::to_string(i) + "-");
        records += tally(forest);
        auto built = build_tree(flatten(forest));
        if (!(built.forest == forest) || !built.orphans.empty() || depth_of(forest) > 6) ++failures;
    }
    return {failures == 0, "500 forests, " + std::to_string(records) + " records, " + std::to_string(failures) + " unequal"};
}

Outcome skeleton_enrich_oracle() {
    Rng rng(6006);
    std::size_t failures = 0;
    for (int i = 0; i < 100; ++i) {
        auto forest = archint::testing::random_forest(rng, {3, 6, 5, 0}, "k" + std::to_string(i) + "-");
        std::vector<Record> fonds;
        std::vector<SkeletonItem> items;
        for (const auto& root : forest) {
            Record f = root;
            f.children.clear();
            fonds.push_back(f);
            for (const auto& child : root.children) {
                const std::string* title = root.first("title");
                items.push_back({child, root.local_id, title ? std::optional<std::string>(*title) : std::nullopt});
            }
        }
        // Interleave items of different fonds; order within a fonds is kept.
        std::stable_sort(items.begin(), items.end(), [&](const SkeletonItem& a, const SkeletonItem& b) {
            return std::hash<std::string>{}(a.fonds_id + std::to_string(i)) <
                   std::hash<std::string>{}(b.fonds_id + std::to_string(i));
        });
        std::vector<Record> combined = fonds;
        for (const auto& item : items) {
            auto flat = flatten({item.record});
            flat.front().parent_ref = item.fonds_id;
            combined.insert(combined.end(), flat.begin(), flat.end());
        }
        auto expected = build_tree(combined).forest;
        auto got = skeleton_enrich(items, fonds);
        if (!(got.forest == expected)) ++failures;
    }
    return {failures == 0, "100 trees, " + std::to_string(failures) + " differ from build_tree over the combined records"};
}

Outcome priority_merge_property() {
    Rng rng(7007);
    const std::vector<std::string> keys{"title", "scopecontent", "bioghist", "note", "physdesc", "unitdate"};
    std::size_t failures = 0;
    for (int i = 0; i < 200; ++i) {
        auto primary = archint::testing::random_forest(rng, {3, 4, 4, 0}, "p" + std::to_string(i) + "-");
        std::map<std::string, const Record*> primary_by_id;
        std::function<void(const std::vector<Record>&)> index = [&](const std::vector<Record>& f) {
            for (const auto& r : f) {
                primary_by_id[r.local_id] = &r;
                index(r.children);
            }
        };
        index(primary);

        std::vector<Record> supplement;
        auto random_record = [&](const std::string& id) {
            Record s;
            s.local_id = id;
            for (const auto& k : keys)
                if (rng() % 2) {
                    std::size_t copies = 1 + rng() % 2;
                    for (std::size_t c = 0; c < copies; ++c) s.add(k, archint::testing::random_words(rng, 1, 4));
                }
            if (rng() % 2) s.level = Level::series;
            if (rng() % 3 == 0) s.language = "deu";
            return s;
        };
        for (const auto& [id, r] : primary_by_id)
            if (rng() % 2) supplement.push_back(random_record(id));
        std::size_t extra = rng() % 4;
        for (std::size_t k = 0; k < extra; ++k) supplement.push_back(random_record("u" + std::to_string(i) + "-" + std::to_string(k)));
        std::shuffle(supplement.begin(), supplement.end(), rng);
        std::map<std::string, const Record*> supplement_by_id;
        for (const auto& s : supplement) supplement_by_id[s.local_id] = &s;

        auto result = priority_merge(primary, supplement);
        bool ok = true;
        auto with_key = [](const Record& r, const std::string& key) {
            std::vector<RecordField> out;
            for (const auto& f : r.fields)
                if (f.key == key) out.push_back(f);
            return out;
        };
        std::function<void(const std::vector<Record>&, const std::vector<Record>&)> check =
            [&](const std::vector<Record>& got, const std::vector<Record>& want) {
                if (got.size() != want.size()) {
                    ok = false;
                    return;
                }
                for (std::size_t k = 0; k < got.size(); ++k) {
                    const Record& g = got[k];
                    const Record& p = want[k];
                    if (g.local_id != p.local_id || g.parent_ref != p.parent_ref) ok = false;
                    auto sit = supplement_by_id.find(p.local_id);
                    const Record* s = sit == supplement_by_id.end() ? nullptr : sit->second;
                    std::set<std::string> output_keys;
                    for (const auto& f : g.fields) output_keys.insert(f.key);
                    for (const auto& key : output_keys) {
                        auto from_primary = with_key(p, key);
                        if (!from_primary.empty()) {
                            if (with_key(g, key) != from_primary) ok = false;
                        } else if (!s || with_key(g, key) != with_key(*s, key)) {
                            ok = false;
                        }
                    }
                    for (const auto& f : p.fields)
                        if (!output_keys.count(f.key)) ok = false;
                    if (s)
                        for (const auto& f : s->fields)
                            if (!output_keys.count(f.key)) ok = false;
                    if (g.level != (p.level ? p.level : (s ? s->level : std::nullopt))) ok = false;
                    if (g.language != (p.language ? p.language : (s ? s->language : std::nullopt))) ok = false;
                    check(g.children, p.children);
                }
            };
        check(result.forest, primary);
        std::set<std::string> unmatched, want_unmatched;
        for (const auto& u : result.unmatched) unmatched.insert(u.local_id);
        for (const auto& s : supplement)
            if (!primary_by_id.count(s.local_id)) want_unmatched.insert(s.local_id);
        if (unmatched != want_unmatched || result.unmatched.size() != want_unmatched.size()) ok = false;
        if (!ok) ++failures;
    }
    return {failures == 0, "200 pairs, " + std::to_string(failures) + " violate primary-wins/copy/unmatched"};
}

Outcome preview_consistency() {
    Rng rng(8008);
    Store store;
    {
        Transaction t = store.begin(SpaceName::staging);
        t.put_vocabulary({"terms", "Terms"});
        t.put_concept({"terms-1", "terms", {{"eng", "Ghettos"}}, {}});
        t.put_concept({"terms-2", "terms", {{"eng", "Camps"}}, {}});
        t.commit();
    }
    auto space = store.snapshot(SpaceName::staging);
    const std::vector<std::string> subjects{"ghetto", "camps", "deportations", "Ghetto"};
    std::size_t failures = 0, comparisons = 0;
    for (int i = 0; i < 50; ++i) {
        FileSet input;
        std::size_t n = 1 + rng() % 10;
        for (std::size_t j = 0; j < n; ++j) {
            std::string id = "p" + std::to_string(i) + "f" + std::to_string(j);
            std::string doc = "<r><item id=\"" + id + "\" t=\"" + archint::testing::random_words(rng, 1, 3) + "\" d=\"19" +
                              std::to_string(10 + rng() % 80) + "\">";
            std::size_t children = rng() % 4;
            for (std::size_t k = 0; k < children; ++k)
                doc += "<item id=\"" + id + "-" + std::to_string(k) + "\" t=\"Child " + std::to_string(k) + "\"><s>" +
                       subjects[rng() % subjects.size()] + "</s></item>";
            doc += "</item><junk>x</junk></r>";
            input.items.push_back(make_file_item(id + ".xml", doc, "upload:" + id, "application/xml"));
        }

        json rules = json::array({{{"op", "rename"}, {"path", "//item"}, {"to", "c"}}});
        if (rng() % 2) rules.push_back({{"op", "prune"}, {"path", "//junk"}});
        if (rng() % 2) rules.push_back({{"op", "wrap"}, {"path", "//s"}, {"with", "subjects"}});
        std::string mapping = "record_path,target_field,source,template,condition\n//c,local_id,@id,,\n";
        if (rng() % 2) mapping += "//c,title,@t,,\n";
        if (rng() % 2) mapping += "//c,unitdate,@d,,@d\n";
        if (rng() % 2) mapping += "//c,note,,\"Label {@t}\",\n";
        bool subjects_mapped = rng() % 2;
        if (subjects_mapped) mapping += "//c,access_point:subject,.//s,,\n";
        json stages = json::array({{{"kind", "structural-rewrite"}, {"rules", rules}},
                                   {{"kind", "xml-mapping"}, {"mapping", mapping}}});
        if (subjects_mapped && rng() % 2)
            stages.push_back({{"kind", "concordance"},
                              {"table", "source_label,kind,target_id\nGhetto,subject,terms-1\nCamps,subject,terms-2\n"}});
        auto pipeline = TransformPipeline::from_json(stages);

        StageCache cache;
        auto full = run_pipeline(pipeline, input, {&cache, space.get()});
        if (full.records.size() != n) {
            ++failures;
            continue;
        }
        for (std::size_t k : {std::size_t(1), 1 + rng() % n, n}) {
            ++comparisons;
            auto pv = preview(pipeline, input, k, {&cache, space.get()});
            std::vector<Record> slice(full.records.begin(), full.records.begin() + k);
            auto uncached = run_pipeline(pipeline, input.first(k), {nullptr, space.get()});
            if (canonical_records(pv.records) != canonical_records(slice) ||
                canonical_records(uncached.records) != canonical_records(slice) || pv.ead != serialize_ead(pv.records))
                ++failures;
        }
    }
    return {failures == 0, "50 pipelines, " + std::to_string(comparisons) + " previews, " + std::to_string(failures) +
                               " not byte-equal to the first-k slice"};
}

Outcome ead_round_trip() {
    Rng rng(9009);
    std::size_t failures = 0, records = 0;
    for (int i = 0; i < 200; ++i) {
        Record t = archint::testing::random_ead_tree(rng, 5, 4, "e" + std::to_string(i) + "-");
        records += tally({t});
        auto back = apply_mapping(default_ead_mapping(), serialize_ead(t)).records;
        if (back.size() != 1 || !(back[0] == t)) ++failures;
    }
    return {failures == 0, "200 trees, " + std::to_string(records) + " records, " + std::to_string(failures) + " unequal"};
}

Outcome promotion_fidelity() {
    Rng rng(10010);
    Store store;
    archint::testing::seed_repositories(store, 2);
    archint::testing::seed_repositories(store, 2, SpaceName::production);
    auto corpus = [&](const std::string& prefix, std::size_t cap) {
        auto forest = archint::testing::random_forest(rng, {6, 4, 4, cap}, prefix);
        archint::testing::ensure_titles(forest);
        return forest;
    };
    auto alpha = corpus("a-", 60);
    auto beta = corpus("b-", 40);
    ingest_dataset(store, {"alpha", archint::testing::repository_id(0), {}}, alpha);
    ingest_dataset(store, {"beta", archint::testing::repository_id(1), {}}, beta);
    promote_dataset(store, "beta", DatasetStatus::approved);

    std::vector<std::string> problems;
    auto round = [&](const std::string& label) {
        std::string outside = space_digest_excluding_dataset(*store.snapshot(SpaceName::production), "alpha");
        promote_dataset(store, "alpha", DatasetStatus::approved);
        auto prod = store.snapshot(SpaceName::production);
        auto staging = store.snapshot(SpaceName::staging);
        if (space_digest(*prod, DigestScope::dataset("alpha")) != space_digest(*staging, DigestScope::dataset("alpha")))
            problems.push_back(label + ": dataset digests differ");
        if (space_digest_excluding_dataset(*prod, "alpha") != outside)
            problems.push_back(label + ": content outside the dataset changed");
    };
    round("first promotion");

    // Edit titles, drop one subtree and re-promote.
    alpha[0].fields.front().value += " (revised)";
    if (alpha.size() > 1) alpha.pop_back();
    IngestOptions del;
    del.allow_deletions = true;
    ingest_dataset(store, {"alpha", archint::testing::repository_id(0), {}}, alpha, del);
    round("re-promotion");
    bool refused = false;
    try {
        promote_dataset(store, "alpha", DatasetStatus::staged);
    } catch (const Error& e) {
        refused = e.code() == "not-approved";
    }
    if (!refused) problems.push_back("unapproved promotion not refused");
    std::string detail = problems.empty() ? "dataset digests equal, outside content unchanged over two promotions" : "";
    for (const auto& p : problems) detail += p + "; ";
    return {problems.empty(), detail};
}

Outcome csv_reshape() {
    auto slurp = [](const std::string& name) {
        std::ifstream in(std::string(ARCHINT_TEST_DATA) + "/" + name, std::ios::binary);
        if (!in) throw std::runtime_error("missing fixture " + name);
        std::ostringstream s;
        s << in.rdbuf();
        return s.str();
    };
    CsvSpec spec = json::parse(slurp("collections_spec.json")).get<CsvSpec>();
    std::string csv_text = slurp("collections.csv");
    auto expected = json::parse(slurp("collections_expected.json")).get<std::vector<Record>>();
    auto got = csv_to_records(spec, csv_text);
    std::size_t rows = std::count(csv_text.begin(), csv_text.end(), '\n') - 1;
    bool ok = got.records == expected && got.warnings.empty() && canonical_records(got.records) == canonical_records(expected);
    return {ok, std::to_string(rows) + " rows -> " + std::to_string(got.records.size()) + " collections, " +
                    std::to_string(tally(got.records) - got.records.size()) + " items; " +
                    (ok ? "equal to the hand-written forest" : "differs from the hand-written forest")};
}

Outcome stale_cleanup() {
    const std::string repo = archint::testing::repository_id(0);
    auto scenario = [&](bool cross_reference, std::string& detail) {
        Store store;
        archint::testing::seed_repositories(store, 1);
        ingest_dataset(store, {"s", repo, {}}, {leaf("a", "A"), leaf("b", "B"), leaf("c", "C"), leaf("d", "D")});
        if (cross_reference) {
            ingest_dataset(store, {"other", repo, {}}, {leaf("o", "O")});
            Transaction t = store.begin(SpaceName::staging);
            t.put_link({"see-also", repo + "/o", repo + "/d", LinkKind::associative, std::nullopt});
            t.commit();
        }
        IngestOptions dry;
        dry.dry_run = true;
        dry.allow_deletions = true;
        auto current = ingest_dataset(store, {"s", repo, {}}, {leaf("a", "A"), leaf("c", "C")}, dry).current;

        std::string before = space_digest(*store.snapshot(SpaceName::staging));
        auto listed = cleanup_stale(store, "s", current, dry);
        std::set<std::string> stale(listed.stale.begin(), listed.stale.end());
        bool dry_ok = stale == std::set<std::string>{repo + "/b", repo + "/d"} && listed.stale.size() == 2 &&
                      listed.deleted == 0 && space_digest(*store.snapshot(SpaceName::staging)) == before;

        IngestOptions del;
        del.allow_deletions = true;
        auto done = cleanup_stale(store, "s", current, del);
        auto snap = store.snapshot(SpaceName::staging);
        bool kept_ac = snap->find_unit(repo + "/a") && snap->find_unit(repo + "/c");
        bool b_gone = !snap->find_unit(repo + "/b");
        bool d_state = cross_reference ? snap->find_unit(repo + "/d") != nullptr : snap->find_unit(repo + "/d") == nullptr;
        bool warned = std::any_of(done.warnings.begin(), done.warnings.end(),
                                  [&](const std::string& w) { return w.find(repo + "/d") != std::string::npos; });
        bool exec_ok = kept_ac && b_gone && d_state && done.deleted == (cross_reference ? 1u : 2u) &&
                       (cross_reference ? warned : done.warnings.empty());
        detail += std::string(cross_reference ? "cross-ref: " : "plain: ") + "dry-run " + (dry_ok ? "{b,d}, digest unchanged" : "WRONG") +
                  ", executed deleted=" + std::to_string(done.deleted) + (cross_reference && warned ? " (d retained, warned)" : "") +
                  "; ";
        return dry_ok && exec_ok;
    };
    std::string detail;
    bool plain = scenario(false, detail);
    bool cross = scenario(true, detail);
    return {plain && cross, detail};
}

// --- Suite runtime and network isolation -------------------------------------

#ifdef __linux__
// Moves this process into a fresh network namespace holding only a loopback
// interface. Children inherit it, so nothing in the run can reach beyond
// 127.0.0.1.
bool enter_loopback_namespace() {
    if (unshare(CLONE_NEWNET) != 0 && unshare(CLONE_NEWUSER | CLONE_NEWNET) != 0) return false;
    int fd = socket(AF_INET, SOCK_DGRAM, 0);
    if (fd < 0) return false;
    ifreq ifr{};
    std::snprintf(ifr.ifr_name, IFNAMSIZ, "lo");
    bool ok = ioctl(fd, SIOCGIFFLAGS, &ifr) == 0;
    ifr.ifr_flags |= IFF_UP | IFF_RUNNING;
    ok = ok && ioctl(fd, SIOCSIFFLAGS, &ifr) == 0;
    close(fd);
    return ok;
}

std::size_t non_loopback_interfaces() {
    std::size_t n = 0;
    if (auto* list = if_nameindex()) {
        for (auto* i = list; i->if_index != 0; ++i)
            if (std::string(i->if_name) != "lo") ++n;
        if_freenameindex(list);
    }
    return n;
}
#endif

bool g_isolated = false;

Outcome suite_runtime() {
    std::vector<std::string> suites;
    std::string list = ARCHINT_SUITE;
    for (std::size_t pos = 0; pos <= list.size();) {
        std::size_t bar = list.find('|', pos);
        if (bar == std::string::npos) bar = list.size();
        if (bar > pos) suites.push_back(list.substr(pos, bar - pos));
        pos = bar + 1;
    }
    std::vector<std::string> failed;
    for (const auto& exe : suites) {
        std::string cmd = "\"" + exe + "\" > /dev/null 2>&1";
        int rc = std::system(cmd.c_str());
        if (rc != 0) failed.push_back(exe.substr(exe.rfind('/') + 1));
    }
    double total = seconds_since(g_start);
    std::string network;
#ifdef __linux__
    network = g_isolated ? "loopback-only network namespace (" + std::to_string(non_loopback_interfaces()) +
                               " other interfaces)"
                         : "network namespace unavailable; mocks bind 127.0.0.1 only";
    bool network_ok = !g_isolated || non_loopback_interfaces() == 0;
#else
    network = "mocks bind 127.0.0.1 only";
    bool network_ok = true;
#endif
    std::string detail = std::to_string(suites.size()) + " module suites + acceptance in " + fmt_seconds(total) +
                         " (< 300 s); " + network;
    for (const auto& f : failed) detail += "; FAILED " + f;
    return {failed.empty() && total < kSuiteSeconds && network_ok && !suites.empty(), detail};
}

}  // namespace

int main() {
#ifdef __linux__
    g_isolated = enter_loopback_namespace();
#endif
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"idempotence", idempotence},
        {"transactional rollback", rollback},
        {"OAI-PMH completeness", oai_completeness},
        {"ResourceSync incremental", resourcesync_incremental},
        {"hierarchy round-trip", hierarchy_round_trip},
        {"skeleton-enrich oracle", skeleton_enrich_oracle},
        {"priority-merge property", priority_merge_property},
        {"preview consistency", preview_consistency},
        {"EAD round-trip", ead_round_trip},
        {"promotion fidelity", promotion_fidelity},
        {"CSV two-level reshape", csv_reshape},
        {"stale cleanup", stale_cleanup},
        {"full suite runtime", suite_runtime},
    };
    int failed = 0;
    for (const auto& [name, check] : criteria) {
        Outcome o;
        try {
            o = check();
        } catch (const Error& e) {
            o = {false, "error " + e.code() + ": " + e.what()};
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        if (!o.pass) ++failed;
        std::cout << (o.pass ? "PASS" : "FAIL") << "  " << name << " -- " << o.detail << std::endl;
    }
    std::cout << (failed ? std::to_string(failed) + " of " : "all ") << criteria.size()
              << (failed ? " criteria failed" : " criteria passed") << std::endl;
    return failed ? 1 : 0;
}
