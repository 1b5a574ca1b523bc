#include <benchmark/benchmark.h>

#include <string>

#include "archint/hierarchy.hpp"
#include "archint/path_expr.hpp"
#include "archint/transform.hpp"
#include "archint/xml.hpp"

using namespace archint;

namespace {

// A finding aid with `n` files spread over ten series.
std::string finding_aid(int n) {
    std::string doc = "<ead><archdesc level=\"fonds\"><did><unitid>F</unitid><unittitle>Fonds</unittitle></did><dsc>";
    for (int s = 0; s < 10; ++s) {
        doc += "<c level=\"series\" id=\"s" + std::to_string(s) + "\"><did><unittitle>Series " + std::to_string(s) +
               "</unittitle></did>";
        for (int f = s; f < n; f += 10)
            doc += "<c level=\"file\" id=\"f" + std::to_string(f) + "\"><did><unittitle>File " + std::to_string(f) +
                   "</unittitle><unitdate>1941-1944</unitdate></did><scopecontent><p>Letters and reports</p>"
                   "</scopecontent></c>";
        doc += "</c>";
    }
    return doc + "</dsc></archdesc></ead>";
}

std::vector<Record> chain_forest(int n) {
    std::vector<Record> flat;
    for (int i = 0; i < n; ++i) {
        Record r;
        r.local_id = "n" + std::to_string(i);
        if (i > 0) r.parent_ref = "n" + std::to_string((i - 1) / 4);
        r.add("title", "Node " + std::to_string(i));
        flat.push_back(r);
    }
    return build_tree(flat).forest;
}

}  // namespace

static void BM_XmlParse(benchmark::State& state) {
    std::string doc = finding_aid(static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(xml::parse(doc));
    state.SetBytesProcessed(state.iterations() * static_cast<int64_t>(doc.size()));
}
BENCHMARK(BM_XmlParse)->Arg(100)->Arg(1000);

static void BM_PathSelect(benchmark::State& state) {
    xml::Document doc = xml::parse(finding_aid(1000));
    PathExpr path = PathExpr::parse("//c/did/unittitle");
    for (auto _ : state) benchmark::DoNotOptimize(path.select(doc.node()));
}
BENCHMARK(BM_PathSelect);

static void BM_ApplyMapping(benchmark::State& state) {
    std::string doc = finding_aid(static_cast<int>(state.range(0)));
    MappingTable table = compile_mapping(
        "record_path,target_field,source,template,condition\n"
        "//c,local_id,@id,,\n//c,level,@level,,\n//c,title,did/unittitle,,\n"
        "//c,unitdate,did/unitdate,,\n//c,scopecontent,scopecontent/p,,\n");
    for (auto _ : state) benchmark::DoNotOptimize(apply_mapping(table, doc));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ApplyMapping)->Arg(100)->Arg(1000);

static void BM_EadRoundTrip(benchmark::State& state) {
    auto forest = apply_mapping(default_ead_mapping(), serialize_ead(chain_forest(500)[0])).records;
    for (auto _ : state) {
        std::string ead = serialize_ead(forest[0]);
        benchmark::DoNotOptimize(apply_mapping(default_ead_mapping(), ead));
    }
}
BENCHMARK(BM_EadRoundTrip);

static void BM_BuildTree(benchmark::State& state) {
    auto flat = flatten(chain_forest(static_cast<int>(state.range(0))));
    for (auto _ : state) benchmark::DoNotOptimize(build_tree(flat));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_BuildTree)->Arg(1000)->Arg(10000);

static void BM_CsvReshape(benchmark::State& state) {
    CsvSpec spec;
    spec.group_by = {"fonds"};
    spec.parent_columns = {{"fonds", "local_id"}, {"fonds_title", "title"}};
    spec.child_columns = {{"item", "local_id"}, {"item_title", "title"}};
    std::string csv = "fonds,fonds_title,item,item_title\n";
    for (int i = 0; i < state.range(0); ++i)
        csv += "F" + std::to_string(i % 20) + ",Fonds,i" + std::to_string(i) + ",Item " + std::to_string(i) + "\n";
    for (auto _ : state) benchmark::DoNotOptimize(csv_to_records(spec, csv));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_CsvReshape)->Arg(1000);
