#include <benchmark/benchmark.h>

#include "archint/ingest.hpp"
#include "archint/store.hpp"

using namespace archint;

namespace {

void seed(Store& store) {
    Transaction t = store.begin(SpaceName::staging);
    t.put_country({"xx", "Testland", std::nullopt});
    t.put_repository({"xx-000001", "xx", "Repository", {}, std::nullopt});
    t.commit();
}

std::vector<Record> corpus(int n) {
    Record root;
    root.local_id = "F";
    root.level = Level::fonds;
    root.add("title", "Fonds");
    for (int s = 0; s < 10; ++s) {
        Record series;
        series.local_id = "s" + std::to_string(s);
        series.parent_ref = "F";
        series.add("title", "Series " + std::to_string(s));
        for (int f = s; f < n; f += 10) {
            Record file;
            file.local_id = "f" + std::to_string(f);
            file.parent_ref = series.local_id;
            file.add("title", "File " + std::to_string(f));
            file.add("scopecontent", "Correspondence, reports and lists");
            series.children.push_back(file);
        }
        root.children.push_back(series);
    }
    return {root};
}

}  // namespace

static void BM_IngestFresh(benchmark::State& state) {
    auto records = corpus(static_cast<int>(state.range(0)));
    for (auto _ : state) {
        state.PauseTiming();
        Store store;
        seed(store);
        state.ResumeTiming();
        benchmark::DoNotOptimize(ingest_dataset(store, {"ds", "xx-000001", std::nullopt}, records));
    }
}
BENCHMARK(BM_IngestFresh)->Arg(200)->Arg(2000)->Unit(benchmark::kMillisecond);

// Second run of the same corpus: every unit is compared and left unchanged.
static void BM_IngestUnchanged(benchmark::State& state) {
    auto records = corpus(static_cast<int>(state.range(0)));
    Store store;
    seed(store);
    ingest_dataset(store, {"ds", "xx-000001", std::nullopt}, records);
    for (auto _ : state) benchmark::DoNotOptimize(ingest_dataset(store, {"ds", "xx-000001", std::nullopt}, records));
}
BENCHMARK(BM_IngestUnchanged)->Arg(200)->Arg(2000)->Unit(benchmark::kMillisecond);

static void BM_SpaceDigest(benchmark::State& state) {
    Store store;
    seed(store);
    ingest_dataset(store, {"ds", "xx-000001", std::nullopt}, corpus(static_cast<int>(state.range(0))));
    auto snap = store.snapshot(SpaceName::staging);
    for (auto _ : state) benchmark::DoNotOptimize(space_digest(*snap));
}
BENCHMARK(BM_SpaceDigest)->Arg(2000)->Unit(benchmark::kMillisecond);

static void BM_Promote(benchmark::State& state) {
    auto records = corpus(static_cast<int>(state.range(0)));
    for (auto _ : state) {
        state.PauseTiming();
        Store store;
        seed(store);
        {
            Transaction t = store.begin(SpaceName::production);
            t.put_country({"xx", "Testland", std::nullopt});
            t.put_repository({"xx-000001", "xx", "Repository", {}, std::nullopt});
            t.commit();
        }
        ingest_dataset(store, {"ds", "xx-000001", std::nullopt}, records);
        state.ResumeTiming();
        benchmark::DoNotOptimize(promote_dataset(store, "ds", DatasetStatus::approved));
    }
}
BENCHMARK(BM_Promote)->Arg(2000)->Unit(benchmark::kMillisecond);
