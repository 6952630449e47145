#include <benchmark/benchmark.h>

#include "t2sim/assembler/assembler.hpp"
#include "t2sim/harness/programs.hpp"
#include "t2sim/harness/runner.hpp"
#include "t2sim/harness/scenarios.hpp"
#include "t2sim/isa/encoding.hpp"

using namespace t2sim;

namespace {

harness::RunConfig config_for(std::string source, bool trace) {
    harness::RunConfig cfg;
    cfg.name = "bench";
    cfg.sim.record_trace = trace;
    cfg.programs.push_back({std::move(source), "<bench>", std::nullopt, 0});
    return cfg;
}

void BM_Assemble(benchmark::State& state) {
    const auto src = harness::programs::constant_heavy(static_cast<unsigned>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(assembler::assemble(src));
    state.SetItemsProcessed(state.iterations() * state.range(0) * 6);
}
BENCHMARK(BM_Assemble)->Arg(20)->Arg(200);

void BM_EncodeDecode(benchmark::State& state) {
    const auto img = assembler::assemble(harness::programs::density_reference());
    for (auto _ : state) {
        for (const auto& rec : img.instructions) {
            const auto e = isa::encode(rec.insn);
            benchmark::DoNotOptimize(isa::decode(e.halfwords[0], e.halfwords[1]));
        }
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(img.instructions.size()));
}
BENCHMARK(BM_EncodeDecode);

// Simulated instructions per second on a loop-heavy program.
void BM_Simulate(benchmark::State& state) {
    const bool trace = state.range(0) != 0;
    const auto cfg = config_for(harness::programs::density_reference(), trace);
    std::uint64_t retired = 0;
    for (auto _ : state) {
        harness::Session s(cfg);
        s.run();
        retired += s.sim().counters().retired;
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(retired));
    state.SetLabel(trace ? "trace" : "no trace");
}
BENCHMARK(BM_Simulate)->Arg(0)->Arg(1);

void BM_Scenario(benchmark::State& state, const char* name) {
    for (auto _ : state) benchmark::DoNotOptimize(harness::run_scenario(name));
}
BENCHMARK_CAPTURE(BM_Scenario, tail_chain, "tail_chain");
BENCHMARK_CAPTURE(BM_Scenario, literal_pool, "literal_pool");
BENCHMARK_CAPTURE(BM_Scenario, soft_error, "soft_error")->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
