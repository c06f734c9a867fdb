#include "handfly/batch.hpp"

#include "handfly/emulator.hpp"
#include "handfly/pipeline.hpp"

#include <benchmark/benchmark.h>

#include <omp.h>

using namespace handfly;

namespace
{
std::vector<batch::Session> make_sessions(int count)
{
        std::vector<batch::Session> out;
        for (int i = 0; i < count; ++i)
        {
                emulator::Script s;
                s.fingers = 5;
                s.then(0, {}, {}).hold(1.5);
                for (int k = 0; k < 5; ++k)
                {
                        s.then(0.5, {20.0 - 8 * k, -15.0 + 5 * k, 10.0 * k}, {-60, -10, -70, -30, 0}).then(0.5, {}, {});
                }
                out.push_back({{5, 100}, emulator::synthesize(s, {0.005, 0.05, static_cast<std::uint64_t>(i + 1)})});
        }
        return out;
}

const std::vector<batch::Session>& sessions()
{
        static const auto s = make_sessions(16);
        return s;
}

void BM_EstimateSerial(benchmark::State& state)
{
        const auto params = chain_params(Config{});
        for (auto _ : state)
        {
                benchmark::DoNotOptimize(batch::estimate_serial(sessions(), params));
        }
        state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(sessions().size() * sessions()[0].packets.size()));
}

void BM_EstimateParallel(benchmark::State& state)
{
        omp_set_num_threads(static_cast<int>(state.range(0)));
        const auto params = chain_params(Config{});
        for (auto _ : state)
        {
                benchmark::DoNotOptimize(batch::estimate_parallel(sessions(), params));
        }
        state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(sessions().size() * sessions()[0].packets.size()));
}
}

BENCHMARK(BM_EstimateSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EstimateParallel)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
