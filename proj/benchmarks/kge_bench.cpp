#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "flowdiff/data/synthetic.hpp"
#include "flowdiff/kge/tucker.hpp"
#include "flowdiff/ukg/builders.hpp"

using namespace flowdiff;

namespace {

std::vector<double> uniform(std::size_t n, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> v(n);
    for (auto& x : v) x = u(rng);
    return v;
}

void BM_TuckerScore(benchmark::State& state) {
    const auto d = static_cast<std::size_t>(state.range(0));
    std::mt19937_64 rng(3);
    const auto h = uniform(d, rng), r = uniform(d, rng), t = uniform(d, rng), core = uniform(d * d * d, rng);
    for (auto _ : state) benchmark::DoNotOptimize(kge::tucker_score(h, r, t, core));
}
BENCHMARK(BM_TuckerScore)->Arg(16)->Arg(32)->Arg(64);

void BM_KgeEpoch(benchmark::State& state) {
    data::SyntheticConfig sc;
    sc.num_regions = static_cast<int>(state.range(0));
    sc.num_days = 1;
    const auto synth = data::make_synthetic(sc);
    ukg::KgInputs in;
    in.regions = synth.geometry;
    in.pois = synth.pois;
    in.checkins = synth.checkins;
    const auto kg = ukg::build_urban_kg(in, ukg::KgBuildConfig{});
    kge::KgeConfig kc;
    kc.epochs = 1;
    for (auto _ : state) {
        auto result = kge::train_kg_embeddings(kg, kc);
        benchmark::DoNotOptimize(result.embeddings.dim);
    }
    state.counters["facts"] = static_cast<double>(kg.facts().size());
}
BENCHMARK(BM_KgeEpoch)->Arg(8)->Arg(32)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
