#include <benchmark/benchmark.h>

#include <cmath>

#include <vector>

#include "trimshift/experiment.hpp"
#include "trimshift/spectral.hpp"
#include "trimshift/trimming.hpp"

using namespace trimshift;

namespace {

MarkovMeasure bernoulli_half() {
    return MarkovMeasure(ShiftSystem(2, std::vector<int>{1, 1, 1, 1}, 0.5),
                         {0.5, 0.5, 0.5, 0.5});
}

void BM_AccumulatorPush(benchmark::State& state) {
    Xoshiro256pp rng(1);
    std::vector<double> values(1 << 16);
    for (auto& v : values) v = std::pow(1.0 - rng.next_unit(), -2.0);
    for (auto _ : state) {
        TrimAccumulator acc;
        for (double v : values) acc.push(v);
        benchmark::DoNotOptimize(acc.total());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<long>(values.size()));
}
BENCHMARK(BM_AccumulatorPush);

void BM_TrimmedSum(benchmark::State& state) {
    Xoshiro256pp rng(2);
    TrimAccumulator acc;
    for (int i = 0; i < 1000000; ++i) acc.push(std::pow(1.0 - rng.next_unit(), -2.0));
    const auto b = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(acc.trimmed_sum(b));
}
BENCHMARK(BM_TrimmedSum)->Arg(10)->Arg(1000)->Arg(60000);

void BM_SampleStream(benchmark::State& state) {
    const auto mu = bernoulli_half();
    std::uint64_t path = 0;
    for (auto _ : state) {
        TrajectorySampler sampler(mu, 7, path++);
        std::uint64_t acc = 0;
        for (int i = 0; i < 1 << 16; ++i) acc += sampler.next();
        benchmark::DoNotOptimize(acc);
    }
    state.SetItemsProcessed(state.iterations() * (1 << 16));
}
BENCHMARK(BM_SampleStream);

void BM_ReturnEval(benchmark::State& state) {
    const auto mu = bernoulli_half();
    const ReturnTimeObservable chi(mu, 0, 4.0);
    TrajectorySampler sampler(mu, 13, 0);
    std::vector<Symbol> stream(1 << 16);
    for (auto& s : stream) s = sampler.next();
    for (auto _ : state) {
        double sum = 0.0;
        for (std::size_t i = 0; i + chi.lookahead_window() <= stream.size(); ++i)
            sum += chi.eval(std::span<const Symbol>(stream.data() + i, chi.lookahead_window()));
        benchmark::DoNotOptimize(sum);
    }
}
BENCHMARK(BM_ReturnEval);

void BM_ParetoEvalBits(benchmark::State& state) {
    const ParetoObservable chi(0.5);
    Xoshiro256pp rng(3);
    for (auto _ : state) {
        std::uint64_t hi = rng.next(), lo = rng.next();
        double sum = 0.0;
        for (int i = 0; i < 1 << 14; ++i) {
            hi = (hi << 1) | (lo >> 63);
            lo = (lo << 1) | (rng.next() & 1);
            sum += chi.value_from_bits(hi, lo);
        }
        benchmark::DoNotOptimize(sum);
    }
    state.SetItemsProcessed(state.iterations() * (1 << 14));
}
BENCHMARK(BM_ParetoEvalBits);

void BM_SeminormAudit(benchmark::State& state) {
    const auto mu = bernoulli_half();
    const ReturnTimeObservable chi(mu, 0, 4.0);
    const int kmax = static_cast<int>(state.range(0));
    for (auto _ : state) {
        const auto h = truncated_level_function(chi, mu, chi.level_value(kmax));
        benchmark::DoNotOptimize(quasi_holder_seminorm(h, 0.9, mu));
    }
}
BENCHMARK(BM_SeminormAudit)->Arg(6)->Arg(10);

void BM_SpectralGap(benchmark::State& state) {
    const auto mu = MarkovMeasure(ShiftSystem(2, std::vector<int>{1, 1, 1, 1}, 0.5),
                                  {0.9, 0.1, 0.5, 0.5});
    const auto t = assemble_transfer(mu, static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(spectral_gap(t));
}
BENCHMARK(BM_SpectralGap)->Arg(1)->Arg(4)->Arg(8);

} // namespace

BENCHMARK_MAIN();
