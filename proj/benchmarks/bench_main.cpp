#include "bcpflood/bcp.hpp"
#include "bcpflood/postproc.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace bcpflood;

namespace {

TimeSeriesSample pixel(std::size_t n, std::size_t channels, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    std::vector<double> v(n * channels);
    for (std::size_t t = 0; t < n; ++t)
        for (std::size_t c = 0; c < channels; ++c) v[t * channels + c] = noise(rng) - (t + 1 == n ? 8.0 : 0.0);
    return TimeSeriesSample(n, channels, std::move(v));
}

void BM_RunBcpPixel(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto d = static_cast<std::size_t>(state.range(1));
    const TimeSeriesSample sample = pixel(n, d, 1);
    BcpConfig config;
    config.channel_mode = d == 1 ? ChannelMode::single : ChannelMode::pooled;
    for (auto _ : state) benchmark::DoNotOptimize(run_bcp(sample, config));
}
BENCHMARK(BM_RunBcpPixel)->Args({12, 1})->Args({12, 2})->Args({31, 1})->Args({31, 2});

void BM_ConditionalOdds(benchmark::State& state) {
    const TimeSeriesSample sample = pixel(static_cast<std::size_t>(state.range(0)), 1, 2);
    Indicators u(sample.length() - 1, false);
    const BcpConfig config;
    for (auto _ : state) benchmark::DoNotOptimize(conditional_change_odds(u.size() / 2, sample, u, config));
}
BENCHMARK(BM_ConditionalOdds)->Arg(12)->Arg(31);

void BM_VarianceIntegral(benchmark::State& state) {
    for (auto _ : state) benchmark::DoNotOptimize(variance_ratio_integral(3.5, 7.1, 23, 0.2, 3));
}
BENCHMARK(BM_VarianceIntegral);

void BM_BoxFilter(benchmark::State& state) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Grid<double> g(512, 512);
    for (double& v : g.data()) v = unit(rng);
    const int w = static_cast<int>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(box_filter(g, w));
}
BENCHMARK(BM_BoxFilter)->Arg(3)->Arg(9)->Arg(15);

}  // namespace
BENCHMARK_MAIN();
