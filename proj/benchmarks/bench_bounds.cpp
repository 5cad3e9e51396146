#include <benchmark/benchmark.h>

#include "cclb/bounds.hpp"
#include "cclb/corpus.hpp"

namespace {

void BM_EnumerateRectangles(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    std::size_t count = 0;
    cclb::for_each_rectangle(n, n, [&](const cclb::Rectangle& r) { count += r.area(); });
    benchmark::DoNotOptimize(count);
  }
}

void BM_PartitionBound(benchmark::State& state) {
  const auto f = cclb::equality(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(cclb::prt(f, 0.1).value);
}

void BM_RelaxedPartitionBound(benchmark::State& state) {
  const auto f = cclb::equality(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(cclb::bprt(f, 0.1).value);
}

void BM_RelaxedPartitionBoundRational(benchmark::State& state) {
  const auto f = cclb::equality(1);
  const cclb::Rational eps = cclb::ratio(1, 10);
  for (auto _ : state) benchmark::DoNotOptimize(cclb::bprt(f, eps).value);
}

}  // namespace

BENCHMARK(BM_EnumerateRectangles)->Arg(4)->Arg(6)->Arg(8);
BENCHMARK(BM_PartitionBound)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RelaxedPartitionBound)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RelaxedPartitionBoundRational)->Unit(benchmark::kMillisecond);
