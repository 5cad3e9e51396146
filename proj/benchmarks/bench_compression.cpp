#include <benchmark/benchmark.h>

#include "cclb/compression.hpp"
#include "cclb/corpus.hpp"

namespace {

cclb::CompressionParameters small_params(double trials) {
  return cclb::compression_parameters(0.5, 0.0, 2, cclb::ParameterOverride{3, trials, 2});
}

void BM_ExactOutputLaw(benchmark::State& state) {
  const auto pi = cclb::noisy_bit(cclb::ratio(1, 4));
  const auto mu = cclb::InputDistribution::uniform(2, 2);
  const auto params = small_params(static_cast<double>(state.range(0)));
  for (auto _ : state) {
    auto law = cclb::exact_output_distribution<double>(pi, mu, 0, 1, 2, params);
    benchmark::DoNotOptimize(law.prob_good);
  }
}

void BM_ExactOutputLawRational(benchmark::State& state) {
  const auto pi = cclb::noisy_bit(cclb::ratio(1, 4));
  const auto mu = cclb::InputDistribution::uniform(2, 2);
  const auto params = small_params(static_cast<double>(state.range(0)));
  for (auto _ : state) {
    auto law = cclb::exact_output_distribution<cclb::Rational>(pi, mu, 0, 1, 2, params);
    benchmark::DoNotOptimize(law.prob_good);
  }
}

void BM_ZeroCommRun(benchmark::State& state) {
  const auto pi = cclb::noisy_bit(cclb::ratio(1, 4));
  const auto mu = cclb::InputDistribution::uniform(2, 2);
  const cclb::ZeroCommProtocol proto(pi, mu, small_params(static_cast<double>(state.range(0))));
  std::uint64_t run = 0;
  for (auto _ : state) benchmark::DoNotOptimize(proto.run(0, 1, 1, run++));
  state.SetItemsProcessed(state.iterations());
}

void BM_MonteCarloCounts(benchmark::State& state) {
  const auto pi = cclb::noisy_bit(cclb::ratio(1, 4));
  const auto mu = cclb::InputDistribution::uniform(2, 2);
  const cclb::ZeroCommProtocol proto(pi, mu, small_params(30));
  const auto samples = static_cast<std::uint64_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(cclb::monte_carlo_counts(proto, 0, 1, 2, 1, samples));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(samples));
}

}  // namespace

BENCHMARK(BM_ExactOutputLaw)->Arg(30)->Arg(1000)->Arg(100000);
BENCHMARK(BM_ExactOutputLawRational)->Arg(30)->Arg(300);
BENCHMARK(BM_ZeroCommRun)->Arg(30)->Arg(1000);
BENCHMARK(BM_MonteCarloCounts)->Arg(100000)->Unit(benchmark::kMillisecond);
