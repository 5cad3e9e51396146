#include <benchmark/benchmark.h>

#include <random>

#include "cclb/lp.hpp"

namespace {

// Random covering LP: min 1^T x, A x >= 1, A with entries in {0, 1}.
template <typename T>
cclb::LpProblem<T> covering(std::size_t vars, std::size_t rows, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution coin(0.3);
  cclb::LpProblem<T> lp(vars, cclb::Sense::Minimize);
  std::fill(lp.objective.begin(), lp.objective.end(), T(1));
  for (std::size_t i = 0; i < rows; ++i) {
    std::vector<T> row(vars, T(0));
    row[i % vars] = T(1);
    for (auto& v : row) {
      if (coin(rng)) v = T(1);
    }
    lp.add_row(std::move(row), cclb::Relation::GreaterEqual, T(1));
  }
  return lp;
}

template <typename T>
void BM_CoveringLp(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto lp = covering<T>(n, n, 42);
  for (auto _ : state) {
    auto sol = cclb::lp_solve(lp);
    benchmark::DoNotOptimize(sol.objective);
  }
}

}  // namespace

BENCHMARK_TEMPLATE(BM_CoveringLp, double)->Arg(16)->Arg(64)->Arg(128);
BENCHMARK_TEMPLATE(BM_CoveringLp, cclb::Rational)->Arg(16)->Arg(64);
