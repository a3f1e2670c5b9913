// Microbenchmarks for the enumeration, reduction, and compilation hot paths.

#include <benchmark/benchmark.h>

#include <cstdint>
#include <vector>

#include "sdht/bounds.hpp"
#include "sdht/channel.hpp"
#include "sdht/engine.hpp"
#include "sdht/prob.hpp"
#include "sdht/psm.hpp"
#include "sdht/rng.hpp"

namespace {

using namespace sdht;

ExchangeableLaw ternary_mixture(uint32_t n) {
  return ExchangeableLaw(
      n, {{0.6, FiniteDistribution({0.5, 0.3, 0.2})},
          {0.4, FiniteDistribution({0.2, 0.3, 0.5})}});
}

BooleanFormula majority_formula() {
  auto l0 = BooleanFormula::leaf(0);
  auto l1 = BooleanFormula::leaf(1);
  auto l2 = BooleanFormula::leaf(2);
  return BooleanFormula::disjunction(
      BooleanFormula::conjunction(l0, l1),
      BooleanFormula::conjunction(BooleanFormula::disjunction(l0, l1), l2));
}

void BM_histogram_prob(benchmark::State& state) {
  const uint32_t n = static_cast<uint32_t>(state.range(0));
  const auto law = ternary_mixture(n);
  const Histogram h({n / 3, n / 3, n - 2 * (n / 3)}, n);
  for (auto _ : state) {
    benchmark::DoNotOptimize(histogram_prob(law, h));
  }
}
BENCHMARK(BM_histogram_prob)->Arg(12)->Arg(48)->Arg(96);

void BM_law_tv_binary(benchmark::State& state) {
  const uint32_t n = static_cast<uint32_t>(state.range(0));
  const auto l1 = iid_law(FiniteDistribution::bernoulli(0.3), n);
  const ExchangeableLaw l2(n, {{0.5, FiniteDistribution::bernoulli(0.45)},
                               {0.5, FiniteDistribution::bernoulli(0.55)}});
  for (auto _ : state) {
    benchmark::DoNotOptimize(law_tv(l1, l2));
  }
}
BENCHMARK(BM_law_tv_binary)->Arg(16)->Arg(64)->Arg(256);

void BM_law_tv_ternary(benchmark::State& state) {
  const uint32_t n = static_cast<uint32_t>(state.range(0));
  const auto l1 = ternary_mixture(n);
  const auto l2 = iid_law(FiniteDistribution({0.4, 0.35, 0.25}), n);
  for (auto _ : state) {
    benchmark::DoNotOptimize(law_tv(l1, l2));
  }
}
BENCHMARK(BM_law_tv_ternary)->Arg(8)->Arg(16)->Arg(32);

void BM_one_bit_evaluate(benchmark::State& state) {
  const uint32_t n = static_cast<uint32_t>(state.range(0));
  const auto mu0 = FiniteDistribution::bernoulli(0.3);
  const auto mu1 = FiniteDistribution::bernoulli(0.7);
  const auto mu2 = FiniteDistribution::bernoulli(0.5);
  const auto scheme = build_one_bit_scheme(mu0, mu1, mu2, n);
  for (auto _ : state) {
    benchmark::DoNotOptimize(evaluate(scheme, {mu0, mu1}, {mu2}));
  }
}
BENCHMARK(BM_one_bit_evaluate)->Arg(16)->Arg(64);

void BM_reduce_to_binary(benchmark::State& state) {
  const Channel w({{0.1, 0.15, 0.25, 0.5}, {0.2, 0.25, 0.3, 0.25}});
  for (auto _ : state) {
    benchmark::DoNotOptimize(reduce_to_binary(w, 0.5));
  }
}
BENCHMARK(BM_reduce_to_binary);

void BM_sup_ratio_grid(benchmark::State& state) {
  const std::size_t resolution = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(sup_ratio_binary(0.5, resolution));
  }
}
BENCHMARK(BM_sup_ratio_grid)->Arg(100)->Arg(400);

void BM_barrington_compile(benchmark::State& state) {
  const auto formula = majority_formula();
  for (auto _ : state) {
    benchmark::DoNotOptimize(barrington_compile(formula));
  }
}
BENCHMARK(BM_barrington_compile);

void BM_kilian_encode(benchmark::State& state) {
  const auto protocol = kilian_randomize(barrington_compile(majority_formula()));
  CounterRng rng(17, 0);
  const auto key = protocol.sample_key(rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(protocol.encode(0, 1, key));
  }
}
BENCHMARK(BM_kilian_encode);

}  // namespace

BENCHMARK_MAIN();
