// Copyright 2026 The cohere Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <benchmark/benchmark.h>

#include "cohere/certificate.hpp"
#include "cohere/error.hpp"
#include "cohere/experiments.hpp"
#include "cohere/precondition.hpp"
#include "cohere/recovery.hpp"

namespace cohere {
namespace {

void quiet() { set_warning_sink([](std::string_view) {}); }

void BM_Coherence(benchmark::State& state) {
  const Frame f = random_gaussian_frame(state.range(0), state.range(1), 1);
  for (auto _ : state) benchmark::DoNotOptimize(coherence(f).value);
}
BENCHMARK(BM_Coherence)->Args({24, 64})->Args({64, 256})->Args({128, 1024});

void BM_SolveCoherence(benchmark::State& state) {
  quiet();
  const Frame f = random_gaussian_frame(state.range(0), state.range(1), 2);
  int iterations = 0;
  for (auto _ : state) {
    const PreconditionResult r = solve_coherence(f);
    iterations = r.iterations;
    benchmark::DoNotOptimize(r.q);
  }
  state.counters["ipm_iterations"] = iterations;
}
BENCHMARK(BM_SolveCoherence)->Args({4, 8})->Args({8, 16})->Args({12, 32})->Args({24, 64})
    ->Unit(benchmark::kMillisecond);

void BM_DiagonalLp(benchmark::State& state) {
  quiet();
  const Frame f = random_gaussian_frame(state.range(0), state.range(1), 3);
  for (auto _ : state) benchmark::DoNotOptimize(diagonal_lp(f).q);
}
BENCHMARK(BM_DiagonalLp)->Args({8, 16})->Args({24, 64})->Unit(benchmark::kMillisecond);

void BM_Certify(benchmark::State& state) {
  quiet();
  const Frame f = random_gaussian_frame(state.range(0), state.range(1), 4);
  for (auto _ : state) benchmark::DoNotOptimize(certify(f).violation);
}
BENCHMARK(BM_Certify)->Args({4, 8})->Args({8, 16})->Unit(benchmark::kMillisecond);

void BM_Omp(benchmark::State& state) {
  const Frame f = random_gaussian_frame(state.range(0), state.range(1), 5);
  const Vector y = f.matrix() * planted_signal(f.size(), state.range(2), 6);
  for (auto _ : state) benchmark::DoNotOptimize(omp(f.matrix(), y, f.dim()).residual_norm);
}
BENCHMARK(BM_Omp)->Args({32, 64, 4})->Args({128, 256, 8});

void BM_BasisPursuit(benchmark::State& state) {
  const Frame f = random_gaussian_frame(state.range(0), state.range(1), 7);
  const Vector y = f.matrix() * planted_signal(f.size(), state.range(2), 8);
  for (auto _ : state) benchmark::DoNotOptimize(basis_pursuit(f.matrix(), y).residual_norm);
}
BENCHMARK(BM_BasisPursuit)->Args({16, 32, 3})->Args({64, 128, 8})->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace cohere
BENCHMARK_MAIN();
