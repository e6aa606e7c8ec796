// Copyright 2026 The graphc Authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include <fstream>
#include <random>
#include <sstream>

#include "graphc/bench.hpp"
#include "graphc/dsl.hpp"
#include "graphc/ops.hpp"
#include "graphc/rewrite.hpp"
#include "graphc/vm.hpp"

namespace {

using namespace graphc;

Tensor random_tensor(const Shape& shape, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Tensor t = Tensor::zeros(shape);
    for (auto& v : t.data()) v = u(rng);
    return t;
}

void BM_Dot(benchmark::State& state) {
    const std::int64_t n = state.range(0);
    auto a = make_input(TensorType::matrix(n, n), "a");
    auto b = make_input(TensorType::matrix(n, n), "b");
    auto f = compile(Graph{{a, b}, {dot(a, b)}, {}}, {});
    std::vector<Tensor> in{random_tensor({n, n}, 1), random_tensor({n, n}, 2)};
    for (auto _ : state) benchmark::DoNotOptimize(f.call(in));
    state.SetItemsProcessed(state.iterations() * 2 * n * n * n);
}
BENCHMARK(BM_Dot)->Arg(16)->Arg(64)->Arg(256);

// A fused elementwise chain against the same chain left unfused.
void BM_Elementwise(benchmark::State& state) {
    const std::int64_t n = state.range(0);
    auto x = make_input(TensorType::vector(n), "x");
    auto y = make_input(TensorType::vector(n), "y");
    auto out = tanh(add(mul(x, y), sigmoid(sub(x, y))));
    const auto level = state.range(1) ? OptLevel::standard : OptLevel::none;
    auto f = compile(Graph{{x, y}, {out}, {}}, {}, level);
    std::vector<Tensor> in{random_tensor({n}, 3), random_tensor({n}, 4)};
    for (auto _ : state) benchmark::DoNotOptimize(f.call(in));
    state.SetItemsProcessed(state.iterations() * n);
    state.SetLabel(state.range(1) ? "fused" : "unfused");
}
BENCHMARK(BM_Elementwise)->Args({10000, 0})->Args({10000, 1});

void BM_TrainStep(benchmark::State& state, bench::Model model, std::int64_t batch,
                  const char* option) {
    auto cfg = bench::default_config(model, batch);
    const auto entry = bench::ladder_entry(option);
    const bool repeated = entry.mode == bench::CallMode::repeated;
    auto m = bench::build_model(cfg, repeated);
    auto f = compile(m.train, entry.options);
    std::vector<Tensor> data{m.x, m.y};
    for (auto _ : state) {
        if (repeated) {
            benchmark::DoNotOptimize(f.call_repeated(1));
        } else {
            benchmark::DoNotOptimize(f.call(data));
        }
    }
    state.SetItemsProcessed(state.iterations() * bench::items_per_call(cfg));
}
BENCHMARK_CAPTURE(BM_TrainStep, logreg_b1_default, bench::Model::logreg, 1, "default");
BENCHMARK_CAPTURE(BM_TrainStep, logreg_b1_nogc, bench::Model::logreg, 1, "nogc");
BENCHMARK_CAPTURE(BM_TrainStep, logreg_b1_trust, bench::Model::logreg, 1, "trust");
BENCHMARK_CAPTURE(BM_TrainStep, logreg_b1_ncalls, bench::Model::logreg, 1, "ncalls");
BENCHMARK_CAPTURE(BM_TrainStep, mlp1_b60_default, bench::Model::mlp1, 60, "default");
BENCHMARK_CAPTURE(BM_TrainStep, rnn_default, bench::Model::rnn, 1, "default");

void BM_OptimizeMlp(benchmark::State& state) {
    auto m = bench::build_model(bench::default_config(bench::Model::mlp3, 10));
    for (auto _ : state) benchmark::DoNotOptimize(optimize(m.train));
}
BENCHMARK(BM_OptimizeMlp)->Unit(benchmark::kMillisecond);

void BM_ParseAndLower(benchmark::State& state) {
    std::ifstream f(GRAPHC_PROGRAMS_DIR "/rnn.gx");
    std::stringstream ss;
    ss << f.rdbuf();
    const std::string src = ss.str();
    for (auto _ : state) benchmark::DoNotOptimize(dsl::compile_source(src));
    state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(src.size()));
}
BENCHMARK(BM_ParseAndLower);

}  // namespace

BENCHMARK_MAIN();
