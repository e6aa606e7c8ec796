// Copyright 2026 The graphc Authors
// SPDX-License-Identifier: Apache-2.0
//
// Throughput benchmarks for small neural-network training steps: softmax
// regression, one- and three-layer tanh MLPs and an Elman RNN, on seeded
// synthetic data, across a ladder of runtime options.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "graphc/graph.hpp"
#include "graphc/vm.hpp"

namespace graphc::bench {

enum class Model : std::uint8_t { logreg, mlp1, mlp3, rnn };

std::string_view model_name(Model m);
std::optional<Model> parse_model(std::string_view name);

enum class CallMode : std::uint8_t { call, repeated };

struct LadderEntry {
    std::string name;
    RuntimeOptions options;
    CallMode mode = CallMode::call;
};

/// "default", "nogc", "trust" (nogc + trust_input) and "ncalls" (trust with
/// the data held in shared variables and call_repeated). Throws
/// std::invalid_argument for other names.
LadderEntry ladder_entry(std::string_view name);
std::vector<std::string> default_ladder();

struct BenchConfig {
    Model model = Model::logreg;
    std::int64_t input_dim = 784;
    std::int64_t output_dim = 10;
    std::vector<std::int64_t> hidden;
    std::int64_t batch = 60;
    std::int64_t seq_len = 0;  // rnn only
    std::vector<std::string> ladder = default_ladder();
    std::int64_t calls = 200;      // timed calls per repetition
    std::int64_t warmup = 20;      // untimed calls before the first repetition
    std::int64_t repetitions = 5;  // median is taken over these
    double learning_rate = 0.01;
    std::uint64_t seed = 1234;

    bool operator==(const BenchConfig&) const = default;
};

/// Desk-scale defaults: mlp1 [500], mlp3 [200, 200, 200] ([1000, 1000, 1000]
/// with `full`), rnn with 50 input and output units, 100 hidden units and
/// sequences of 50 elements. Throws std::invalid_argument on a bad batch.
BenchConfig default_config(Model m, std::int64_t batch, bool full = false);

/// Throws std::invalid_argument when dimensions or counts are not positive.
void check_config(const BenchConfig& cfg);

struct OptionResult {
    std::string option;
    std::int64_t calls = 0;        // per repetition
    std::vector<double> seconds;   // wall time per repetition
    double median_seconds = 0.0;
    double throughput = 0.0;       // examples (rnn: sequence elements) per second

    bool operator==(const OptionResult&) const = default;
};

struct BenchResult {
    BenchConfig config;
    std::string unit;  // "examples/s" or "elements/s"
    double wall_seconds = 0.0;
    std::vector<OptionResult> options;

    bool operator==(const BenchResult&) const = default;
};

/// Examples (or sequence elements) processed by one call.
std::int64_t items_per_call(const BenchConfig& cfg);

/// median(seconds) and items_per_call * calls / median.
void summarize(OptionResult& r, const BenchConfig& cfg);

/// A training step. With `data_as_shared` the batch lives in shared
/// variables and the graph has no inputs; otherwise `inputs` are (x, y).
struct BenchModel {
    Graph train;        // outputs {loss}, SGD updates on every parameter
    Graph loss;         // outputs {loss}, no updates
    std::vector<Variable> params;
    Tensor x;           // logreg/mlp: (batch, input_dim); rnn: (seq_len, input_dim)
    Tensor y;           // i64 class targets, one per row of x
};

BenchModel build_model(const BenchConfig& cfg, bool data_as_shared = false);

/// Loss before each of `steps` SGD steps, then the loss after the last one
/// (steps + 1 values). Computation only; no timing.
std::vector<double> train_losses(const BenchConfig& cfg, std::int64_t steps,
                                 const RuntimeOptions& options = {});

BenchResult run_bench(const BenchConfig& cfg);

/// Throughputs within this relative distance count as a tie.
inline constexpr double kTieTolerance = 0.05;

/// Consecutive ladder entries of `r` whose throughput falls below the
/// previous entry's by more than `tie`, as "a > b" strings.
std::vector<std::string> ladder_violations(const BenchResult& r, double tie = kTieTolerance);

/// Aligned table grouped by model, batch and option. Header only when empty.
std::string format_table(const std::vector<BenchResult>& results);
std::string to_json(const std::vector<BenchResult>& results);
/// Throws std::invalid_argument on malformed input.
std::vector<BenchResult> from_json(std::string_view text);

/// DOT of the optimized training graph.
std::string model_dot(const BenchConfig& cfg);

}  // namespace graphc::bench
