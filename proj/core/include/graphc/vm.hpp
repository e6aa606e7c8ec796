// Copyright 2026 The graphc Authors
// SPDX-License-Identifier: Apache-2.0
//
// Compiled functions: an optimized graph scheduled into a Program and run
// by a demand-driven virtual machine.

#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "graphc/graph.hpp"
#include "graphc/rewrite.hpp"
#include "graphc/tensor.hpp"

namespace graphc {

struct RuntimeOptions {
    bool gc = true;            // release intermediates once consumed
    bool trust_input = false;  // skip input type checks and conversion
    bool lazy = true;          // demand-driven walk when lazy ops are present
    bool timing = false;       // per-node wall time (counters are always on)
};

struct ProfileEntry {
    std::string node;  // "<topo index>:<op label>"
    std::string op;
    std::uint64_t count = 0;
    std::uint64_t nanos = 0;
};

class CompiledFunction {
public:
    CompiledFunction(const CompiledFunction&) = delete;
    CompiledFunction& operator=(const CompiledFunction&) = delete;
    CompiledFunction(CompiledFunction&&) noexcept;
    CompiledFunction& operator=(CompiledFunction&&) noexcept;
    ~CompiledFunction();

    /// Runs one call. Updates are written to shared storage after all
    /// outputs and update values are computed.
    std::vector<Tensor> call(std::span<const Tensor> inputs);
    std::vector<Tensor> operator()(std::span<const Tensor> inputs) { return call(inputs); }
    std::vector<Tensor> call(std::initializer_list<Tensor> inputs);

    /// Runs `n` calls of an input-less function and returns the last outputs.
    std::vector<Tensor> call_repeated(std::int64_t n);

    const RuntimeOptions& options() const;
    const Graph& optimized_graph() const;
    const PassReport& report() const;
    std::size_t num_instructions() const;

    std::vector<ProfileEntry> profile() const;
    std::string profile_json() const;
    std::string profile_text() const;
    void reset_profile();
    /// Elements currently held in intermediate buffers.
    std::size_t buffered_elements() const;

private:
    struct Impl;
    explicit CompiledFunction(std::unique_ptr<Impl> impl);
    friend CompiledFunction compile(const Graph&, const RuntimeOptions&, std::optional<OptLevel>,
                                    const OptimizeOptions&);
    std::unique_ptr<Impl> impl_;
};

/// Validates, optimizes (level from `level`, else GRAPHC_OPT_LEVEL, else
/// default), plans loop buffers and schedules `g`. Throws GraphError when
/// the graph is invalid.
CompiledFunction compile(const Graph& g, const RuntimeOptions& options = {},
                         std::optional<OptLevel> level = std::nullopt,
                         const OptimizeOptions& opt_options = {});

/// Level named by GRAPHC_OPT_LEVEL, if set and valid.
std::optional<OptLevel> env_opt_level();

/// Parses profile JSON back into entries.
std::vector<ProfileEntry> parse_profile_json(const std::string& text);

}  // namespace graphc
