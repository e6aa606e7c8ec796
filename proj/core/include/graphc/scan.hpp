// Copyright 2026 The graphc Authors
// SPDX-License-Identifier: Apache-2.0
//
// Symbolic loops. A Scan node runs an inner graph once per step, slicing
// sequences, feeding back recurrent state taps and passing loop-invariant
// values through unchanged.

#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "graphc/graph.hpp"
#include "graphc/op.hpp"

namespace graphc {

class Program;

enum class ScanSteps : std::uint8_t {
    derived,   // rows(first sequence) - its largest offset
    constant,  // fixed count
    symbolic,  // first outer input, an i64 scalar
};

struct ScanSpec {
    // Inner inputs, in order: one per (sequence, offset), one per (state,
    // tap), then one per non-sequence.
    std::vector<Variable> inner_inputs;
    // Inner outputs, in order: state updates, collected outputs, and the
    // stop condition when `until` is set.
    std::vector<Variable> inner_outputs;

    std::vector<std::vector<std::int64_t>> seq_offsets;  // per sequence, each >= 0
    std::vector<std::vector<std::int64_t>> state_taps;   // per state, each < 0
    std::size_t n_nonseqs = 0;
    std::size_t n_collected = 0;

    ScanSteps steps = ScanSteps::derived;
    std::int64_t const_steps = 0;
    bool until = false;
    // Iterates from the last time index to the first. Outputs stay indexed
    // by time; taps refer to earlier iterations.
    bool reverse = false;
    // Per outer output: rows kept (0 = full history). Set by the memory plan.
    std::vector<std::int64_t> keep_rows;
    bool inner_optimized = false;

    std::size_t n_sequences() const { return seq_offsets.size(); }
    std::size_t n_states() const { return state_taps.size(); }
    std::size_t n_outputs() const { return n_states() + n_collected; }
    std::size_t n_seq_inputs() const;
    std::size_t n_tap_inputs() const;
    /// Largest |tap| of a state.
    std::int64_t depth(std::size_t state) const;
    std::int64_t max_offset(std::size_t seq) const;
    /// Index into inner_inputs of the first tap of a state.
    std::size_t state_input(std::size_t state) const;
    std::size_t seq_input(std::size_t seq) const;
    std::size_t nonseq_input(std::size_t m) const { return n_seq_inputs() + n_tap_inputs() + m; }

    /// Outer input layout: [n_steps] sequences inits nonseqs.
    std::size_t outer_seq(std::size_t s) const { return lead() + s; }
    std::size_t outer_init(std::size_t k) const { return lead() + n_sequences() + k; }
    std::size_t outer_nonseq(std::size_t m) const {
        return lead() + n_sequences() + n_states() + m;
    }
    std::size_t n_outer_inputs() const { return outer_nonseq(n_nonseqs); }
    std::size_t lead() const { return steps == ScanSteps::symbolic ? 1 : 0; }

    const TensorType& state_type(std::size_t k) const { return inner_outputs[k].type(); }
    /// Type of the initial value: the state itself for depth 1, otherwise
    /// (depth, *state) holding the oldest value first.
    TensorType init_type(std::size_t k) const;
};

class Scan final : public Op {
public:
    explicit Scan(ScanSpec spec);

    const ScanSpec& spec() const { return spec_; }
    const std::shared_ptr<const Program>& program() const { return program_; }

    std::string name() const override { return "scan"; }
    std::string label() const override;
    std::vector<TensorType> infer(std::span<const TensorType> inputs) const override;
    void compute(std::span<const Tensor* const> inputs, std::span<Tensor> outputs,
                 OpWorkspace* workspace) const override;
    std::unique_ptr<OpWorkspace> make_workspace() const override;
    bool has_grad() const override { return true; }
    std::vector<OptVar> grad(std::span<const Variable> inputs, std::span<const Variable> outputs,
                             std::span<const OptVar> output_grads) const override;
    bool has_rop() const override { return true; }
    std::vector<OptVar> rop(std::span<const Variable> inputs, std::span<const Variable> outputs,
                            std::span<const OptVar> perturbations) const override;
    bool equals(const Op& other) const override { return this == &other; }
    std::size_t hash() const override;

private:
    ScanSpec spec_;
    std::shared_ptr<const Program> program_;
};

/// Builds a Scan node from a complete spec. Inner references to outer
/// variables that are not listed as inputs are captured as extra
/// non-sequences. Returns the outer outputs.
std::vector<Variable> make_scan(ScanSpec spec, std::vector<Variable> outer_inputs);

const Scan* scan_op(const NodePtr& node);

// ---- Builder API -----------------------------------------------------------

struct ScanSequence {
    Variable seq;
    std::vector<std::int64_t> offsets{0};
};

struct ScanState {
    Variable init;
    std::vector<std::int64_t> taps{-1};
};

struct StepInputs {
    std::vector<std::vector<Variable>> sequences;  // [sequence][offset]
    std::vector<std::vector<Variable>> states;     // [state][tap]
    std::vector<Variable> non_sequences;
};

struct StepResult {
    std::vector<Variable> states;     // one update per state
    std::vector<Variable> collected;  // stacked per step
    std::optional<Variable> until;    // stop after the step where this is nonzero
};

struct ScanArgs {
    std::vector<ScanSequence> sequences;
    std::vector<ScanState> states;
    std::vector<Variable> non_sequences;
    std::optional<std::int64_t> n_steps;
    std::optional<Variable> n_steps_var;  // i64 scalar
};

struct ScanResult {
    std::vector<Variable> states;     // (steps, *state) histories
    std::vector<Variable> collected;  // (steps, *output)
};

using StepFn = std::function<StepResult(const StepInputs&)>;

/// Traces `step` on fresh inner variables and wraps it in a Scan node.
/// Steps come from `n_steps`, `n_steps_var`, or the first sequence.
ScanResult scan(const StepFn& step, const ScanArgs& args);

// ---- Loop optimizations ----------------------------------------------------

std::size_t count_scans(const Graph& g);

/// Inlines scans with a constant single step.
bool unroll_single_step_scans(Graph& g);
/// Moves loop-invariant work, per-step elementwise work and vector-matrix
/// products over sequences out of loops; removes loops left with nothing
/// to iterate.
bool hoist_scan_invariants(Graph& g);
/// Fuses scans with the same step count that do not depend on each other.
bool merge_scans(Graph& g);
/// Drops unused outputs and inputs of scans and merges duplicate states.
bool prune_scans(Graph& g);
/// Runs `fn` on every scan inner graph not yet optimized; returns whether
/// anything changed.
bool optimize_scan_bodies(Graph& g, const std::function<Graph(const Graph&)>& fn);

struct ScanPlanEntry {
    std::uint64_t node_id = 0;
    std::size_t output = 0;
    std::int64_t rows = 0;  // 0 = full history
};

/// Buffer depth chosen for every scan output of `g`.
std::vector<ScanPlanEntry> scan_memory_plan(const Graph& g);
/// Applies scan_memory_plan: outputs whose consumers only read the last
/// few rows keep a rotating buffer instead of the whole history.
bool apply_scan_memory_plan(Graph& g);

}  // namespace graphc
