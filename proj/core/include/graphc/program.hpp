// Copyright 2026 The graphc Authors
// SPDX-License-Identifier: Apache-2.0
//
// Executable schedule for a fixed set of input and output variables, and
// the per-context mutable state (Frame) that runs it. Used by compiled
// functions and by loop bodies.

#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "graphc/graph.hpp"
#include "graphc/op.hpp"

namespace graphc {

struct ProgramCell {
    TensorType type;
    Origin origin = Origin::output;
    std::string name;
    int producer = -1;  // instruction index, -1 for leaves
    std::size_t producer_output = 0;
    std::shared_ptr<const Tensor> constant;
    std::shared_ptr<SharedStorage> shared;
    int consumers = 0;
};

struct ProgramInstr {
    NodePtr node;
    std::vector<int> in;
    std::vector<int> out;
    // Cells whose last eager-mode consumer is this instruction.
    std::vector<int> free_after;
    std::string label;  // "<topo index>:<op label>"
};

class Program {
public:
    /// Schedules every node needed for `outputs`. Leaves that are not in
    /// `inputs` must be shared variables or constants.
    Program(std::span<const Variable> inputs, std::span<const Variable> outputs);

    const std::vector<ProgramCell>& cells() const { return cells_; }
    const std::vector<ProgramInstr>& instrs() const { return instrs_; }
    const std::vector<int>& input_cells() const { return input_cells_; }
    const std::vector<int>& output_cells() const { return output_cells_; }
    bool has_lazy() const { return has_lazy_; }
    /// Cell of a variable, or -1.
    int cell_of(VarId id) const;

private:
    std::vector<ProgramCell> cells_;
    std::vector<ProgramInstr> instrs_;
    std::vector<int> input_cells_;
    std::vector<int> output_cells_;
    std::unordered_map<VarId, int> index_;
    bool has_lazy_ = false;
};

struct NodeProfile {
    std::uint64_t count = 0;
    std::uint64_t nanos = 0;
};

struct ExecOptions {
    bool gc = true;
    bool timing = false;
};

/// Mutable execution state for one Program. Not thread-safe.
class Frame {
public:
    explicit Frame(std::shared_ptr<const Program> program);

    const Program& program() const { return *program_; }

    /// Points an input cell at caller-owned storage (must outlive the run).
    void bind(int cell, const Tensor* value) {
        value_[cell] = value;
        ready_[cell] = 1;
    }
    const Tensor* value(int cell) const { return value_[cell]; }
    bool ready(int cell) const { return ready_[cell] != 0; }
    /// Storage owned by the frame for a computed cell.
    Tensor& owned(int cell);

    const std::vector<NodeProfile>& profile() const { return profile_; }
    void reset_profile();
    /// Capacity of all owned buffers, in elements.
    std::size_t owned_capacity() const;

    /// Runs every instruction in order.
    void run_eager(const ExecOptions& opts);
    /// Demand-driven run computing only what `demanded` cells need; lazy ops
    /// choose which inputs are demanded.
    void run_lazy(std::span<const int> demanded, const ExecOptions& opts);
    /// Lazy run when the program contains lazy ops, eager otherwise.
    void run(std::span<const int> demanded, const ExecOptions& opts, bool lazy);

    /// Releases intermediate buffers (keeps outputs).
    void collect_garbage();

private:
    void begin_call();
    void execute(std::size_t i, std::span<const Tensor* const> inputs, const ExecOptions& opts);
    void release(int cell);

    std::shared_ptr<const Program> program_;
    std::vector<std::vector<Tensor>> out_;  // per instruction
    std::vector<const Tensor*> value_;
    std::vector<std::uint8_t> ready_;
    std::vector<std::uint8_t> done_;
    std::vector<int> pending_;
    std::vector<std::unique_ptr<OpWorkspace>> workspaces_;
    std::vector<NodeProfile> profile_;
    std::vector<std::uint8_t> is_output_;
};

}  // namespace graphc
