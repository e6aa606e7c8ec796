// Copyright 2026 The graphc Authors
// SPDX-License-Identifier: Apache-2.0
//
// Operation descriptor interface. Every op carries its own type inference,
// a direct in-process kernel, and optional gradient (L-op) and R-op rules.

#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "graphc/graph.hpp"
#include "graphc/tensor.hpp"
#include "graphc/types.hpp"

namespace graphc {

struct ScalarProgram;

/// Per-node mutable state owned by an execution frame (e.g. a Scan node's
/// inner frame). Created once per frame through Op::make_workspace.
struct OpWorkspace {
    virtual ~OpWorkspace() = default;
};

using OptVar = std::optional<Variable>;

class Op {
public:
    virtual ~Op() = default;

    /// Short op name ("add", "dot", "scan", ...).
    virtual std::string name() const = 0;
    /// Name plus parameters, used in DOT output and reports.
    virtual std::string label() const { return name(); }

    /// Output types for the given input types; throws TypeError.
    virtual std::vector<TensorType> infer(std::span<const TensorType> inputs) const = 0;

    /// Evaluates the op. `outputs` may hold buffers from a previous call that
    /// the kernel is free to reuse. For lazy ops, inputs that were not
    /// requested are null.
    virtual void compute(std::span<const Tensor* const> inputs, std::span<Tensor> outputs,
                         OpWorkspace* workspace) const = 0;

    virtual std::unique_ptr<OpWorkspace> make_workspace() const { return nullptr; }

    virtual bool has_grad() const { return false; }
    /// Given d(cost)/d(output) for each output (nullopt = no gradient),
    /// returns d(cost)/d(input) for each input (nullopt = no gradient, e.g.
    /// integer inputs).
    virtual std::vector<OptVar> grad(std::span<const Variable> inputs,
                                     std::span<const Variable> outputs,
                                     std::span<const OptVar> output_grads) const;

    virtual bool has_rop() const { return false; }
    /// Directional derivative of each output along the given input
    /// perturbations (nullopt = zero perturbation).
    virtual std::vector<OptVar> rop(std::span<const Variable> inputs,
                                    std::span<const Variable> outputs,
                                    std::span<const OptVar> perturbations) const;

    /// Lazy ops pull their inputs one decision at a time.
    virtual bool lazy() const { return false; }
    /// Indices of inputs still needed given which are available (non-null).
    /// Empty means the op is ready to compute.
    virtual std::vector<std::size_t> lazy_requires(std::span<const Tensor* const> inputs) const;

    /// Scalar function mapped by elementwise ops; null otherwise.
    virtual const ScalarProgram* scalar_body() const { return nullptr; }
    bool elementwise() const { return scalar_body() != nullptr; }

    /// Equality of op and parameters, used by CSE.
    virtual bool equals(const Op& other) const;
    virtual std::size_t hash() const;
};

}  // namespace graphc
