// Copyright 2026 The graphc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "graphc/op.hpp"

namespace graphc {

/// if_else(cond, then, else). Lazy: the VM evaluates the condition first and
/// then only the selected branch. A nonzero condition selects `then`.
class IfElse final : public Op {
public:
    std::string name() const override { return "if_else"; }
    std::vector<TensorType> infer(std::span<const TensorType> inputs) const override;
    void compute(std::span<const Tensor* const> inputs, std::span<Tensor> outputs,
                 OpWorkspace* workspace) const override;
    bool lazy() const override { return true; }
    std::vector<std::size_t> lazy_requires(std::span<const Tensor* const> inputs) const override;
    bool has_grad() const override { return true; }
    std::vector<OptVar> grad(std::span<const Variable> inputs, std::span<const Variable> outputs,
                             std::span<const OptVar> output_grads) const override;
    bool has_rop() const override { return true; }
    std::vector<OptVar> rop(std::span<const Variable> inputs, std::span<const Variable> outputs,
                            std::span<const OptVar> perturbations) const override;
};

}  // namespace graphc
