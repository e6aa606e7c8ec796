// Copyright 2026 The graphc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "graphc/op.hpp"

namespace graphc {

/// Softmax over the last axis (row-wise for matrices).
class Softmax final : public Op {
public:
    std::string name() const override { return "softmax"; }
    std::vector<TensorType> infer(std::span<const TensorType> inputs) const override;
    void compute(std::span<const Tensor* const> inputs, std::span<Tensor> outputs,
                 OpWorkspace* workspace) const override;
    bool has_grad() const override { return true; }
    std::vector<OptVar> grad(std::span<const Variable> inputs, std::span<const Variable> outputs,
                             std::span<const OptVar> output_grads) const override;
    bool has_rop() const override { return true; }
    std::vector<OptVar> rop(std::span<const Variable> inputs, std::span<const Variable> outputs,
                            std::span<const OptVar> perturbations) const override;
};

/// crossentropy(p, t) = -log p[t] per row, for probabilities p and integer
/// class targets t.
class CrossEntropy final : public Op {
public:
    std::string name() const override { return "crossentropy"; }
    std::vector<TensorType> infer(std::span<const TensorType> inputs) const override;
    void compute(std::span<const Tensor* const> inputs, std::span<Tensor> outputs,
                 OpWorkspace* workspace) const override;
    bool has_grad() const override { return true; }
    std::vector<OptVar> grad(std::span<const Variable> inputs, std::span<const Variable> outputs,
                             std::span<const OptVar> output_grads) const override;
};

/// d/dp of crossentropy: (g, p, t) -> -g / p[t] scattered at the targets.
class CrossEntropyGrad final : public Op {
public:
    std::string name() const override { return "crossentropy_grad"; }
    std::vector<TensorType> infer(std::span<const TensorType> inputs) const override;
    void compute(std::span<const Tensor* const> inputs, std::span<Tensor> outputs,
                 OpWorkspace* workspace) const override;
};

}  // namespace graphc
