// Copyright 2026 The graphc Authors
// SPDX-License-Identifier: Apache-2.0

#include "graphc/ops/control.hpp"

#include "graphc/ops.hpp"

namespace graphc {

std::vector<TensorType> IfElse::infer(std::span<const TensorType> inputs) const {
    if (inputs.size() != 3) throw TypeError(name(), inputs.size(), "expected 3 inputs");
    if (!inputs[0].is_scalar()) {
        throw TypeError(name(), 0, "condition must be a scalar, got " + inputs[0].to_string());
    }
    if (!(inputs[1] == inputs[2])) {
        throw TypeError(name(), 2, "branch type mismatch: " + inputs[1].to_string() + " vs " +
                                       inputs[2].to_string());
    }
    return {inputs[1]};
}

std::vector<std::size_t> IfElse::lazy_requires(std::span<const Tensor* const> inputs) const {
    if (!inputs[0]) return {0};
    const std::size_t branch = inputs[0]->item() != 0.0 ? 1 : 2;
    if (!inputs[branch]) return {branch};
    return {};
}

void IfElse::compute(std::span<const Tensor* const> inputs, std::span<Tensor> outputs,
                     OpWorkspace*) const {
    const std::size_t branch = inputs[0]->item() != 0.0 ? 1 : 2;
    const Tensor* src = inputs[branch];
    if (!src) throw KernelError("if_else: selected branch was not evaluated");
    Tensor& out = outputs[0];
    out.reset(src->dtype(), src->shape());
    std::copy(src->data().begin(), src->data().end(), out.data().begin());
}

std::vector<OptVar> IfElse::grad(std::span<const Variable> in, std::span<const Variable>,
                                 std::span<const OptVar> og) const {
    if (!og[0] || !is_float(in[1].type().dtype)) return {std::nullopt, std::nullopt, std::nullopt};
    const Variable& g = *og[0];
    Variable z = zeros_like(g);
    return {std::nullopt, if_else(in[0], g, z), if_else(in[0], z, g)};
}

std::vector<OptVar> IfElse::rop(std::span<const Variable> in, std::span<const Variable>,
                                std::span<const OptVar> d) const {
    if (!d[1] && !d[2]) return {std::nullopt};
    Variable a = d[1] ? *d[1] : zeros_like(in[1]);
    Variable b = d[2] ? *d[2] : zeros_like(in[2]);
    if (!(a.type() == b.type())) {
        a = specify(a, in[1].type());
        b = specify(b, in[2].type());
    }
    return {if_else(in[0], a, b)};
}

}  // namespace graphc
