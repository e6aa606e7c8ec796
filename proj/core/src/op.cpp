// Copyright 2026 The graphc Authors
// SPDX-License-Identifier: Apache-2.0

#include "graphc/op.hpp"

#include <functional>
#include <typeinfo>

namespace graphc {

std::vector<OptVar> Op::grad(std::span<const Variable>, std::span<const Variable>,
                             std::span<const OptVar>) const {
    throw NonDifferentiableError("non-differentiable op '" + name() + "'");
}

std::vector<OptVar> Op::rop(std::span<const Variable>, std::span<const Variable>,
                            std::span<const OptVar>) const {
    throw RopUnsupportedError("R-op unsupported for op '" + name() + "'");
}

std::vector<std::size_t> Op::lazy_requires(std::span<const Tensor* const> inputs) const {
    std::vector<std::size_t> missing;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        if (!inputs[i]) missing.push_back(i);
    }
    return missing;
}

bool Op::equals(const Op& other) const {
    return typeid(*this) == typeid(other) && label() == other.label();
}

std::size_t Op::hash() const { return std::hash<std::string>{}(label()); }

}  // namespace graphc
