// Copyright 2026 The graphc Authors
// SPDX-License-Identifier: Apache-2.0
//
// Internal helpers for broadcasting elementwise loops.

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "graphc/tensor.hpp"

namespace graphc::detail {

/// How one operand is addressed while iterating over the output.
struct OperandWalk {
    enum class Mode : std::uint8_t { full, scalar, strided } mode = Mode::full;
    // Per output axis element stride of the operand (0 on broadcast axes).
    std::vector<std::int64_t> strides;
};

/// Builds walks for `operands` against the broadcast `out_shape`.
std::vector<OperandWalk> plan_walks(std::span<const Tensor* const> operands, const Shape& out_shape);

/// Odometer over an output shape that tracks one flat offset per operand.
class StridedCursor {
public:
    StridedCursor(const Shape& out_shape, const std::vector<OperandWalk>& walks);
    const std::int64_t* offsets() const { return offsets_.data(); }
    void next();

private:
    const Shape& shape_;
    const std::vector<OperandWalk>& walks_;
    std::vector<std::int64_t> index_;
    std::vector<std::int64_t> offsets_;
};

/// Broadcasts `src` into `out` (already reset to the target shape).
void broadcast_copy(const Tensor& src, Tensor& out);

}  // namespace graphc::detail
