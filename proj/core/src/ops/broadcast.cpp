// Copyright 2026 The graphc Authors
// SPDX-License-Identifier: Apache-2.0

#include "broadcast.hpp"

#include "graphc/errors.hpp"

namespace graphc::detail {

std::vector<OperandWalk> plan_walks(std::span<const Tensor* const> operands,
                                    const Shape& out_shape) {
    std::vector<OperandWalk> walks(operands.size());
    const std::size_t r = out_shape.size();
    for (std::size_t k = 0; k < operands.size(); ++k) {
        const Tensor& t = *operands[k];
        OperandWalk& w = walks[k];
        if (t.shape() == out_shape) {
            w.mode = OperandWalk::Mode::full;
            continue;
        }
        if (t.size() == 1) {
            w.mode = OperandWalk::Mode::scalar;
            continue;
        }
        w.mode = OperandWalk::Mode::strided;
        w.strides.assign(r, 0);
        const std::size_t tr = t.rank();
        if (tr > r) throw KernelError("broadcast: operand rank exceeds output rank");
        std::int64_t stride = 1;
        for (std::size_t i = 0; i < tr; ++i) {
            std::size_t ta = tr - 1 - i;
            std::size_t oa = r - 1 - i;
            std::int64_t ext = t.shape()[ta];
            if (ext != 1) {
                if (ext != out_shape[oa]) throw KernelError("shape mismatch at runtime");
                w.strides[oa] = stride;
            }
            stride *= ext;
        }
    }
    return walks;
}

StridedCursor::StridedCursor(const Shape& out_shape, const std::vector<OperandWalk>& walks)
    : shape_(out_shape), walks_(walks), index_(out_shape.size(), 0), offsets_(walks.size(), 0) {}

void StridedCursor::next() {
    for (std::size_t k = 0; k < walks_.size(); ++k) {
        if (walks_[k].mode == OperandWalk::Mode::full) ++offsets_[k];
    }
    for (std::size_t ax = shape_.size(); ax-- > 0;) {
        if (++index_[ax] < shape_[ax]) {
            for (std::size_t k = 0; k < walks_.size(); ++k) {
                if (walks_[k].mode == OperandWalk::Mode::strided) offsets_[k] += walks_[k].strides[ax];
            }
            return;
        }
        index_[ax] = 0;
        for (std::size_t k = 0; k < walks_.size(); ++k) {
            if (walks_[k].mode == OperandWalk::Mode::strided) {
                offsets_[k] -= walks_[k].strides[ax] * (shape_[ax] - 1);
            }
        }
    }
}

void broadcast_copy(const Tensor& src, Tensor& out) {
    const Tensor* ops[] = {&src};
    auto walks = plan_walks(ops, out.shape());
    const std::size_t n = out.size();
    auto o = out.data();
    auto s = src.data();
    switch (walks[0].mode) {
        case OperandWalk::Mode::full:
            std::copy(s.begin(), s.end(), o.begin());
            return;
        case OperandWalk::Mode::scalar:
            std::fill(o.begin(), o.end(), s[0]);
            return;
        case OperandWalk::Mode::strided: {
            StridedCursor cur(out.shape(), walks);
            for (std::size_t i = 0; i < n; ++i, cur.next()) o[i] = s[cur.offsets()[0]];
            return;
        }
    }
}

}  // namespace graphc::detail
