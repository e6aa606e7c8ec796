// Copyright 2026 The graphc Authors
// SPDX-License-Identifier: Apache-2.0

#include "graphc/ops/nnet.hpp"

#include <algorithm>
#include <cmath>

#include "graphc/ops.hpp"

namespace graphc {

std::vector<TensorType> Softmax::infer(std::span<const TensorType> inputs) const {
    if (inputs.size() != 1) throw TypeError(name(), inputs.size(), "expected 1 input");
    const auto& x = inputs[0];
    if (x.rank() < 1) throw TypeError(name(), 0, "expected rank >= 1, got " + x.to_string());
    if (!is_float(x.dtype)) return {x.with_dtype(DType::f64)};
    return {x};
}

void Softmax::compute(std::span<const Tensor* const> inputs, std::span<Tensor> outputs,
                      OpWorkspace*) const {
    const Tensor& x = *inputs[0];
    Tensor& out = outputs[0];
    out.reset(is_float(x.dtype()) ? x.dtype() : DType::f64, x.shape());
    const auto len = x.shape().back();
    if (len == 0) return;
    const auto count = static_cast<std::int64_t>(x.size()) / len;
    auto xs = x.data();
    auto o = out.data();
    for (std::int64_t r = 0; r < count; ++r) {
        const double* row = xs.data() + r * len;
        double* dst = o.data() + r * len;
        double m = *std::max_element(row, row + len);
        double total = 0.0;
        for (std::int64_t j = 0; j < len; ++j) {
            dst[j] = std::exp(row[j] - m);
            total += dst[j];
        }
        for (std::int64_t j = 0; j < len; ++j) dst[j] /= total;
    }
    if (out.dtype() == DType::f32) out.round_to_dtype();
}

std::vector<OptVar> Softmax::grad(std::span<const Variable> in, std::span<const Variable> out,
                                  std::span<const OptVar> og) const {
    if (!og[0] || !is_float(in[0].type().dtype)) return {std::nullopt};
    const Variable& y = out[0];
    const Variable& g = *og[0];
    return {mul(y, sub(g, sum(mul(g, y), -1, true)))};
}

std::vector<OptVar> Softmax::rop(std::span<const Variable>, std::span<const Variable> out,
                                 std::span<const OptVar> d) const {
    if (!d[0]) return {std::nullopt};
    const Variable& y = out[0];
    return {mul(y, sub(*d[0], sum(mul(y, *d[0]), -1, true)))};
}

namespace {

void check_targets(const std::string& op, const TensorType& p, const TensorType& t,
                   std::size_t t_index) {
    if (t.dtype != DType::i64) {
        throw TypeError(op, t_index, "targets must be i64, got " + t.to_string());
    }
    if (p.rank() == 1) {
        if (t.rank() != 0) throw TypeError(op, t_index, "expected a scalar target for a vector");
    } else if (p.rank() == 2) {
        if (t.rank() != 1) throw TypeError(op, t_index, "expected a target vector for a matrix");
        std::int64_t n = p.dims[0];
        std::int64_t m = t.dims[0];
        if (n != kUnknownDim && m != kUnknownDim && n != m) {
            throw TypeError(op, t_index, "target count mismatch: " + t.to_string() + " vs " +
                                             p.to_string());
        }
    } else {
        throw TypeError(op, t_index - 1, "expected a vector or matrix of probabilities");
    }
}

struct RowView {
    std::int64_t rows;
    std::int64_t classes;
};

RowView row_view(const Tensor& p, const Tensor& t) {
    RowView v{p.rank() == 1 ? 1 : p.dim(0), p.shape().back()};
    if (static_cast<std::int64_t>(t.size()) != v.rows) {
        throw KernelError("crossentropy: target count mismatch");
    }
    return v;
}

std::int64_t target_at(const Tensor& t, std::int64_t r, std::int64_t classes) {
    const auto k = static_cast<std::int64_t>(t[static_cast<std::size_t>(r)]);
    if (k < 0 || k >= classes) {
        throw KernelError("crossentropy: target " + std::to_string(k) + " out of range for " +
                          std::to_string(classes) + " classes");
    }
    return k;
}

}  // namespace

std::vector<TensorType> CrossEntropy::infer(std::span<const TensorType> inputs) const {
    if (inputs.size() != 2) throw TypeError(name(), inputs.size(), "expected 2 inputs");
    const auto& p = inputs[0];
    check_targets(name(), p, inputs[1], 1);
    DType dt = is_float(p.dtype) ? p.dtype : DType::f64;
    if (p.rank() == 1) return {TensorType::scalar(dt)};
    return {TensorType::vector(p.dims[0], dt)};
}

void CrossEntropy::compute(std::span<const Tensor* const> inputs, std::span<Tensor> outputs,
                           OpWorkspace*) const {
    const Tensor& p = *inputs[0];
    const Tensor& t = *inputs[1];
    auto v = row_view(p, t);
    Tensor& out = outputs[0];
    DType dt = is_float(p.dtype()) ? p.dtype() : DType::f64;
    if (p.rank() == 1) out.reset(dt, {});
    else out.reset(dt, {v.rows});
    for (std::int64_t r = 0; r < v.rows; ++r) {
        auto k = target_at(t, r, v.classes);
        out[static_cast<std::size_t>(r)] = -std::log(p[static_cast<std::size_t>(r * v.classes + k)]);
    }
    if (dt == DType::f32) out.round_to_dtype();
}

std::vector<OptVar> CrossEntropy::grad(std::span<const Variable> in, std::span<const Variable>,
                                       std::span<const OptVar> og) const {
    if (!og[0] || !is_float(in[0].type().dtype)) return {std::nullopt, std::nullopt};
    return {crossentropy_grad(*og[0], in[0], in[1]), std::nullopt};
}

std::vector<TensorType> CrossEntropyGrad::infer(std::span<const TensorType> inputs) const {
    if (inputs.size() != 3) throw TypeError(name(), inputs.size(), "expected 3 inputs");
    check_targets(name(), inputs[1], inputs[2], 2);
    return {inputs[1]};
}

void CrossEntropyGrad::compute(std::span<const Tensor* const> inputs, std::span<Tensor> outputs,
                               OpWorkspace*) const {
    const Tensor& g = *inputs[0];
    const Tensor& p = *inputs[1];
    const Tensor& t = *inputs[2];
    auto v = row_view(p, t);
    if (static_cast<std::int64_t>(g.size()) != v.rows) {
        throw KernelError("crossentropy_grad: upstream gradient size mismatch");
    }
    Tensor& out = outputs[0];
    out.reset(p.dtype(), p.shape());
    out.fill(0.0);
    for (std::int64_t r = 0; r < v.rows; ++r) {
        auto k = target_at(t, r, v.classes);
        auto at = static_cast<std::size_t>(r * v.classes + k);
        out[at] = -g[static_cast<std::size_t>(r)] / p[at];
    }
    if (out.dtype() == DType::f32) out.round_to_dtype();
}

}  // namespace graphc
