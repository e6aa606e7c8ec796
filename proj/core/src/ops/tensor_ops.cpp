// Copyright 2026 The graphc Authors
// SPDX-License-Identifier: Apache-2.0

#include "graphc/ops/tensor_ops.hpp"

#include <cblas.h>

#include <algorithm>
#include <limits>
#include <numeric>
#include <sstream>

#include "broadcast.hpp"
#include "graphc/ops.hpp"

namespace graphc {

namespace {

std::string join(const std::vector<int>& v) {
    std::ostringstream os;
    for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
    return os.str();
}

OptVar float_only(const Variable& v, const Variable& x) {
    if (!is_float(x.type().dtype)) return std::nullopt;
    return v;
}

std::vector<std::int64_t> strides_of(const Shape& s) {
    std::vector<std::int64_t> st(s.size(), 1);
    for (std::size_t i = s.size(); i-- > 1;) st[i - 1] = st[i] * s[i];
    return st;
}

void finish(Tensor& out) {
    if (out.dtype() == DType::f32) out.round_to_dtype();
}

void copy_into(const Tensor& src, Tensor& out, DType dtype, const Shape& shape) {
    out.reset(dtype, shape);
    std::copy(src.data().begin(), src.data().end(), out.data().begin());
}

std::int64_t rows(const Tensor& t) {
    if (t.rank() == 0) throw KernelError("expected a tensor with a leading axis");
    return t.dim(0);
}

// Merges two extents that must agree; kUnknownDim is compatible with anything.
bool merge_extent(std::int64_t a, std::int64_t b, std::int64_t& out) {
    if (a == kUnknownDim) {
        out = b;
        return true;
    }
    if (b == kUnknownDim || a == b) {
        out = a;
        return true;
    }
    return false;
}

// Start row of a block of `m` rows inside `n` rows.
std::int64_t block_start(std::int64_t start, bool from_end, std::int64_t m, std::int64_t n,
                         const char* op) {
    std::int64_t s = from_end ? n - m : (start < 0 ? start + n : start);
    if (s < 0 || s + m > n) {
        throw KernelError(std::string(op) + ": row block [" + std::to_string(s) + ", " +
                          std::to_string(s + m) + ") out of range for " + std::to_string(n) +
                          " rows");
    }
    return s;
}

std::string block_label(const char* name, std::int64_t start, bool from_end) {
    return std::string(name) + (from_end ? "{end}" : "{" + std::to_string(start) + "}");
}

}  // namespace

// ---------------------------------------------------------------------------
// Reduce

Reduce::Reduce(Kind kind, std::vector<int> axes, bool keepdims)
    : kind_(kind), axes_(std::move(axes)), keepdims_(keepdims) {}

std::vector<int> Reduce::resolved_axes(std::size_t rank) const {
    if (!axes_.empty()) return axes_;
    std::vector<int> all(rank);
    std::iota(all.begin(), all.end(), 0);
    return all;
}

std::string Reduce::label() const {
    std::string s = name() + "{" + (axes_.empty() ? std::string("*") : join(axes_));
    if (keepdims_) s += ",keepdims";
    return s + "}";
}

std::vector<TensorType> Reduce::infer(std::span<const TensorType> inputs) const {
    if (inputs.size() != 1) throw TypeError(name(), inputs.size(), "expected 1 input");
    const TensorType& x = inputs[0];
    std::vector<bool> reduced(x.rank(), false);
    for (int a : resolved_axes(x.rank())) {
        if (a < 0 || static_cast<std::size_t>(a) >= x.rank()) {
            throw TypeError(name(), 0, "axis " + std::to_string(a) + " out of range for " +
                                           x.to_string());
        }
        reduced[a] = true;
    }
    std::vector<std::int64_t> dims;
    for (std::size_t i = 0; i < x.rank(); ++i) {
        if (!reduced[i]) dims.push_back(x.dims[i]);
        else if (keepdims_) dims.push_back(1);
    }
    return {TensorType(x.dtype, dims)};
}

void Reduce::compute(std::span<const Tensor* const> inputs, std::span<Tensor> outputs,
                     OpWorkspace*) const {
    const Tensor& x = *inputs[0];
    Tensor& out = outputs[0];
    const std::size_t r = x.rank();
    std::vector<bool> reduced(r, false);
    for (int a : resolved_axes(r)) reduced[a] = true;
    Shape out_shape;
    Shape kept_shape(r, 1);
    for (std::size_t i = 0; i < r; ++i) {
        if (!reduced[i]) {
            out_shape.push_back(x.dim(i));
            kept_shape[i] = x.dim(i);
        } else if (keepdims_) {
            out_shape.push_back(1);
        }
    }
    out.reset(x.dtype(), out_shape);
    const double init = kind_ == Kind::sum ? 0.0 : -std::numeric_limits<double>::infinity();
    out.fill(init);
    auto o = out.data();
    auto xs = x.data();
    const std::size_t n = x.size();
    if (out.size() == 1) {
        double acc = init;
        if (kind_ == Kind::sum) {
            for (std::size_t i = 0; i < n; ++i) acc += xs[i];
        } else {
            for (std::size_t i = 0; i < n; ++i) acc = std::max(acc, xs[i]);
        }
        o[0] = acc;
        finish(out);
        return;
    }
    // Output stride per input axis (0 on reduced axes).
    auto kst = strides_of(kept_shape);
    std::vector<std::int64_t> ost(r, 0);
    for (std::size_t i = 0; i < r; ++i) ost[i] = reduced[i] ? 0 : kst[i];
    std::vector<std::int64_t> idx(r, 0);
    std::int64_t off = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (kind_ == Kind::sum) o[off] += xs[i];
        else o[off] = std::max(o[off], xs[i]);
        for (std::size_t ax = r; ax-- > 0;) {
            if (++idx[ax] < x.dim(ax)) {
                off += ost[ax];
                break;
            }
            off -= ost[ax] * (x.dim(ax) - 1);
            idx[ax] = 0;
        }
    }
    finish(out);
}

namespace {

Variable expand_reduced(Variable v, const std::vector<int>& axes, bool keepdims) {
    if (keepdims) return v;
    std::vector<int> sorted = axes;
    std::sort(sorted.begin(), sorted.end());
    for (int a : sorted) v = expand_dims(v, a);
    return v;
}

}  // namespace

std::vector<OptVar> Reduce::grad(std::span<const Variable> in, std::span<const Variable> out,
                                 std::span<const OptVar> og) const {
    if (!og[0] || !is_float(in[0].type().dtype)) return {std::nullopt};
    const Variable& x = in[0];
    auto axes = resolved_axes(x.type().rank());
    Variable gb = broadcast_like(expand_reduced(*og[0], axes, keepdims_), x);
    if (kind_ == Kind::sum) return {gb};
    Variable zb = broadcast_like(expand_reduced(out[0], axes, keepdims_), x);
    return {mul(gb, eq(x, zb))};
}

std::vector<OptVar> Reduce::rop(std::span<const Variable> in, std::span<const Variable> out,
                                std::span<const OptVar> d) const {
    if (!d[0]) return {std::nullopt};
    const Variable& x = in[0];
    auto axes = resolved_axes(x.type().rank());
    if (kind_ == Kind::sum) return {sum_axes(*d[0], axes, keepdims_)};
    Variable zb = broadcast_like(expand_reduced(out[0], axes, keepdims_), x);
    return {sum_axes(mul(*d[0], eq(x, zb)), axes, keepdims_)};
}

// ---------------------------------------------------------------------------
// Dot

std::vector<TensorType> Dot::infer(std::span<const TensorType> inputs) const {
    if (inputs.size() != 2) throw TypeError(name(), inputs.size(), "expected 2 inputs");
    const auto& a = inputs[0];
    const auto& b = inputs[1];
    for (std::size_t k = 0; k < 2; ++k) {
        if (inputs[k].rank() < 1 || inputs[k].rank() > 2) {
            throw TypeError(name(), k, "expected a vector or matrix, got " + inputs[k].to_string());
        }
    }
    std::int64_t ka = a.dims.back();
    std::int64_t kb = b.dims.front();
    if (ka != kUnknownDim && kb != kUnknownDim && ka != kb) {
        throw TypeError(name(), 1,
                        "inner dimension mismatch: " + a.to_string() + " . " + b.to_string());
    }
    std::vector<std::int64_t> dims;
    if (a.rank() == 2) dims.push_back(a.dims[0]);
    if (b.rank() == 2) dims.push_back(b.dims[1]);
    return {TensorType(promote(a.dtype, b.dtype), dims)};
}

void Dot::compute(std::span<const Tensor* const> inputs, std::span<Tensor> outputs,
                  OpWorkspace*) const {
    const Tensor& a = *inputs[0];
    const Tensor& b = *inputs[1];
    Tensor& out = outputs[0];
    const std::int64_t k = a.shape().back();
    if (k != b.dim(0)) {
        throw KernelError("dot: inner dimension mismatch " + shape_to_string(a.shape()) + " . " +
                          shape_to_string(b.shape()));
    }
    const DType dt = promote(a.dtype(), b.dtype());
    const double* A = a.data().data();
    const double* B = b.data().data();
    if (a.rank() == 1 && b.rank() == 1) {
        out.reset(dt, {});
        out[0] = k == 0 ? 0.0 : cblas_ddot(static_cast<int>(k), A, 1, B, 1);
    } else if (a.rank() == 2 && b.rank() == 1) {
        const auto m = a.dim(0);
        out.reset(dt, {m});
        if (m > 0 && k > 0) {
            cblas_dgemv(CblasRowMajor, CblasNoTrans, static_cast<int>(m), static_cast<int>(k), 1.0,
                        A, static_cast<int>(k), B, 1, 0.0, out.data().data(), 1);
        } else {
            out.fill(0.0);
        }
    } else if (a.rank() == 1 && b.rank() == 2) {
        const auto n = b.dim(1);
        out.reset(dt, {n});
        if (n > 0 && k > 0) {
            cblas_dgemv(CblasRowMajor, CblasTrans, static_cast<int>(k), static_cast<int>(n), 1.0,
                        B, static_cast<int>(n), A, 1, 0.0, out.data().data(), 1);
        } else {
            out.fill(0.0);
        }
    } else {
        const auto m = a.dim(0);
        const auto n = b.dim(1);
        out.reset(dt, {m, n});
        if (m > 0 && n > 0 && k > 0) {
            cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasNoTrans, static_cast<int>(m),
                        static_cast<int>(n), static_cast<int>(k), 1.0, A, static_cast<int>(k), B,
                        static_cast<int>(n), 0.0, out.data().data(), static_cast<int>(n));
        } else {
            out.fill(0.0);
        }
    }
    finish(out);
}

std::vector<OptVar> Dot::grad(std::span<const Variable> in, std::span<const Variable>,
                              std::span<const OptVar> og) const {
    if (!og[0]) return {std::nullopt, std::nullopt};
    const Variable& g = *og[0];
    const Variable& a = in[0];
    const Variable& b = in[1];
    const auto ra = a.type().rank();
    const auto rb = b.type().rank();
    Variable ga, gb;
    if (ra == 1 && rb == 1) {
        ga = mul(g, b);
        gb = mul(g, a);
    } else if (ra == 2 && rb == 1) {
        ga = dot(expand_dims(g, 1), expand_dims(b, 0));
        gb = dot(g, a);
    } else if (ra == 1 && rb == 2) {
        ga = dot(b, g);
        gb = dot(expand_dims(a, 1), expand_dims(g, 0));
    } else {
        ga = dot(g, transpose(b));
        gb = dot(transpose(a), g);
    }
    return {float_only(ga, a), float_only(gb, b)};
}

std::vector<OptVar> Dot::rop(std::span<const Variable> in, std::span<const Variable>,
                             std::span<const OptVar> d) const {
    OptVar l = d[0] ? OptVar(dot(*d[0], in[1])) : std::nullopt;
    OptVar r = d[1] ? OptVar(dot(in[0], *d[1])) : std::nullopt;
    if (l && r) return {add(*l, *r)};
    return {l ? l : r};
}

// ---------------------------------------------------------------------------
// Transpose

Transpose::Transpose(std::vector<int> perm) : perm_(std::move(perm)) {}

std::string Transpose::label() const { return "transpose{" + join(perm_) + "}"; }

std::vector<TensorType> Transpose::infer(std::span<const TensorType> inputs) const {
    if (inputs.size() != 1) throw TypeError(name(), inputs.size(), "expected 1 input");
    const auto& x = inputs[0];
    if (perm_.size() != x.rank()) throw TypeError(name(), 0, "permutation rank mismatch");
    std::vector<bool> seen(x.rank(), false);
    std::vector<std::int64_t> dims;
    for (int p : perm_) {
        if (p < 0 || static_cast<std::size_t>(p) >= x.rank() || seen[p]) {
            throw TypeError(name(), 0, "invalid permutation {" + join(perm_) + "}");
        }
        seen[p] = true;
        dims.push_back(x.dims[p]);
    }
    return {TensorType(x.dtype, dims)};
}

void Transpose::compute(std::span<const Tensor* const> inputs, std::span<Tensor> outputs,
                        OpWorkspace*) const {
    const Tensor& x = *inputs[0];
    Tensor& out = outputs[0];
    const std::size_t r = x.rank();
    Shape shape(r);
    for (std::size_t i = 0; i < r; ++i) shape[i] = x.dim(perm_[i]);
    out.reset(x.dtype(), shape);
    auto xs = x.data();
    auto o = out.data();
    const std::size_t n = out.size();
    if (r == 2) {
        const auto rows_ = shape[0];
        const auto cols = shape[1];
        for (std::int64_t i = 0; i < rows_; ++i) {
            for (std::int64_t j = 0; j < cols; ++j) o[i * cols + j] = xs[j * rows_ + i];
        }
        return;
    }
    auto in_st = strides_of(x.shape());
    std::vector<std::int64_t> st(r);
    for (std::size_t i = 0; i < r; ++i) st[i] = in_st[perm_[i]];
    std::vector<std::int64_t> idx(r, 0);
    std::int64_t off = 0;
    for (std::size_t i = 0; i < n; ++i) {
        o[i] = xs[off];
        for (std::size_t ax = r; ax-- > 0;) {
            if (++idx[ax] < shape[ax]) {
                off += st[ax];
                break;
            }
            off -= st[ax] * (shape[ax] - 1);
            idx[ax] = 0;
        }
    }
}

std::vector<OptVar> Transpose::grad(std::span<const Variable> in, std::span<const Variable>,
                                    std::span<const OptVar> og) const {
    if (!og[0] || !is_float(in[0].type().dtype)) return {std::nullopt};
    std::vector<int> inv(perm_.size());
    for (std::size_t i = 0; i < perm_.size(); ++i) inv[perm_[i]] = static_cast<int>(i);
    return {transpose(*og[0], inv)};
}

std::vector<OptVar> Transpose::rop(std::span<const Variable>, std::span<const Variable>,
                                   std::span<const OptVar> d) const {
    if (!d[0]) return {std::nullopt};
    return {transpose(*d[0], perm_)};
}

// ---------------------------------------------------------------------------
// Reshape family

Reshape::Reshape(std::vector<std::int64_t> target) : target_(std::move(target)) {}

std::string Reshape::label() const {
    std::ostringstream os;
    os << "reshape{";
    for (std::size_t i = 0; i < target_.size(); ++i) os << (i ? "," : "") << target_[i];
    os << "}";
    return os.str();
}

std::vector<TensorType> Reshape::infer(std::span<const TensorType> inputs) const {
    if (inputs.size() != 1) throw TypeError(name(), inputs.size(), "expected 1 input");
    const auto& x = inputs[0];
    int unknown = 0;
    std::int64_t known = 1;
    for (auto e : target_) {
        if (e == -1) ++unknown;
        else if (e < 0) throw TypeError(name(), 0, "negative target extent");
        else known *= e;
    }
    if (unknown > 1) throw TypeError(name(), 0, "at most one inferred extent allowed");
    std::vector<std::int64_t> dims = target_;
    const std::int64_t size = x.static_size();
    if (size >= 0) {
        if (unknown) {
            if (known == 0 || size % known != 0) {
                throw TypeError(name(), 0, "cannot reshape " + x.to_string() + " to " + label());
            }
            for (auto& e : dims) {
                if (e == -1) e = size / known;
            }
        } else if (known != size) {
            throw TypeError(name(), 0, "reshape size mismatch: " + x.to_string() + " to " + label());
        }
    }
    return {TensorType(x.dtype, dims)};
}

void Reshape::compute(std::span<const Tensor* const> inputs, std::span<Tensor> outputs,
                      OpWorkspace*) const {
    const Tensor& x = *inputs[0];
    Shape shape = target_;
    std::int64_t known = 1;
    for (auto e : shape) {
        if (e != -1) known *= e;
    }
    for (auto& e : shape) {
        if (e == -1) e = known == 0 ? 0 : static_cast<std::int64_t>(x.size()) / known;
    }
    if (num_elements(shape) != static_cast<std::int64_t>(x.size())) {
        throw KernelError("reshape: cannot reshape " + shape_to_string(x.shape()) + " to " +
                          shape_to_string(shape));
    }
    copy_into(x, outputs[0], x.dtype(), shape);
}

std::vector<OptVar> Reshape::grad(std::span<const Variable> in, std::span<const Variable>,
                                  std::span<const OptVar> og) const {
    if (!og[0] || !is_float(in[0].type().dtype)) return {std::nullopt};
    return {reshape_like(*og[0], in[0])};
}

std::vector<OptVar> Reshape::rop(std::span<const Variable>, std::span<const Variable>,
                                 std::span<const OptVar> d) const {
    if (!d[0]) return {std::nullopt};
    return {reshape(*d[0], target_)};
}

std::vector<TensorType> ReshapeLike::infer(std::span<const TensorType> inputs) const {
    if (inputs.size() != 2) throw TypeError(name(), inputs.size(), "expected 2 inputs");
    auto a = inputs[0].static_size();
    auto b = inputs[1].static_size();
    if (a >= 0 && b >= 0 && a != b) {
        throw TypeError(name(), 1, "size mismatch: " + inputs[0].to_string() + " vs " +
                                       inputs[1].to_string());
    }
    return {TensorType(inputs[0].dtype, inputs[1].dims)};
}

void ReshapeLike::compute(std::span<const Tensor* const> inputs, std::span<Tensor> outputs,
                          OpWorkspace*) const {
    const Tensor& x = *inputs[0];
    const Tensor& like = *inputs[1];
    if (x.size() != like.size()) {
        throw KernelError("reshape_like: size mismatch " + shape_to_string(x.shape()) + " vs " +
                          shape_to_string(like.shape()));
    }
    copy_into(x, outputs[0], x.dtype(), like.shape());
}

std::vector<OptVar> ReshapeLike::grad(std::span<const Variable> in, std::span<const Variable>,
                                      std::span<const OptVar> og) const {
    if (!og[0] || !is_float(in[0].type().dtype)) return {std::nullopt, std::nullopt};
    return {reshape_like(*og[0], in[0]), std::nullopt};
}

std::vector<OptVar> ReshapeLike::rop(std::span<const Variable> in, std::span<const Variable>,
                                     std::span<const OptVar> d) const {
    if (!d[0]) return {std::nullopt};
    return {reshape_like(*d[0], in[1])};
}

std::string ExpandDims::label() const { return "expand_dims{" + std::to_string(axis_) + "}"; }

std::vector<TensorType> ExpandDims::infer(std::span<const TensorType> inputs) const {
    if (inputs.size() != 1) throw TypeError(name(), inputs.size(), "expected 1 input");
    const auto& x = inputs[0];
    if (axis_ < 0 || static_cast<std::size_t>(axis_) > x.rank()) {
        throw TypeError(name(), 0, "axis out of range");
    }
    auto dims = x.dims;
    dims.insert(dims.begin() + axis_, 1);
    return {TensorType(x.dtype, dims)};
}

void ExpandDims::compute(std::span<const Tensor* const> inputs, std::span<Tensor> outputs,
                         OpWorkspace*) const {
    const Tensor& x = *inputs[0];
    Shape shape = x.shape();
    shape.insert(shape.begin() + axis_, 1);
    copy_into(x, outputs[0], x.dtype(), shape);
}

std::vector<OptVar> ExpandDims::grad(std::span<const Variable> in, std::span<const Variable>,
                                     std::span<const OptVar> og) const {
    if (!og[0] || !is_float(in[0].type().dtype)) return {std::nullopt};
    return {reshape_like(*og[0], in[0])};
}

std::vector<OptVar> ExpandDims::rop(std::span<const Variable>, std::span<const Variable>,
                                    std::span<const OptVar> d) const {
    if (!d[0]) return {std::nullopt};
    return {expand_dims(*d[0], axis_)};
}

// ---------------------------------------------------------------------------
// Broadcast and zeros

std::vector<TensorType> BroadcastLike::infer(std::span<const TensorType> inputs) const {
    if (inputs.size() != 2) throw TypeError(name(), inputs.size(), "expected 2 inputs");
    const auto& x = inputs[0];
    const auto& like = inputs[1];
    if (x.rank() > like.rank()) throw TypeError(name(), 0, "rank exceeds target rank");
    std::vector<std::int64_t> dims;
    std::size_t bad = 0;
    if (!broadcast_dims(x.dims, like.dims, dims, bad)) {
        throw TypeError(name(), 0, "cannot broadcast " + x.to_string() + " to " + like.to_string());
    }
    // The target's static extents win where x is a static 1.
    for (std::size_t i = 0; i < dims.size(); ++i) {
        if (like.dims[i] != kUnknownDim) dims[i] = like.dims[i];
    }
    return {TensorType(x.dtype, dims)};
}

void BroadcastLike::compute(std::span<const Tensor* const> inputs, std::span<Tensor> outputs,
                            OpWorkspace*) const {
    const Tensor& x = *inputs[0];
    Tensor& out = outputs[0];
    out.reset(x.dtype(), inputs[1]->shape());
    detail::broadcast_copy(x, out);
}

std::vector<OptVar> BroadcastLike::grad(std::span<const Variable> in, std::span<const Variable>,
                                        std::span<const OptVar> og) const {
    if (!og[0] || !is_float(in[0].type().dtype)) return {std::nullopt, std::nullopt};
    return {sum_to(*og[0], in[0].type()), std::nullopt};
}

std::vector<OptVar> BroadcastLike::rop(std::span<const Variable> in, std::span<const Variable>,
                                       std::span<const OptVar> d) const {
    if (!d[0]) return {std::nullopt};
    return {broadcast_like(*d[0], in[1])};
}

std::vector<TensorType> ZerosLike::infer(std::span<const TensorType> inputs) const {
    if (inputs.size() != 1) throw TypeError(name(), inputs.size(), "expected 1 input");
    return {inputs[0]};
}

void ZerosLike::compute(std::span<const Tensor* const> inputs, std::span<Tensor> outputs,
                        OpWorkspace*) const {
    outputs[0].reset(inputs[0]->dtype(), inputs[0]->shape());
    outputs[0].fill(0.0);
}

std::vector<OptVar> ZerosLike::grad(std::span<const Variable>, std::span<const Variable>,
                                    std::span<const OptVar>) const {
    return {std::nullopt};
}

std::vector<OptVar> ZerosLike::rop(std::span<const Variable>, std::span<const Variable>,
                                   std::span<const OptVar>) const {
    return {std::nullopt};
}

// ---------------------------------------------------------------------------
// ArgMax

std::string ArgMax::label() const { return "argmax{" + std::to_string(axis_) + "}"; }

std::vector<TensorType> ArgMax::infer(std::span<const TensorType> inputs) const {
    if (inputs.size() != 1) throw TypeError(name(), inputs.size(), "expected 1 input");
    const auto& x = inputs[0];
    if (axis_ < 0 || static_cast<std::size_t>(axis_) >= x.rank()) {
        throw TypeError(name(), 0, "axis out of range for " + x.to_string());
    }
    auto dims = x.dims;
    dims.erase(dims.begin() + axis_);
    return {TensorType(DType::i64, dims)};
}

void ArgMax::compute(std::span<const Tensor* const> inputs, std::span<Tensor> outputs,
                     OpWorkspace*) const {
    const Tensor& x = *inputs[0];
    Tensor& out = outputs[0];
    Shape shape = x.shape();
    const std::int64_t len = shape[axis_];
    if (len == 0) throw KernelError("argmax over an empty axis");
    shape.erase(shape.begin() + axis_);
    out.reset(DType::i64, shape);
    std::int64_t outer = 1;
    for (int i = 0; i < axis_; ++i) outer *= x.dim(i);
    std::int64_t inner = 1;
    for (std::size_t i = axis_ + 1; i < x.rank(); ++i) inner *= x.dim(i);
    auto xs = x.data();
    auto o = out.data();
    for (std::int64_t a = 0; a < outer; ++a) {
        for (std::int64_t b = 0; b < inner; ++b) {
            std::int64_t best = 0;
            double bv = xs[a * len * inner + b];
            for (std::int64_t j = 1; j < len; ++j) {
                double v = xs[(a * len + j) * inner + b];
                if (v > bv) {
                    bv = v;
                    best = j;
                }
            }
            o[a * inner + b] = static_cast<double>(best);
        }
    }
}

std::vector<OptVar> ArgMax::grad(std::span<const Variable>, std::span<const Variable>,
                                 std::span<const OptVar>) const {
    return {std::nullopt};
}

// ---------------------------------------------------------------------------
// Row helpers

std::string TakeRow::label() const { return "take_row{" + std::to_string(index_) + "}"; }

std::vector<TensorType> TakeRow::infer(std::span<const TensorType> inputs) const {
    if (inputs.size() != 1) throw TypeError(name(), inputs.size(), "expected 1 input");
    const auto& x = inputs[0];
    if (x.rank() == 0) throw TypeError(name(), 0, "cannot index a scalar");
    const auto n = x.dims[0];
    if (n != kUnknownDim && (index_ >= n || index_ < -n)) {
        throw TypeError(name(), 0, "row " + std::to_string(index_) + " out of range for " +
                                       x.to_string());
    }
    return {x.row_type()};
}

void TakeRow::compute(std::span<const Tensor* const> inputs, std::span<Tensor> outputs,
                      OpWorkspace*) const {
    const Tensor& x = *inputs[0];
    const auto n = rows(x);
    const auto i = index_ < 0 ? index_ + n : index_;
    if (i < 0 || i >= n) {
        throw KernelError("take_row: row " + std::to_string(index_) + " out of range for " +
                          std::to_string(n) + " rows");
    }
    Tensor& out = outputs[0];
    Shape shape(x.shape().begin() + 1, x.shape().end());
    out.reset(x.dtype(), shape);
    const auto rs = x.row_size();
    auto src = x.data().subspan(static_cast<std::size_t>(i * rs), static_cast<std::size_t>(rs));
    std::copy(src.begin(), src.end(), out.data().begin());
}

std::vector<OptVar> TakeRow::grad(std::span<const Variable> in, std::span<const Variable>,
                                  std::span<const OptVar> og) const {
    if (!og[0] || !is_float(in[0].type().dtype)) return {std::nullopt};
    return {pad_rows(expand_dims(*og[0], 0), in[0], index_)};
}

std::vector<OptVar> TakeRow::rop(std::span<const Variable>, std::span<const Variable>,
                                 std::span<const OptVar> d) const {
    if (!d[0]) return {std::nullopt};
    return {take_row(*d[0], index_)};
}

namespace {

// Checks that a and b have the same rank (>= 1) and compatible row dims.
std::vector<std::int64_t> row_compatible(const std::string& op, const TensorType& a,
                                         const TensorType& b) {
    if (a.rank() == 0) throw TypeError(op, 0, "expected a leading axis");
    if (b.rank() != a.rank()) throw TypeError(op, 1, "rank mismatch");
    std::vector<std::int64_t> dims(a.rank());
    for (std::size_t i = 1; i < a.rank(); ++i) {
        if (!merge_extent(a.dims[i], b.dims[i], dims[i])) {
            throw TypeError(op, 1, "row shape mismatch: " + a.to_string() + " vs " + b.to_string());
        }
    }
    return dims;
}

void check_rows_match(const Tensor& a, const Tensor& b, const char* op) {
    if (a.rank() != b.rank() || !std::equal(a.shape().begin() + 1, a.shape().end(),
                                            b.shape().begin() + 1)) {
        throw KernelError(std::string(op) + ": row shape mismatch " + shape_to_string(a.shape()) +
                          " vs " + shape_to_string(b.shape()));
    }
}

}  // namespace

std::string PadRows::label() const { return block_label("pad_rows", start_, from_end_); }

std::vector<TensorType> PadRows::infer(std::span<const TensorType> inputs) const {
    if (inputs.size() != 2) throw TypeError(name(), inputs.size(), "expected 2 inputs");
    auto dims = row_compatible(name(), inputs[0], inputs[1]);
    dims[0] = inputs[1].dims[0];
    return {TensorType(inputs[0].dtype, dims)};
}

void PadRows::compute(std::span<const Tensor* const> inputs, std::span<Tensor> outputs,
                      OpWorkspace*) const {
    const Tensor& src = *inputs[0];
    const Tensor& like = *inputs[1];
    check_rows_match(src, like, "pad_rows");
    const auto n = rows(like);
    const auto m = rows(src);
    const auto s = block_start(start_, from_end_, m, n, "pad_rows");
    Tensor& out = outputs[0];
    out.reset(src.dtype(), like.shape());
    out.fill(0.0);
    std::copy(src.data().begin(), src.data().end(),
              out.data().begin() + static_cast<std::ptrdiff_t>(s * like.row_size()));
}

std::vector<OptVar> PadRows::grad(std::span<const Variable> in, std::span<const Variable>,
                                  std::span<const OptVar> og) const {
    if (!og[0] || !is_float(in[0].type().dtype)) return {std::nullopt, std::nullopt};
    return {rows_like(*og[0], in[0], start_, from_end_), std::nullopt};
}

std::vector<OptVar> PadRows::rop(std::span<const Variable> in, std::span<const Variable>,
                                 std::span<const OptVar> d) const {
    if (!d[0]) return {std::nullopt};
    return {pad_rows(*d[0], in[1], start_, from_end_)};
}

std::string RowsLike::label() const { return block_label("rows_like", start_, from_end_); }

std::vector<TensorType> RowsLike::infer(std::span<const TensorType> inputs) const {
    if (inputs.size() != 2) throw TypeError(name(), inputs.size(), "expected 2 inputs");
    auto dims = row_compatible(name(), inputs[0], inputs[1]);
    dims[0] = inputs[1].dims[0];
    return {TensorType(inputs[0].dtype, dims)};
}

void RowsLike::compute(std::span<const Tensor* const> inputs, std::span<Tensor> outputs,
                       OpWorkspace*) const {
    const Tensor& x = *inputs[0];
    const Tensor& like = *inputs[1];
    check_rows_match(x, like, "rows_like");
    const auto n = rows(x);
    const auto m = rows(like);
    const auto s = block_start(start_, from_end_, m, n, "rows_like");
    Shape shape = x.shape();
    shape[0] = m;
    Tensor& out = outputs[0];
    out.reset(x.dtype(), shape);
    auto first = x.data().begin() + static_cast<std::ptrdiff_t>(s * x.row_size());
    std::copy(first, first + static_cast<std::ptrdiff_t>(out.size()), out.data().begin());
}

std::vector<OptVar> RowsLike::grad(std::span<const Variable> in, std::span<const Variable>,
                                   std::span<const OptVar> og) const {
    if (!og[0] || !is_float(in[0].type().dtype)) return {std::nullopt, std::nullopt};
    return {pad_rows(*og[0], in[0], start_, from_end_), std::nullopt};
}

std::vector<OptVar> RowsLike::rop(std::span<const Variable> in, std::span<const Variable>,
                                  std::span<const OptVar> d) const {
    if (!d[0]) return {std::nullopt};
    return {rows_like(*d[0], in[1], start_, from_end_)};
}

std::vector<TensorType> ConcatRows::infer(std::span<const TensorType> inputs) const {
    if (inputs.size() != 2) throw TypeError(name(), inputs.size(), "expected 2 inputs");
    auto dims = row_compatible(name(), inputs[0], inputs[1]);
    const auto a = inputs[0].dims[0];
    const auto b = inputs[1].dims[0];
    dims[0] = a == kUnknownDim || b == kUnknownDim ? kUnknownDim : a + b;
    return {TensorType(promote(inputs[0].dtype, inputs[1].dtype), dims)};
}

void ConcatRows::compute(std::span<const Tensor* const> inputs, std::span<Tensor> outputs,
                         OpWorkspace*) const {
    const Tensor& a = *inputs[0];
    const Tensor& b = *inputs[1];
    check_rows_match(a, b, "concat_rows");
    Shape shape = a.shape();
    shape[0] += b.dim(0);
    Tensor& out = outputs[0];
    out.reset(promote(a.dtype(), b.dtype()), shape);
    auto it = std::copy(a.data().begin(), a.data().end(), out.data().begin());
    std::copy(b.data().begin(), b.data().end(), it);
}

std::vector<OptVar> ConcatRows::grad(std::span<const Variable> in, std::span<const Variable>,
                                     std::span<const OptVar> og) const {
    if (!og[0]) return {std::nullopt, std::nullopt};
    return {float_only(rows_like(*og[0], in[0], 0), in[0]),
            float_only(rows_like(*og[0], in[1], 0, true), in[1])};
}

std::vector<OptVar> ConcatRows::rop(std::span<const Variable> in, std::span<const Variable>,
                                    std::span<const OptVar> d) const {
    if (!d[0] && !d[1]) return {std::nullopt};
    return {concat_rows(d[0] ? *d[0] : zeros_like(in[0]), d[1] ? *d[1] : zeros_like(in[1]))};
}

std::vector<TensorType> StackRows::infer(std::span<const TensorType> inputs) const {
    if (inputs.empty()) throw TypeError(name(), 0, "expected at least 1 input");
    TensorType t = inputs[0];
    for (std::size_t k = 1; k < inputs.size(); ++k) {
        if (inputs[k].dtype != t.dtype || inputs[k].rank() != t.rank()) {
            throw TypeError(name(), k, "type mismatch: " + inputs[k].to_string() + " vs " +
                                           t.to_string());
        }
        for (std::size_t i = 0; i < t.rank(); ++i) {
            if (!merge_extent(t.dims[i], inputs[k].dims[i], t.dims[i])) {
                throw TypeError(name(), k, "shape mismatch: " + inputs[k].to_string());
            }
        }
    }
    return {t.stacked(static_cast<std::int64_t>(inputs.size()))};
}

void StackRows::compute(std::span<const Tensor* const> inputs, std::span<Tensor> outputs,
                        OpWorkspace*) const {
    const Tensor& first = *inputs[0];
    Shape shape = first.shape();
    shape.insert(shape.begin(), static_cast<std::int64_t>(inputs.size()));
    Tensor& out = outputs[0];
    out.reset(first.dtype(), shape);
    auto it = out.data().begin();
    for (const Tensor* t : inputs) {
        if (t->shape() != first.shape()) {
            throw KernelError("stack_rows: shape mismatch " + shape_to_string(t->shape()) +
                              " vs " + shape_to_string(first.shape()));
        }
        it = std::copy(t->data().begin(), t->data().end(), it);
    }
}

std::vector<OptVar> StackRows::grad(std::span<const Variable> in, std::span<const Variable>,
                                    std::span<const OptVar> og) const {
    std::vector<OptVar> res(in.size());
    if (!og[0]) return res;
    for (std::size_t k = 0; k < in.size(); ++k) {
        res[k] = float_only(take_row(*og[0], static_cast<std::int64_t>(k)), in[k]);
    }
    return res;
}

std::vector<OptVar> StackRows::rop(std::span<const Variable> in, std::span<const Variable>,
                                   std::span<const OptVar> d) const {
    bool any = false;
    for (const auto& v : d) any |= v.has_value();
    if (!any) return {std::nullopt};
    std::vector<Variable> parts;
    for (std::size_t k = 0; k < in.size(); ++k) parts.push_back(d[k] ? *d[k] : zeros_like(in[k]));
    return {stack_rows(parts)};
}

std::string ShapeOf::label() const { return "shape_of{" + std::to_string(axis_) + "}"; }

std::vector<TensorType> ShapeOf::infer(std::span<const TensorType> inputs) const {
    if (inputs.size() != 1) throw TypeError(name(), inputs.size(), "expected 1 input");
    if (axis_ < 0 || static_cast<std::size_t>(axis_) >= inputs[0].rank()) {
        throw TypeError(name(), 0, "axis out of range for " + inputs[0].to_string());
    }
    return {TensorType::scalar(DType::i64)};
}

void ShapeOf::compute(std::span<const Tensor* const> inputs, std::span<Tensor> outputs,
                      OpWorkspace*) const {
    outputs[0].reset(DType::i64, {});
    outputs[0][0] = static_cast<double>(inputs[0]->dim(axis_));
}

std::vector<OptVar> ShapeOf::grad(std::span<const Variable>, std::span<const Variable>,
                                  std::span<const OptVar>) const {
    return {std::nullopt};
}

std::vector<OptVar> ShapeOf::rop(std::span<const Variable>, std::span<const Variable>,
                                 std::span<const OptVar>) const {
    return {std::nullopt};
}

std::string Specify::label() const { return "specify{" + type_.to_string() + "}"; }

std::vector<TensorType> Specify::infer(std::span<const TensorType> inputs) const {
    if (inputs.size() != 1) throw TypeError(name(), inputs.size(), "expected 1 input");
    const auto& x = inputs[0];
    if (x.rank() != type_.rank()) {
        throw TypeError(name(), 0, "rank mismatch: " + x.to_string() + " vs " + type_.to_string());
    }
    for (std::size_t i = 0; i < x.rank(); ++i) {
        std::int64_t m = 0;
        if (!merge_extent(x.dims[i], type_.dims[i], m)) {
            throw TypeError(name(), 0, "shape mismatch: " + x.to_string() + " vs " +
                                           type_.to_string());
        }
    }
    return {type_};
}

void Specify::compute(std::span<const Tensor* const> inputs, std::span<Tensor> outputs,
                      OpWorkspace*) const {
    const Tensor& x = *inputs[0];
    if (!type_.accepts(x.shape())) {
        throw KernelError("specify: value of shape " + shape_to_string(x.shape()) +
                          " does not conform to " + type_.to_string());
    }
    Tensor& out = outputs[0];
    copy_into(x, out, type_.dtype, x.shape());
    if (type_.dtype == DType::i64) {
        for (double v : out.data()) {
            if (v != std::floor(v)) throw KernelError("specify: non-integer value for i64");
        }
    }
    finish(out);
}

std::vector<OptVar> Specify::grad(std::span<const Variable> in, std::span<const Variable>,
                                  std::span<const OptVar> og) const {
    if (!og[0] || !is_float(in[0].type().dtype)) return {std::nullopt};
    return {specify(*og[0], in[0].type())};
}

std::vector<OptVar> Specify::rop(std::span<const Variable>, std::span<const Variable>,
                                 std::span<const OptVar> d) const {
    if (!d[0]) return {std::nullopt};
    return {specify(*d[0], type_)};
}

}  // namespace graphc
