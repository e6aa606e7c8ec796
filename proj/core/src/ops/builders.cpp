// Copyright 2026 The graphc Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <memory>
#include <numeric>

#include "graphc/ops.hpp"
#include "graphc/ops/control.hpp"
#include "graphc/ops/elemwise.hpp"
#include "graphc/ops/nnet.hpp"
#include "graphc/ops/tensor_ops.hpp"

namespace graphc {

namespace {

int normalize_axis(const char* op, int axis, std::size_t rank, std::size_t extra = 0) {
    const int r = static_cast<int>(rank + extra);
    const int a = axis < 0 ? axis + r : axis;
    if (a < 0 || a >= r) {
        throw TypeError(op, 0, "axis " + std::to_string(axis) + " out of range for rank " +
                                   std::to_string(rank));
    }
    return a;
}

Variable reduce(Reduce::Kind kind, const Variable& x, std::vector<int> axes, bool keepdims,
                bool all) {
    const char* op = kind == Reduce::Kind::sum ? "sum" : "max";
    const auto rank = x.type().rank();
    for (int& a : axes) a = normalize_axis(op, a, rank);
    std::sort(axes.begin(), axes.end());
    axes.erase(std::unique(axes.begin(), axes.end()), axes.end());
    if (axes.empty() && !all) return x;
    if (axes.size() == rank) axes.clear();
    return apply1(std::make_shared<Reduce>(kind, std::move(axes), keepdims), {x});
}

Variable c(double v) { return scalar_constant(v); }

}  // namespace

Variable elemwise(ScalarOpCode code, const Variable& a, double param) {
    return apply1(std::make_shared<Elemwise>(code, param), {a});
}

Variable elemwise(ScalarOpCode code, const Variable& a, const Variable& b) {
    return apply1(std::make_shared<Elemwise>(code), {a, b});
}

Variable add(const Variable& a, const Variable& b) { return elemwise(ScalarOpCode::add, a, b); }
Variable sub(const Variable& a, const Variable& b) { return elemwise(ScalarOpCode::sub, a, b); }
Variable mul(const Variable& a, const Variable& b) { return elemwise(ScalarOpCode::mul, a, b); }
Variable div(const Variable& a, const Variable& b) { return elemwise(ScalarOpCode::div, a, b); }
Variable neg(const Variable& x) { return elemwise(ScalarOpCode::neg, x); }
Variable exp(const Variable& x) { return elemwise(ScalarOpCode::exp, x); }
Variable log(const Variable& x) { return elemwise(ScalarOpCode::log, x); }
Variable log1p(const Variable& x) { return elemwise(ScalarOpCode::log1p, x); }
Variable sigmoid(const Variable& x) { return elemwise(ScalarOpCode::sigmoid, x); }
Variable softplus(const Variable& x) { return elemwise(ScalarOpCode::softplus, x); }
Variable tanh(const Variable& x) { return elemwise(ScalarOpCode::tanh, x); }
Variable sqr(const Variable& x) { return elemwise(ScalarOpCode::sqr, x); }
Variable sqrt(const Variable& x) { return elemwise(ScalarOpCode::sqrt, x); }
Variable pow(const Variable& x, double exponent) {
    return elemwise(ScalarOpCode::pow, x, exponent);
}
Variable maximum(const Variable& a, const Variable& b) {
    return elemwise(ScalarOpCode::maximum, a, b);
}
Variable minimum(const Variable& a, const Variable& b) {
    return elemwise(ScalarOpCode::minimum, a, b);
}
Variable gt(const Variable& a, const Variable& b) { return elemwise(ScalarOpCode::gt, a, b); }
Variable lt(const Variable& a, const Variable& b) { return elemwise(ScalarOpCode::lt, a, b); }
Variable ge(const Variable& a, const Variable& b) { return elemwise(ScalarOpCode::ge, a, b); }
Variable le(const Variable& a, const Variable& b) { return elemwise(ScalarOpCode::le, a, b); }
Variable eq(const Variable& a, const Variable& b) { return elemwise(ScalarOpCode::eq, a, b); }
Variable ne(const Variable& a, const Variable& b) { return elemwise(ScalarOpCode::ne, a, b); }

Variable operator+(const Variable& a, const Variable& b) { return add(a, b); }
Variable operator-(const Variable& a, const Variable& b) { return sub(a, b); }
Variable operator*(const Variable& a, const Variable& b) { return mul(a, b); }
Variable operator/(const Variable& a, const Variable& b) { return div(a, b); }
Variable operator-(const Variable& x) { return neg(x); }
Variable operator+(const Variable& a, double b) { return add(a, c(b)); }
Variable operator+(double a, const Variable& b) { return add(c(a), b); }
Variable operator-(const Variable& a, double b) { return sub(a, c(b)); }
Variable operator-(double a, const Variable& b) { return sub(c(a), b); }
Variable operator*(const Variable& a, double b) { return mul(a, c(b)); }
Variable operator*(double a, const Variable& b) { return mul(c(a), b); }
Variable operator/(const Variable& a, double b) { return div(a, c(b)); }
Variable operator/(double a, const Variable& b) { return div(c(a), b); }

Variable sum(const Variable& x, std::optional<int> axis, bool keepdims) {
    if (!axis) return reduce(Reduce::Kind::sum, x, {}, keepdims, true);
    return reduce(Reduce::Kind::sum, x, {*axis}, keepdims, false);
}

Variable sum_axes(const Variable& x, std::vector<int> axes, bool keepdims) {
    return reduce(Reduce::Kind::sum, x, std::move(axes), keepdims, false);
}

Variable max(const Variable& x, std::optional<int> axis, bool keepdims) {
    if (!axis) return reduce(Reduce::Kind::max, x, {}, keepdims, true);
    return reduce(Reduce::Kind::max, x, {*axis}, keepdims, false);
}

Variable mean(const Variable& x, std::optional<int> axis) {
    const auto& t = x.type();
    Variable s = sum(x, axis);
    std::vector<int> axes;
    if (axis) axes.push_back(normalize_axis("mean", *axis, t.rank()));
    else {
        axes.resize(t.rank());
        std::iota(axes.begin(), axes.end(), 0);
    }
    std::int64_t known = 1;
    std::optional<Variable> dynamic;
    for (int a : axes) {
        if (t.dims[a] != kUnknownDim) {
            known *= t.dims[a];
        } else {
            Variable e = shape_of(x, a);
            dynamic = dynamic ? mul(*dynamic, e) : e;
        }
    }
    if (!dynamic) return div(s, c(static_cast<double>(known)));
    if (known != 1) dynamic = mul(*dynamic, scalar_constant(static_cast<double>(known), DType::i64));
    return div(s, *dynamic);
}

Variable dot(const Variable& a, const Variable& b) {
    return apply1(std::make_shared<Dot>(), {a, b});
}

Variable transpose(const Variable& x, std::vector<int> perm) {
    if (perm.empty()) {
        perm.resize(x.type().rank());
        std::iota(perm.rbegin(), perm.rend(), 0);
    }
    return apply1(std::make_shared<Transpose>(std::move(perm)), {x});
}

Variable reshape(const Variable& x, std::vector<std::int64_t> target) {
    return apply1(std::make_shared<Reshape>(std::move(target)), {x});
}

Variable reshape_like(const Variable& x, const Variable& like) {
    return apply1(std::make_shared<ReshapeLike>(), {x, like});
}

Variable expand_dims(const Variable& x, int axis) {
    int a = normalize_axis("expand_dims", axis, x.type().rank(), 1);
    return apply1(std::make_shared<ExpandDims>(a), {x});
}

Variable broadcast_like(const Variable& x, const Variable& like) {
    return apply1(std::make_shared<BroadcastLike>(), {x, like});
}

Variable zeros_like(const Variable& x) { return apply1(std::make_shared<ZerosLike>(), {x}); }

Variable ones_like(const Variable& x) {
    return broadcast_like(scalar_constant(1.0, x.type().dtype), x);
}

Variable argmax(const Variable& x, int axis) {
    int a = normalize_axis("argmax", axis, x.type().rank());
    return apply1(std::make_shared<ArgMax>(a), {x});
}

Variable softmax(const Variable& x) { return apply1(std::make_shared<Softmax>(), {x}); }

Variable crossentropy(const Variable& p, const Variable& targets) {
    return apply1(std::make_shared<CrossEntropy>(), {p, targets});
}

Variable crossentropy_grad(const Variable& g, const Variable& p, const Variable& targets) {
    return apply1(std::make_shared<CrossEntropyGrad>(), {g, p, targets});
}

Variable if_else(const Variable& cond, const Variable& then_v, const Variable& else_v) {
    return apply1(std::make_shared<IfElse>(), {cond, then_v, else_v});
}

Variable take_row(const Variable& x, std::int64_t index) {
    return apply1(std::make_shared<TakeRow>(index), {x});
}

Variable pad_rows(const Variable& src, const Variable& like, std::int64_t start, bool from_end) {
    return apply1(std::make_shared<PadRows>(from_end ? 0 : start, from_end), {src, like});
}

Variable concat_rows(const Variable& a, const Variable& b) {
    return apply1(std::make_shared<ConcatRows>(), {a, b});
}

Variable rows_like(const Variable& x, const Variable& like, std::int64_t start, bool from_end) {
    return apply1(std::make_shared<RowsLike>(from_end ? 0 : start, from_end), {x, like});
}

Variable stack_rows(const std::vector<Variable>& xs) {
    return apply1(std::make_shared<StackRows>(), xs);
}

Variable shape_of(const Variable& x, int axis) {
    int a = normalize_axis("shape_of", axis, x.type().rank());
    return apply1(std::make_shared<ShapeOf>(a), {x});
}

Variable specify(const Variable& x, const TensorType& type) {
    return apply1(std::make_shared<Specify>(type), {x});
}

Variable sum_to(const Variable& g, const TensorType& target) {
    Variable r = g;
    const auto gr = g.type().rank();
    const auto tr = target.rank();
    if (gr > tr) {
        std::vector<int> lead(gr - tr);
        std::iota(lead.begin(), lead.end(), 0);
        r = sum_axes(r, lead, false);
    }
    std::vector<int> axes;
    for (std::size_t i = 0; i < tr; ++i) {
        if (target.dims[i] == 1 && r.type().dims[i] != 1) axes.push_back(static_cast<int>(i));
    }
    if (!axes.empty()) r = sum_axes(r, axes, true);
    if (!(r.type() == target)) r = specify(r, target);
    return r;
}

Variable expand_to(const Variable& v, const Variable& like) {
    if (v.type().dims == like.type().dims) return v;
    return broadcast_like(v, like);
}

Variable zeros_of(const TensorType& type, const Variable& like) {
    if (type.fully_static()) return make_constant(Tensor::zeros(type.dims, type.dtype));
    Variable z = zeros_like(like);
    if (!(z.type() == type)) z = specify(z, type);
    return z;
}

std::vector<std::string> op_set() {
    std::vector<std::string> names;
    for (int k = 0; k <= static_cast<int>(ScalarOpCode::ne); ++k) {
        names.emplace_back(scalar_op_name(static_cast<ScalarOpCode>(k)));
    }
    for (const char* n :
         {"sum", "max", "dot", "transpose", "reshape", "reshape_like", "expand_dims",
          "broadcast_like", "zeros_like", "argmax", "softmax", "crossentropy",
          "crossentropy_grad", "if_else", "take_row", "pad_rows", "concat_rows", "rows_like",
          "stack_rows", "shape_of", "specify", "composite", "scan"}) {
        names.emplace_back(n);
    }
    return names;
}

}  // namespace graphc
