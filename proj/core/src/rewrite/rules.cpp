// Copyright 2026 The graphc Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <memory>

#include "graphc/ops.hpp"
#include "graphc/ops/elemwise.hpp"
#include "graphc/ops/tensor_ops.hpp"
#include "graphc/rewrite.hpp"
#include "rewrite/walk.hpp"

namespace graphc {

namespace {

using Code = ScalarOpCode;

const Elemwise* as_elemwise(const NodePtr& n, Code code) {
    const auto* e = dynamic_cast<const Elemwise*>(&n->op());
    return e && e->code() == code ? e : nullptr;
}

bool same(const Variable& a, const Variable& b) { return a.id() == b.id(); }

bool is_const(const Variable& v, double value) {
    auto c = scalar_constant_value(v);
    return c && *c == value;
}

// Zeros of the node's output type, shaped like one of its inputs when the
// type is not fully static.
OptVar zeros_for(const NodePtr& n) {
    const auto& t = n->output_type(0);
    if (t.fully_static()) return make_constant(Tensor::zeros(t.dims, t.dtype));
    for (const auto& in : n->inputs()) {
        if (in.type().dims == t.dims) return detail::conform(zeros_like(in), t);
    }
    return std::nullopt;
}

OptVar x_minus_x(const NodePtr& n) {
    if (!as_elemwise(n, Code::sub) || !same(n->inputs()[0], n->inputs()[1])) return std::nullopt;
    return zeros_for(n);
}

OptVar sub_to_add_neg(const NodePtr& n) {
    if (!as_elemwise(n, Code::sub)) return std::nullopt;
    const auto& y = n->inputs()[1];
    if (auto c = scalar_constant_value(y)) {
        return add(n->inputs()[0], scalar_constant(-*c, y.type().dtype));
    }
    return add(n->inputs()[0], neg(y));
}

OptVar div_by_constant(const NodePtr& n) {
    if (!as_elemwise(n, Code::div)) return std::nullopt;
    const auto& y = n->inputs()[1];
    auto c = scalar_constant_value(y);
    if (!c || *c == 0.0 || !std::isfinite(*c) || !is_float(y.type().dtype)) return std::nullopt;
    return mul(n->inputs()[0], scalar_constant(1.0 / *c, y.type().dtype));
}

OptVar neg_neg(const NodePtr& n) {
    if (!as_elemwise(n, Code::neg)) return std::nullopt;
    const auto& x = n->inputs()[0];
    if (!elemwise_producer(x, Code::neg)) return std::nullopt;
    return x.owner()->inputs()[0];
}

OptVar add_zero(const NodePtr& n) {
    if (!as_elemwise(n, Code::add)) return std::nullopt;
    if (is_const(n->inputs()[1], 0.0)) return n->inputs()[0];
    if (is_const(n->inputs()[0], 0.0)) return n->inputs()[1];
    return std::nullopt;
}

OptVar mul_one(const NodePtr& n) {
    if (!as_elemwise(n, Code::mul)) return std::nullopt;
    if (is_const(n->inputs()[1], 1.0)) return n->inputs()[0];
    if (is_const(n->inputs()[0], 1.0)) return n->inputs()[1];
    return std::nullopt;
}

OptVar mul_zero(const NodePtr& n) {
    if (!as_elemwise(n, Code::mul)) return std::nullopt;
    if (!is_const(n->inputs()[0], 0.0) && !is_const(n->inputs()[1], 0.0)) return std::nullopt;
    return zeros_for(n);
}

OptVar add_neg_self(const NodePtr& n) {
    if (!as_elemwise(n, Code::add)) return std::nullopt;
    const auto& a = n->inputs()[0];
    const auto& b = n->inputs()[1];
    bool hit = (elemwise_producer(b, Code::neg) && same(b.owner()->inputs()[0], a)) ||
               (elemwise_producer(a, Code::neg) && same(a.owner()->inputs()[0], b));
    return hit ? zeros_for(n) : std::nullopt;
}

// zeros_like(f(x, scalars...)) only needs the shape of x.
OptVar zeros_like_chase(const NodePtr& n) {
    if (!dynamic_cast<const ZerosLike*>(&n->op())) return std::nullopt;
    const auto& t = n->output_type(0);
    if (t.fully_static()) return make_constant(Tensor::zeros(t.dims, t.dtype));
    const auto& y = n->inputs()[0];
    if (y.is_leaf()) return std::nullopt;
    const auto& p = *y.owner();
    const bool shape_preserving = p.op().elementwise() || dynamic_cast<const ZerosLike*>(&p.op()) ||
                                  dynamic_cast<const Specify*>(&p.op());
    if (!shape_preserving || p.num_outputs() != 1) return std::nullopt;
    std::optional<Variable> src;
    for (const auto& in : p.inputs()) {
        if (in.type().dims == y.type().dims) {
            if (!src) src = in;
        } else if (!in.type().is_scalar()) {
            return std::nullopt;
        }
    }
    if (!src) return std::nullopt;
    return zeros_like(*src);
}

OptVar specify_identity(const NodePtr& n) {
    const auto* s = dynamic_cast<const Specify*>(&n->op());
    if (!s) return std::nullopt;
    const auto& x = n->inputs()[0];
    if (x.type() == s->type()) return x;
    if (!x.is_leaf() && dynamic_cast<const Specify*>(&x.owner()->op())) {
        return specify(x.owner()->inputs()[0], s->type());
    }
    return std::nullopt;
}

bool is_one(const Variable& v) { return is_const(v, 1.0) && is_float(v.type().dtype); }

OptVar log1p_rule(const NodePtr& n) {
    if (!as_elemwise(n, Code::log)) return std::nullopt;
    const auto& a = n->inputs()[0];
    if (!elemwise_producer(a, Code::add)) return std::nullopt;
    const auto& in = a.owner()->inputs();
    if (is_one(in[0])) return log1p(in[1]);
    if (is_one(in[1])) return log1p(in[0]);
    return std::nullopt;
}

OptVar log_sigmoid(const NodePtr& n) {
    if (!as_elemwise(n, Code::log)) return std::nullopt;
    const auto& a = n->inputs()[0];
    if (!elemwise_producer(a, Code::sigmoid)) return std::nullopt;
    return neg(softplus(neg(a.owner()->inputs()[0])));
}

OptVar exp_log(const NodePtr& n) {
    if (!as_elemwise(n, Code::exp)) return std::nullopt;
    const auto& a = n->inputs()[0];
    if (!elemwise_producer(a, Code::log)) return std::nullopt;
    return a.owner()->inputs()[0];
}

OptVar pow2_to_sqr(const NodePtr& n) {
    const auto* e = as_elemwise(n, Code::pow);
    if (!e || e->param() != 2.0) return std::nullopt;
    return sqr(n->inputs()[0]);
}

}  // namespace

const std::vector<RewriteRule>& builtin_rules() {
    using S = RewriteStage;
    static const std::vector<RewriteRule> rules = {
        {"x_minus_x", S::canonicalize, x_minus_x},
        {"sub_to_add_neg", S::canonicalize, sub_to_add_neg},
        {"div_by_constant", S::canonicalize, div_by_constant},
        {"neg_neg", S::canonicalize, neg_neg},
        {"add_zero", S::canonicalize, add_zero},
        {"mul_one", S::canonicalize, mul_one},
        {"mul_zero", S::canonicalize, mul_zero},
        {"add_neg_self", S::canonicalize, add_neg_self},
        {"zeros_like_chase", S::canonicalize, zeros_like_chase},
        {"specify_identity", S::canonicalize, specify_identity},
        {"log1p", S::stabilize, log1p_rule},
        {"log_sigmoid", S::stabilize, log_sigmoid},
        {"exp_log", S::stabilize, exp_log, true, true},
        {"pow2_to_sqr", S::specialize, pow2_to_sqr},
    };
    return rules;
}

}  // namespace graphc
