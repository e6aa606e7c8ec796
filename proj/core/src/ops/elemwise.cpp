// Copyright 2026 The graphc Authors
// SPDX-License-Identifier: Apache-2.0

#include "graphc/ops/elemwise.hpp"

#include <algorithm>
#include <functional>
#include <sstream>

#include "broadcast.hpp"
#include "graphc/ops.hpp"

namespace graphc {

namespace {

using detail::OperandWalk;

constexpr std::size_t kBlock = 256;

// Runs `prog` on `m` consecutive elements, one instruction at a time. Input
// j of element i is ptr[j][i * stride[j]]; `scratch` holds one block per
// instruction.
void eval_block(const ScalarProgram& prog, const double* const* ptr, const std::size_t* stride,
                std::size_t m, double* scratch, double* out) {
    const std::int32_t ni = prog.num_inputs;
    auto operand = [&](std::int32_t a, const double*& p, std::size_t& s) {
        if (a < 0) {
            p = &prog.immediates[static_cast<std::size_t>(-a - 1)];
            s = 0;
        } else if (a < ni) {
            p = ptr[a];
            s = stride[a];
        } else {
            p = scratch + static_cast<std::size_t>(a - ni) * kBlock;
            s = 1;
        }
    };
    for (std::size_t c = 0; c < prog.code.size(); ++c) {
        const auto& ins = prog.code[c];
        const double* pa = nullptr;
        std::size_t sa = 0;
        operand(ins.args[0], pa, sa);
        const double* pb = pa;
        std::size_t sb = 0;
        if (scalar_op_arity(ins.code) == 2) operand(ins.args[1], pb, sb);
        double* dst = scratch + c * kBlock;
        const double param = ins.param;
        dispatch_scalar_op(ins.code, [&](auto tag) {
            constexpr ScalarOpCode C = decltype(tag)::value;
            if (sa == 1 && sb == 1) {
                for (std::size_t i = 0; i < m; ++i) dst[i] = scalar_fn<C>(pa[i], pb[i], param);
            } else {
                for (std::size_t i = 0; i < m; ++i) dst[i] = scalar_fn<C>(pa[i * sa], pb[i * sb], param);
            }
        });
    }
    const double* src = nullptr;
    std::size_t s = 0;
    operand(prog.output, src, s);
    for (std::size_t i = 0; i < m; ++i) out[i] = src[i * s];
}

bool produces_float(ScalarOpCode c) {
    switch (c) {
        case ScalarOpCode::div:
        case ScalarOpCode::exp:
        case ScalarOpCode::log:
        case ScalarOpCode::log1p:
        case ScalarOpCode::sigmoid:
        case ScalarOpCode::softplus:
        case ScalarOpCode::tanh:
        case ScalarOpCode::sqrt:
        case ScalarOpCode::pow:
            return true;
        default:
            return false;
    }
}

std::vector<std::int64_t> broadcast_all(const std::string& op, std::span<const TensorType> inputs) {
    std::vector<std::int64_t> dims = inputs[0].dims;
    for (std::size_t k = 1; k < inputs.size(); ++k) {
        std::vector<std::int64_t> out;
        std::size_t bad = 0;
        if (!broadcast_dims(dims, inputs[k].dims, out, bad)) {
            throw TypeError(op, k,
                            "cannot broadcast " + inputs[k].to_string() + " at axis " +
                                std::to_string(bad));
        }
        dims = std::move(out);
    }
    return dims;
}

Shape runtime_shape(std::span<const Tensor* const> inputs) {
    Shape s = inputs[0]->shape();
    for (std::size_t k = 1; k < inputs.size(); ++k) s = broadcast_shapes(s, inputs[k]->shape());
    return s;
}

void finish(Tensor& out) {
    if (out.dtype() == DType::f32) out.round_to_dtype();
}

template <ScalarOpCode C>
void map_unary(const Tensor& a, Tensor& out, double param) {
    auto x = a.data();
    auto o = out.data();
    const std::size_t n = o.size();
    for (std::size_t i = 0; i < n; ++i) o[i] = scalar_fn<C>(x[i], 0.0, param);
}

template <ScalarOpCode C>
void map_binary(const Tensor& a, const Tensor& b, Tensor& out) {
    auto x = a.data();
    auto y = b.data();
    auto o = out.data();
    const std::size_t n = o.size();
    const Tensor* ops[] = {&a, &b};
    auto walks = detail::plan_walks(ops, out.shape());
    auto ma = walks[0].mode;
    auto mb = walks[1].mode;
    using M = OperandWalk::Mode;
    if (ma == M::full && mb == M::full) {
        for (std::size_t i = 0; i < n; ++i) o[i] = scalar_fn<C>(x[i], y[i], 0.0);
    } else if (ma == M::full && mb == M::scalar) {
        const double yv = y[0];
        for (std::size_t i = 0; i < n; ++i) o[i] = scalar_fn<C>(x[i], yv, 0.0);
    } else if (ma == M::scalar && mb == M::full) {
        const double xv = x[0];
        for (std::size_t i = 0; i < n; ++i) o[i] = scalar_fn<C>(xv, y[i], 0.0);
    } else if (ma == M::scalar && mb == M::scalar) {
        const double v = scalar_fn<C>(x[0], y[0], 0.0);
        for (std::size_t i = 0; i < n; ++i) o[i] = v;
    } else {
        detail::StridedCursor cur(out.shape(), walks);
        for (std::size_t i = 0; i < n; ++i, cur.next()) {
            const std::int64_t* off = cur.offsets();
            double xv = ma == M::scalar ? x[0] : x[off[0]];
            double yv = mb == M::scalar ? y[0] : y[off[1]];
            o[i] = scalar_fn<C>(xv, yv, 0.0);
        }
    }
}

Variable cst(double v) { return scalar_constant(v); }

OptVar grad_to(const Variable& g, const Variable& x) {
    if (!is_float(x.type().dtype)) return std::nullopt;
    return sum_to(g, x.type());
}

Variable add_opt(const OptVar& a, const OptVar& b) {
    if (a && b) return add(*a, *b);
    return a ? *a : *b;
}

}  // namespace

DType elemwise_dtype(const ScalarProgram& program, std::span<const TensorType> inputs) {
    DType d = inputs.empty() ? DType::f64 : inputs[0].dtype;
    for (std::size_t k = 1; k < inputs.size(); ++k) d = promote(d, inputs[k].dtype);
    if (d == DType::i64) {
        for (const auto& ins : program.code) {
            if (produces_float(ins.code)) return DType::f64;
        }
        for (double imm : program.immediates) {
            if (imm != std::floor(imm)) return DType::f64;
        }
    }
    return d;
}

Elemwise::Elemwise(ScalarOpCode code, double param)
    : code_(code), param_(param), program_(ScalarProgram::single(code, param)) {}

std::string Elemwise::name() const { return std::string(scalar_op_name(code_)); }

std::string Elemwise::label() const {
    if (code_ != ScalarOpCode::pow) return name();
    std::ostringstream os;
    os << "pow{" << param_ << "}";
    return os.str();
}

std::vector<TensorType> Elemwise::infer(std::span<const TensorType> inputs) const {
    const auto arity = static_cast<std::size_t>(scalar_op_arity(code_));
    if (inputs.size() != arity) {
        throw TypeError(name(), inputs.size(), "expected " + std::to_string(arity) + " inputs");
    }
    auto dims = broadcast_all(name(), inputs);
    return {TensorType(elemwise_dtype(program_, inputs), std::move(dims))};
}

void Elemwise::compute(std::span<const Tensor* const> inputs, std::span<Tensor> outputs,
                       OpWorkspace*) const {
    Tensor& out = outputs[0];
    DType dt = inputs[0]->dtype();
    for (std::size_t k = 1; k < inputs.size(); ++k) dt = promote(dt, inputs[k]->dtype());
    if (dt == DType::i64 && produces_float(code_)) dt = DType::f64;
    out.reset(dt, runtime_shape(inputs));
    dispatch_scalar_op(code_, [&](auto c) {
        constexpr ScalarOpCode C = decltype(c)::value;
        if (scalar_op_arity(C) == 1) {
            map_unary<C>(*inputs[0], out, param_);
        } else {
            map_binary<C>(*inputs[0], *inputs[1], out);
        }
    });
    finish(out);
    scalar_eval_counters().counts[static_cast<std::size_t>(code_)] += out.size();
}

std::vector<OptVar> Elemwise::grad(std::span<const Variable> in, std::span<const Variable> out,
                                   std::span<const OptVar> og) const {
    const std::size_t n = in.size();
    std::vector<OptVar> res(n);
    if (!og[0]) return res;
    const Variable& g = *og[0];
    const Variable& x = in[0];
    const Variable& z = out[0];
    switch (code_) {
        case ScalarOpCode::add:
            res[0] = grad_to(g, x);
            res[1] = grad_to(g, in[1]);
            break;
        case ScalarOpCode::sub:
            res[0] = grad_to(g, x);
            res[1] = grad_to(neg(g), in[1]);
            break;
        case ScalarOpCode::mul:
            res[0] = grad_to(mul(g, in[1]), x);
            res[1] = grad_to(mul(g, x), in[1]);
            break;
        case ScalarOpCode::div:
            res[0] = grad_to(div(g, in[1]), x);
            res[1] = grad_to(neg(div(mul(g, x), sqr(in[1]))), in[1]);
            break;
        case ScalarOpCode::neg: res[0] = grad_to(neg(g), x); break;
        case ScalarOpCode::exp: res[0] = grad_to(mul(g, z), x); break;
        case ScalarOpCode::log: res[0] = grad_to(div(g, x), x); break;
        case ScalarOpCode::log1p: res[0] = grad_to(div(g, add(cst(1.0), x)), x); break;
        case ScalarOpCode::sigmoid:
            res[0] = grad_to(mul(mul(g, z), sub(cst(1.0), z)), x);
            break;
        case ScalarOpCode::softplus: res[0] = grad_to(mul(g, sigmoid(x)), x); break;
        case ScalarOpCode::tanh: res[0] = grad_to(mul(g, sub(cst(1.0), sqr(z))), x); break;
        case ScalarOpCode::sqr: res[0] = grad_to(mul(g, mul(cst(2.0), x)), x); break;
        case ScalarOpCode::sqrt: res[0] = grad_to(div(mul(g, cst(0.5)), z), x); break;
        case ScalarOpCode::pow:
            res[0] = grad_to(mul(g, mul(cst(param_), pow(x, param_ - 1.0))), x);
            break;
        case ScalarOpCode::maximum:
            res[0] = grad_to(mul(g, ge(x, in[1])), x);
            res[1] = grad_to(mul(g, lt(x, in[1])), in[1]);
            break;
        case ScalarOpCode::minimum:
            res[0] = grad_to(mul(g, le(x, in[1])), x);
            res[1] = grad_to(mul(g, gt(x, in[1])), in[1]);
            break;
        default:
            // Comparisons are piecewise constant.
            break;
    }
    return res;
}

std::vector<OptVar> Elemwise::rop(std::span<const Variable> in, std::span<const Variable> out,
                                  std::span<const OptVar> d) const {
    const Variable& x = in[0];
    const Variable& z = out[0];
    const OptVar dx = d[0];
    const OptVar dy = d.size() > 1 ? d[1] : std::nullopt;
    if (!dx && !dy) return {std::nullopt};
    if (scalar_op_is_comparison(code_)) return {std::nullopt};
    OptVar r;
    switch (code_) {
        case ScalarOpCode::add: r = add_opt(dx, dy); break;
        case ScalarOpCode::sub:
            if (dx && dy) r = sub(*dx, *dy);
            else r = dx ? *dx : neg(*dy);
            break;
        case ScalarOpCode::mul: {
            OptVar a = dx ? OptVar(mul(*dx, in[1])) : std::nullopt;
            OptVar b = dy ? OptVar(mul(x, *dy)) : std::nullopt;
            r = add_opt(a, b);
            break;
        }
        case ScalarOpCode::div: {
            // (dx - z*dy) / y
            Variable num = dx && dy ? sub(*dx, mul(z, *dy)) : dx ? *dx : neg(mul(z, *dy));
            r = div(num, in[1]);
            break;
        }
        case ScalarOpCode::neg: r = neg(*dx); break;
        case ScalarOpCode::exp: r = mul(*dx, z); break;
        case ScalarOpCode::log: r = div(*dx, x); break;
        case ScalarOpCode::log1p: r = div(*dx, add(cst(1.0), x)); break;
        case ScalarOpCode::sigmoid: r = mul(mul(*dx, z), sub(cst(1.0), z)); break;
        case ScalarOpCode::softplus: r = mul(*dx, sigmoid(x)); break;
        case ScalarOpCode::tanh: r = mul(*dx, sub(cst(1.0), sqr(z))); break;
        case ScalarOpCode::sqr: r = mul(*dx, mul(cst(2.0), x)); break;
        case ScalarOpCode::sqrt: r = div(mul(*dx, cst(0.5)), z); break;
        case ScalarOpCode::pow: r = mul(*dx, mul(cst(param_), pow(x, param_ - 1.0))); break;
        case ScalarOpCode::maximum: {
            OptVar a = dx ? OptVar(mul(*dx, ge(x, in[1]))) : std::nullopt;
            OptVar b = dy ? OptVar(mul(*dy, lt(x, in[1]))) : std::nullopt;
            r = add_opt(a, b);
            break;
        }
        case ScalarOpCode::minimum: {
            OptVar a = dx ? OptVar(mul(*dx, le(x, in[1]))) : std::nullopt;
            OptVar b = dy ? OptVar(mul(*dy, gt(x, in[1]))) : std::nullopt;
            r = add_opt(a, b);
            break;
        }
        default:
            break;
    }
    if (!r) return {std::nullopt};
    Variable v = expand_to(*r, z);
    if (v.type().dtype != z.type().dtype) v = specify(v, z.type());
    return {v};
}

bool Elemwise::equals(const Op& other) const {
    const auto* o = dynamic_cast<const Elemwise*>(&other);
    return o && o->code_ == code_ && o->param_ == param_;
}

std::size_t Elemwise::hash() const {
    return std::hash<int>{}(static_cast<int>(code_)) * 31 + std::hash<double>{}(param_);
}

Composite::Composite(ScalarProgram program) : program_(std::move(program)) {}

std::string Composite::label() const { return "composite{" + program_.to_string() + "}"; }

std::vector<TensorType> Composite::infer(std::span<const TensorType> inputs) const {
    if (inputs.size() != static_cast<std::size_t>(program_.num_inputs)) {
        throw TypeError(name(), inputs.size(),
                        "expected " + std::to_string(program_.num_inputs) + " inputs");
    }
    auto dims = broadcast_all(name(), inputs);
    return {TensorType(elemwise_dtype(program_, inputs), std::move(dims))};
}

void Composite::compute(std::span<const Tensor* const> inputs, std::span<Tensor> outputs,
                        OpWorkspace*) const {
    Tensor& out = outputs[0];
    std::vector<TensorType> types;
    types.reserve(inputs.size());
    for (const Tensor* t : inputs) types.push_back(TensorType(t->dtype(), {}));
    out.reset(elemwise_dtype(program_, types), runtime_shape(inputs));
    const std::size_t n = out.size();
    const std::size_t k = inputs.size();
    auto walks = detail::plan_walks(inputs, out.shape());
    std::vector<double> scratch(program_.code.size() * kBlock);
    std::vector<const double*> ptr(k);
    std::vector<std::size_t> stride(k);
    auto o = out.data();
    bool strided = false;
    for (const auto& w : walks) strided |= w.mode == OperandWalk::Mode::strided;
    if (!strided) {
        for (std::size_t j = 0; j < k; ++j) stride[j] = walks[j].mode == OperandWalk::Mode::full ? 1 : 0;
        for (std::size_t b = 0; b < n; b += kBlock) {
            for (std::size_t j = 0; j < k; ++j) ptr[j] = inputs[j]->data().data() + b * stride[j];
            eval_block(program_, ptr.data(), stride.data(), std::min(kBlock, n - b), scratch.data(),
                       o.data() + b);
        }
    } else {
        std::vector<double> gathered(k * kBlock);
        detail::StridedCursor cur(out.shape(), walks);
        for (std::size_t j = 0; j < k; ++j) {
            if (walks[j].mode == OperandWalk::Mode::scalar) {
                ptr[j] = inputs[j]->data().data();
                stride[j] = 0;
            } else {
                ptr[j] = gathered.data() + j * kBlock;
                stride[j] = 1;
            }
        }
        for (std::size_t b = 0; b < n; b += kBlock) {
            const std::size_t m = std::min(kBlock, n - b);
            for (std::size_t i = 0; i < m; ++i, cur.next()) {
                for (std::size_t j = 0; j < k; ++j) {
                    if (stride[j]) gathered[j * kBlock + i] = inputs[j]->data()[cur.offsets()[j]];
                }
            }
            eval_block(program_, ptr.data(), stride.data(), m, scratch.data(), o.data() + b);
        }
    }
    finish(out);
    auto& counters = scalar_eval_counters();
    for (const auto& ins : program_.code) counters.counts[static_cast<std::size_t>(ins.code)] += n;
}

bool Composite::equals(const Op& other) const {
    const auto* o = dynamic_cast<const Composite*>(&other);
    return o && o->program_ == program_;
}

std::size_t Composite::hash() const { return std::hash<std::string>{}(label()); }

const Elemwise* elemwise_producer(const Variable& v, ScalarOpCode code) {
    if (!v || v.is_leaf()) return nullptr;
    const auto* e = dynamic_cast<const Elemwise*>(&v.owner()->op());
    return e && e->code() == code ? e : nullptr;
}

}  // namespace graphc
