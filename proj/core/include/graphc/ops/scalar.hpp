// Copyright 2026 The graphc Authors
// SPDX-License-Identifier: Apache-2.0
//
// Scalar functions mapped by elementwise ops, and the small straight-line
// scalar programs that fused Composite kernels interpret per element.

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace graphc {

enum class ScalarOpCode : std::uint8_t {
    add,
    sub,
    mul,
    div,
    neg,
    exp,
    log,
    log1p,
    sigmoid,
    softplus,
    tanh,
    sqr,
    sqrt,
    pow,  // param = constant exponent
    maximum,
    minimum,
    gt,
    lt,
    ge,
    le,
    eq,
    ne,
};

std::string_view scalar_op_name(ScalarOpCode code);
int scalar_op_arity(ScalarOpCode code);
bool scalar_op_is_comparison(ScalarOpCode code);

// One definition of each scalar function, shared by the plain elementwise
// kernels and the Composite interpreter so both produce identical bits.
template <ScalarOpCode C>
inline double scalar_fn(double a, double b, double param) {
    (void)b;
    (void)param;
    if constexpr (C == ScalarOpCode::add) return a + b;
    else if constexpr (C == ScalarOpCode::sub) return a - b;
    else if constexpr (C == ScalarOpCode::mul) return a * b;
    else if constexpr (C == ScalarOpCode::div) return a / b;
    else if constexpr (C == ScalarOpCode::neg) return -a;
    else if constexpr (C == ScalarOpCode::exp) return std::exp(a);
    else if constexpr (C == ScalarOpCode::log) return std::log(a);
    // Extended precision so the stable forms round correctly in practice.
    else if constexpr (C == ScalarOpCode::log1p)
        return static_cast<double>(std::log1p(static_cast<long double>(a)));
    // tanh form: saturates to exactly 0/1 for |a| > ~38.
    else if constexpr (C == ScalarOpCode::sigmoid) return 0.5 * std::tanh(0.5 * a) + 0.5;
    else if constexpr (C == ScalarOpCode::softplus)
    {
        const long double x = a;
        return static_cast<double>(x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)));
    }
    else if constexpr (C == ScalarOpCode::tanh) return std::tanh(a);
    else if constexpr (C == ScalarOpCode::sqr) return a * a;
    else if constexpr (C == ScalarOpCode::sqrt) return std::sqrt(a);
    else if constexpr (C == ScalarOpCode::pow) return std::pow(a, param);
    else if constexpr (C == ScalarOpCode::maximum) return a >= b ? a : b;
    else if constexpr (C == ScalarOpCode::minimum) return a <= b ? a : b;
    else if constexpr (C == ScalarOpCode::gt) return a > b ? 1.0 : 0.0;
    else if constexpr (C == ScalarOpCode::lt) return a < b ? 1.0 : 0.0;
    else if constexpr (C == ScalarOpCode::ge) return a >= b ? 1.0 : 0.0;
    else if constexpr (C == ScalarOpCode::le) return a <= b ? 1.0 : 0.0;
    else if constexpr (C == ScalarOpCode::eq) return a == b ? 1.0 : 0.0;
    else if constexpr (C == ScalarOpCode::ne) return a != b ? 1.0 : 0.0;
    else return 0.0;
}

/// Calls `f(std::integral_constant<ScalarOpCode, code>{})`.
template <typename F>
decltype(auto) dispatch_scalar_op(ScalarOpCode code, F&& f) {
    switch (code) {
#define GRAPHC_SCALAR_CASE(name) \
    case ScalarOpCode::name:     \
        return f(std::integral_constant<ScalarOpCode, ScalarOpCode::name>{});
        GRAPHC_SCALAR_CASE(add)
        GRAPHC_SCALAR_CASE(sub)
        GRAPHC_SCALAR_CASE(mul)
        GRAPHC_SCALAR_CASE(div)
        GRAPHC_SCALAR_CASE(neg)
        GRAPHC_SCALAR_CASE(exp)
        GRAPHC_SCALAR_CASE(log)
        GRAPHC_SCALAR_CASE(log1p)
        GRAPHC_SCALAR_CASE(sigmoid)
        GRAPHC_SCALAR_CASE(softplus)
        GRAPHC_SCALAR_CASE(tanh)
        GRAPHC_SCALAR_CASE(sqr)
        GRAPHC_SCALAR_CASE(sqrt)
        GRAPHC_SCALAR_CASE(pow)
        GRAPHC_SCALAR_CASE(maximum)
        GRAPHC_SCALAR_CASE(minimum)
        GRAPHC_SCALAR_CASE(gt)
        GRAPHC_SCALAR_CASE(lt)
        GRAPHC_SCALAR_CASE(ge)
        GRAPHC_SCALAR_CASE(le)
        GRAPHC_SCALAR_CASE(eq)
        GRAPHC_SCALAR_CASE(ne)
#undef GRAPHC_SCALAR_CASE
    }
    return f(std::integral_constant<ScalarOpCode, ScalarOpCode::add>{});
}

inline double scalar_apply(ScalarOpCode code, double a, double b, double param) {
    return dispatch_scalar_op(code, [&](auto c) { return scalar_fn<decltype(c)::value>(a, b, param); });
}

/// Straight-line scalar program. Slots [0, num_inputs) hold the inputs;
/// instruction k writes slot num_inputs + k. Negative argument -(j+1)
/// refers to immediates[j].
struct ScalarInstr {
    ScalarOpCode code;
    double param = 0.0;
    std::array<std::int32_t, 2> args{0, 0};
};

struct ScalarProgram {
    std::int32_t num_inputs = 0;
    std::vector<double> immediates;
    std::vector<ScalarInstr> code;
    std::int32_t output = 0;  // slot holding the result

    std::int32_t num_slots() const { return num_inputs + static_cast<std::int32_t>(code.size()); }

    /// Program of one instruction applying `op` to inputs 0 (and 1).
    static ScalarProgram single(ScalarOpCode op, double param = 0.0);

    /// Evaluates with caller-provided slot storage (size >= num_slots()).
    double eval(double* slots) const {
        for (std::size_t k = 0; k < code.size(); ++k) {
            const auto& ins = code[k];
            double a = ins.args[0] >= 0 ? slots[ins.args[0]] : immediates[-ins.args[0] - 1];
            double b = 0.0;
            if (scalar_op_arity(ins.code) == 2) {
                b = ins.args[1] >= 0 ? slots[ins.args[1]] : immediates[-ins.args[1] - 1];
            }
            slots[num_inputs + static_cast<std::int32_t>(k)] = scalar_apply(ins.code, a, b, ins.param);
        }
        return slots[output];
    }

    /// Textual form, e.g. "exp(i0); add(t0,t0)".
    std::string to_string() const;
    std::size_t count(ScalarOpCode op) const;

    friend bool operator==(const ScalarProgram& a, const ScalarProgram& b);
};

/// Per-element scalar evaluation counters, indexed by ScalarOpCode. Bumped
/// in bulk by elementwise kernels (elements x instructions) for
/// instrumentation; not precise under concurrent use.
struct ScalarEvalCounters {
    std::array<std::uint64_t, 32> counts{};
    void reset() { counts.fill(0); }
    std::uint64_t operator[](ScalarOpCode c) const { return counts[static_cast<std::size_t>(c)]; }
};

ScalarEvalCounters& scalar_eval_counters();

}  // namespace graphc
