// Copyright 2026 The graphc Authors
// SPDX-License-Identifier: Apache-2.0

#include "graphc/ops/scalar.hpp"

#include <sstream>

namespace graphc {

std::string_view scalar_op_name(ScalarOpCode code) {
    switch (code) {
        case ScalarOpCode::add: return "add";
        case ScalarOpCode::sub: return "sub";
        case ScalarOpCode::mul: return "mul";
        case ScalarOpCode::div: return "div";
        case ScalarOpCode::neg: return "neg";
        case ScalarOpCode::exp: return "exp";
        case ScalarOpCode::log: return "log";
        case ScalarOpCode::log1p: return "log1p";
        case ScalarOpCode::sigmoid: return "sigmoid";
        case ScalarOpCode::softplus: return "softplus";
        case ScalarOpCode::tanh: return "tanh";
        case ScalarOpCode::sqr: return "sqr";
        case ScalarOpCode::sqrt: return "sqrt";
        case ScalarOpCode::pow: return "pow";
        case ScalarOpCode::maximum: return "maximum";
        case ScalarOpCode::minimum: return "minimum";
        case ScalarOpCode::gt: return "gt";
        case ScalarOpCode::lt: return "lt";
        case ScalarOpCode::ge: return "ge";
        case ScalarOpCode::le: return "le";
        case ScalarOpCode::eq: return "eq";
        case ScalarOpCode::ne: return "ne";
    }
    return "?";
}

int scalar_op_arity(ScalarOpCode code) {
    switch (code) {
        case ScalarOpCode::neg:
        case ScalarOpCode::exp:
        case ScalarOpCode::log:
        case ScalarOpCode::log1p:
        case ScalarOpCode::sigmoid:
        case ScalarOpCode::softplus:
        case ScalarOpCode::tanh:
        case ScalarOpCode::sqr:
        case ScalarOpCode::sqrt:
        case ScalarOpCode::pow:
            return 1;
        default:
            return 2;
    }
}

bool scalar_op_is_comparison(ScalarOpCode code) {
    switch (code) {
        case ScalarOpCode::gt:
        case ScalarOpCode::lt:
        case ScalarOpCode::ge:
        case ScalarOpCode::le:
        case ScalarOpCode::eq:
        case ScalarOpCode::ne:
            return true;
        default:
            return false;
    }
}

ScalarProgram ScalarProgram::single(ScalarOpCode op, double param) {
    ScalarProgram p;
    p.num_inputs = scalar_op_arity(op);
    p.code.push_back(ScalarInstr{op, param, {0, p.num_inputs == 2 ? 1 : 0}});
    p.output = p.num_inputs;
    return p;
}

std::string ScalarProgram::to_string() const {
    std::ostringstream os;
    auto arg = [&](std::int32_t a) {
        if (a < 0) {
            os << immediates[-a - 1];
        } else if (a < num_inputs) {
            os << "i" << a;
        } else {
            os << "t" << (a - num_inputs);
        }
    };
    for (std::size_t k = 0; k < code.size(); ++k) {
        if (k) os << "; ";
        os << scalar_op_name(code[k].code);
        if (code[k].code == ScalarOpCode::pow) os << "{" << code[k].param << "}";
        os << "(";
        arg(code[k].args[0]);
        if (scalar_op_arity(code[k].code) == 2) {
            os << ",";
            arg(code[k].args[1]);
        }
        os << ")";
    }
    return os.str();
}

std::size_t ScalarProgram::count(ScalarOpCode op) const {
    std::size_t n = 0;
    for (const auto& ins : code) n += ins.code == op;
    return n;
}

bool operator==(const ScalarProgram& a, const ScalarProgram& b) {
    if (a.num_inputs != b.num_inputs || a.output != b.output || a.immediates != b.immediates ||
        a.code.size() != b.code.size()) {
        return false;
    }
    for (std::size_t k = 0; k < a.code.size(); ++k) {
        const auto& x = a.code[k];
        const auto& y = b.code[k];
        if (x.code != y.code || x.param != y.param || x.args != y.args) return false;
    }
    return true;
}

ScalarEvalCounters& scalar_eval_counters() {
    static ScalarEvalCounters counters;
    return counters;
}

}  // namespace graphc
