// Copyright 2026 The graphc Authors
// SPDX-License-Identifier: Apache-2.0

#include "graphc/dsl/printer.hpp"

namespace graphc::dsl {

namespace {

int precedence(const Expr& e) {
    switch (e.kind) {
        case Expr::Kind::binary: return (e.op == '+' || e.op == '-') ? 1 : 2;
        case Expr::Kind::unary: return 3;
        default: return 4;
    }
}

void emit(const Expr& e, std::string& out);

void emit_at(const Expr& e, int min_prec, std::string& out) {
    if (precedence(e) < min_prec) {
        out += '(';
        emit(e, out);
        out += ')';
    } else {
        emit(e, out);
    }
}

void emit_list(const std::vector<ExprPtr>& xs, std::string& out) {
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i) out += ", ";
        emit(*xs[i], out);
    }
}

void emit(const Expr& e, std::string& out) {
    switch (e.kind) {
        case Expr::Kind::number: out += e.text; break;
        case Expr::Kind::name:
            out += e.text;
            if (e.primed) out += '\'';
            break;
        case Expr::Kind::unary:
            out += '-';
            emit_at(*e.args[0], 3, out);
            break;
        case Expr::Kind::binary: {
            const int p = precedence(e);
            emit_at(*e.args[0], p, out);
            out += ' ';
            out += e.op;
            out += ' ';
            // Left-associative: an equal-precedence right operand needs parens.
            emit_at(*e.args[1], p + 1, out);
            break;
        }
        case Expr::Kind::call:
            out += e.text;
            out += '(';
            emit_list(e.args, out);
            out += ')';
            break;
        case Expr::Kind::list:
            out += '[';
            emit_list(e.args, out);
            out += ']';
            break;
    }
}

void join_names(const std::vector<std::string>& names, std::string& out) {
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (i) out += ", ";
        out += names[i];
    }
}

}  // namespace

std::string print(const Expr& expr) {
    std::string out;
    emit(expr, out);
    return out;
}

std::string print(const Decl& d) {
    std::string out;
    switch (d.kind) {
        case Decl::Kind::input:
            out += "input " + d.name + " : " + std::string(dtype_name(d.dtype)) + "[";
            for (std::size_t i = 0; i < d.dims.size(); ++i) {
                if (i) out += ", ";
                out += d.dims[i] < 0 ? std::string("?") : std::to_string(d.dims[i]);
            }
            out += "];";
            break;
        case Decl::Kind::shared:
            out += "shared " + d.name + " = " + print(*d.value) + ";";
            break;
        case Decl::Kind::let:
            out += "let ";
            join_names(d.names, out);
            out += " = " + print(*d.value) + ";";
            break;
        case Decl::Kind::scan:
            out += "scan " + d.name;
            if (!d.names.empty()) {
                out += " over ";
                join_names(d.names, out);
            }
            out += " from " + print(*d.value) + " {\n";
            out += "    state " + d.state + ";\n";
            out += "    " + d.state + "' = " + print(*d.body) + ";\n}";
            if (d.until) out += " until " + print(*d.until);
            if (d.steps) out += " steps " + print(*d.steps);
            out += ";";
            break;
        case Decl::Kind::fn:
            out += "fn " + d.name + "(";
            join_names(d.names, out);
            out += ") -> (";
            emit_list(d.outputs, out);
            out += ")";
            for (std::size_t i = 0; i < d.updates.size(); ++i) {
                out += i ? ",\n    " : "\n    updates ";
                out += d.updates[i].target + " <- " + print(*d.updates[i].expr);
            }
            out += ";";
            break;
    }
    return out;
}

std::string print(const Program& program) {
    std::string out;
    for (const auto& d : program.decls) {
        out += print(d);
        out += '\n';
    }
    return out;
}

namespace {

bool same_opt(const ExprPtr& a, const ExprPtr& b) {
    if (!a || !b) return !a && !b;
    return same_structure(*a, *b);
}

bool same_list(const std::vector<ExprPtr>& a, const std::vector<ExprPtr>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (!same_opt(a[i], b[i])) return false;
    }
    return true;
}

}  // namespace

bool same_structure(const Expr& a, const Expr& b) {
    return a.kind == b.kind && a.text == b.text && a.primed == b.primed && a.op == b.op &&
           a.is_int == b.is_int && same_list(a.args, b.args);
}

bool same_structure(const Decl& a, const Decl& b) {
    if (a.kind != b.kind || a.name != b.name || a.dtype != b.dtype || a.dims != b.dims ||
        a.names != b.names || a.state != b.state || !same_opt(a.value, b.value) ||
        !same_opt(a.body, b.body) || !same_opt(a.until, b.until) || !same_opt(a.steps, b.steps) ||
        !same_list(a.outputs, b.outputs) || a.updates.size() != b.updates.size()) {
        return false;
    }
    for (std::size_t i = 0; i < a.updates.size(); ++i) {
        if (a.updates[i].target != b.updates[i].target ||
            !same_opt(a.updates[i].expr, b.updates[i].expr)) {
            return false;
        }
    }
    return true;
}

bool same_structure(const Program& a, const Program& b) {
    if (a.decls.size() != b.decls.size()) return false;
    for (std::size_t i = 0; i < a.decls.size(); ++i) {
        if (!same_structure(a.decls[i], b.decls[i])) return false;
    }
    return true;
}

}  // namespace graphc::dsl
