// Copyright 2026 The graphc Authors
// SPDX-License-Identifier: Apache-2.0
//
// Syntax tree of .gx programs. Spans point into the original source text.

#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "graphc/tensor.hpp"

namespace graphc::dsl {

struct SourceSpan {
    std::string file;
    std::size_t offset = 0;  // byte offset into the source
    std::size_t length = 0;  // bytes
    int line = 1;            // 1-based
    int column = 1;          // 1-based, in bytes
};

struct Diagnostic {
    SourceSpan span;
    std::string message;
};

/// "file:line:col: message"
std::string format_diagnostic(const Diagnostic& d);

/// True when the span lies inside a source of `source_size` bytes and its
/// line/column agree with its offset in `source`.
bool span_valid(const SourceSpan& span, std::string_view source);

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Expr {
    enum class Kind : std::uint8_t { number, name, unary, binary, call, list };

    Kind kind = Kind::number;
    SourceSpan span;
    std::string text;     // number spelling, identifier, or callee
    double value = 0.0;   // numbers
    bool is_int = false;  // numbers without '.' or exponent
    bool primed = false;  // name followed by '
    char op = 0;          // '+', '-', '*', '/' (binary), '-' (unary)
    std::vector<ExprPtr> args;
};

struct Decl {
    enum class Kind : std::uint8_t { input, shared, let, scan, fn };

    Kind kind = Kind::let;
    SourceSpan span;  // whole declaration

    // input / shared / scan / fn name; let uses `names`.
    std::string name;
    SourceSpan name_span;

    // input
    DType dtype = DType::f64;
    std::vector<std::int64_t> dims;  // -1 for '?'

    // shared literal, let expression, scan initial state
    ExprPtr value;

    // let: bound names; fn: parameters; scan: sequences
    std::vector<std::string> names;
    std::vector<SourceSpan> name_spans;

    // scan
    std::string state;
    SourceSpan state_span;
    ExprPtr body;
    ExprPtr until;
    ExprPtr steps;

    // fn
    std::vector<ExprPtr> outputs;
    struct UpdateClause {
        std::string target;
        SourceSpan target_span;
        ExprPtr expr;
    };
    std::vector<UpdateClause> updates;
};

struct Program {
    std::string file;
    std::vector<Decl> decls;
};

/// Structural equality ignoring spans.
bool same_structure(const Expr& a, const Expr& b);
bool same_structure(const Decl& a, const Decl& b);
bool same_structure(const Program& a, const Program& b);

}  // namespace graphc::dsl
