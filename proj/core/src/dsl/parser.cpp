// Copyright 2026 The graphc Authors
// SPDX-License-Identifier: Apache-2.0

#include "graphc/dsl/parser.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <functional>

#include "dsl/lexer.hpp"
#include "dsl/literal.hpp"

namespace graphc::dsl {

using detail::Tok;
using detail::Token;

std::string format_diagnostic(const Diagnostic& d) {
    return d.span.file + ":" + std::to_string(d.span.line) + ":" + std::to_string(d.span.column) +
           ": " + d.message;
}

bool span_valid(const SourceSpan& span, std::string_view source) {
    if (span.offset > source.size() || span.length > source.size() - span.offset) return false;
    int line = 1, col = 1;
    for (std::size_t i = 0; i < span.offset; ++i) {
        if (source[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return line == span.line && col == span.column;
}

namespace {

const char* const kKeywords[] = {"input", "shared", "let",   "scan", "over",   "from",
                                 "state", "until",  "steps", "fn",   "updates"};

bool is_keyword(std::string_view s) {
    for (const char* k : kKeywords) {
        if (s == k) return true;
    }
    return false;
}

bool starts_decl(const Token& t) {
    return t.kind == Tok::ident && (t.text == "input" || t.text == "shared" || t.text == "let" ||
                                    t.text == "scan" || t.text == "fn");
}

struct SyntaxError {
    Diagnostic diag;
};

class Parser {
public:
    Parser(std::string_view src, const std::string& file)
        : file_(file), toks_(detail::lex(src, file)) {}

    ParseResult run() {
        ParseResult r;
        r.program.file = file_;
        while (cur().kind != Tok::end) {
            const std::size_t start = pos_;
            brace_depth_ = 0;
            try {
                r.program.decls.push_back(decl());
            } catch (const SyntaxError& e) {
                r.diagnostics.push_back(e.diag);
                synchronize();
                if (pos_ == start && cur().kind != Tok::end) ++pos_;  // always make progress
                if (r.diagnostics.size() >= kMaxDiagnostics) break;
            }
        }
        return r;
    }

    // Entry point for standalone literals.
    ExprPtr literal_only() {
        auto e = expr();
        if (cur().kind != Tok::end) fail(cur().span, "unexpected '" + std::string(cur().text) + "' after literal");
        return e;
    }

private:
    static constexpr std::size_t kMaxDiagnostics = 64;

    const Token& cur() const { return toks_[pos_]; }
    const Token& prev() const { return toks_[pos_ == 0 ? 0 : pos_ - 1]; }

    bool is(std::string_view punct) const {
        return cur().kind == Tok::punct && cur().text == punct;
    }
    bool is_kw(std::string_view kw) const { return cur().kind == Tok::ident && cur().text == kw; }

    [[noreturn]] void fail(const SourceSpan& span, std::string msg) {
        throw SyntaxError{Diagnostic{span, std::move(msg)}};
    }

    std::string describe(const Token& t) const {
        switch (t.kind) {
            case Tok::end: return "end of input";
            case Tok::error: return "invalid character";
            default: return "'" + std::string(t.text) + "'";
        }
    }

    [[noreturn]] void unexpected(const std::string& wanted) {
        if (cur().kind == Tok::error) fail(cur().span, "invalid character in source");
        fail(cur().span, "expected " + wanted + ", found " + describe(cur()));
    }

    const Token& take() { return toks_[pos_++]; }

    void expect(std::string_view punct) {
        if (!is(punct)) unexpected("'" + std::string(punct) + "'");
        take();
    }

    void expect_kw(std::string_view kw) {
        if (!is_kw(kw)) unexpected("'" + std::string(kw) + "'");
        take();
    }

    std::pair<std::string, SourceSpan> name() {
        if (cur().kind != Tok::ident) unexpected("a name");
        if (is_keyword(cur().text)) fail(cur().span, "'" + std::string(cur().text) + "' is a reserved word");
        const Token& t = take();
        return {std::string(t.text), t.span};
    }

    void synchronize() {
        int depth = brace_depth_;
        while (cur().kind != Tok::end) {
            if (depth <= 0 && starts_decl(cur())) return;
            if (is("{")) ++depth;
            if (is("}")) depth = std::max(0, depth - 1);
            if (is(";") && depth <= 0) {
                take();
                return;
            }
            take();
        }
    }

    Decl decl() {
        const Token& first = cur();
        Decl d;
        if (is_kw("input")) {
            take();
            d.kind = Decl::Kind::input;
            std::tie(d.name, d.name_span) = name();
            expect(":");
            if (cur().kind != Tok::ident) unexpected("a dtype (f64, f32, i64)");
            auto dt = parse_dtype(cur().text);
            if (!dt) fail(cur().span, "unknown dtype '" + std::string(cur().text) + "'");
            d.dtype = *dt;
            take();
            if (is("[")) {
                take();
                if (!is("]")) {
                    while (true) {
                        if (is("?")) {
                            take();
                            d.dims.push_back(-1);
                        } else if (cur().kind == Tok::number) {
                            d.dims.push_back(extent(take()));
                        } else {
                            unexpected("an extent or '?'");
                        }
                        if (is(",")) {
                            take();
                            continue;
                        }
                        break;
                    }
                }
                expect("]");
            }
        } else if (is_kw("shared")) {
            take();
            d.kind = Decl::Kind::shared;
            std::tie(d.name, d.name_span) = name();
            expect("=");
            d.value = expr();
        } else if (is_kw("let")) {
            take();
            d.kind = Decl::Kind::let;
            while (true) {
                auto [n, s] = name();
                d.names.push_back(n);
                d.name_spans.push_back(s);
                if (!is(",")) break;
                take();
            }
            d.name = d.names.front();
            d.name_span = d.name_spans.front();
            expect("=");
            d.value = expr();
        } else if (is_kw("scan")) {
            take();
            d.kind = Decl::Kind::scan;
            std::tie(d.name, d.name_span) = name();
            if (is_kw("over")) {
                take();
                while (true) {
                    auto [n, s] = name();
                    d.names.push_back(n);
                    d.name_spans.push_back(s);
                    if (!is(",")) break;
                    take();
                }
            }
            expect_kw("from");
            d.value = expr();
            expect("{");
            ++brace_depth_;
            expect_kw("state");
            std::tie(d.state, d.state_span) = name();
            expect(";");
            auto [lhs, lhs_span] = name();
            if (lhs != d.state) {
                fail(lhs_span, "expected update of state '" + d.state + "', found '" + lhs + "'");
            }
            expect("'");
            expect("=");
            d.body = expr();
            expect(";");
            expect("}");
            --brace_depth_;
            if (is_kw("until")) {
                take();
                d.until = expr();
            }
            if (is_kw("steps")) {
                take();
                d.steps = expr();
            }
        } else if (is_kw("fn")) {
            take();
            d.kind = Decl::Kind::fn;
            std::tie(d.name, d.name_span) = name();
            expect("(");
            if (!is(")")) {
                while (true) {
                    auto [n, s] = name();
                    d.names.push_back(n);
                    d.name_spans.push_back(s);
                    if (!is(",")) break;
                    take();
                }
            }
            expect(")");
            expect("->");
            expect("(");
            if (!is(")")) {
                while (true) {
                    d.outputs.push_back(expr());
                    if (!is(",")) break;
                    take();
                }
            }
            expect(")");
            if (is_kw("updates")) {
                take();
                while (true) {
                    Decl::UpdateClause u;
                    std::tie(u.target, u.target_span) = name();
                    expect("<-");
                    u.expr = expr();
                    d.updates.push_back(std::move(u));
                    if (!is(",")) break;
                    take();
                }
            }
        } else {
            if (cur().kind == Tok::error) fail(cur().span, "invalid character in source");
            fail(cur().span, "expected a declaration (input, shared, let, scan, fn), found " +
                                 describe(cur()));
        }
        expect(";");
        d.span = detail::span_between(first.span, prev().span);
        return d;
    }

    std::int64_t extent(const Token& t) {
        std::int64_t v = 0;
        auto [p, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
        if (ec != std::errc() || p != t.text.data() + t.text.size() || v <= 0) {
            fail(t.span, "extent must be a positive integer, found '" + std::string(t.text) + "'");
        }
        return v;
    }

    // ---- expressions -------------------------------------------------------

    struct DepthGuard {
        Parser& p;
        explicit DepthGuard(Parser& parser, const SourceSpan& at) : p(parser) {
            if (++p.depth_ > kMaxNesting) {
                --p.depth_;
                p.fail(at, "expression nesting exceeds " + std::to_string(kMaxNesting) + " levels");
            }
        }
        ~DepthGuard() { --p.depth_; }
    };

    ExprPtr expr() { return additive(); }

    ExprPtr make_binary(char op, ExprPtr l, ExprPtr r) {
        auto e = std::make_shared<Expr>();
        e->kind = Expr::Kind::binary;
        e->op = op;
        e->span = detail::span_between(l->span, r->span);
        e->args = {std::move(l), std::move(r)};
        return e;
    }

    ExprPtr additive() {
        ExprPtr l = term();
        while (is("+") || is("-")) {
            const char op = take().text[0];
            l = make_binary(op, std::move(l), term());
        }
        return l;
    }

    ExprPtr term() {
        ExprPtr l = unary();
        while (is("*") || is("/")) {
            const char op = take().text[0];
            l = make_binary(op, std::move(l), unary());
        }
        return l;
    }

    ExprPtr unary() {
        DepthGuard guard(*this, cur().span);
        if (is("-")) {
            const Token& t = take();
            auto operand = unary();
            auto e = std::make_shared<Expr>();
            e->kind = Expr::Kind::unary;
            e->op = '-';
            e->span = detail::span_between(t.span, operand->span);
            e->args = {std::move(operand)};
            return e;
        }
        return primary();
    }

    ExprPtr primary() {
        const Token& t = cur();
        if (t.kind == Tok::number) {
            take();
            auto e = std::make_shared<Expr>();
            e->kind = Expr::Kind::number;
            e->span = t.span;
            e->text = std::string(t.text);
            e->is_int = t.text.find_first_of(".eE") == std::string_view::npos;
            e->value = std::strtod(e->text.c_str(), nullptr);
            if (!std::isfinite(e->value)) fail(t.span, "number out of range");
            return e;
        }
        if (t.kind == Tok::ident) {
            if (is_keyword(t.text)) fail(t.span, "'" + std::string(t.text) + "' is a reserved word");
            take();
            auto e = std::make_shared<Expr>();
            e->text = std::string(t.text);
            e->span = t.span;
            if (is("(")) {
                take();
                e->kind = Expr::Kind::call;
                if (!is(")")) {
                    while (true) {
                        e->args.push_back(expr());
                        if (!is(",")) break;
                        take();
                    }
                }
                if (!is(")")) unexpected("',' or ')'");
                e->span = detail::span_between(t.span, take().span);
                return e;
            }
            e->kind = Expr::Kind::name;
            if (is("'")) {
                e->primed = true;
                e->span = detail::span_between(t.span, take().span);
            }
            return e;
        }
        if (is("(")) {
            take();
            auto inner = expr();
            if (!is(")")) unexpected("')'");
            take();
            return inner;
        }
        if (is("[")) {
            const Token& open = take();
            auto e = std::make_shared<Expr>();
            e->kind = Expr::Kind::list;
            if (!is("]")) {
                while (true) {
                    e->args.push_back(expr());
                    if (!is(",")) break;
                    take();
                }
            }
            if (!is("]")) unexpected("',' or ']'");
            e->span = detail::span_between(open.span, take().span);
            return e;
        }
        unexpected("an expression");
    }

    std::string file_;
    std::vector<Token> toks_;
    std::size_t pos_ = 0;
    int depth_ = 0;
    int brace_depth_ = 0;
};

// Flattens a nested numeric list into shape + data.
bool flatten(const Expr& e, Shape& shape, std::vector<double>& data, std::size_t depth,
             std::string& error) {
    if (e.kind == Expr::Kind::number) {
        if (depth != shape.size() && !shape.empty()) {
            error = "ragged tensor literal";
            return false;
        }
        data.push_back(e.value);
        return true;
    }
    if (e.kind == Expr::Kind::unary && e.args[0]->kind == Expr::Kind::number) {
        if (depth != shape.size() && !shape.empty()) {
            error = "ragged tensor literal";
            return false;
        }
        data.push_back(-e.args[0]->value);
        return true;
    }
    if (e.kind != Expr::Kind::list) {
        error = "tensor literals may contain only numbers and nested lists";
        return false;
    }
    if (e.args.empty()) {
        error = "empty tensor literal";
        return false;
    }
    if (depth == shape.size()) {
        shape.push_back(static_cast<std::int64_t>(e.args.size()));
    } else if (depth > shape.size() ||
               shape[depth] != static_cast<std::int64_t>(e.args.size())) {
        error = "ragged tensor literal";
        return false;
    }
    for (const auto& a : e.args) {
        if (!flatten(*a, shape, data, depth + 1, error)) return false;
    }
    return true;
}

}  // namespace

ParseResult parse(std::string_view source, const std::string& file) {
    return Parser(source, file).run();
}

std::optional<Tensor> parse_tensor_literal(std::string_view text, DType dtype, std::string* error) {
    Parser p(text, "<literal>");
    try {
        auto e = p.literal_only();
        return literal_value(*e, dtype, error);
    } catch (const SyntaxError& s) {
        if (error) *error = s.diag.message;
        return std::nullopt;
    }
}

std::optional<Tensor> literal_value(const Expr& e, DType dtype, std::string* error) {
    Shape shape;
    std::vector<double> data;
    std::string err;
    if (!flatten(e, shape, data, 0, err) || data.size() != static_cast<std::size_t>(num_elements(shape))) {
        if (error) *error = err.empty() ? "ragged tensor literal" : err;
        return std::nullopt;
    }
    if (dtype == DType::i64) {
        for (double v : data) {
            if (v != std::floor(v) || std::abs(v) > 9007199254740992.0) {
                if (error) *error = "value is not an exact integer";
                return std::nullopt;
            }
        }
    }
    Tensor t(dtype, shape, std::move(data));
    t.round_to_dtype();
    return t;
}

}  // namespace graphc::dsl
