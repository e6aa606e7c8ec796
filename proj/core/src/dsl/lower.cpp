// Copyright 2026 The graphc Authors
// SPDX-License-Identifier: Apache-2.0

#include "graphc/dsl/lower.hpp"

#include <functional>
#include <set>
#include <unordered_map>

#include "dsl/literal.hpp"
#include "graphc/autodiff.hpp"
#include "graphc/ops.hpp"
#include "graphc/scan.hpp"

namespace graphc::dsl {

namespace {

struct LowerError {
    Diagnostic diag;
    bool silent = false;  // already reported elsewhere
};

[[noreturn]] void fail(const SourceSpan& span, std::string msg) {
    throw LowerError{Diagnostic{span, std::move(msg)}, false};
}

std::string where(const SourceSpan& s) {
    return std::to_string(s.line) + ":" + std::to_string(s.column);
}

struct Binding {
    Variable var;
    SourceSpan span;
    Decl::Kind kind = Decl::Kind::let;
};

// Name lookup: an optional local frame (loop body) over the globals.
struct Scope {
    const std::unordered_map<std::string, Binding>* globals = nullptr;
    const std::set<std::string>* poisoned = nullptr;
    std::unordered_map<std::string, Variable> locals;
    std::string primed_name;  // state name usable as name' (until clause)
    Variable primed_value;
    bool in_loop = false;
};

std::optional<std::int64_t> int_literal(const Expr& e) {
    if (e.kind == Expr::Kind::number && e.is_int) return static_cast<std::int64_t>(e.value);
    if (e.kind == Expr::Kind::unary && e.args[0]->kind == Expr::Kind::number && e.args[0]->is_int) {
        return -static_cast<std::int64_t>(e.args[0]->value);
    }
    return std::nullopt;
}

std::optional<double> number_literal(const Expr& e) {
    if (e.kind == Expr::Kind::number) return e.value;
    if (e.kind == Expr::Kind::unary && e.args[0]->kind == Expr::Kind::number) {
        return -e.args[0]->value;
    }
    return std::nullopt;
}

const std::vector<std::string>& unary_builtins() {
    static const std::vector<std::string> names{
        "exp",     "log",       "log1p",      "sigmoid",   "softplus", "tanh", "sqr",
        "sqrt",    "neg",       "softmax",    "transpose", "zeros_like", "ones_like"};
    return names;
}

const std::vector<std::string>& binary_builtins() {
    static const std::vector<std::string> names{
        "add", "sub", "mul", "div", "dot", "maximum", "minimum", "gt", "lt", "ge", "le",
        "eq",  "ne",  "crossentropy", "concat_rows", "reshape_like", "broadcast_like"};
    return names;
}

const std::vector<std::string>& other_builtins() {
    static const std::vector<std::string> names{
        "sum",   "max",      "mean",    "argmax",      "pow",  "take_row",
        "reshape", "if_else", "expand_dims", "stack_rows", "shape_of", "grad"};
    return names;
}

bool contains(const std::vector<std::string>& v, const std::string& s) {
    return std::find(v.begin(), v.end(), s) != v.end();
}

class Lowerer {
public:
    LowerResult run(const Program& p) {
        LowerResult r;
        for (const auto& d : p.decls) {
            try {
                lower_decl(d, r);
            } catch (const LowerError& e) {
                if (!e.silent) r.diagnostics.push_back(e.diag);
                poison(d);
            } catch (const std::exception& e) {
                // Builder or autodiff errors not attributed to a subexpression.
                r.diagnostics.push_back(Diagnostic{d.span, e.what()});
                poison(d);
            }
        }
        return r;
    }

private:
    void poison(const Decl& d) {
        if (d.kind == Decl::Kind::let) {
            for (const auto& n : d.names) {
                if (!globals_.count(n)) poisoned_.insert(n);
            }
        } else if (d.kind != Decl::Kind::fn && !globals_.count(d.name)) {
            poisoned_.insert(d.name);
        }
    }

    void declare(const std::string& name, const SourceSpan& span, Variable v, Decl::Kind kind) {
        auto it = globals_.find(name);
        if (it != globals_.end()) {
            fail(span, "redefinition of '" + name + "' (first declared at " + where(it->second.span) + ")");
        }
        if (poisoned_.count(name)) fail(span, "redefinition of '" + name + "'");
        if (v.origin() == Origin::output && v.name().empty()) v.set_name(name);
        globals_[name] = Binding{std::move(v), span, kind};
    }

    Scope global_scope() const {
        Scope s;
        s.globals = &globals_;
        s.poisoned = &poisoned_;
        return s;
    }

    void lower_decl(const Decl& d, LowerResult& r) {
        switch (d.kind) {
            case Decl::Kind::input: {
                if (globals_.count(d.name)) declare(d.name, d.name_span, {}, d.kind);
                declare(d.name, d.name_span, make_input(TensorType(d.dtype, d.dims), d.name), d.kind);
                break;
            }
            case Decl::Kind::shared: {
                if (globals_.count(d.name)) declare(d.name, d.name_span, {}, d.kind);
                std::string err;
                auto t = literal_value(*d.value, DType::f64, &err);
                if (!t) fail(d.value->span, err);
                declare(d.name, d.name_span, make_shared(*t, d.name), d.kind);
                break;
            }
            case Decl::Kind::let: {
                for (std::size_t i = 0; i < d.names.size(); ++i) {
                    if (globals_.count(d.names[i])) declare(d.names[i], d.name_spans[i], {}, d.kind);
                    for (std::size_t j = 0; j < i; ++j) {
                        if (d.names[j] == d.names[i]) {
                            fail(d.name_spans[i], "duplicate name '" + d.names[i] + "' in let");
                        }
                    }
                }
                Scope s = global_scope();
                auto vals = eval_multi(*d.value, s);
                if (vals.size() != d.names.size()) {
                    fail(d.value->span, "expression yields " + std::to_string(vals.size()) +
                                            " value(s) but " + std::to_string(d.names.size()) +
                                            " name(s) are bound");
                }
                for (std::size_t i = 0; i < vals.size(); ++i) {
                    declare(d.names[i], d.name_spans[i], vals[i], d.kind);
                }
                break;
            }
            case Decl::Kind::scan: lower_scan(d); break;
            case Decl::Kind::fn: lower_fn(d, r); break;
        }
    }

    void lower_scan(const Decl& d) {
        if (globals_.count(d.name)) declare(d.name, d.name_span, {}, d.kind);
        Scope outer = global_scope();
        ScanArgs args;
        for (std::size_t i = 0; i < d.names.size(); ++i) {
            Variable s = lookup(d.names[i], d.name_spans[i], outer);
            if (s.type().rank() == 0) {
                fail(d.name_spans[i], "sequence '" + d.names[i] + "' must have rank >= 1, got " +
                                          s.type().to_string());
            }
            for (std::size_t j = 0; j < i; ++j) {
                if (d.names[j] == d.names[i]) fail(d.name_spans[i], "duplicate sequence '" + d.names[i] + "'");
            }
            if (d.names[i] == d.state) {
                fail(d.state_span, "state '" + d.state + "' has the same name as a sequence");
            }
            args.sequences.push_back(ScanSequence{s, {0}});
        }
        args.states.push_back(ScanState{eval(*d.value, outer), {-1}});
        if (d.steps) {
            if (auto k = int_literal(*d.steps)) {
                if (*k < 1) fail(d.steps->span, "steps must be >= 1, got " + std::to_string(*k));
                args.n_steps = *k;
            } else {
                Variable n = eval(*d.steps, outer);
                if (n.type() != TensorType::scalar(DType::i64)) {
                    fail(d.steps->span, "steps must be an integer literal or an i64 scalar, got " +
                                            n.type().to_string());
                }
                args.n_steps_var = n;
            }
        } else if (d.names.empty()) {
            fail(d.span, "scan without sequences needs a 'steps' clause");
        }
        const auto& globals = globals_;
        const auto& poisoned = poisoned_;
        auto step = [&](const StepInputs& in) {
            Scope body;
            body.globals = &globals;
            body.poisoned = &poisoned;
            body.in_loop = true;
            for (std::size_t i = 0; i < d.names.size(); ++i) body.locals[d.names[i]] = in.sequences[i][0];
            body.locals[d.state] = in.states[0][0];
            Variable next = eval(*d.body, body);
            const auto& want = in.states[0][0].type();
            if (next.type() != want) {
                if (next.type().dtype == want.dtype && next.type().rank() == want.rank()) {
                    next = specify(next, want);
                } else {
                    fail(d.body->span, "state update has type " + next.type().to_string() +
                                           ", but the initial state is " + want.to_string());
                }
            }
            StepResult res{{next}, {}, std::nullopt};
            if (d.until) {
                body.primed_name = d.state;
                body.primed_value = next;
                Variable c = eval(*d.until, body);
                if (c.type().rank() != 0) {
                    fail(d.until->span, "until condition must be a scalar, got " + c.type().to_string());
                }
                res.until = c;
            }
            return res;
        };
        ScanResult r;
        try {
            r = scan(step, args);
        } catch (const GraphError& e) {
            fail(d.span, e.what());
        }
        declare(d.name, d.name_span, r.states[0], d.kind);
    }

    void lower_fn(const Decl& d, LowerResult& r) {
        if (r.functions.count(d.name) || fn_spans_.count(d.name)) {
            fail(d.name_span, "redefinition of function '" + d.name + "' (first declared at " +
                                  where(fn_spans_[d.name]) + ")");
        }
        fn_spans_[d.name] = d.name_span;
        Graph g;
        Scope s = global_scope();
        for (std::size_t i = 0; i < d.names.size(); ++i) {
            Variable v = lookup(d.names[i], d.name_spans[i], s);
            if (v.origin() != Origin::input) {
                fail(d.name_spans[i], "parameter '" + d.names[i] + "' is not an input");
            }
            for (std::size_t j = 0; j < i; ++j) {
                if (d.names[j] == d.names[i]) fail(d.name_spans[i], "duplicate parameter '" + d.names[i] + "'");
            }
            g.inputs.push_back(v);
        }
        for (const auto& o : d.outputs) {
            for (auto& v : eval_multi(*o, s)) g.outputs.push_back(v);
        }
        for (const auto& u : d.updates) {
            Variable t = lookup(u.target, u.target_span, s);
            if (t.origin() != Origin::shared) {
                fail(u.target_span, "update target '" + u.target + "' is not a shared variable");
            }
            Variable e = eval(*u.expr, s);
            if (e.type() != t.type()) {
                fail(u.expr->span, "update of '" + u.target + "' has type " + e.type().to_string() +
                                       ", expected " + t.type().to_string());
            }
            g.updates.push_back(Update{t, e});
        }
        auto violations = validate(g);
        if (!violations.empty()) {
            std::string msg = "function '" + d.name + "': " + violations.front();
            if (violations.size() > 1) {
                msg += " (and " + std::to_string(violations.size() - 1) + " more)";
            }
            fail(d.name_span, msg);
        }
        r.functions[d.name] = LoweredFunction{std::move(g), d.span};
        r.order.push_back(d.name);
    }

    // ---- expressions -------------------------------------------------------

    Variable lookup(const std::string& name, const SourceSpan& span, const Scope& s) {
        auto l = s.locals.find(name);
        if (l != s.locals.end()) return l->second;
        auto g = s.globals->find(name);
        if (g != s.globals->end()) return g->second.var;
        if (s.poisoned->count(name)) throw LowerError{Diagnostic{span, ""}, true};
        fail(span, "undefined name '" + name + "'");
    }

    Variable eval(const Expr& e, const Scope& s) {
        auto vs = eval_multi(e, s);
        if (vs.size() != 1) {
            fail(e.span, "grad over " + std::to_string(vs.size()) +
                             " variables yields several values; bind them with 'let a, b = grad(...)'");
        }
        return vs[0];
    }

    template <typename F>
    Variable build(const Expr& e, F&& f) {
        try {
            return f();
        } catch (const TypeError& t) {
            fail(e.span, t.what());
        } catch (const GraphError& g) {
            fail(e.span, g.what());
        }
    }

    std::vector<Variable> eval_multi(const Expr& e, const Scope& s) {
        switch (e.kind) {
            case Expr::Kind::number: return {scalar_constant(e.value)};
            case Expr::Kind::name: {
                if (e.primed) {
                    if (!s.primed_name.empty() && e.text == s.primed_name) return {s.primed_value};
                    fail(e.span, "'" + e.text + "'' is only valid in the until clause of a scan over state '" +
                                     e.text + "'");
                }
                return {lookup(e.text, e.span, s)};
            }
            case Expr::Kind::unary: {
                Variable x = eval(*e.args[0], s);
                return {build(e, [&] { return neg(x); })};
            }
            case Expr::Kind::binary: {
                Variable a = eval(*e.args[0], s);
                Variable b = eval(*e.args[1], s);
                return {build(e, [&] {
                    switch (e.op) {
                        case '+': return add(a, b);
                        case '-': return sub(a, b);
                        case '*': return mul(a, b);
                        default: return div(a, b);
                    }
                })};
            }
            case Expr::Kind::list: {
                std::string err;
                auto t = literal_value(e, DType::f64, &err);
                if (!t) fail(e.span, err);
                return {make_constant(*t)};
            }
            case Expr::Kind::call: return call(e, s);
        }
        fail(e.span, "unsupported expression");
    }

    void arity(const Expr& e, std::size_t lo, std::size_t hi) {
        const std::size_t n = e.args.size();
        if (n >= lo && n <= hi) return;
        std::string want = lo == hi ? std::to_string(lo) : std::to_string(lo) + " to " + std::to_string(hi);
        if (hi == SIZE_MAX) want = "at least " + std::to_string(lo);
        fail(e.span, "'" + e.text + "' expects " + want + " argument(s), got " + std::to_string(n));
    }

    std::int64_t int_arg(const Expr& e, std::size_t i) {
        auto v = int_literal(*e.args[i]);
        if (!v) fail(e.args[i]->span, "argument " + std::to_string(i + 1) + " of '" + e.text +
                                          "' must be an integer literal");
        return *v;
    }

    std::vector<Variable> call(const Expr& e, const Scope& s) {
        const std::string& f = e.text;
        if (f == "grad") {
            arity(e, 2, SIZE_MAX);
            Variable cost = eval(*e.args[0], s);
            std::vector<Variable> wrt;
            for (std::size_t i = 1; i < e.args.size(); ++i) {
                const Expr& a = *e.args[i];
                if (a.kind != Expr::Kind::name || a.primed) {
                    fail(a.span, "grad expects variable names after the cost");
                }
                wrt.push_back(lookup(a.text, a.span, s));
            }
            if (cost.type().rank() != 0) {
                fail(e.args[0]->span, "grad needs a scalar cost, got " + cost.type().to_string());
            }
            try {
                return grad(cost, wrt);
            } catch (const GraphError& g) {
                fail(e.span, g.what());
            }
        }
        if (contains(unary_builtins(), f)) {
            arity(e, 1, 1);
            Variable x = eval(*e.args[0], s);
            return {build(e, [&] {
                if (f == "exp") return exp(x);
                if (f == "log") return log(x);
                if (f == "log1p") return log1p(x);
                if (f == "sigmoid") return sigmoid(x);
                if (f == "softplus") return softplus(x);
                if (f == "tanh") return tanh(x);
                if (f == "sqr") return sqr(x);
                if (f == "sqrt") return sqrt(x);
                if (f == "neg") return neg(x);
                if (f == "softmax") return softmax(x);
                if (f == "transpose") return transpose(x);
                if (f == "zeros_like") return zeros_like(x);
                return ones_like(x);
            })};
        }
        if (contains(binary_builtins(), f)) {
            arity(e, 2, 2);
            Variable a = eval(*e.args[0], s);
            Variable b = eval(*e.args[1], s);
            return {build(e, [&] {
                if (f == "add") return add(a, b);
                if (f == "sub") return sub(a, b);
                if (f == "mul") return mul(a, b);
                if (f == "div") return div(a, b);
                if (f == "dot") return dot(a, b);
                if (f == "maximum") return maximum(a, b);
                if (f == "minimum") return minimum(a, b);
                if (f == "gt") return gt(a, b);
                if (f == "lt") return lt(a, b);
                if (f == "ge") return ge(a, b);
                if (f == "le") return le(a, b);
                if (f == "eq") return eq(a, b);
                if (f == "ne") return ne(a, b);
                if (f == "crossentropy") return crossentropy(a, b);
                if (f == "concat_rows") return concat_rows(a, b);
                if (f == "reshape_like") return reshape_like(a, b);
                return broadcast_like(a, b);
            })};
        }
        if (f == "sum" || f == "max" || f == "mean" || f == "argmax") {
            arity(e, 1, 2);
            Variable x = eval(*e.args[0], s);
            std::optional<int> axis;
            if (e.args.size() == 2) axis = static_cast<int>(clamp_axis(int_arg(e, 1), e));
            return {build(e, [&] {
                if (f == "sum") return sum(x, axis);
                if (f == "max") return max(x, axis);
                if (f == "mean") return mean(x, axis);
                return argmax(x, axis.value_or(-1));
            })};
        }
        if (f == "pow") {
            arity(e, 2, 2);
            Variable x = eval(*e.args[0], s);
            auto p = number_literal(*e.args[1]);
            if (!p) fail(e.args[1]->span, "the exponent of 'pow' must be a number literal");
            return {build(e, [&] { return pow(x, *p); })};
        }
        if (f == "take_row" || f == "expand_dims" || f == "shape_of") {
            arity(e, 2, 2);
            Variable x = eval(*e.args[0], s);
            const std::int64_t k = int_arg(e, 1);
            return {build(e, [&] {
                if (f == "take_row") return take_row(x, k);
                if (f == "expand_dims") return expand_dims(x, static_cast<int>(clamp_axis(k, e)));
                return shape_of(x, static_cast<int>(clamp_axis(k, e)));
            })};
        }
        if (f == "reshape") {
            arity(e, 2, 2);
            Variable x = eval(*e.args[0], s);
            const Expr& l = *e.args[1];
            if (l.kind != Expr::Kind::list) fail(l.span, "the shape argument of 'reshape' must be a list of integers");
            std::vector<std::int64_t> target;
            for (const auto& a : l.args) {
                auto v = int_literal(*a);
                if (!v) fail(a->span, "reshape extents must be integer literals");
                target.push_back(*v);
            }
            return {build(e, [&] { return reshape(x, target); })};
        }
        if (f == "if_else") {
            arity(e, 3, 3);
            Variable c = eval(*e.args[0], s);
            Variable a = eval(*e.args[1], s);
            Variable b = eval(*e.args[2], s);
            return {build(e, [&] { return if_else(c, a, b); })};
        }
        if (f == "stack_rows") {
            arity(e, 1, SIZE_MAX);
            std::vector<Variable> xs;
            for (const auto& a : e.args) xs.push_back(eval(*a, s));
            return {build(e, [&] { return stack_rows(xs); })};
        }
        fail(e.span, "unknown function '" + f + "'");
    }

    std::int64_t clamp_axis(std::int64_t k, const Expr& e) {
        if (k < -64 || k > 64) fail(e.span, "axis " + std::to_string(k) + " out of range");
        return k;
    }

    std::unordered_map<std::string, Binding> globals_;
    std::set<std::string> poisoned_;
    std::unordered_map<std::string, SourceSpan> fn_spans_;
};

}  // namespace

LowerResult lower(const Program& program) { return Lowerer().run(program); }

LowerResult compile_source(std::string_view source, const std::string& file) {
    auto parsed = parse(source, file);
    if (!parsed.ok()) {
        LowerResult r;
        r.diagnostics = std::move(parsed.diagnostics);
        return r;
    }
    return lower(parsed.program);
}

std::vector<std::string> builtin_functions() {
    std::vector<std::string> out = unary_builtins();
    for (const auto& v : {binary_builtins(), other_builtins()}) out.insert(out.end(), v.begin(), v.end());
    return out;
}

}  // namespace graphc::dsl
