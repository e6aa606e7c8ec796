// Copyright 2026 The graphc Authors
// SPDX-License-Identifier: Apache-2.0
//
// graphc: compile, run and gradient-check .gx programs; run benchmarks.
// Exit codes: 0 ok, 1 diagnostics or usage errors, 2 numeric check failure.

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <sstream>

#include "graphc/autodiff.hpp"
#include "graphc/bench.hpp"
#include "graphc/dsl.hpp"
#include "graphc/errors.hpp"
#include "graphc/ops.hpp"
#include "graphc/rewrite.hpp"
#include "graphc/vm.hpp"

namespace {

using namespace graphc;

constexpr int kOk = 0;
constexpr int kDiagnostics = 1;
constexpr int kNumericFailure = 2;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string read_source(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw UsageError("cannot read '" + path + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw UsageError("cannot write '" + path + "'");
    f << text;
}

// Returns false after printing diagnostics.
bool load(const std::string& path, dsl::LowerResult& out) {
    out = dsl::compile_source(read_source(path), path);
    for (const auto& d : out.diagnostics) std::cerr << dsl::format_diagnostic(d) << "\n";
    return out.ok();
}

const Graph& function_graph(const dsl::LowerResult& r, const std::string& name) {
    auto it = r.functions.find(name);
    if (it == r.functions.end()) {
        std::string known;
        for (const auto& n : r.order) known += (known.empty() ? "" : ", ") + n;
        throw UsageError("no function '" + name + "' (declared: " + (known.empty() ? "none" : known) +
                         ")");
    }
    return it->second.graph;
}

std::optional<OptLevel> opt_level(const std::string& text) {
    if (text.empty()) return std::nullopt;
    auto level = parse_opt_level(text);
    if (!level) throw UsageError("unknown optimization level '" + text + "'");
    return level;
}

// name=value pairs; values are tensor literals read with the input's dtype.
std::vector<Tensor> bind_inputs(const Graph& g, const std::vector<std::string>& pairs,
                                std::mt19937_64* rng) {
    std::map<std::string, std::string> given;
    for (const auto& p : pairs) {
        const auto eq = p.find('=');
        if (eq == std::string::npos || eq == 0) throw UsageError("--in expects name=value, got '" + p + "'");
        if (!given.emplace(p.substr(0, eq), p.substr(eq + 1)).second) {
            throw UsageError("input '" + p.substr(0, eq) + "' given twice");
        }
    }
    std::vector<Tensor> values;
    for (const auto& in : g.inputs) {
        auto it = given.find(in.name());
        if (it == given.end()) {
            const auto& t = in.type();
            const bool known = std::none_of(t.dims.begin(), t.dims.end(),
                                            [](std::int64_t d) { return d < 0; });
            if (rng && known && t.dtype == DType::f64) {
                std::uniform_real_distribution<double> u(-1.0, 1.0);
                Tensor v = Tensor::zeros(t.dims);
                for (auto& x : v.data()) x = u(*rng);
                values.push_back(std::move(v));
                continue;
            }
            throw UsageError("missing --in " + in.name() + "=<" + t.to_string() + ">");
        }
        std::string err;
        auto v = dsl::parse_tensor_literal(it->second, in.type().dtype, &err);
        if (!v) throw UsageError("--in " + in.name() + ": " + err);
        values.push_back(std::move(*v));
        given.erase(it);
    }
    if (!given.empty()) throw UsageError("'" + given.begin()->first + "' is not an input");
    return values;
}

std::string output_label(const Variable& v, std::size_t i) {
    return v.name().empty() ? "out" + std::to_string(i) : v.name();
}

// ---- compile ---------------------------------------------------------------

struct CompileArgs {
    std::string file;
    std::string opt;
    std::string dot;
    std::vector<std::string> disabled;
};

int cmd_compile(const CompileArgs& a) {
    dsl::LowerResult r;
    if (!load(a.file, r)) return kDiagnostics;
    OptimizeOptions oo;
    for (const auto& rule : a.disabled) {
        const auto& rules = builtin_rules();
        if (std::none_of(rules.begin(), rules.end(), [&](const RewriteRule& x) { return x.name == rule; })) {
            throw UsageError("unknown rewrite rule '" + rule + "'");
        }
        oo.disabled_rules.insert(rule);
    }
    const auto level = opt_level(a.opt);
    std::string dot;
    for (const auto& name : r.order) {
        const Graph& g = r.functions.at(name).graph;
        auto f = compile(g, {}, level, oo);
        std::printf("fn %s: %zu nodes -> %zu nodes, %zu instructions (%s)\n", name.c_str(),
                    count_nodes(g), count_nodes(f.optimized_graph()), f.num_instructions(),
                    std::string(opt_level_name(f.report().level)).c_str());
        for (const auto& rc : f.report().rules) {
            std::printf("  %-28s x%llu\n", rc.rule.c_str(), static_cast<unsigned long long>(rc.count));
        }
        for (const auto& w : f.report().warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
        dot += export_dot(f.optimized_graph(), name);
    }
    if (!a.dot.empty()) write_file(a.dot, dot);
    return kOk;
}

// ---- run -------------------------------------------------------------------

struct RunArgs {
    std::string file;
    std::string fn;
    std::vector<std::string> inputs;
    std::string opt;
    std::int64_t calls = 1;
    bool profile = false;
};

int cmd_run(const RunArgs& a) {
    dsl::LowerResult r;
    if (!load(a.file, r)) return kDiagnostics;
    const Graph& g = function_graph(r, a.fn);
    auto values = bind_inputs(g, a.inputs, nullptr);
    RuntimeOptions ro;
    ro.timing = a.profile;
    auto f = compile(g, ro, opt_level(a.opt));
    std::vector<Tensor> out;
    for (std::int64_t i = 0; i < a.calls; ++i) out = f.call(std::span<const Tensor>(values));
    for (std::size_t i = 0; i < out.size(); ++i) {
        std::printf("%s = %s\n", output_label(g.outputs[i], i).c_str(), out[i].to_string().c_str());
    }
    for (const auto& u : g.updates) {
        std::printf("%s := %s\n", u.target.name().c_str(),
                    u.target.shared_storage()->value.to_string().c_str());
    }
    if (a.profile) std::fputs(f.profile_text().c_str(), stderr);
    return kOk;
}

// ---- grad-check ------------------------------------------------------------

struct GradCheckArgs {
    std::string file;
    std::string fn;
    std::vector<std::string> inputs;
    double h = 1e-6;
    double tol = 1e-5;
    std::uint64_t seed = 1;
};

double rel_err(double a, double b) {
    if (a == b) return 0.0;
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-8});
}

int cmd_grad_check(const GradCheckArgs& a) {
    dsl::LowerResult r;
    if (!load(a.file, r)) return kDiagnostics;
    const Graph& g = function_graph(r, a.fn);
    std::mt19937_64 rng(a.seed);
    std::vector<Tensor> values = bind_inputs(g, a.inputs, &rng);

    // Shared parameters become inputs holding their current values.
    std::vector<Variable> wrt_inputs = g.inputs;
    Substitutions subs;
    for (const auto& leaf : collect_leaves(g.outputs)) {
        if (leaf.origin() != Origin::shared) continue;
        Variable in = make_input(leaf.type(), leaf.name());
        subs.emplace(leaf.id(), in);
        wrt_inputs.push_back(in);
        values.push_back(leaf.shared_storage()->value);
    }
    auto outs = clone_with_substitutions(std::span<const Variable>(g.outputs), subs);

    std::vector<Variable> wrt;
    std::vector<std::size_t> wrt_index;
    for (std::size_t i = 0; i < wrt_inputs.size(); ++i) {
        if (wrt_inputs[i].type().dtype == DType::f64) {
            wrt.push_back(wrt_inputs[i]);
            wrt_index.push_back(i);
        }
    }
    auto forward = compile(Graph{wrt_inputs, outs, {}}, {}, OptLevel::none);
    auto out_vals = forward.call(std::span<const Tensor>(values));
    Variable cost;
    for (std::size_t k = 0; k < outs.size(); ++k) {
        if (outs[k].type().dtype != DType::f64) continue;
        std::uniform_real_distribution<double> u(0.5, 1.5);
        Tensor w = Tensor::zeros(out_vals[k].shape());
        for (auto& x : w.data()) x = u(rng);
        Variable term = sum(outs[k] * make_constant(std::move(w)));
        cost = cost ? add(cost, term) : term;
    }
    if (!cost || wrt.empty()) {
        std::cerr << a.file << ": error: function '" << a.fn
                  << "' has no f64 output or no f64 variables to differentiate\n";
        return kDiagnostics;
    }
    auto grads = grad(cost, wrt);
    auto f_cost = compile(Graph{wrt_inputs, {cost}, {}}, {}, OptLevel::none);
    auto f_grad = compile(Graph{wrt_inputs, grads, {}}, {});
    auto sym = f_grad.call(std::span<const Tensor>(values));

    double worst = 0.0;
    for (std::size_t j = 0; j < wrt.size(); ++j) {
        const std::size_t i = wrt_index[j];
        double var_worst = 0.0;
        for (std::size_t e = 0; e < values[i].size(); ++e) {
            const double x0 = values[i][e];
            values[i].data()[e] = x0 + a.h;
            const double up = f_cost.call(std::span<const Tensor>(values))[0].item();
            values[i].data()[e] = x0 - a.h;
            const double down = f_cost.call(std::span<const Tensor>(values))[0].item();
            values[i].data()[e] = x0;
            var_worst = std::max(var_worst, rel_err(sym[j][e], (up - down) / (2.0 * a.h)));
        }
        std::printf("%-16s %8zu elements  max rel error %.3e\n",
                    wrt[j].name().empty() ? "?" : wrt[j].name().c_str(), values[i].size(), var_worst);
        worst = std::max(worst, var_worst);
    }
    const bool ok = worst <= a.tol;
    std::printf("%s: max rel error %.3e (tol %.1e)\n", ok ? "PASS" : "FAIL", worst, a.tol);
    return ok ? kOk : kNumericFailure;
}

// ---- bench -----------------------------------------------------------------

struct BenchArgs {
    std::string model = "logreg";
    std::int64_t batch = 0;
    std::string ladder;
    std::string json;
    std::string dot;
    bool full = false;
    std::vector<std::int64_t> hidden;
    std::int64_t calls = 0;
    std::int64_t repetitions = 0;
    std::uint64_t seed = 0;
    bool check_ladder = false;
};

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

int cmd_bench(const BenchArgs& a) {
    auto model = bench::parse_model(a.model);
    if (!model) throw UsageError("unknown model '" + a.model + "' (logreg, mlp1, mlp3, rnn)");
    const std::int64_t batch = a.batch ? a.batch : (*model == bench::Model::rnn ? 1 : 60);
    if (*model != bench::Model::rnn && batch != 1 && batch != 10 && batch != 60) {
        throw UsageError("batch must be 1, 10 or 60");
    }
    bench::BenchConfig cfg;
    try {
        cfg = bench::default_config(*model, batch, a.full);
        if (!a.ladder.empty()) cfg.ladder = split(a.ladder, ',');
        if (!a.hidden.empty()) cfg.hidden = a.hidden;
        if (a.calls) cfg.calls = a.calls;
        if (a.repetitions) cfg.repetitions = a.repetitions;
        if (a.seed) cfg.seed = a.seed;
        bench::check_config(cfg);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    auto result = bench::run_bench(cfg);
    std::fputs(bench::format_table({result}).c_str(), stdout);
    std::printf("wall time %.2f s\n", result.wall_seconds);
    if (!a.json.empty()) write_file(a.json, bench::to_json({result}));
    if (!a.dot.empty()) write_file(a.dot, bench::model_dot(cfg));
    auto violations = bench::ladder_violations(result);
    for (const auto& v : violations) std::fprintf(stderr, "ladder out of order: %s\n", v.c_str());
    return a.check_ladder && !violations.empty() ? kNumericFailure : kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"graphc: tensor expression compiler"};
    app.require_subcommand(1);

    CompileArgs ca;
    auto* compile_cmd = app.add_subcommand("compile", "Parse, lower and optimize every function");
    compile_cmd->add_option("file", ca.file, ".gx source")->required();
    compile_cmd->add_option("--opt", ca.opt, "none, stabilize_only or default");
    compile_cmd->add_option("--dot", ca.dot, "Write optimized graphs as DOT");
    compile_cmd->add_option("--disable-rule", ca.disabled, "Disable a rewrite rule (repeatable)");

    RunArgs ra;
    auto* run_cmd = app.add_subcommand("run", "Compile one function and call it");
    run_cmd->add_option("file", ra.file, ".gx source")->required();
    run_cmd->add_option("--fn", ra.fn, "Function name")->required();
    run_cmd->add_option("--in", ra.inputs, "Input value, name=literal (repeatable)");
    run_cmd->add_option("--opt", ra.opt, "none, stabilize_only or default");
    run_cmd->add_option("--calls", ra.calls, "Number of calls (updates apply between calls)")
        ->check(CLI::PositiveNumber);
    run_cmd->add_flag("--profile", ra.profile, "Print per-node counts and time to stderr");

    GradCheckArgs ga;
    auto* grad_cmd = app.add_subcommand("grad-check", "Compare gradients with central differences");
    grad_cmd->set_help_flag("--help", "Print this help message and exit");
    grad_cmd->add_option("file", ga.file, ".gx source")->required();
    grad_cmd->add_option("--fn", ga.fn, "Function name")->required();
    grad_cmd->add_option("--in", ga.inputs, "Input value, name=literal (repeatable)");
    grad_cmd->add_option("--h", ga.h, "Finite-difference step")->check(CLI::PositiveNumber);
    grad_cmd->add_option("--tol", ga.tol, "Largest accepted relative error");
    grad_cmd->add_option("--seed", ga.seed, "Seed for random inputs and projections");

    BenchArgs ba;
    auto* bench_cmd = app.add_subcommand("bench", "Training-step throughput across runtime options");
    bench_cmd->add_option("--model", ba.model, "logreg, mlp1, mlp3 or rnn");
    bench_cmd->add_option("--batch", ba.batch, "1, 10 or 60 (rnn: 1)");
    bench_cmd->add_option("--ladder", ba.ladder, "Comma-separated: default,nogc,trust,ncalls");
    bench_cmd->add_option("--json", ba.json, "Write results as JSON");
    bench_cmd->add_option("--dot", ba.dot, "Write the optimized training graph as DOT");
    bench_cmd->add_flag("--full", ba.full, "mlp3 with 1000-unit layers");
    bench_cmd->add_option("--hidden", ba.hidden, "Hidden layer sizes")->delimiter(',');
    bench_cmd->add_option("--calls", ba.calls, "Timed calls per repetition");
    bench_cmd->add_option("--repetitions", ba.repetitions, "Repetitions (median reported)");
    bench_cmd->add_option("--seed", ba.seed, "Data and initialization seed");
    bench_cmd->add_flag("--check-ladder", ba.check_ladder,
                        "Exit 2 when throughput drops along the ladder");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kOk : kDiagnostics;
    }

    try {
        if (*compile_cmd) return cmd_compile(ca);
        if (*run_cmd) return cmd_run(ra);
        if (*grad_cmd) return cmd_grad_check(ga);
        if (*bench_cmd) return cmd_bench(ba);
    } catch (const UsageError& e) {
        std::cerr << "graphc: error: " << e.what() << "\n";
    } catch (const std::exception& e) {
        std::cerr << "graphc: error: " << e.what() << "\n";
    }
    return kDiagnostics;
}
