// Copyright 2026 The graphc Authors
// SPDX-License-Identifier: Apache-2.0
//
// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Tolerances are fixed here and never relaxed at runtime.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>

#include "graphc/autodiff.hpp"
#include "graphc/bench.hpp"
#include "graphc/dsl.hpp"
#include "graphc/rewrite.hpp"
#include "graphc/scan.hpp"
#include "support/dsl_fuzz.hpp"
#include "support/gv_oracle.hpp"
#include "support/hp_oracle.hpp"
#include "support/lazy_check.hpp"
#include "support/op_cases.hpp"
#include "support/random_graph.hpp"
#include "support/testing.hpp"

using namespace graphc;
using VV = std::vector<Variable>;

namespace {

constexpr double kGradTol = 1e-5;
constexpr double kAdjointTol = 1e-10;
constexpr double kGnTol = 1e-8;
constexpr double kRewriteTol = 1e-12;
constexpr double kScanForwardTol = 1e-12;
constexpr double kScanGradTol = 1e-10;
constexpr double kMergeTol = 1e-15;
constexpr double kGradSuiteSeconds = 60.0;
constexpr double kBenchSeconds = 300.0;
constexpr std::size_t kFuzzInputs = 100000;

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            if (pass) detail << "failed: ";
            else detail << "; ";
            detail << what;
            pass = false;
        }
    }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2e", v);
    return buf;
}

std::vector<Tensor> rand_values(std::mt19937_64& rng, const VV& vars) {
    std::vector<Tensor> out;
    for (const auto& v : vars) out.push_back(gt::rand_tensor(rng, v.type().dims));
    return out;
}

// ---- 1 ---------------------------------------------------------------------

// Loss gradient of a benchmark model with its parameters turned into inputs.
double model_grad_error(const bench::BenchConfig& cfg) {
    auto m = bench::build_model(cfg, true);
    Substitutions subs;
    VV ins;
    std::vector<Tensor> vals;
    for (const auto& p : m.params) {
        Variable in = make_input(p.type(), p.name());
        subs.emplace(p.id(), in);
        ins.push_back(in);
        vals.push_back(p.shared_storage()->value);
    }
    Variable cost = clone_with_substitutions(std::span<const Variable>(m.loss.outputs), subs)[0];
    auto grads = grad(cost, ins);
    auto f_grad = compile(Graph{ins, grads, {}});
    auto f_cost = compile(Graph{ins, {cost}, {}}, {}, OptLevel::none);
    auto sym = f_grad.call(std::span<const Tensor>(vals));
    gt::ScalarFn fn = [&](const std::vector<Tensor>& v) {
        return f_cost.call(std::span<const Tensor>(v))[0].item();
    };
    double worst = 0.0;
    for (std::size_t i = 0; i < ins.size(); ++i) {
        worst = std::max(worst, gt::max_rel_err(sym[i], gt::fd_grad(fn, vals, i)));
    }
    return worst;
}

void criterion_gradients(Outcome& o) {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(2026);
    double worst = 0.0;
    std::string worst_case;
    const auto cases = gt::op_cases();
    for (const auto& oc : cases) {
        for (int trial = 0; trial < 3; ++trial) {
            auto d = gt::instantiate(oc, rng);
            const double e = gt::grad_check_error(d, rng);
            if (!(e <= worst)) {
                worst = e;
                worst_case = oc.name;
            }
            o.require(e <= kGradTol, oc.name + " " + fmt(e));
        }
    }
    bench::BenchConfig logreg;
    logreg.model = bench::Model::logreg;
    logreg.input_dim = 20;
    logreg.output_dim = 5;
    logreg.batch = 4;
    bench::BenchConfig mlp1 = logreg;
    mlp1.model = bench::Model::mlp1;
    mlp1.input_dim = 12;
    mlp1.hidden = {8};
    mlp1.output_dim = 4;
    bench::BenchConfig rnn;
    rnn.model = bench::Model::rnn;
    rnn.input_dim = rnn.output_dim = 5;
    rnn.hidden = {6};
    rnn.batch = 1;
    rnn.seq_len = 8;
    for (const auto& [name, cfg] : {std::pair{"logreg", logreg}, std::pair{"mlp1", mlp1},
                                    std::pair{"rnn(T=8)", rnn}}) {
        const double e = model_grad_error(cfg);
        if (!(e <= worst)) {
            worst = e;
            worst_case = name;
        }
        o.require(e <= kGradTol, std::string(name) + " " + fmt(e));
    }
    const double secs = seconds_since(t0);
    o.require(secs < kGradSuiteSeconds, "suite took " + std::to_string(secs) + " s");
    o.detail << (o.pass ? "" : " | ") << cases.size() << " op cases x3 + logreg, mlp1, rnn(T=8); "
             << "max rel error " << fmt(worst) << " (" << worst_case << ") <= " << fmt(kGradTol)
             << "; " << secs << " s";
}

// ---- 2 ---------------------------------------------------------------------

void criterion_adjoint(Outcome& o) {
    std::mt19937_64 rng(4242);
    int combos = 0, with_scan = 0;
    double worst = 0.0;
    for (int k = 0; k < 120; ++k) {
        const bool scan = k % 2 == 0;
        auto rg = gt::random_graph(rng, {.n_ops = 10, .n = 3, .with_scan = scan,
                                         .rewrite_triggers = false});
        auto vals = rand_values(rng, rg.inputs);
        auto r = gt::adjoint_check(rg.inputs, rg.outputs, vals, rng);
        worst = std::max(worst, r.rel());
        o.require(r.rel() <= kAdjointTol, "graph " + std::to_string(k) + " " + fmt(r.rel()));
        ++combos;
        with_scan += scan;
    }
    for (const auto& oc : gt::op_cases()) {
        if (!oc.has_rop) continue;
        auto d = gt::instantiate(oc, rng);
        auto r = gt::adjoint_check(d.inputs, {d.out}, d.values, rng);
        worst = std::max(worst, r.rel());
        o.require(r.rel() <= kAdjointTol, oc.name + " " + fmt(r.rel()));
        ++combos;
    }
    o.detail << (o.pass ? "" : " | ") << combos << " graph/seed combinations (" << with_scan
             << " with scan); max rel gap " << fmt(worst) << " <= " << fmt(kAdjointTol);
}

// ---- 3 ---------------------------------------------------------------------

void criterion_gauss_newton(Outcome& o) {
    std::mt19937_64 rng(31);
    double worst = 0.0;
    {
        auto x = make_constant(gt::rand_tensor(rng, {2, 3}));
        auto W1 = make_input(TensorType::matrix(3, 4), "W1");
        auto W2 = make_input(TensorType::matrix(4, 2), "W2");
        VV outs{softmax(dot(tanh(dot(x, W1)), W2))};
        VV wrt{W1, W2};
        auto vals = rand_values(rng, wrt);
        auto gam = rand_values(rng, wrt);
        auto J = gt::jacobian_by_rop(wrt, wrt, outs, vals);
        o.require(J.cols <= 20, "jacobian too wide");
        auto expect = gt::explicit_gn_product(J, gam);
        VV gvars{make_input(W1.type(), "g1"), make_input(W2.type(), "g2")};
        auto gv = gauss_newton_vector_product(outs, wrt, gvars);
        VV ins{W1, W2, gvars[0], gvars[1]};
        std::vector<Tensor> all{vals[0], vals[1], gam[0], gam[1]};
        auto got = compile(Graph{ins, gv, {}}).call(std::span<const Tensor>(all));
        for (std::size_t i = 0; i < 2; ++i) worst = std::max(worst, gt::max_rel_err(got[i], expect[i]));
    }
    std::size_t scans = 0;
    {
        const int T = 8, n = 3;
        auto X = make_constant(gt::rand_tensor(rng, {T, n}));
        auto h0 = make_constant(gt::rand_tensor(rng, {n}));
        auto W = make_input(TensorType::matrix(n, n), "W");
        auto r = scan(
            [](const StepInputs& in) {
                auto h = tanh(dot(in.non_sequences[0], in.states[0][0]) + in.sequences[0][0]);
                return StepResult{{h}, {softmax(h)}, std::nullopt};
            },
            ScanArgs{{{X}}, {{h0}}, {W}, std::nullopt, std::nullopt});
        VV outs{r.collected[0]}, wrt{W};
        auto gW = make_input(W.type(), "gW");
        auto f = compile(Graph{{W, gW}, gauss_newton_vector_product(outs, wrt, VV{gW}), {}});
        scans = count_scans(f.optimized_graph());
        auto vals = rand_values(rng, wrt);
        auto gam = rand_values(rng, wrt);
        auto J = gt::jacobian_by_rop(wrt, wrt, outs, vals);
        auto expect = gt::explicit_gn_product(J, gam);
        auto got = f.call({vals[0], gam[0]});
        worst = std::max(worst, gt::max_rel_err(got[0], expect[0]));
    }
    o.require(worst <= kGnTol, "GN deviation " + fmt(worst));
    o.require(scans <= 3, std::to_string(scans) + " scans in the RNN Gv graph");
    o.detail << (o.pass ? "" : " | ") << "MLP (20 params) and RNN T=8: max rel deviation "
             << fmt(worst) << " <= " << fmt(kGnTol) << "; RNN Gv graph has " << scans
             << " scan(s) (limit 3, target 2)";
}

// ---- 4 ---------------------------------------------------------------------

double eval_scalar(const Graph& g, double x) {
    return compile(g, {}, OptLevel::none).call({Tensor::scalar(x)})[0].item();
}

void criterion_rewrites(Outcome& o) {
    std::mt19937_64 rng(99);
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
        gt::RandomGraphOptions opts;
        opts.with_scan = i % 4 == 0;
        auto rg = gt::random_graph(rng, opts);
        Graph g{rg.inputs, rg.outputs, {}};
        auto opt = optimize(g).first;
        auto sem = check_semantics(gt::stabilized_reference(g), opt, 3, kRewriteTol,
                                   static_cast<std::uint64_t>(i) + 1);
        worst = std::max(worst, sem.max_rel_deviation);
        o.require(sem.ok, "graph " + std::to_string(i) + " deviates " + fmt(sem.max_rel_deviation));
    }
    auto v = make_input(TensorType::vector(4), "v");
    auto x = make_input(TensorType::scalar(), "x");
    const std::uint64_t xx = optimize(Graph{{v}, {exp(v) - exp(v)}, {}}).second.count("x_minus_x");
    Graph lg{{x}, {log(1.0 + x)}, {}};
    auto [lg_opt, lg_rep] = optimize(lg);
    Graph sg{{x}, {log(sigmoid(x))}, {}};
    auto [sg_opt, sg_rep] = optimize(sg);
    o.require(xx >= 1, "x_minus_x did not fire");
    o.require(lg_rep.count("log1p") >= 1, "log1p did not fire");
    o.require(sg_rep.count("log_sigmoid") >= 1, "log_sigmoid did not fire");

    const double before = eval_scalar(lg, 1e-18);
    const double after = eval_scalar(lg_opt, 1e-18);
    const double ulps = gt::hp::ulps(after, gt::hp::log1p_ref(1e-18));
    o.require(before == 0.0, "log(1+1e-18) before rewriting is " + fmt(before));
    o.require(ulps <= 1.0, "log1p(1e-18) is " + fmt(ulps) + " ulp from the reference");
    const double ls_before = eval_scalar(sg, -40.0);
    const double ls_after = eval_scalar(sg_opt, -40.0);
    o.require(std::isinf(ls_before) && ls_before < 0, "log(sigmoid(-40)) before is " + fmt(ls_before));
    o.require(std::isfinite(ls_after), "log(sigmoid(-40)) after is " + fmt(ls_after));
    o.detail << (o.pass ? "" : " | ") << "100 random graphs max rel deviation " << fmt(worst)
             << " <= " << fmt(kRewriteTol) << "; fired x_minus_x=" << xx
             << " log1p=" << lg_rep.count("log1p") << " log_sigmoid=" << sg_rep.count("log_sigmoid")
             << "; log(1+1e-18): " << before << " -> " << after << " (" << ulps
             << " ulp); log(sigmoid(-40)): " << ls_before << " -> " << ls_after;
}

// ---- 5 ---------------------------------------------------------------------

struct Rnn {
    Variable X, W, v, h0;
    ScanResult r;
};

Rnn make_rnn(std::int64_t T, std::int64_t n) {
    Rnn m{make_input(TensorType::matrix(T, n), "X"), make_input(TensorType::matrix(n, n), "W"),
          make_input(TensorType::vector(n), "v"), make_input(TensorType::vector(n), "h0"), {}};
    m.r = scan(
        [](const StepInputs& in) {
            const auto& W = in.non_sequences[0];
            const auto& v = in.non_sequences[1];
            Variable h = tanh(dot(W, in.states[0][0]) + in.sequences[0][0]);
            return StepResult{{h}, {sum(h * v)}, std::nullopt};
        },
        ScanArgs{{{m.X}}, {{m.h0}}, {m.W, m.v}, std::nullopt, std::nullopt});
    return m;
}

std::pair<Variable, Variable> unrolled(const Rnn& m, std::int64_t T) {
    Variable h = m.h0;
    VV hs, ys;
    for (std::int64_t t = 0; t < T; ++t) {
        h = tanh(dot(m.W, h) + take_row(m.X, t));
        hs.push_back(h);
        ys.push_back(sum(h * m.v));
    }
    return {stack_rows(hs), stack_rows(ys)};
}

void criterion_scan(Outcome& o) {
    std::mt19937_64 rng(7);
    double fwd = 0.0, bwd = 0.0;
    const int specs = 12;
    for (int s = 0; s < specs; ++s) {
        const std::int64_t T = std::uniform_int_distribution<std::int64_t>(1, 16)(rng);
        const std::int64_t n = std::uniform_int_distribution<std::int64_t>(2, 4)(rng);
        Rnn m = make_rnn(T, n);
        auto [H, Y] = unrolled(m, T);
        VV ins{m.X, m.W, m.v, m.h0};
        auto vals = rand_values(rng, ins);
        auto a = gt::eval(ins, {m.r.states[0], m.r.collected[0]}, vals);
        auto b = gt::eval(ins, {H, Y}, vals);
        fwd = std::max({fwd, gt::max_rel_err(a[0], b[0]), gt::max_rel_err(a[1], b[1])});
        auto ga = grad(sum(m.r.collected[0]) + sum(take_row(m.r.states[0], -1)), ins);
        auto gb = grad(sum(Y) + sum(take_row(H, -1)), ins);
        auto va = gt::eval(ins, ga, vals);
        auto vb = gt::eval(ins, gb, vals);
        for (std::size_t k = 0; k < ins.size(); ++k) bwd = std::max(bwd, gt::max_rel_err(va[k], vb[k]));
    }
    o.require(fwd <= kScanForwardTol, "forward deviation " + fmt(fwd));
    o.require(bwd <= kScanGradTol, "gradient deviation " + fmt(bwd));

    // Hoisting a loop whose body has no recurrence.
    auto X = make_input(TensorType::matrix(6, 4), "X");
    auto W = make_input(TensorType::matrix(4, 3), "W");
    auto free_loop = scan(
        [](const StepInputs& in) {
            return StepResult{{}, {tanh(dot(in.sequences[0][0], in.non_sequences[0]) * 2.0)}, std::nullopt};
        },
        ScanArgs{{{X}}, {}, {W}, std::nullopt, std::nullopt});
    Graph hg{{X, W}, {free_loop.collected[0]}, {}};
    const std::size_t hoisted_scans = count_scans(optimize(hg).first);
    auto hv = rand_values(rng, hg.inputs);
    const double hoist_dev = gt::max_rel_err(gt::eval(hg.inputs, hg.outputs, hv, OptLevel::none)[0],
                                             gt::eval(hg.inputs, hg.outputs, hv, OptLevel::standard)[0]);
    o.require(hoisted_scans == 0, std::to_string(hoisted_scans) + " scans left after hoisting");
    o.require(hoist_dev <= kScanForwardTol, "hoisted loop deviates " + fmt(hoist_dev));

    // Merging two loops of the same length.
    auto x = make_input(TensorType::vector(8), "x");
    auto a = scan(
        [](const StepInputs& in) {
            return StepResult{{in.states[0][0] + in.sequences[0][0]}, {}, std::nullopt};
        },
        ScanArgs{{{x}}, {{scalar_constant(0.0)}}, {}, std::nullopt, std::nullopt});
    auto b = scan(
        [](const StepInputs& in) {
            return StepResult{{in.states[0][0] * 0.5 + in.sequences[0][0]}, {}, std::nullopt};
        },
        ScanArgs{{{x}}, {{scalar_constant(1.0)}}, {}, std::nullopt, std::nullopt});
    Graph mg{{x}, {a.states[0], b.states[0]}, {}};
    OptimizeOptions oo;
    oo.disabled_rules = {"scan_hoist"};
    auto merged = optimize(mg, oo).first;
    const std::size_t merged_scans = count_scans(merged);
    std::vector<Tensor> mv{gt::rand_tensor(rng, {8})};
    auto before = gt::eval({x}, mg.outputs, mv, OptLevel::none);
    auto after = compile(merged, {}, OptLevel::none).call(std::span<const Tensor>(mv));
    const double merge_dev =
        std::max(gt::max_abs_diff(before[0], after[0]), gt::max_abs_diff(before[1], after[1]));
    o.require(merged_scans == 1, std::to_string(merged_scans) + " scans after merging");
    o.require(merge_dev <= kMergeTol, "merged loop deviates " + fmt(merge_dev));
    o.detail << (o.pass ? "" : " | ") << specs << " random specs (T<=16): forward " << fmt(fwd)
             << " <= " << fmt(kScanForwardTol) << ", grad " << fmt(bwd) << " <= " << fmt(kScanGradTol)
             << "; hoist leaves " << hoisted_scans << " scans; merge leaves " << merged_scans
             << " scan, deviation " << fmt(merge_dev);
}

// ---- 6 ---------------------------------------------------------------------

void criterion_laziness(Outcome& o) {
    auto c = make_input(TensorType::scalar(), "c");
    auto x = make_input(TensorType::matrix(3, 3), "x");
    auto then_v = sum(tanh(dot(x, x)));
    auto else_v = sum(exp(dot(transpose(x), x)) * 3.0);
    auto c2 = make_input(TensorType::scalar(), "c2");
    auto inner = if_else(c2, sum(sigmoid(x)), sum(sqr(x)));
    Graph g{{c, c2, x}, {if_else(c, then_v, if_else(c2 - 1.0, inner, else_v))}, {}};
    RuntimeOptions eager_opts;
    eager_opts.lazy = false;
    int checks = 0;
    for (auto level : {OptLevel::none, OptLevel::standard}) {
        auto f = compile(g, {}, level);
        auto eager = compile(g, eager_opts, level);
        const auto order = toposort(f.optimized_graph());
        auto bps = gt::branch_producers(f.optimized_graph());
        o.require(bps.size() == 3, std::to_string(bps.size()) + " if_else nodes found");
        for (double cv : {0.0, 1.0}) {
            for (double c2v : {0.0, 1.0, 2.0}) {
                std::vector<Tensor> in{Tensor::scalar(cv), Tensor::scalar(c2v), Tensor::full({3, 3}, 0.2)};
                f.reset_profile();
                auto lazy_out = f.call(std::span<const Tensor>(in));
                auto eager_out = eager.call(std::span<const Tensor>(in));
                o.require(bitwise_equal(lazy_out[0], eager_out[0]), "lazy result differs from eager");
                auto prof = f.profile();
                for (const auto& bp : bps) {
                    const auto at = std::find(order.begin(), order.end(), bp.if_node) - order.begin();
                    if (prof[static_cast<std::size_t>(at)].count == 0) continue;  // not demanded
                    const auto t = gt::total_count(prof, bp.then_only);
                    const auto e = gt::total_count(prof, bp.else_only);
                    o.require((t == 0) != (e == 0), "both or neither branch ran");
                    ++checks;
                }
            }
        }
    }
    std::mt19937_64 rng(5);
    int eager_graphs = 0;
    for (int k = 0; k < 20; ++k) {
        auto rg = gt::random_graph(rng, {.n_ops = 14, .n = 3, .with_scan = k % 3 == 0});
        Graph rg_g{rg.inputs, rg.outputs, {}};
        RuntimeOptions eager;
        eager.lazy = false;
        auto a = compile(rg_g);
        auto b = compile(rg_g, eager);
        auto in = rand_values(rng, rg.inputs);
        auto ra = a.call(std::span<const Tensor>(in));
        auto rb = b.call(std::span<const Tensor>(in));
        for (std::size_t i = 0; i < ra.size(); ++i) {
            o.require(bitwise_equal(ra[i], rb[i]), "eager/lazy mismatch on graph " + std::to_string(k));
        }
        ++eager_graphs;
    }
    o.detail << (o.pass ? "" : " | ") << checks
             << " executed if_else nodes ran exactly one branch (untaken side count 0); "
             << eager_graphs << " random graphs eager == lazy bitwise";
}

// ---- 7 ---------------------------------------------------------------------

void criterion_ladder(Outcome& o) {
    auto cfg = bench::default_config(bench::Model::logreg, 1);
    cfg.calls = 4000;
    cfg.warmup = 200;
    cfg.repetitions = 9;
    auto r = bench::run_bench(cfg);
    auto v = bench::ladder_violations(r, bench::kTieTolerance);
    for (const auto& s : v) o.require(false, s);
    o.require(r.wall_seconds < kBenchSeconds, "bench took " + std::to_string(r.wall_seconds) + " s");
    o.detail << (o.pass ? "" : " | ") << "logreg 784->10 batch 1, median of " << cfg.repetitions
             << " x " << cfg.calls
             << " calls, examples/s:";
    for (const auto& opt : r.options) o.detail << " " << opt.option << "=" << static_cast<long>(opt.throughput);
    o.detail << " (ties within " << bench::kTieTolerance * 100 << "%); " << r.wall_seconds << " s";
}

// ---- 8 ---------------------------------------------------------------------

void criterion_training(Outcome& o) {
    for (auto m : {bench::Model::logreg, bench::Model::mlp1, bench::Model::mlp3, bench::Model::rnn}) {
        const auto cfg = bench::default_config(m, m == bench::Model::rnn ? 1 : 10);
        auto losses = bench::train_losses(cfg, 200);
        const std::string name(bench::model_name(m));
        o.require(losses.back() < losses.front(), name + " loss did not decrease");
        o.detail << name << " " << fmt(losses.front()) << "->" << fmt(losses.back()) << ", ";

        auto a = bench::build_model(cfg, true);
        auto b = bench::build_model(cfg, true);
        auto fa = compile(a.train, {});
        auto fb = compile(b.train, {});
        fa.call_repeated(10);
        for (int i = 0; i < 10; ++i) fb.call({});
        for (std::size_t p = 0; p < a.params.size(); ++p) {
            o.require(bitwise_equal(a.params[p].shared_storage()->value, b.params[p].shared_storage()->value),
                      name + " call_repeated differs from sequential calls");
        }
    }
    o.detail << "call_repeated(10) bit-identical to 10 calls on all models";
}

// ---- 9 ---------------------------------------------------------------------

void criterion_dsl(Outcome& o) {
    const auto corpus = gt::read_corpus(GRAPHC_PROGRAMS_DIR, ".gx");
    o.require(!corpus.empty(), "no .gx programs found");
    std::size_t round_trips = 0;
    for (const auto& src : corpus) {
        auto a = dsl::parse(src);
        o.require(a.ok(), "corpus program does not parse");
        if (!a.ok()) continue;
        auto b = dsl::parse(dsl::print(a.program));
        const bool same = b.ok() && dsl::same_structure(a.program, b.program);
        o.require(same, "round trip changed a corpus program");
        round_trips += same;
    }
    std::vector<std::string> text;
#ifdef GRAPHC_EXAMPLES_DIR
    text = gt::read_corpus(GRAPHC_EXAMPLES_DIR, "", 200);
#endif
    gt::DslFuzzer fuzzer(corpus, std::move(text), 9);
    const auto s = fuzzer.run(kFuzzInputs, 16);
    o.require(s.inputs >= kFuzzInputs, "too few fuzz inputs");
    o.require(s.crashes == 0, std::to_string(s.crashes) + " crashes: " + s.first_failure);
    o.require(s.bad_spans == 0, std::to_string(s.bad_spans) + " invalid spans: " + s.first_failure);
    o.require(s.roundtrip_failures == 0,
              std::to_string(s.roundtrip_failures) + " fuzz round-trip failures: " + s.first_failure);
    o.detail << (o.pass ? "" : " | ") << s.inputs << " fuzz inputs (" << s.parsed_ok << " parsed, "
             << s.lowered << " lowered): 0 crashes, all spans valid; " << round_trips << "/"
             << corpus.size() << " corpus programs round-trip";
}

}  // namespace

int main() {
    struct Criterion {
        int id;
        const char* name;
        std::function<void(Outcome&)> run;
    };
    const std::vector<Criterion> criteria = {
        {1, "gradient correctness", criterion_gradients},
        {2, "adjoint identity", criterion_adjoint},
        {3, "Gauss-Newton product", criterion_gauss_newton},
        {4, "rewrite soundness", criterion_rewrites},
        {5, "scan equivalence", criterion_scan},
        {6, "laziness", criterion_laziness},
        {7, "runtime-option ladder", criterion_ladder},
        {8, "training sanity", criterion_training},
        {9, "DSL robustness", criterion_dsl},
    };
    int failures = 0;
    for (const auto& c : criteria) {
        Outcome o;
        try {
            c.run(o);
        } catch (const std::exception& e) {
            o.require(false, std::string("exception: ") + e.what());
        }
        failures += !o.pass;
        std::printf("%s %d %s: %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.str().c_str());
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
