// Copyright 2026 The graphc Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <map>

#include <json.hpp>

#include "graphc/ops/elemwise.hpp"
#include "graphc/rewrite.hpp"
#include "support/hp_oracle.hpp"
#include "support/random_graph.hpp"
#include "support/testing.hpp"

using namespace graphc;

namespace {

std::map<std::string, int> op_multiset(const Graph& g) {
    std::map<std::string, int> m;
    for (const auto& n : collect_nodes(g)) m[n->op().label()]++;
    return m;
}

double eval_scalar_graph(const Graph& g, double x) {
    auto f = compile(g, {}, OptLevel::none);
    return f.call({Tensor::scalar(x)})[0].item();
}

}  // namespace

TEST_CASE("rewrite: x - x becomes zeros and drops the producer of x") {
    auto a = make_input(TensorType::vector(4), "a");
    auto x = exp(a);
    Graph g{{a}, {x - x}, {}};
    auto [opt, rep] = optimize(g);
    CHECK(rep.count("x_minus_x") >= 1);
    CHECK(count_nodes_named(opt, "exp") == 0);
    CHECK(count_nodes_named(opt, "sub") == 0);
    auto out = gt::eval1({a}, opt.outputs[0], {Tensor::vector({1, 2, 3, 4})});
    CHECK(out == Tensor::zeros({4}));
}

TEST_CASE("rewrite: x - x with unknown extent keeps the runtime shape") {
    auto a = make_input(TensorType::vector(), "a");
    Graph g{{a}, {a - a}, {}};
    auto [opt, rep] = optimize(g);
    CHECK(rep.count("x_minus_x") == 1);
    auto out = gt::eval1({a}, opt.outputs[0], {Tensor::vector({1, 2, 3})});
    CHECK(out == Tensor::zeros({3}));
}

TEST_CASE("rewrite: log(1+x) becomes log1p and is accurate at 1e-18") {
    auto x = make_input(TensorType::scalar(), "x");
    for (const auto& expr : {log(1.0 + x), log(x + 1.0)}) {
        Graph g{{x}, {expr}, {}};
        auto [opt, rep] = optimize(g, {OptLevel::stabilize_only});
        CHECK(rep.count("log1p") == 1);
        const double ref = gt::hp::log1p_ref(1e-18);
        CHECK(eval_scalar_graph(g, 1e-18) == 0.0);
        CHECK(gt::hp::ulps(eval_scalar_graph(opt, 1e-18), ref) <= 1.0);
    }
}

TEST_CASE("rewrite: log1p sweep is never less accurate") {
    auto x = make_input(TensorType::scalar(), "x");
    Graph g{{x}, {log(1.0 + x)}, {}};
    auto opt = optimize(g).first;
    for (int k = 0; k <= 18; ++k) {
        for (double s : {1.0, -1.0}) {
            const double v = s * std::pow(10.0, -k);
            if (v == -1.0) continue;  // log(0)
            const double ref = gt::hp::log1p_ref(v);
            INFO("x=" << v);
            CHECK(gt::hp::abs_err(eval_scalar_graph(opt, v), ref) <=
                  gt::hp::abs_err(eval_scalar_graph(g, v), ref));
        }
    }
}

TEST_CASE("rewrite: log(sigmoid(x)) stays finite") {
    auto x = make_input(TensorType::scalar(), "x");
    Graph g{{x}, {log(sigmoid(x))}, {}};
    auto [opt, rep] = optimize(g, {OptLevel::stabilize_only});
    CHECK(rep.count("log_sigmoid") == 1);
    CHECK(std::isinf(eval_scalar_graph(g, -40.0)));
    CHECK(std::isfinite(eval_scalar_graph(opt, -40.0)));
    for (double v = -40.0; v <= 40.0; v += 0.5) {
        const double ref = gt::hp::log_sigmoid_ref(v);
        INFO("x=" << v);
        CHECK(gt::hp::abs_err(eval_scalar_graph(opt, v), ref) <=
              gt::hp::abs_err(eval_scalar_graph(g, v), ref));
    }
}

TEST_CASE("rewrite: exp(log(x)) only at default level and disableable") {
    auto x = make_input(TensorType::vector(3), "x");
    Graph g{{x}, {exp(log(x))}, {}};
    CHECK(optimize(g).second.count("exp_log") == 1);
    CHECK(optimize(g, {OptLevel::stabilize_only}).second.count("exp_log") == 0);
    OptimizeOptions off;
    off.disabled_rules = {"exp_log"};
    CHECK(optimize(g, off).second.count("exp_log") == 0);
}

TEST_CASE("rewrite: canonical forms") {
    auto x = make_input(TensorType::vector(3), "x");
    auto y = make_input(TensorType::vector(3), "y");
    auto fired = [&](const Variable& e, const char* rule) {
        Graph g{{x, y}, {e}, {}};
        return optimize(g, {OptLevel::stabilize_only}).second.count(rule);
    };
    CHECK(fired(x - y, "sub_to_add_neg") == 1);
    CHECK(fired(x / 4.0, "div_by_constant") == 1);
    CHECK(fired(x / 0.0, "div_by_constant") == 0);
    CHECK(fired(-(-x), "neg_neg") == 1);
    CHECK(fired(x + 0.0, "add_zero") == 1);
    CHECK(fired(1.0 * x, "mul_one") == 1);
    CHECK(fired(x * 0.0, "mul_zero") == 1);
    CHECK(fired(x + (-x), "add_neg_self") == 1);

    Graph g{{x, y}, {(x - y) / 4.0 + (-(-x)) * 1.0}, {}};
    auto opt = optimize(g).first;
    auto rep = check_semantics(g, opt, 5);
    CHECK(rep.ok);
    CHECK(rep.max_rel_deviation <= 1e-12);
}

TEST_CASE("rewrite: CSE leaves one sigmoid") {
    auto x = make_input(TensorType::vector(5), "x");
    Graph g{{x}, {sigmoid(x) * (1.0 - sigmoid(x))}, {}};
    CHECK(count_nodes_named(g, "sigmoid") == 2);
    std::size_t merged = 0;
    Graph c = cse(g, &merged);
    CHECK(merged >= 1);
    CHECK(count_nodes_named(c, "sigmoid") == 1);
    auto opt = optimize(g, {OptLevel::stabilize_only}).first;
    CHECK(count_nodes_named(opt, "sigmoid") == 1);
}

TEST_CASE("rewrite: exp(x)+exp(x) evaluates exp once per element") {
    auto x = make_input(TensorType::vector(7), "x");
    Graph g{{x}, {exp(x) + exp(x)}, {}};
    auto [opt, rep] = optimize(g);
    CHECK(count_nodes(opt) == 1);
    CHECK(count_nodes_named(opt, "composite") == 1);
    auto f = compile(g);
    scalar_eval_counters().reset();
    auto out = f.call({Tensor::vector({0, 1, 2, 3, 4, 5, 6})})[0];
    CHECK(scalar_eval_counters()[ScalarOpCode::exp] == 7);
    CHECK(out[1] == std::exp(1.0) + std::exp(1.0));
}

TEST_CASE("rewrite: constant folding") {
    auto x = make_input(TensorType::scalar(), "x");
    Graph g{{x}, {add(scalar_constant(2.0), scalar_constant(3.0))}, {}};
    std::size_t folded = 0;
    Graph f = constant_fold(g, 4096, &folded);
    CHECK(folded == 1);
    REQUIRE(f.outputs[0].origin() == Origin::constant);
    CHECK(f.outputs[0].constant_value().item() == 5.0);

    auto big = make_constant(Tensor::zeros({100, 100}));
    Graph h{{x}, {big + 1.0}, {}};
    CHECK(constant_fold(h, 4096).outputs[0].origin() == Origin::output);
    CHECK(constant_fold(h, 10000).outputs[0].origin() == Origin::constant);
}

TEST_CASE("rewrite: fusion is bit-exact and reduces kernel launches") {
    std::mt19937_64 rng(21);
    auto x = make_input(TensorType::matrix(4, 6), "x");
    auto b = make_input(TensorType::vector(6), "b");
    auto y = tanh(x * 2.0 + b);
    auto z = sigmoid(y) * y - sqr(x);
    Graph g{{x, b}, {z}, {}};
    std::size_t absorbed = 0;
    Graph fused = fuse_elementwise(g, &absorbed);
    CHECK(absorbed >= 2);
    CHECK(count_nodes(fused) < count_nodes(g));
    CHECK(count_nodes_named(fused, "composite") == 1);
    std::vector<Tensor> vals{gt::rand_tensor(rng, {4, 6}), gt::rand_tensor(rng, {6})};
    auto a = gt::eval({x, b}, g.outputs, vals)[0];
    auto c = compile(fused, {}, OptLevel::none).call(std::span<const Tensor>(vals))[0];
    CHECK(bitwise_equal(a, c));
}

TEST_CASE("rewrite: fusion keeps shared producers and roots") {
    auto x = make_input(TensorType::vector(3), "x");
    auto e = exp(x);
    Graph g{{x}, {e, tanh(e)}, {}};
    std::size_t absorbed = 0;
    fuse_elementwise(g, &absorbed);
    CHECK(absorbed == 0);
}

TEST_CASE("rewrite: level none is the identity") {
    std::mt19937_64 rng(4);
    auto rg = gt::random_graph(rng);
    Graph g{rg.inputs, rg.outputs, {}};
    auto [opt, rep] = optimize(g, {OptLevel::none});
    CHECK(structurally_equal(g, opt));
    auto sem = check_semantics(g, opt, 3);
    CHECK(sem.max_rel_deviation == 0.0);
}

TEST_CASE("rewrite: random graphs keep their values") {
    std::mt19937_64 rng(99);
    for (int i = 0; i < 40; ++i) {
        gt::RandomGraphOptions o;
        o.with_scan = i % 3 == 0;
        auto rg = gt::random_graph(rng, o);
        Graph g{rg.inputs, rg.outputs, {}};
        auto [opt, rep] = optimize(g);
        CHECK(validate(opt).empty());
        auto sem = check_semantics(gt::stabilized_reference(g), opt, 3, 1e-12,
                                   static_cast<std::uint64_t>(i));
        INFO("graph " << i << ": " << (sem.failures.empty() ? "" : sem.failures[0]));
        CHECK(sem.ok);
        CHECK(count_nodes(opt) <= count_nodes(g));
    }
}

TEST_CASE("rewrite: optimize is idempotent") {
    std::mt19937_64 rng(17);
    for (int i = 0; i < 20; ++i) {
        gt::RandomGraphOptions o;
        o.with_scan = i % 2 == 0;
        auto rg = gt::random_graph(rng, o);
        Graph g{rg.inputs, rg.outputs, {}};
        auto once = optimize(g).first;
        auto twice = optimize(once).first;
        INFO("graph " << i);
        CHECK(op_multiset(once) == op_multiset(twice));
    }
}

TEST_CASE("rewrite: iteration cap yields a warning, not an error") {
    auto x = make_input(TensorType::vector(3), "x");
    Graph g{{x}, {(x - x) + log(1.0 + x)}, {}};
    OptimizeOptions o;
    o.max_iterations = 1;
    auto [opt, rep] = optimize(g, o);
    CHECK_FALSE(rep.warnings.empty());
    CHECK(validate(opt).empty());
}

TEST_CASE("rewrite: report serializes to text and JSON") {
    auto x = make_input(TensorType::vector(3), "x");
    Graph g{{x}, {log(1.0 + x) + (x - x)}, {}};
    auto [opt, rep] = optimize(g);
    auto j = nlohmann::json::parse(rep.to_json());
    CHECK(j["level"] == "default");
    CHECK(j["nodes_before"].get<std::size_t>() == count_nodes(g));
    CHECK(j["nodes_after"].get<std::size_t>() == count_nodes(opt));
    bool saw_log1p = false;
    for (const auto& r : j["rules"]) {
        CHECK(r.contains("nodes_before"));
        CHECK(r.contains("micros"));
        CHECK(r["count"].get<int>() >= 1);
        saw_log1p |= r["rule"] == "log1p";
    }
    CHECK(saw_log1p);
    CHECK(rep.to_text().find("log1p") != std::string::npos);
}

TEST_CASE("rewrite: opt level names") {
    CHECK(parse_opt_level("default") == OptLevel::standard);
    CHECK(parse_opt_level("stabilize_only") == OptLevel::stabilize_only);
    CHECK(parse_opt_level("none") == OptLevel::none);
    CHECK_FALSE(parse_opt_level("fast").has_value());
    CHECK(opt_level_name(OptLevel::standard) == "default");
}

TEST_CASE("rewrite: export_dot reflects x - x removal") {
    auto x = make_input(TensorType::vector(3), "x");
    Graph g{{x}, {x - x}, {}};
    auto opt = optimize(g).first;
    auto count = [](const std::string& dot, const std::string& what) {
        std::size_t n = 0;
        for (auto p = dot.find(what); p != std::string::npos; p = dot.find(what, p + 1)) ++n;
        return n;
    };
    CHECK(count(export_dot(g), "label=\"sub") == 1);
    CHECK(count(export_dot(opt), "label=\"sub") == 0);
}
