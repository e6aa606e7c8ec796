// Copyright 2026 The graphc Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cstdlib>
#include <random>

#include "graphc/autodiff.hpp"
#include "graphc/ops.hpp"
#include "graphc/vm.hpp"
#include "support/lazy_check.hpp"
#include "support/random_graph.hpp"
#include "support/testing.hpp"

using namespace graphc;

TEST_CASE("identity graph returns its input") {
    auto x = make_input(TensorType::vector(3), "x");
    auto f = compile(Graph{{x}, {x}, {}});
    auto out = f.call({Tensor::vector({1, 2, 3})});
    REQUIRE(out.size() == 1);
    CHECK(bitwise_equal(out[0], Tensor::vector({1, 2, 3})));
}

TEST_CASE("integer vector converts to f64 parameter") {
    auto x = make_input(TensorType::vector(3), "x");
    auto f = compile(Graph{{x}, {x * 2.0}, {}});
    auto out = f.call({Tensor::vector({1, 2, 3}, DType::i64)});
    CHECK(out[0].dtype() == DType::f64);
    CHECK(bitwise_equal(out[0], Tensor::vector({2, 4, 6})));
}

TEST_CASE("f64 input to i64 parameter is rejected") {
    auto k = make_input(TensorType::vector(2, DType::i64), "k");
    auto f = compile(Graph{{k}, {k + k}, {}});
    CHECK_THROWS_AS(f.call({Tensor::vector({1.0, 2.0})}), InputConversionError);
    // Shape mismatch is also rejected before execution.
    CHECK_THROWS_AS(f.call({Tensor::vector({1, 2, 3}, DType::i64)}), InputConversionError);
    // Arity.
    CHECK_THROWS_AS(f.call(std::span<const Tensor>{}), InputConversionError);
}

TEST_CASE("trust_input skips checks; mismatches become kernel errors") {
    auto x = make_input(TensorType::vector(3), "x");
    auto y = make_input(TensorType::vector(3), "y");
    Graph g{{x, y}, {tanh(x) * y + 1.0}, {}};
    RuntimeOptions trusted;
    trusted.trust_input = true;
    auto f = compile(g, trusted);
    auto checked = compile(g);
    std::mt19937_64 rng(3);
    for (int i = 0; i < 5; ++i) {
        Tensor a = gt::rand_tensor(rng, {3});
        Tensor b = gt::rand_tensor(rng, {3});
        CHECK(bitwise_equal(f.call({a, b})[0], checked.call({a, b})[0]));
    }
    CHECK_THROWS_AS(f.call({Tensor::vector({1, 2, 3}), Tensor::vector({1, 2, 3, 4})}), KernelError);
}

TEST_CASE("gc on and off give identical outputs") {
    std::mt19937_64 rng(11);
    for (int k = 0; k < 10; ++k) {
        auto rg = gt::random_graph(rng, {.n_ops = 10, .n = 3, .with_scan = k % 2 == 1});
        Graph g{rg.inputs, rg.outputs, {}};
        RuntimeOptions nogc;
        nogc.gc = false;
        auto a = compile(g);
        auto b = compile(g, nogc);
        for (int call = 0; call < 3; ++call) {
            std::vector<Tensor> in{gt::rand_tensor(rng, {3}), gt::rand_tensor(rng, {3}),
                                   gt::rand_tensor(rng, {3, 3})};
            auto ra = a.call(std::span<const Tensor>(in));
            auto rb = b.call(std::span<const Tensor>(in));
            for (std::size_t i = 0; i < ra.size(); ++i) CHECK(bitwise_equal(ra[i], rb[i]));
        }
        CHECK(a.buffered_elements() <= b.buffered_elements());
    }
}

TEST_CASE("nogc keeps intermediate buffers between calls") {
    auto x = make_input(TensorType::matrix(4, 4), "x");
    Graph g{{x}, {sum(tanh(dot(x, x)))}, {}};
    RuntimeOptions nogc;
    nogc.gc = false;
    auto a = compile(g, {}, OptLevel::none);
    auto b = compile(g, nogc, OptLevel::none);
    Tensor in = Tensor::full({4, 4}, 0.1);
    a.call({in});
    b.call({in});
    CHECK(a.buffered_elements() == 0);
    CHECK(b.buffered_elements() >= 16);
}

TEST_CASE("lazy if_else runs only the selected branch") {
    auto c = make_input(TensorType::scalar(), "c");
    auto x = make_input(TensorType::matrix(3, 3), "x");
    auto then_v = sum(tanh(dot(x, x)));
    auto else_v = sum(exp(dot(transpose(x), x)) * 3.0);
    Graph g{{c, x}, {if_else(c, then_v, else_v)}, {}};
    for (auto level : {OptLevel::none, OptLevel::standard}) {
        auto f = compile(g, {}, level);
        auto bps = gt::branch_producers(f.optimized_graph());
        REQUIRE(bps.size() == 1);
        REQUIRE(!bps[0].then_only.empty());
        REQUIRE(!bps[0].else_only.empty());
        Tensor xm = Tensor::full({3, 3}, 0.2);

        f.call({Tensor::scalar(1.0), xm});
        auto prof = f.profile();
        CHECK(gt::total_count(prof, bps[0].else_only) == 0);
        CHECK(gt::total_count(prof, bps[0].then_only) > 0);

        f.reset_profile();
        auto r = f.call({Tensor::scalar(0.0), xm});
        prof = f.profile();
        CHECK(gt::total_count(prof, bps[0].then_only) == 0);
        CHECK(gt::total_count(prof, bps[0].else_only) > 0);
        CHECK(r[0].item() == doctest::Approx(9 * 3 * std::exp(0.12)).epsilon(1e-12));
    }
}

TEST_CASE("nested if_else runs only the doubly selected branch") {
    auto c1 = make_input(TensorType::scalar(), "c1");
    auto c2 = make_input(TensorType::scalar(), "c2");
    auto x = make_input(TensorType::vector(4), "x");
    auto a = sum(tanh(x));
    auto b = sum(exp(x));
    auto d = sum(sqr(x) * 2.0);
    Graph g{{c1, c2, x}, {if_else(c1, if_else(c2, a, b), d)}, {}};
    auto f = compile(g, {}, OptLevel::none);
    auto bps = gt::branch_producers(f.optimized_graph());
    REQUIRE(bps.size() == 2);
    // Schedule indices of each leaf branch expression.
    const auto order = toposort(f.optimized_graph());
    auto index_of = [&](const Variable& v) {
        for (std::size_t i = 0; i < order.size(); ++i) {
            if (order[i] == v.owner()) return i;
        }
        return order.size();
    };
    const Tensor xv = Tensor::vector({0.1, 0.2, 0.3, 0.4});
    struct Case {
        double c1, c2;
        Variable expect;
    };
    for (const auto& cs : {Case{1, 1, a}, Case{1, 0, b}, Case{0, 1, d}, Case{0, 0, d}}) {
        f.reset_profile();
        f.call({Tensor::scalar(cs.c1), Tensor::scalar(cs.c2), xv});
        auto prof = f.profile();
        for (const auto& v : {a, b, d}) {
            CHECK((prof[index_of(v)].count > 0) == (v == cs.expect));
        }
    }
}

TEST_CASE("eager and lazy agree exactly on all-eager graphs") {
    std::mt19937_64 rng(5);
    for (int k = 0; k < 10; ++k) {
        auto rg = gt::random_graph(rng, {.n_ops = 14, .n = 3, .with_scan = k % 3 == 0});
        Graph g{rg.inputs, rg.outputs, {}};
        RuntimeOptions eager;
        eager.lazy = false;
        auto a = compile(g);
        auto b = compile(g, eager);
        std::vector<Tensor> in{gt::rand_tensor(rng, {3}), gt::rand_tensor(rng, {3}),
                               gt::rand_tensor(rng, {3, 3})};
        auto ra = a.call(std::span<const Tensor>(in));
        auto rb = b.call(std::span<const Tensor>(in));
        for (std::size_t i = 0; i < ra.size(); ++i) CHECK(bitwise_equal(ra[i], rb[i]));
    }
}

TEST_CASE("dead branch feeding nothing never runs") {
    auto x = make_input(TensorType::vector(3), "x");
    auto unused = exp(x) * 5.0;
    (void)unused;
    auto f = compile(Graph{{x}, {tanh(x)}, {}}, {}, OptLevel::none);
    f.call({Tensor::vector({1, 2, 3})});
    for (const auto& e : f.profile()) CHECK(e.op != "exp");
}

TEST_CASE("profile counts, naming and JSON round trip") {
    auto x = make_input(TensorType::vector(3), "x");
    auto f = compile(Graph{{x}, {sum(tanh(x) * x)}, {}}, {}, OptLevel::none);
    for (int i = 0; i < 4; ++i) f.call({Tensor::vector({1, 2, 3})});
    auto prof = f.profile();
    REQUIRE(prof.size() == f.num_instructions());
    std::uint64_t total = 0;
    for (std::size_t i = 0; i < prof.size(); ++i) {
        total += prof[i].count;
        CHECK(prof[i].node.rfind(std::to_string(i) + ":", 0) == 0);
    }
    CHECK(total == 4 * f.num_instructions());
    auto back = parse_profile_json(f.profile_json());
    REQUIRE(back.size() == prof.size());
    for (std::size_t i = 0; i < prof.size(); ++i) {
        CHECK(back[i].node == prof[i].node);
        CHECK(back[i].op == prof[i].op);
        CHECK(back[i].count == prof[i].count);
        CHECK(back[i].nanos == prof[i].nanos);
    }
    CHECK(f.profile_text().find("tanh") != std::string::npos);
}

TEST_CASE("updates read pre-update values") {
    auto a = make_shared(Tensor::scalar(1.0), "a");
    auto b = make_shared(Tensor::scalar(2.0), "b");
    auto f = compile(Graph{{}, {a + b}, {{a, b}, {b, a}}});
    auto out = f.call(std::span<const Tensor>{});
    CHECK(out[0].item() == 3.0);
    CHECK(a.shared_storage()->value.item() == 2.0);
    CHECK(b.shared_storage()->value.item() == 1.0);
    f.call(std::span<const Tensor>{});
    CHECK(a.shared_storage()->value.item() == 1.0);
    CHECK(b.shared_storage()->value.item() == 2.0);
}

namespace {

struct SgdProblem {
    Variable w, b;
    Graph graph;
};

// Logistic regression on a fixed separable toy set, all state shared.
SgdProblem toy_sgd(double lr) {
    auto X = make_constant(Tensor::matrix({{1, 2}, {2, 1}, {-1, -2}, {-2, -1}, {0.5, 1}, {-1, -0.5}}));
    auto t = make_constant(Tensor::vector({1, 1, 0, 0, 1, 0}));
    auto w = make_shared(Tensor::vector({0.0, 0.0}), "w");
    auto b = make_shared(Tensor::scalar(0.0), "b");
    auto p = sigmoid(dot(X, w) + b);
    auto loss = mean(-(t * log(p) + (1.0 - t) * log(1.0 - p)));
    std::vector<Variable> params{w, b};
    auto gs = grad(loss, params);
    return {w, b, Graph{{}, {loss}, {{w, w - lr * gs[0]}, {b, b - lr * gs[1]}}}};
}

}  // namespace

TEST_CASE("SGD training step decreases loss over 50 calls") {
    auto p = toy_sgd(0.1);
    auto f = compile(p.graph);
    double prev = f.call(std::span<const Tensor>{})[0].item();
    const double first = prev;
    for (int i = 1; i < 50; ++i) {
        double cur = f.call(std::span<const Tensor>{})[0].item();
        CHECK(cur < prev);
        prev = cur;
    }
    CHECK(prev < 0.5 * first);
}

TEST_CASE("call_repeated matches sequential calls exactly") {
    auto p1 = toy_sgd(0.1);
    auto p2 = toy_sgd(0.1);
    auto f1 = compile(p1.graph);
    auto f2 = compile(p2.graph);
    std::vector<Tensor> last;
    for (int i = 0; i < 10; ++i) last = f1.call(std::span<const Tensor>{});
    auto rep = f2.call_repeated(10);
    CHECK(bitwise_equal(last[0], rep[0]));
    CHECK(bitwise_equal(p1.w.shared_storage()->value, p2.w.shared_storage()->value));
    CHECK(bitwise_equal(p1.b.shared_storage()->value, p2.b.shared_storage()->value));

    // N=1 is one call.
    auto a = f1.call(std::span<const Tensor>{});
    auto b = f2.call_repeated(1);
    CHECK(bitwise_equal(a[0], b[0]));
    CHECK(bitwise_equal(p1.w.shared_storage()->value, p2.w.shared_storage()->value));

    CHECK_THROWS_AS(f2.call_repeated(0), std::invalid_argument);
    auto x = make_input(TensorType::scalar(), "x");
    auto g = compile(Graph{{x}, {x}, {}});
    CHECK_THROWS_AS(g.call_repeated(3), std::invalid_argument);
}

TEST_CASE("opt level none and default agree") {
    std::mt19937_64 rng(21);
    for (int k = 0; k < 10; ++k) {
        auto rg = gt::random_graph(rng, {.n_ops = 12, .n = 3, .with_scan = k % 2 == 0,
                                         .rewrite_triggers = false});
        Graph g{rg.inputs, rg.outputs, {}};
        auto a = compile(g, {}, OptLevel::none);
        auto b = compile(g, {}, OptLevel::standard);
        std::vector<Tensor> in{gt::rand_tensor(rng, {3}), gt::rand_tensor(rng, {3}),
                               gt::rand_tensor(rng, {3, 3})};
        auto ra = a.call(std::span<const Tensor>(in));
        auto rb = b.call(std::span<const Tensor>(in));
        for (std::size_t i = 0; i < ra.size(); ++i) CHECK(gt::max_rel_err(ra[i], rb[i]) <= 1e-12);
    }
}

TEST_CASE("GRAPHC_OPT_LEVEL selects the default level") {
    auto x = make_input(TensorType::vector(3), "x");
    Graph g{{x}, {x - x}, {}};
    ::setenv("GRAPHC_OPT_LEVEL", "none", 1);
    CHECK(env_opt_level() == OptLevel::none);
    {
        auto f = compile(g);
        CHECK(count_nodes_named(f.optimized_graph(), "sub") == 1);
    }
    ::setenv("GRAPHC_OPT_LEVEL", "bogus", 1);
    CHECK(!env_opt_level().has_value());
    ::unsetenv("GRAPHC_OPT_LEVEL");
    auto f = compile(g);
    CHECK(count_nodes_named(f.optimized_graph(), "sub") == 0);
    // An explicit level wins.
    ::setenv("GRAPHC_OPT_LEVEL", "default", 1);
    auto h = compile(g, {}, OptLevel::none);
    CHECK(count_nodes_named(h.optimized_graph(), "sub") == 1);
    ::unsetenv("GRAPHC_OPT_LEVEL");
}

TEST_CASE("invalid graphs are rejected at compile time") {
    auto w = make_shared(Tensor::vector({1.0, 2.0}), "w");
    auto x = make_input(TensorType::vector(3), "x");
    CHECK_THROWS_AS(compile(Graph{{}, {w}, {{w, x}}}), GraphError);
    // Output not computable from declared inputs.
    CHECK_THROWS_AS(compile(Graph{{}, {x * 2.0}, {}}), GraphError);
}

TEST_CASE("repeated calls are deterministic") {
    std::mt19937_64 rng(8);
    auto rg = gt::random_graph(rng, {.n_ops = 12, .n = 3, .with_scan = true});
    auto f = compile(Graph{rg.inputs, rg.outputs, {}});
    std::vector<Tensor> in{gt::rand_tensor(rng, {3}), gt::rand_tensor(rng, {3}),
                           gt::rand_tensor(rng, {3, 3})};
    auto first = f.call(std::span<const Tensor>(in));
    for (int i = 0; i < 5; ++i) {
        auto again = f.call(std::span<const Tensor>(in));
        for (std::size_t k = 0; k < first.size(); ++k) CHECK(bitwise_equal(first[k], again[k]));
    }
}
