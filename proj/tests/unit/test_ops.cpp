// Copyright 2026 The graphc Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "graphc/ops.hpp"
#include "graphc/ops/elemwise.hpp"
#include "graphc/rewrite.hpp"
#include "support/op_cases.hpp"
#include "support/testing.hpp"

using namespace graphc;

TEST_CASE("catalog contains the required ops") {
    auto names = op_set();
    std::set<std::string> have(names.begin(), names.end());
    for (const char* n : {"add", "sub", "mul", "div", "neg", "exp", "log", "log1p", "sigmoid",
                          "softplus", "tanh", "sqr", "pow", "maximum", "sum", "max", "dot",
                          "transpose", "reshape", "argmax", "softmax", "crossentropy", "if_else",
                          "composite", "scan"}) {
        CHECK_MESSAGE(have.count(n), n);
    }
}

TEST_CASE("kernel examples") {
    auto x = make_input(TensorType::scalar(), "x");
    CHECK(gt::eval1({x}, sigmoid(x), {Tensor::scalar(0.0)}).item() == 0.5);
    CHECK(gt::eval1({x}, log1p(x), {Tensor::scalar(0.0)}).item() == 0.0);

    auto A = make_input(TensorType::matrix(2, 2), "A");
    auto v = make_input(TensorType::vector(2), "v");
    auto r = gt::eval1({A, v}, dot(A, v), {Tensor::matrix({{1, 2}, {3, 4}}), Tensor::vector({1, 1})});
    CHECK(bitwise_equal(r, Tensor::vector({3, 7})));

    auto a = make_input(TensorType::vector(2), "a");
    auto b = make_input(TensorType::vector(2), "b");
    CHECK(bitwise_equal(gt::eval1({a, b}, a + b, {Tensor::vector({1, 2}), Tensor::vector({3, 4})}),
                        Tensor::vector({4, 6})));

    auto s = make_input(TensorType::vector(3), "s");
    auto sm = gt::eval1({s}, softmax(s), {Tensor::vector({0, 0, 0})});
    for (std::size_t i = 0; i < 3; ++i) CHECK(sm[i] == doctest::Approx(1.0 / 3.0).epsilon(1e-15));

    // -log p[target] against a scalar formula.
    auto p = make_input(TensorType::matrix(2, 2), "p");
    auto t = make_input(TensorType::vector(2, DType::i64), "t");
    auto ce = gt::eval1({p, t}, crossentropy(p, t),
                        {Tensor::matrix({{0.25, 0.75}, {0.25, 0.75}}),
                         Tensor(DType::i64, {2}, {1, 0})});
    CHECK(ce[0] == doctest::Approx(-std::log(0.75)).epsilon(1e-15));
    CHECK(ce[1] == doctest::Approx(-std::log(0.25)).epsilon(1e-15));

    auto M = make_input(TensorType::matrix(2, 3), "M");
    auto am = gt::eval1({M}, argmax(M, 1), {Tensor::matrix({{1, 5, 2}, {7, 0, 3}})});
    CHECK(am.dtype() == DType::i64);
    CHECK(bitwise_equal(am, Tensor(DType::i64, {2}, {1, 0})));
    auto mx = gt::eval1({M}, max(M, 0), {Tensor::matrix({{1, 5, 2}, {7, 0, 3}})});
    CHECK(bitwise_equal(mx, Tensor::vector({7, 5, 3})));
}

TEST_CASE("type inference") {
    auto x = make_input(TensorType::vector(), "x");
    auto y = make_input(TensorType::vector(), "y");
    CHECK((x + y).type() == TensorType::vector());

    auto A = make_input(TensorType::matrix(3, 4), "A");
    auto B = make_input(TensorType::matrix(5, 2), "B");
    try {
        (void)dot(A, B);
        FAIL("expected TypeError");
    } catch (const TypeError& e) {
        CHECK(e.op() == "dot");
        CHECK(std::string(e.what()).find("inner dimension mismatch") != std::string::npos);
    }
    CHECK(sum(A, 0).type() == TensorType::vector(4));
    CHECK(sum(A, 1, true).type() == TensorType::matrix(3, 1));

    auto u = make_input(TensorType::vector(3), "u");
    auto w = make_input(TensorType::vector(4), "w");
    try {
        (void)(u + w);
        FAIL("expected TypeError");
    } catch (const TypeError& e) {
        CHECK(e.op() == "add");
        CHECK(e.input_index() == 1);
    }
    auto k = make_input(TensorType::scalar(DType::i64), "k");
    CHECK_THROWS_AS(if_else(k, u, w), TypeError);
    CHECK((u * k).type().dtype == DType::f64);
}

TEST_CASE("runtime shape mismatch with unknown extents") {
    auto x = make_input(TensorType::vector(), "x");
    auto y = make_input(TensorType::vector(), "y");
    auto f = compile(Graph{{x, y}, {x + y}, {}});
    CHECK_THROWS_AS(f.call({Tensor::vector({1, 2}), Tensor::vector({1, 2, 3})}), KernelError);
}

TEST_CASE("softmax rows sum to one and crossentropy is non-negative") {
    std::mt19937_64 rng(4);
    auto X = make_input(TensorType::matrix(), "X");
    auto t = make_input(TensorType::vector(kUnknownDim, DType::i64), "t");
    auto sm = softmax(X);
    auto f = compile(Graph{{X, t}, {sm, crossentropy(sm, t)}, {}});
    for (int k = 0; k < 20; ++k) {
        const std::int64_t rows = 1 + k % 5, cols = 2 + k % 7;
        Tensor xv = gt::rand_tensor(rng, {rows, cols}, -30.0, 30.0);
        Tensor tv(DType::i64, {rows}, std::vector<double>(rows, 0.0));
        for (std::int64_t r = 0; r < rows; ++r) tv[r] = static_cast<double>((r * 7 + k) % cols);
        auto out = f.call({xv, tv});
        for (std::int64_t r = 0; r < rows; ++r) {
            double s = 0.0;
            for (std::int64_t c = 0; c < cols; ++c) s += out[0][r * cols + c];
            CHECK(std::abs(s - 1.0) <= 1e-12);
            CHECK(out[1][r] >= 0.0);
        }
    }
}

TEST_CASE("reverse-mode gradient of every op matches central differences") {
    std::mt19937_64 rng(100);
    for (const auto& oc : gt::op_cases()) {
        for (int trial = 0; trial < 3; ++trial) {
            auto d = gt::instantiate(oc, rng);
            const double err = gt::grad_check_error(d, rng);
            CHECK_MESSAGE(err <= 1e-5, oc.name << " rel err " << err);
        }
    }
}

TEST_CASE("R-op of every op matches central differences") {
    std::mt19937_64 rng(200);
    for (const auto& oc : gt::op_cases()) {
        if (!oc.has_rop) continue;
        auto d = gt::instantiate(oc, rng);
        const double err = gt::rop_check_error(d, rng);
        CHECK_MESSAGE(err <= 1e-5, oc.name << " rel err " << err);
    }
}

TEST_CASE("adjoint identity per op") {
    std::mt19937_64 rng(300);
    for (const auto& oc : gt::op_cases()) {
        if (!oc.has_rop) continue;
        for (int trial = 0; trial < 3; ++trial) {
            auto d = gt::instantiate(oc, rng);
            auto r = gt::adjoint_check(d.inputs, {d.out}, d.values, rng);
            CHECK_MESSAGE(r.rel() <= 1e-10, oc.name << " " << r.lhs << " vs " << r.rhs);
        }
    }
}

TEST_CASE("grad rule examples") {
    auto x = make_input(TensorType::scalar(), "x");
    auto gx = grad(sigmoid(x), std::vector<Variable>{x});
    CHECK(gt::eval1({x}, gx[0], {Tensor::scalar(0.0)}).item() == 0.25);

    // add passes the seed through, summed over broadcast axes.
    auto a = make_input(TensorType::matrix(2, 3), "a");
    auto b = make_input(TensorType::vector(3), "b");
    auto g = grad(sum(a + b), std::vector<Variable>{a, b});
    auto r = gt::eval({a, b}, g, {Tensor::zeros({2, 3}), Tensor::zeros({3})});
    CHECK(bitwise_equal(r[0], Tensor::full({2, 3}, 1.0)));
    CHECK(bitwise_equal(r[1], Tensor::full({3}, 2.0)));
}

TEST_CASE("rop rule examples") {
    auto x = make_input(TensorType::vector(3), "x");
    auto y = make_input(TensorType::vector(3), "y");
    auto dx = make_input(TensorType::vector(3), "dx");
    auto dy = make_input(TensorType::vector(3), "dy");
    std::vector<Variable> f{x + y, x * y};
    std::vector<Variable> wrt{x, y}, gam{dx, dy};
    auto jv = rop(f, wrt, gam);
    Tensor xv = Tensor::vector({1, 2, 3}), yv = Tensor::vector({-1, 0.5, 4});
    Tensor dxv = Tensor::vector({0.1, 0.2, 0.3}), dyv = Tensor::vector({1, -2, 0.5});
    auto r = gt::eval({x, y, dx, dy}, jv, {xv, yv, dxv, dyv});
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(r[0][i] == dxv[i] + dyv[i]);
        CHECK(r[1][i] == doctest::Approx(xv[i] * dyv[i] + yv[i] * dxv[i]).epsilon(1e-15));
    }
}

TEST_CASE("ops without rules report explicit errors") {
    auto p = make_input(TensorType::matrix(2, 3), "p");
    auto t = gt::int_targets({0, 1});
    auto g = make_input(TensorType::vector(2), "g");
    auto cg = crossentropy_grad(g, p, t);
    try {
        (void)grad(sum(cg), std::vector<Variable>{p});
        FAIL("expected NonDifferentiableError");
    } catch (const NonDifferentiableError& e) {
        CHECK(std::string(e.what()).find("crossentropy_grad") != std::string::npos);
    }
    auto dp = make_input(TensorType::matrix(2, 3), "dp");
    std::vector<Variable> f{crossentropy(p, t)}, wrt{p}, gam{dp};
    CHECK_THROWS_AS(rop(f, wrt, gam), RopUnsupportedError);
    std::vector<Variable> f2{argmax(p, 1) * 1.0};
    CHECK_THROWS_AS(rop(f2, wrt, gam), RopUnsupportedError);
}

namespace {

double ulp_distance(double a, double b) {
    if (a == b) return 0.0;
    const double ulp = std::nextafter(std::abs(b), INFINITY) - std::abs(b);
    return std::abs(a - b) / ulp;
}

}  // namespace

TEST_CASE("composite kernels match the unfused ops within 4 ulp") {
    std::mt19937_64 rng(9);
    auto x = make_input(TensorType::matrix(4, 5), "x");
    auto y = make_input(TensorType::matrix(4, 5), "y");
    auto z = make_input(TensorType::vector(5), "z");
    std::vector<Variable> exprs{
        tanh(x * y + 1.0) - exp(-sqr(x)),
        sigmoid(x) * softplus(y) / (1.0 + sqr(z)),
        maximum(x, y) * minimum(x, z) + pow(sqr(x) + 0.5, 1.5),
        log1p(sqr(x)) - log(sqr(y) + 2.0) + sqrt(sqr(z) + 1.0),
    };
    for (const auto& e : exprs) {
        Graph g{{x, y, z}, {e}, {}};
        std::size_t fused = 0;
        Graph f = fuse_elementwise(g, &fused);
        CHECK(fused >= 1);
        // Subexpressions of the broadcast vector z fuse separately.
        CHECK(count_nodes_named(f, "composite") >= 1);
        CHECK(count_nodes(f) == count_nodes_named(f, "composite"));
        CHECK(count_nodes(f) < count_nodes(g));
        auto a = compile(g, {}, OptLevel::none);
        auto b = compile(f, {}, OptLevel::none);
        std::vector<Tensor> in{gt::rand_tensor(rng, {4, 5}), gt::rand_tensor(rng, {4, 5}),
                               gt::rand_tensor(rng, {5})};
        auto ra = a.call(std::span<const Tensor>(in))[0];
        auto rb = b.call(std::span<const Tensor>(in))[0];
        double worst = 0.0;
        for (std::size_t i = 0; i < ra.size(); ++i) worst = std::max(worst, ulp_distance(rb[i], ra[i]));
        CHECK(worst <= 4.0);
    }
}

TEST_CASE("pow with a constant exponent") {
    auto x = make_input(TensorType::vector(3), "x");
    auto r = gt::eval1({x}, pow(x, 3.0), {Tensor::vector({1, 2, 3})});
    CHECK(bitwise_equal(r, Tensor::vector({1, 8, 27})));
}

TEST_CASE("row ops") {
    auto M = make_input(TensorType::matrix(3, 2), "M");
    auto Mv = Tensor::matrix({{1, 2}, {3, 4}, {5, 6}});
    CHECK(bitwise_equal(gt::eval1({M}, take_row(M, -1), {Mv}), Tensor::vector({5, 6})));
    CHECK(bitwise_equal(gt::eval1({M}, take_row(M, 0), {Mv}), Tensor::vector({1, 2})));
    auto c = gt::eval1({M}, concat_rows(M, M), {Mv});
    CHECK(c.shape() == Shape{6, 2});
    auto like = make_constant(Tensor::zeros({2, 2}));
    CHECK(bitwise_equal(gt::eval1({M}, rows_like(M, like, 0, true), {Mv}),
                        Tensor::matrix({{3, 4}, {5, 6}})));
    auto big = make_constant(Tensor::zeros({5, 2}));
    CHECK(bitwise_equal(gt::eval1({M}, pad_rows(M, big, 1), {Mv}),
                        Tensor::matrix({{0, 0}, {1, 2}, {3, 4}, {5, 6}, {0, 0}})));
    auto s = gt::eval1({M}, stack_rows({take_row(M, 0), take_row(M, 2)}), {Mv});
    CHECK(bitwise_equal(s, Tensor::matrix({{1, 2}, {5, 6}})));
}
