// Copyright 2026 The graphc Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <random>

#include "graphc/autodiff.hpp"
#include "graphc/ops.hpp"
#include "graphc/scan.hpp"
#include "support/gv_oracle.hpp"
#include "support/op_cases.hpp"
#include "support/random_graph.hpp"
#include "support/testing.hpp"

using namespace graphc;
using VV = std::vector<Variable>;

TEST_CASE("grad of a product") {
    auto x = make_input(TensorType::scalar(), "x");
    auto y = make_input(TensorType::scalar(), "y");
    auto g = grad(x * y, VV{x, y});
    auto r = gt::eval({x, y}, g, {Tensor::scalar(3), Tensor::scalar(4)});
    CHECK(r[0].item() == 4.0);
    CHECK(r[1].item() == 3.0);
}

TEST_CASE("grad of sum(x - x) is zero and optimizes to constants") {
    auto x = make_input(TensorType::vector(3), "x");
    auto g = grad(sum(x - x), VV{x});
    Graph gg{{x}, g, {}};
    auto f = compile(gg);
    auto r = f.call({Tensor::vector({1, 2, 3})});
    CHECK(bitwise_equal(r[0], Tensor::zeros({3})));
    CHECK(count_nodes(f.optimized_graph()) == 0);
}

TEST_CASE("unrelated variables get zeros of their own type") {
    auto x = make_input(TensorType::vector(3), "x");
    auto u = make_input(TensorType::matrix(2, 2), "u");
    auto g = grad(sum(exp(x)), VV{x, u});
    CHECK(g[1].type() == u.type());
    auto r = gt::eval({x, u}, g, {Tensor::vector({0, 0, 0}), Tensor::zeros({2, 2})});
    CHECK(bitwise_equal(r[1], Tensor::zeros({2, 2})));
    CHECK(bitwise_equal(r[0], Tensor::full({3}, 1.0)));
}

TEST_CASE("grad errors") {
    auto x = make_input(TensorType::vector(3), "x");
    CHECK_THROWS_AS(grad(x * 2.0, VV{x}), GraphError);
    auto k = make_input(TensorType::scalar(DType::i64), "k");
    CHECK_THROWS_AS(grad(sum(x) * k, VV{k}), GraphError);
}

TEST_CASE("MLP loss gradient matches central differences") {
    std::mt19937_64 rng(12);
    auto X = make_input(TensorType::matrix(4, 5), "X");
    auto W1 = make_input(TensorType::matrix(5, 6), "W1");
    auto b1 = make_input(TensorType::vector(6), "b1");
    auto W2 = make_input(TensorType::matrix(6, 3), "W2");
    auto b2 = make_input(TensorType::vector(3), "b2");
    auto t = gt::int_targets({0, 2, 1, 2});
    auto h = tanh(dot(X, W1) + b1);
    auto p = softmax(dot(h, W2) + b2);
    auto loss = mean(crossentropy(p, t));
    VV params{W1, b1, W2, b2};
    auto gs = grad(loss, params);
    VV ins{X, W1, b1, W2, b2};
    std::vector<Tensor> vals;
    for (const auto& v : ins) vals.push_back(gt::rand_tensor(rng, v.type().dims));
    auto fg = compile(Graph{ins, gs, {}});
    auto fl = compile(Graph{ins, {loss}, {}}, {}, OptLevel::none);
    auto sym = fg.call(std::span<const Tensor>(vals));
    gt::ScalarFn fn = [&](const std::vector<Tensor>& v) {
        return fl.call(std::span<const Tensor>(v))[0].item();
    };
    for (std::size_t i = 0; i < params.size(); ++i) {
        CHECK(gt::max_rel_err(sym[i], gt::fd_grad(fn, vals, i + 1)) <= 1e-5);
    }
}

TEST_CASE("rop examples") {
    auto th = make_input(TensorType::vector(3), "th");
    auto gm = make_input(TensorType::vector(3), "gm");
    auto id = rop(VV{th}, VV{th}, VV{gm});
    Tensor gv = Tensor::vector({0.1, -2, 3});
    CHECK(bitwise_equal(gt::eval({th, gm}, id, {Tensor::vector({1, 2, 3}), gv})[0], gv));

    Tensor Wv = Tensor::matrix({{1, 2, 3}, {4, 5, 6}});
    auto W = make_constant(Wv);
    auto lin = rop(VV{dot(W, th)}, VV{th}, VV{gm});
    // Integer direction so every summation order is exact.
    auto r = gt::eval({th, gm}, lin, {Tensor::vector({1, 2, 3}), Tensor::vector({1, -2, 3})})[0];
    CHECK(bitwise_equal(r, Tensor::vector({1 - 4 + 9, 4 - 10 + 18})));
}

TEST_CASE("rop of a 2-layer tanh network matches central differences") {
    std::mt19937_64 rng(7);
    auto x = make_input(TensorType::vector(4), "x");
    auto W1 = make_input(TensorType::matrix(5, 4), "W1");
    auto W2 = make_input(TensorType::matrix(3, 5), "W2");
    gt::CaseData d;
    d.inputs = {x, W1, W2};
    d.out = tanh(dot(W2, tanh(dot(W1, x))));
    for (const auto& v : d.inputs) d.values.push_back(gt::rand_tensor(rng, v.type().dims));
    CHECK(gt::rop_check_error(d, rng) <= 1e-5);
}

TEST_CASE("lop examples") {
    std::mt19937_64 rng(2);
    auto x = make_input(TensorType::vector(3), "x");
    auto cost = sum(tanh(x) * x);
    auto g = grad(cost, VV{x});
    auto one = make_constant(Tensor::scalar(1.0));
    auto l = lop(VV{cost}, VV{x}, VV{one});
    Tensor xv = gt::rand_tensor(rng, {3});
    auto r = gt::eval({x}, {g[0], l[0]}, {xv});
    CHECK(bitwise_equal(r[0], r[1]));

    Tensor Wv = Tensor::matrix({{1, 2, 3}, {4, 5, 6}});
    auto W = make_constant(Wv);
    auto eta = make_input(TensorType::vector(2), "eta");
    auto wl = lop(VV{dot(W, x)}, VV{x}, VV{eta});
    auto rr = gt::eval({x, eta}, wl, {xv, Tensor::vector({1, -1})})[0];
    CHECK(bitwise_equal(rr, Tensor::vector({-3, -3, -3})));

    // Linear in the seed.
    auto two = make_constant(Tensor::scalar(2.0));
    auto l2 = lop(VV{cost}, VV{x}, VV{two});
    auto r2 = gt::eval({x}, {l[0], l2[0]}, {xv});
    for (std::size_t i = 0; i < 3; ++i) CHECK(gt::rel_err(r2[1][i], 2.0 * r2[0][i]) <= 1e-12);
}

TEST_CASE("gradients sum over paths") {
    auto x = make_input(TensorType::scalar(), "x");
    // d/dx [tanh(x) * exp(x)] = (1 - tanh^2) exp + tanh exp.
    auto cost = tanh(x) * exp(x);
    auto g = grad(cost, VV{x});
    const double xv = 0.3;
    const double expect = (1 - std::tanh(xv) * std::tanh(xv)) * std::exp(xv) + std::tanh(xv) * std::exp(xv);
    auto r = gt::eval1({x}, g[0], {Tensor::scalar(xv)});
    CHECK(gt::rel_err(r.item(), expect) <= 1e-14);
}

TEST_CASE("adjoint identity on random graphs with and without loops") {
    std::mt19937_64 rng(77);
    for (int k = 0; k < 30; ++k) {
        auto rg = gt::random_graph(rng, {.n_ops = 10, .n = 3, .with_scan = k % 2 == 0,
                                         .rewrite_triggers = false});
        std::vector<Tensor> vals{gt::rand_tensor(rng, {3}), gt::rand_tensor(rng, {3}),
                                 gt::rand_tensor(rng, {3, 3})};
        auto r = gt::adjoint_check(rg.inputs, rg.outputs, vals, rng);
        CHECK_MESSAGE(r.rel() <= 1e-10, k << ": " << r.lhs << " vs " << r.rhs);
    }
}

TEST_CASE("Gauss-Newton product of a linear map") {
    Tensor Wv = Tensor::matrix({{1, 2}, {3, 4}, {5, 6}});
    auto W = make_constant(Wv);
    auto th = make_input(TensorType::vector(2), "th");
    auto gm = make_input(TensorType::vector(2), "gm");
    auto gv = gauss_newton_vector_product(VV{dot(W, th)}, VV{th}, VV{gm});
    auto r = gt::eval({th, gm}, gv, {Tensor::vector({0.3, 0.7}), Tensor::vector({1, -1})})[0];
    // W^T W = [[35, 44], [44, 56]].
    CHECK(bitwise_equal(r, Tensor::vector({35 - 44, 44 - 56})));
    auto z = gt::eval({th, gm}, gv, {Tensor::vector({0.3, 0.7}), Tensor::zeros({2})})[0];
    CHECK(bitwise_equal(z, Tensor::zeros({2})));
}

TEST_CASE("Gauss-Newton product of an MLP equals explicit J^T J gamma") {
    std::mt19937_64 rng(31);
    auto x = make_constant(gt::rand_tensor(rng, {2, 3}));
    auto W1 = make_input(TensorType::matrix(3, 4), "W1");
    auto W2 = make_input(TensorType::matrix(4, 2), "W2");
    VV outs{softmax(dot(tanh(dot(x, W1)), W2))};
    VV wrt{W1, W2};
    std::vector<Tensor> vals{gt::rand_tensor(rng, {3, 4}), gt::rand_tensor(rng, {4, 2})};
    std::vector<Tensor> gam{gt::rand_tensor(rng, {3, 4}), gt::rand_tensor(rng, {4, 2})};
    auto J = gt::jacobian_by_rop(wrt, wrt, outs, vals);
    CHECK(J.cols == 20);
    auto expect = gt::explicit_gn_product(J, gam);

    VV gvars{make_input(W1.type(), "g1"), make_input(W2.type(), "g2")};
    auto gv = gauss_newton_vector_product(outs, wrt, gvars);
    VV ins{W1, W2, gvars[0], gvars[1]};
    std::vector<Tensor> all{vals[0], vals[1], gam[0], gam[1]};
    auto got = compile(Graph{ins, gv, {}}).call(std::span<const Tensor>(all));
    for (std::size_t i = 0; i < 2; ++i) CHECK(gt::max_rel_err(got[i], expect[i]) <= 1e-8);
}

TEST_CASE("Gauss-Newton product through a loop uses two loop passes") {
    std::mt19937_64 rng(5);
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
    auto gv = gauss_newton_vector_product(outs, wrt, VV{gW});
    auto f = compile(Graph{{W, gW}, gv, {}});
    CHECK(count_scans(f.optimized_graph()) <= 3);
    CHECK(count_scans(f.optimized_graph()) == 2);

    std::vector<Tensor> vals{gt::rand_tensor(rng, {n, n})};
    std::vector<Tensor> gam{gt::rand_tensor(rng, {n, n})};
    auto J = gt::jacobian_by_rop(wrt, wrt, outs, vals);
    auto expect = gt::explicit_gn_product(J, gam);
    auto got = f.call({vals[0], gam[0]});
    CHECK(gt::max_rel_err(got[0], expect[0]) <= 1e-8);
}
