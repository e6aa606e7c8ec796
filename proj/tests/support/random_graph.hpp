// Copyright 2026 The graphc Authors
// SPDX-License-Identifier: Apache-2.0
//
// Seeded random expression graphs over small vectors and square matrices,
// optionally containing loops. Every op used is smooth on the sampled
// domain so the graphs also serve derivative tests.

#pragma once

#include <random>
#include <string>
#include <vector>

#include "graphc/ops.hpp"
#include "graphc/scan.hpp"

namespace gt {

using namespace graphc;

struct RandomGraph {
    std::vector<Variable> inputs;
    std::vector<Variable> outputs;
};

struct RandomGraphOptions {
    int n_ops = 12;
    std::int64_t n = 3;
    bool with_scan = false;
    bool rewrite_triggers = true;  // sprinkle x-x, log(1+x), log(sigmoid x), ...
};

inline RandomGraph random_graph(std::mt19937_64& rng, const RandomGraphOptions& o = {}) {
    const auto n = o.n;
    RandomGraph rg;
    std::vector<Variable> vecs, mats;
    auto pick = [&](std::vector<Variable>& pool) {
        std::uniform_int_distribution<std::size_t> d(0, pool.size() - 1);
        return pool[d(rng)];
    };
    for (int i = 0; i < 2; ++i) {
        auto v = make_input(TensorType::vector(n), "v" + std::to_string(i));
        rg.inputs.push_back(v);
        vecs.push_back(v);
    }
    auto M = make_input(TensorType::matrix(n, n), "M");
    rg.inputs.push_back(M);
    mats.push_back(M);
    std::uniform_int_distribution<int> choice(0, o.rewrite_triggers ? 19 : 14);
    std::uniform_real_distribution<double> coef(0.25, 1.5);
    for (int k = 0; k < o.n_ops; ++k) {
        const int c = choice(rng);
        Variable a = pick(vecs);
        Variable b = pick(vecs);
        Variable A = pick(mats);
        switch (c) {
            case 0: vecs.push_back(tanh(a)); break;
            case 1: vecs.push_back(sigmoid(a) * b); break;
            case 2: vecs.push_back(a * b); break;
            case 3: vecs.push_back(a + b * coef(rng)); break;
            case 4: vecs.push_back(a - b); break;
            case 5: vecs.push_back(a / (sqr(b) + 1.0)); break;
            case 6: vecs.push_back(tanh(dot(A, a))); break;
            case 7: vecs.push_back(dot(a, A) * 0.5); break;
            case 8: mats.push_back(tanh(dot(A, pick(mats)))); break;
            case 9: mats.push_back(transpose(A) + A * coef(rng)); break;
            case 10: vecs.push_back(sum(A * A, 0) * 0.25 + a); break;
            case 11: vecs.push_back(softmax(a) + b); break;
            case 12: vecs.push_back(softplus(a) / coef(rng)); break;
            case 13: vecs.push_back(exp(tanh(a)) - 1.0); break;
            case 14: vecs.push_back(sum(a * b) * a); break;
            case 15: vecs.push_back(a - a + b); break;
            case 16: vecs.push_back(log(1.0 + sqr(a))); break;
            case 17: vecs.push_back(log(sigmoid(a))); break;
            case 18: vecs.push_back(neg(neg(a)) * 1.0 + 0.0); break;
            case 19: vecs.push_back(exp(log(sqr(a) + 0.5))); break;
        }
    }
    if (o.with_scan) {
        // h_t = tanh(A h_{t-1} * c + x_t) over the rows of a matrix.
        Variable X = pick(mats);
        Variable A = pick(mats);
        Variable h0 = pick(vecs);
        const double cc = coef(rng);
        auto r = scan(
            [cc](const StepInputs& in) {
                Variable h = tanh(dot(in.non_sequences[0], in.states[0][0]) * cc + in.sequences[0][0]);
                return StepResult{{h}, {sigmoid(h)}, std::nullopt};
            },
            ScanArgs{{{X}}, {{h0}}, {A}, std::nullopt, std::nullopt});
        vecs.push_back(take_row(r.states[0], -1) + pick(vecs));
        mats.push_back(r.collected[0]);
    }
    rg.outputs.push_back(vecs.back());
    rg.outputs.push_back(mats.back() * 1.0);
    return rg;
}

}  // namespace gt
