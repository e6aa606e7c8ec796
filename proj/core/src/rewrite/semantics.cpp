// Copyright 2026 The graphc Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <memory>
#include <random>
#include <sstream>

#include "graphc/program.hpp"
#include "graphc/rewrite.hpp"

namespace graphc {

namespace {

std::vector<Tensor> evaluate(const Graph& g, const std::vector<Tensor>& inputs) {
    auto roots = g.roots();
    auto program = std::make_shared<const Program>(g.inputs, roots);
    Frame frame(program);
    for (std::size_t i = 0; i < inputs.size(); ++i) frame.bind(program->input_cells()[i], &inputs[i]);
    frame.run(program->output_cells(), ExecOptions{false, false}, true);
    std::vector<Tensor> out;
    for (int c : program->output_cells()) out.push_back(*frame.value(c));
    return out;
}

double deviation(double a, double b) {
    if (std::isnan(a) && std::isnan(b)) return 0.0;
    if (a == b) return 0.0;
    if (std::isnan(a) || std::isnan(b) || std::isinf(a) || std::isinf(b)) {
        return std::numeric_limits<double>::infinity();
    }
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-8});
}

}  // namespace

SemanticsReport check_semantics(const Graph& before, const Graph& after, int trials,
                                double tolerance, std::uint64_t seed) {
    SemanticsReport rep;
    if (before.inputs.size() != after.inputs.size() ||
        before.outputs.size() != after.outputs.size() ||
        before.updates.size() != after.updates.size()) {
        rep.ok = false;
        rep.failures.push_back("signature mismatch");
        return rep;
    }
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> real(0.1, 2.0);
    std::uniform_int_distribution<int> bit(0, 1);
    std::uniform_int_distribution<std::int64_t> extent(2, 5);
    for (int t = 0; t < trials; ++t) {
        const std::int64_t n = extent(rng);
        std::vector<Tensor> inputs;
        for (const auto& in : before.inputs) {
            const auto& type = in.type();
            Shape shape;
            for (auto d : type.dims) shape.push_back(d == kUnknownDim ? n : d);
            Tensor v = Tensor::zeros(shape, type.dtype);
            for (auto& x : v.data()) {
                if (type.dtype == DType::i64) x = type.is_scalar() ? 1.0 : bit(rng);
                else x = real(rng);
            }
            v.round_to_dtype();
            inputs.push_back(std::move(v));
        }
        std::vector<Tensor> a, b;
        std::string err_a, err_b;
        try {
            a = evaluate(before, inputs);
        } catch (const std::exception& e) {
            err_a = e.what();
        }
        try {
            b = evaluate(after, inputs);
        } catch (const std::exception& e) {
            err_b = e.what();
        }
        ++rep.trials;
        if (!err_a.empty() && !err_b.empty()) continue;
        if (err_a.empty() != err_b.empty()) {
            rep.ok = false;
            rep.failures.push_back("trial " + std::to_string(t) + ": only one graph failed: " +
                                   (err_a.empty() ? err_b : err_a));
            continue;
        }
        for (std::size_t k = 0; k < a.size(); ++k) {
            if (a[k].shape() != b[k].shape()) {
                rep.ok = false;
                rep.failures.push_back("trial " + std::to_string(t) + " root " + std::to_string(k) +
                                       ": shape " + shape_to_string(a[k].shape()) + " vs " +
                                       shape_to_string(b[k].shape()));
                continue;
            }
            double worst = 0.0;
            for (std::size_t i = 0; i < a[k].size(); ++i) worst = std::max(worst, deviation(a[k][i], b[k][i]));
            rep.max_rel_deviation = std::max(rep.max_rel_deviation, worst);
            if (worst > tolerance) {
                rep.ok = false;
                std::ostringstream os;
                os << "trial " << t << " root " << k << ": deviation " << worst;
                rep.failures.push_back(os.str());
            }
        }
    }
    return rep;
}

}  // namespace graphc
