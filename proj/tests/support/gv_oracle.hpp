// Copyright 2026 The graphc Authors
// SPDX-License-Identifier: Apache-2.0
//
// Explicit J^T J gamma: the Jacobian is assembled column by column from
// forward-mode products on basis vectors, then multiplied out in plain C++.

#pragma once

#include <vector>

#include "graphc/autodiff.hpp"
#include "graphc/vm.hpp"
#include "support/testing.hpp"

namespace gt {

using namespace graphc;

struct DenseJacobian {
    std::size_t rows = 0, cols = 0;
    std::vector<double> data;  // row-major, rows = all output elements
    double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

/// Jacobian of `outs` w.r.t. `wrt` at `values`; `values` binds `inputs`,
/// which must contain every `wrt` entry.
inline DenseJacobian jacobian_by_rop(const std::vector<Variable>& inputs,
                                     const std::vector<Variable>& wrt,
                                     const std::vector<Variable>& outs,
                                     const std::vector<Tensor>& values) {
    std::vector<Variable> gam;
    for (const auto& w : wrt) gam.push_back(make_input(w.type(), "basis_" + w.display_name()));
    auto jv = rop(outs, wrt, gam);
    std::vector<Variable> all_in = inputs;
    all_in.insert(all_in.end(), gam.begin(), gam.end());
    auto f = compile(Graph{all_in, jv, {}}, {}, OptLevel::none);

    std::vector<Tensor> wrt_vals;
    for (const auto& w : wrt) {
        for (std::size_t i = 0; i < inputs.size(); ++i) {
            if (inputs[i] == w) wrt_vals.push_back(values[i]);
        }
    }
    std::vector<Tensor> basis;
    for (const auto& t : wrt_vals) basis.push_back(Tensor::zeros(t.shape()));

    DenseJacobian J;
    for (const auto& t : wrt_vals) J.cols += t.size();
    std::vector<std::vector<double>> columns;
    for (std::size_t k = 0; k < wrt_vals.size(); ++k) {
        for (std::size_t e = 0; e < wrt_vals[k].size(); ++e) {
            basis[k][e] = 1.0;
            std::vector<Tensor> call_vals = values;
            call_vals.insert(call_vals.end(), basis.begin(), basis.end());
            auto r = f.call(std::span<const Tensor>(call_vals));
            basis[k][e] = 0.0;
            std::vector<double> col;
            for (const auto& o : r) col.insert(col.end(), o.data().begin(), o.data().end());
            columns.push_back(std::move(col));
        }
    }
    J.rows = columns.empty() ? 0 : columns[0].size();
    J.data.assign(J.rows * J.cols, 0.0);
    for (std::size_t c = 0; c < J.cols; ++c) {
        for (std::size_t r = 0; r < J.rows; ++r) J.data[r * J.cols + c] = columns[c][r];
    }
    return J;
}

/// J^T (J gamma), split back into one tensor per wrt entry.
inline std::vector<Tensor> explicit_gn_product(const DenseJacobian& J,
                                               const std::vector<Tensor>& gamma) {
    std::vector<double> g;
    for (const auto& t : gamma) g.insert(g.end(), t.data().begin(), t.data().end());
    std::vector<double> jg(J.rows, 0.0);
    for (std::size_t r = 0; r < J.rows; ++r) {
        for (std::size_t c = 0; c < J.cols; ++c) jg[r] += J.at(r, c) * g[c];
    }
    std::vector<double> out(J.cols, 0.0);
    for (std::size_t c = 0; c < J.cols; ++c) {
        for (std::size_t r = 0; r < J.rows; ++r) out[c] += J.at(r, c) * jg[r];
    }
    std::vector<Tensor> split;
    std::size_t off = 0;
    for (const auto& t : gamma) {
        Tensor s = Tensor::zeros(t.shape());
        for (std::size_t i = 0; i < s.size(); ++i) s[i] = out[off + i];
        off += s.size();
        split.push_back(std::move(s));
    }
    return split;
}

}  // namespace gt
