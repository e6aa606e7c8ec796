// Copyright 2026 The graphc Authors
// SPDX-License-Identifier: Apache-2.0

#include "graphc/autodiff.hpp"

#include <unordered_map>

#include "graphc/ops.hpp"

namespace graphc {

namespace {

Variable sum_all(const std::vector<Variable>& parts) {
    Variable acc = parts[0];
    for (std::size_t i = 1; i < parts.size(); ++i) acc = add(acc, parts[i]);
    return acc;
}

void check_same_type(const char* what, const Variable& v, const Variable& ref, std::size_t i) {
    const auto& a = v.type();
    const auto& b = ref.type();
    bool ok = a.dtype == b.dtype && a.rank() == b.rank();
    for (std::size_t d = 0; ok && d < a.rank(); ++d) {
        ok = a.dims[d] == b.dims[d] || a.dims[d] == kUnknownDim || b.dims[d] == kUnknownDim;
    }
    if (!ok) {
        throw GraphError(std::string(what) + " " + std::to_string(i) + " has type " +
                         a.to_string() + ", expected " + b.to_string());
    }
}

// Index of one wrt variable each variable depends on, for every variable
// on a path from `wrt` to the roots.
std::unordered_map<VarId, std::size_t> reachability(const std::vector<NodePtr>& order,
                                                    std::span<const Variable> wrt) {
    std::unordered_map<VarId, std::size_t> reach;
    for (std::size_t k = 0; k < wrt.size(); ++k) reach.emplace(wrt[k].id(), k);
    for (const auto& node : order) {
        for (const auto& in : node->inputs()) {
            auto it = reach.find(in.id());
            if (it == reach.end()) continue;
            const std::size_t k = it->second;
            for (std::size_t o = 0; o < node->num_outputs(); ++o) {
                reach.emplace(node->output_id(o), k);
            }
            break;
        }
    }
    return reach;
}

}  // namespace

Variable fit_to_type(const Variable& v, const TensorType& type) {
    if (v.type() == type) return v;
    return sum_to(v, type);
}

std::vector<OptVar> lop_partial(std::span<const Variable> f, std::span<const Variable> wrt,
                                std::span<const OptVar> eta) {
    if (eta.size() != f.size()) throw GraphError("lop: expected one covector per output");
    const auto order = toposort(f);
    const auto reach = reachability(order, wrt);
    std::unordered_map<VarId, std::vector<Variable>> contrib;
    for (std::size_t j = 0; j < f.size(); ++j) {
        if (!eta[j] || !reach.count(f[j].id())) continue;
        contrib[f[j].id()].push_back(fit_to_type(*eta[j], f[j].type()));
    }
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        const auto& node = *it;
        if (!reach.count(node->output_id(0))) continue;
        std::vector<OptVar> og(node->num_outputs());
        bool any = false;
        for (std::size_t o = 0; o < node->num_outputs(); ++o) {
            auto c = contrib.find(node->output_id(o));
            if (c != contrib.end() && !c->second.empty()) {
                og[o] = sum_all(c->second);
                any = true;
            }
        }
        if (!any) continue;
        const auto& inputs = node->inputs();
        if (!node->op().has_grad()) {
            for (const auto& in : inputs) {
                auto r = reach.find(in.id());
                if (r != reach.end() && is_float(in.type().dtype)) {
                    throw NonDifferentiableError("non-differentiable op '" + node->op().name() +
                                                 "' on the path to '" +
                                                 wrt[r->second].display_name() + "'");
                }
            }
            continue;
        }
        const auto outputs = node->outputs();
        auto ig = node->op().grad(inputs, outputs, og);
        for (std::size_t i = 0; i < inputs.size(); ++i) {
            if (!ig[i] || !reach.count(inputs[i].id())) continue;
            if (!is_float(inputs[i].type().dtype)) continue;
            contrib[inputs[i].id()].push_back(fit_to_type(*ig[i], inputs[i].type()));
        }
    }
    std::vector<OptVar> result(wrt.size());
    for (std::size_t k = 0; k < wrt.size(); ++k) {
        if (!is_float(wrt[k].type().dtype)) continue;
        auto c = contrib.find(wrt[k].id());
        if (c != contrib.end() && !c->second.empty()) result[k] = sum_all(c->second);
    }
    return result;
}

std::vector<Variable> lop(std::span<const Variable> f, std::span<const Variable> wrt,
                          std::span<const Variable> eta) {
    if (eta.size() != f.size()) throw GraphError("lop: expected one covector per output");
    for (std::size_t j = 0; j < f.size(); ++j) check_same_type("lop: covector", eta[j], f[j], j);
    for (std::size_t k = 0; k < wrt.size(); ++k) {
        if (!is_float(wrt[k].type().dtype)) {
            throw GraphError("cannot differentiate with respect to integer variable '" +
                             wrt[k].display_name() + "'");
        }
    }
    std::vector<OptVar> seeds(eta.begin(), eta.end());
    auto partial = lop_partial(f, wrt, seeds);
    std::vector<Variable> out;
    out.reserve(wrt.size());
    for (std::size_t k = 0; k < wrt.size(); ++k) {
        out.push_back(partial[k] ? *partial[k] : zeros_of(wrt[k].type(), wrt[k]));
    }
    return out;
}

std::vector<Variable> grad(const Variable& cost, std::span<const Variable> wrt) {
    if (!cost.type().is_scalar()) {
        throw GraphError("grad: cost must be a scalar, got " + cost.type().to_string());
    }
    if (!is_float(cost.type().dtype)) throw GraphError("grad: cost must be floating point");
    const Variable f[] = {cost};
    const Variable eta[] = {scalar_constant(1.0, cost.type().dtype)};
    return lop(f, wrt, eta);
}

std::vector<OptVar> rop_partial(std::span<const Variable> f, std::span<const Variable> wrt,
                                std::span<const OptVar> gamma) {
    if (gamma.size() != wrt.size()) throw GraphError("rop: expected one direction per wrt");
    std::unordered_map<VarId, Variable> pert;
    for (std::size_t k = 0; k < wrt.size(); ++k) {
        if (gamma[k] && is_float(wrt[k].type().dtype)) {
            pert.emplace(wrt[k].id(), fit_to_type(*gamma[k], wrt[k].type()));
        }
    }
    for (const auto& node : toposort(f)) {
        const auto& inputs = node->inputs();
        std::vector<OptVar> d(inputs.size());
        bool any = false;
        for (std::size_t i = 0; i < inputs.size(); ++i) {
            auto p = pert.find(inputs[i].id());
            if (p != pert.end()) {
                d[i] = p->second;
                any = true;
            }
        }
        if (!any) continue;
        if (!node->op().has_rop()) {
            throw RopUnsupportedError("R-op unsupported for op '" + node->op().name() + "'");
        }
        const auto outputs = node->outputs();
        auto r = node->op().rop(inputs, outputs, d);
        for (std::size_t o = 0; o < outputs.size(); ++o) {
            if (r[o] && is_float(outputs[o].type().dtype)) {
                pert.emplace(outputs[o].id(), fit_to_type(*r[o], outputs[o].type()));
            }
        }
    }
    std::vector<OptVar> result(f.size());
    for (std::size_t j = 0; j < f.size(); ++j) {
        auto p = pert.find(f[j].id());
        if (p != pert.end()) result[j] = p->second;
    }
    return result;
}

std::vector<Variable> rop(std::span<const Variable> f, std::span<const Variable> wrt,
                          std::span<const Variable> gamma) {
    if (gamma.size() != wrt.size()) throw GraphError("rop: expected one direction per wrt");
    for (std::size_t k = 0; k < wrt.size(); ++k) {
        check_same_type("rop: direction", gamma[k], wrt[k], k);
        if (!is_float(wrt[k].type().dtype)) {
            throw GraphError("cannot differentiate with respect to integer variable '" +
                             wrt[k].display_name() + "'");
        }
    }
    std::vector<OptVar> dirs(gamma.begin(), gamma.end());
    auto partial = rop_partial(f, wrt, dirs);
    std::vector<Variable> out;
    out.reserve(f.size());
    for (std::size_t j = 0; j < f.size(); ++j) {
        out.push_back(partial[j] ? *partial[j] : zeros_of(f[j].type(), f[j]));
    }
    return out;
}

std::vector<Variable> gauss_newton_vector_product(std::span<const Variable> f,
                                                  std::span<const Variable> wrt,
                                                  std::span<const Variable> gamma) {
    auto jv = rop(f, wrt, gamma);
    return lop(f, wrt, jv);
}

}  // namespace graphc
