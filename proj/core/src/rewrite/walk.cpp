// Copyright 2026 The graphc Authors
// SPDX-License-Identifier: Apache-2.0

#include "rewrite/walk.hpp"

#include <cstring>

#include "graphc/ops.hpp"

namespace graphc::detail {

namespace {

constexpr int kMaxDepth = 32;

std::size_t node_key(const Op& op, std::span<const Variable> inputs) {
    std::size_t h = op.hash();
    for (const auto& in : inputs) h = h * 1000003u ^ std::hash<VarId>{}(in.id());
    return h;
}

}  // namespace

std::uint64_t micros_since(std::chrono::steady_clock::time_point t0) {
    return static_cast<std::uint64_t>(std::chrono::duration_cast<std::chrono::microseconds>(
                                          std::chrono::steady_clock::now() - t0)
                                          .count());
}

OptVar conform(const Variable& v, const TensorType& type) {
    const auto& t = v.type();
    if (t == type) return v;
    if (t.rank() != type.rank()) return std::nullopt;
    if (t.dtype != type.dtype && !converts_losslessly(t.dtype, type.dtype)) return std::nullopt;
    for (std::size_t i = 0; i < t.rank(); ++i) {
        const auto a = t.dims[i];
        const auto b = type.dims[i];
        if (a != b && a != kUnknownDim && b != kUnknownDim) return std::nullopt;
    }
    return specify(v, type);
}

RuleWalker::RuleWalker(std::vector<const RewriteRule*> rules, PassReport& report,
                       RewriteStage stage)
    : rules_(std::move(rules)), report_(report), stage_(stage) {}

Variable RuleWalker::leaf(const Variable& v) {
    if (auto it = map_.find(v.id()); it != map_.end()) return it->second;
    Variable out = v;
    if (auto c = scalar_constant_value(v)) {
        std::uint64_t bits = 0;
        const double value = *c;
        std::memcpy(&bits, &value, sizeof bits);
        auto [it, inserted] =
            constants_.emplace(std::make_pair(static_cast<int>(v.type().dtype), bits), v);
        if (!inserted) ++merged_;
        out = it->second;
    }
    map_.emplace(v.id(), out);
    return out;
}

Variable RuleWalker::resolve(const Variable& v, int depth) {
    if (auto it = map_.find(v.id()); it != map_.end()) return it->second;
    if (v.is_leaf()) return leaf(v);
    std::vector<NodePtr> stack{v.owner()};
    while (!stack.empty()) {
        NodePtr n = stack.back();
        if (map_.count(n->output_id(0))) {
            stack.pop_back();
            continue;
        }
        bool ready = true;
        for (const auto& in : n->inputs()) {
            if (!in.is_leaf() && !map_.count(in.id())) {
                stack.push_back(in.owner());
                ready = false;
            }
        }
        if (!ready) continue;
        stack.pop_back();
        process(n, depth);
    }
    return map_.at(v.id());
}

void RuleWalker::process(const NodePtr& n, int depth) {
    std::vector<Variable> inputs;
    inputs.reserve(n->inputs().size());
    bool changed = false;
    for (const auto& in : n->inputs()) {
        inputs.push_back(in.is_leaf() ? leaf(in) : map_.at(in.id()));
        changed |= inputs.back().id() != in.id();
    }
    NodePtr node = n;
    if (changed) {
        auto outs = apply(n->op_ptr(), inputs);
        for (std::size_t o = 0; o < outs.size(); ++o) outs[o].set_name(n->output(o).name());
        node = outs[0].owner();
    }
    const std::size_t h = node_key(node->op(), inputs);
    auto range = table_.equal_range(h);
    for (auto it = range.first; it != range.second; ++it) {
        const auto& cand = it->second;
        if (cand->inputs().size() != inputs.size() || !cand->op().equals(node->op())) continue;
        bool eq = true;
        for (std::size_t i = 0; i < inputs.size() && eq; ++i) {
            eq = cand->inputs()[i].id() == inputs[i].id();
        }
        if (!eq) continue;
        ++merged_;
        for (std::size_t o = 0; o < n->num_outputs(); ++o) {
            map_[n->output_id(o)] = cand->output(o);
            map_[node->output_id(o)] = cand->output(o);
        }
        return;
    }
    if (node->num_outputs() == 1 && depth < kMaxDepth) {
        const auto& type = node->output_type(0);
        for (const RewriteRule* rule : rules_) {
            const auto t0 = std::chrono::steady_clock::now();
            OptVar r = rule->apply(node);
            OptVar c = r ? conform(*r, type) : std::nullopt;
            const auto us = micros_since(t0);
            if (!c || c->id() == node->output_id(0)) continue;
            ++fired_;
            report_.add(rule->name, stage_, 1, us);
            Variable result = resolve(*c, depth + 1);
            map_[n->output_id(0)] = result;
            map_[node->output_id(0)] = result;
            return;
        }
    }
    table_.emplace(h, node);
    for (std::size_t o = 0; o < n->num_outputs(); ++o) {
        map_[n->output_id(o)] = node->output(o);
        map_[node->output_id(o)] = node->output(o);
    }
}

std::vector<Variable> RuleWalker::run(std::span<const Variable> roots) {
    std::vector<Variable> out;
    out.reserve(roots.size());
    for (const auto& r : roots) out.push_back(resolve(r, 0));
    return out;
}

Graph rebuild(const Graph& g, const NodeRewrite& fn) {
    std::unordered_map<VarId, Variable> map;
    auto get = [&](const Variable& v) {
        auto it = map.find(v.id());
        return it == map.end() ? v : it->second;
    };
    for (const auto& node : toposort(g)) {
        std::vector<Variable> inputs;
        bool changed = false;
        for (const auto& in : node->inputs()) {
            inputs.push_back(get(in));
            changed |= inputs.back().id() != in.id();
        }
        if (auto r = fn(node, inputs)) {
            for (std::size_t o = 0; o < r->size(); ++o) map[node->output_id(o)] = (*r)[o];
            continue;
        }
        if (!changed) continue;
        auto outs = apply(node->op_ptr(), std::move(inputs));
        for (std::size_t o = 0; o < outs.size(); ++o) {
            outs[o].set_name(node->output(o).name());
            map[node->output_id(o)] = outs[o];
        }
    }
    Graph out;
    out.inputs = g.inputs;
    for (const auto& v : g.outputs) out.outputs.push_back(get(v));
    for (const auto& u : g.updates) out.updates.push_back({u.target, get(u.expr)});
    return out;
}

}  // namespace graphc::detail
