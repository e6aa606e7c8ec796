// Copyright 2026 The graphc Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <memory>
#include <unordered_map>
#include <unordered_set>

#include "graphc/ops/elemwise.hpp"
#include "graphc/rewrite.hpp"

namespace graphc {

namespace {

bool all_f64(const ApplyNode& n) {
    for (const auto& in : n.inputs()) {
        if (in.type().dtype != DType::f64) return false;
    }
    return n.output_type(0).dtype == DType::f64;
}

bool fusable(const ApplyNode& n) {
    return n.op().elementwise() && n.num_outputs() == 1 && all_f64(n);
}

// Inlines the scalar programs of `members` (topological order, last is the
// head) into one program over `inputs`.
ScalarProgram inline_group(const std::vector<NodePtr>& members, const std::vector<Variable>& inputs) {
    ScalarProgram out;
    out.num_inputs = static_cast<std::int32_t>(inputs.size());
    std::unordered_map<VarId, std::int32_t> slot;
    for (std::size_t k = 0; k < inputs.size(); ++k) slot[inputs[k].id()] = static_cast<std::int32_t>(k);
    for (const auto& m : members) {
        const ScalarProgram& p = *m->op().scalar_body();
        const auto imm_base = static_cast<std::int32_t>(out.immediates.size());
        out.immediates.insert(out.immediates.end(), p.immediates.begin(), p.immediates.end());
        std::vector<std::int32_t> local(static_cast<std::size_t>(p.num_slots()));
        for (std::int32_t k = 0; k < p.num_inputs; ++k) local[k] = slot.at(m->inputs()[k].id());
        auto remap = [&](std::int32_t a) { return a < 0 ? a - imm_base : local[a]; };
        for (std::size_t k = 0; k < p.code.size(); ++k) {
            ScalarInstr ins = p.code[k];
            ins.args[0] = remap(ins.args[0]);
            ins.args[1] = scalar_op_arity(ins.code) == 2 ? remap(ins.args[1]) : ins.args[0];
            local[p.num_inputs + static_cast<std::int32_t>(k)] = out.num_slots();
            out.code.push_back(ins);
        }
        slot[m->output_id(0)] = local[p.output];
    }
    out.output = slot.at(members.back()->output_id(0));
    return out;
}

}  // namespace

Graph fuse_elementwise(const Graph& g, std::size_t* fused) {
    const auto order = toposort(g);
    std::unordered_map<std::uint64_t, std::size_t> pos;
    for (std::size_t i = 0; i < order.size(); ++i) pos[order[i]->id()] = i;
    std::unordered_map<VarId, std::vector<std::uint64_t>> clients;
    for (const auto& n : order) {
        for (const auto& in : n->inputs()) clients[in.id()].push_back(n->id());
    }
    std::unordered_set<VarId> roots;
    for (const auto& r : g.roots()) roots.insert(r.id());

    struct Group {
        std::shared_ptr<const Composite> op;
        std::vector<Variable> inputs;
    };
    std::unordered_set<std::uint64_t> taken;
    std::unordered_map<std::uint64_t, Group> groups;  // by head node id
    std::size_t absorbed = 0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        const NodePtr& head = *it;
        if (taken.count(head->id()) || !fusable(*head)) continue;
        const auto& dims = head->output_type(0).dims;
        std::unordered_set<std::uint64_t> group{head->id()};
        std::vector<NodePtr> members{head};
        bool grew = true;
        while (grew) {
            grew = false;
            for (std::size_t m = 0; m < members.size(); ++m) {
                for (const auto& in : members[m]->inputs()) {
                    if (in.is_leaf()) continue;
                    const NodePtr& p = in.owner();
                    if (group.count(p->id()) || taken.count(p->id()) || !fusable(*p)) continue;
                    if (roots.count(in.id()) || p->output_type(0).dims != dims) continue;
                    const auto& cl = clients[in.id()];
                    if (!std::all_of(cl.begin(), cl.end(), [&](auto c) { return group.count(c) > 0; })) {
                        continue;
                    }
                    group.insert(p->id());
                    members.push_back(p);
                    grew = true;
                }
            }
        }
        if (members.size() < 2) continue;
        std::sort(members.begin(), members.end(),
                  [&](const NodePtr& a, const NodePtr& b) { return pos[a->id()] < pos[b->id()]; });
        std::vector<Variable> inputs;
        std::unordered_set<VarId> seen;
        for (const auto& m : members) {
            for (const auto& in : m->inputs()) {
                if (!in.is_leaf() && group.count(in.owner()->id())) continue;
                if (seen.insert(in.id()).second) inputs.push_back(in);
            }
        }
        auto op = std::make_shared<Composite>(inline_group(members, inputs));
        std::vector<TensorType> types;
        for (const auto& in : inputs) types.push_back(in.type());
        try {
            if (op->infer(types)[0].dims != dims) continue;
        } catch (const TypeError&) {
            continue;
        }
        for (const auto& m : members) taken.insert(m->id());
        absorbed += members.size() - 1;
        groups.emplace(head->id(), Group{op, std::move(inputs)});
    }
    if (fused) *fused = absorbed;
    if (groups.empty()) return g;

    std::unordered_map<VarId, Variable> map;
    auto get = [&](const Variable& v) {
        auto it = map.find(v.id());
        return it == map.end() ? v : it->second;
    };
    for (const auto& node : order) {
        if (auto gi = groups.find(node->id()); gi != groups.end()) {
            std::vector<Variable> ins;
            for (const auto& v : gi->second.inputs) ins.push_back(get(v));
            Variable out = apply1(gi->second.op, std::move(ins));
            out.set_name(node->output(0).name());
            map[node->output_id(0)] = out;
            continue;
        }
        if (taken.count(node->id())) continue;
        std::vector<Variable> ins;
        bool changed = false;
        for (const auto& in : node->inputs()) {
            ins.push_back(get(in));
            changed |= ins.back().id() != in.id();
        }
        if (!changed) continue;
        auto outs = apply(node->op_ptr(), std::move(ins));
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

}  // namespace graphc
