// Copyright 2026 The graphc Authors
// SPDX-License-Identifier: Apache-2.0

#include "rewrite/cse.hpp"

#include <cstring>
#include <unordered_map>

#include "graphc/op.hpp"

namespace graphc::detail {

namespace {

struct ConstKey {
    DType dtype;
    std::uint64_t bits;
    bool operator==(const ConstKey& o) const { return dtype == o.dtype && bits == o.bits; }
};

struct ConstKeyHash {
    std::size_t operator()(const ConstKey& k) const {
        return std::hash<std::uint64_t>{}(k.bits) * 3u + static_cast<std::size_t>(k.dtype);
    }
};

}  // namespace

std::vector<Variable> cse_roots(std::span<const Variable> roots, std::size_t* merged) {
    std::size_t count = 0;
    std::unordered_map<VarId, Variable> canon;
    std::unordered_map<ConstKey, Variable, ConstKeyHash> constants;
    auto lookup = [&](const Variable& v) -> Variable {
        if (auto it = canon.find(v.id()); it != canon.end()) return it->second;
        if (v.is_leaf()) {
            if (auto c = scalar_constant_value(v)) {
                std::uint64_t bits = 0;
                const double value = *c;  // by bits: -0 and +0 stay distinct
                std::memcpy(&bits, &value, sizeof bits);
                auto [it, inserted] = constants.emplace(ConstKey{v.type().dtype, bits}, v);
                if (!inserted && it->second.id() != v.id()) ++count;
                canon.emplace(v.id(), it->second);
                return it->second;
            }
            canon.emplace(v.id(), v);
        }
        return v;
    };
    std::unordered_multimap<std::size_t, NodePtr> table;
    for (const auto& node : toposort(roots)) {
        std::vector<Variable> inputs;
        bool changed = false;
        std::size_t h = node->op().hash();
        for (const auto& in : node->inputs()) {
            inputs.push_back(lookup(in));
            changed |= inputs.back().id() != in.id();
            h = h * 1000003u ^ std::hash<VarId>{}(inputs.back().id());
        }
        NodePtr found;
        auto range = table.equal_range(h);
        for (auto it = range.first; it != range.second && !found; ++it) {
            const auto& cand = it->second;
            if (cand->inputs().size() != inputs.size() || !cand->op().equals(node->op())) continue;
            bool same = true;
            for (std::size_t i = 0; i < inputs.size() && same; ++i) {
                same = cand->inputs()[i].id() == inputs[i].id();
            }
            if (same) found = cand;
        }
        if (found) {
            ++count;
            for (std::size_t o = 0; o < node->num_outputs(); ++o) {
                canon.emplace(node->output_id(o), found->output(o));
            }
            continue;
        }
        NodePtr target = node;
        if (changed) {
            auto outs = apply(node->op_ptr(), std::move(inputs));
            target = outs[0].owner();
            for (std::size_t o = 0; o < node->num_outputs(); ++o) {
                outs[o].set_name(node->output(o).name());
                canon.emplace(node->output_id(o), outs[o]);
            }
        }
        table.emplace(h, target);
    }
    std::vector<Variable> out;
    out.reserve(roots.size());
    for (const auto& r : roots) out.push_back(lookup(r));
    if (merged) *merged = count;
    return out;
}

}  // namespace graphc::detail
