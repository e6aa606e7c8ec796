// Copyright 2026 The graphc Authors
// SPDX-License-Identifier: Apache-2.0

#include "graphc/ops/tensor_ops.hpp"
#include "graphc/rewrite.hpp"
#include "graphc/scan.hpp"
#include "rewrite/walk.hpp"

namespace graphc {

namespace {

bool foldable(const ApplyNode& n, std::span<const Variable> inputs) {
    if (n.op().lazy() || scan_op(n.shared_from_this()) || dynamic_cast<const Specify*>(&n.op())) {
        return false;
    }
    for (const auto& in : inputs) {
        if (in.origin() != Origin::constant) return false;
    }
    return true;
}

}  // namespace

Graph constant_fold(const Graph& g, std::int64_t threshold, std::size_t* folded) {
    std::size_t count = 0;
    auto fn = [&](const NodePtr& node,
                  std::vector<Variable>& inputs) -> std::optional<std::vector<Variable>> {
        if (const auto* s = dynamic_cast<const ShapeOf*>(&node->op())) {
            const auto& t = inputs[0].type();
            const auto extent = t.dims[static_cast<std::size_t>(s->axis())];
            if (extent == kUnknownDim) return std::nullopt;
            ++count;
            return std::vector<Variable>{scalar_constant(static_cast<double>(extent), DType::i64)};
        }
        if (!foldable(*node, inputs)) return std::nullopt;
        for (std::size_t o = 0; o < node->num_outputs(); ++o) {
            const auto n = node->output_type(o).static_size();
            if (n < 0 || n > threshold) return std::nullopt;
        }
        std::vector<const Tensor*> ptrs;
        for (const auto& in : inputs) ptrs.push_back(&in.constant_value());
        std::vector<Tensor> outs(node->num_outputs());
        auto ws = node->op().make_workspace();
        try {
            node->op().compute(ptrs, outs, ws.get());
        } catch (const std::exception&) {
            return std::nullopt;  // leave runtime errors to runtime
        }
        std::vector<Variable> result;
        for (std::size_t o = 0; o < outs.size(); ++o) {
            if (!(TensorType::of(outs[o]) == node->output_type(o))) return std::nullopt;
            result.push_back(make_constant(std::move(outs[o])));
        }
        ++count;
        return result;
    };
    Graph out = detail::rebuild(g, fn);
    if (folded) *folded = count;
    return out;
}

}  // namespace graphc
