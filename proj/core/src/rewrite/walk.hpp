// Copyright 2026 The graphc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <functional>
#include <map>
#include <span>
#include <unordered_map>
#include <vector>

#include "graphc/graph.hpp"
#include "graphc/op.hpp"
#include "graphc/rewrite.hpp"

namespace graphc::detail {

/// `v` retyped to `type` through specify when ranks match and known extents
/// agree; nullopt otherwise.
OptVar conform(const Variable& v, const TensorType& type);

/// One bottom-up pass over a graph: rebuilds nodes on rewritten inputs,
/// merges duplicates, and tries `rules` on every single-output node.
/// Replacements are walked again before being used.
class RuleWalker {
public:
    RuleWalker(std::vector<const RewriteRule*> rules, PassReport& report, RewriteStage stage);

    std::vector<Variable> run(std::span<const Variable> roots);
    std::uint64_t fired() const { return fired_; }
    std::size_t merged() const { return merged_; }

private:
    Variable resolve(const Variable& v, int depth);
    void process(const NodePtr& node, int depth);
    Variable leaf(const Variable& v);

    std::vector<const RewriteRule*> rules_;
    PassReport& report_;
    RewriteStage stage_;
    std::unordered_map<VarId, Variable> map_;
    std::unordered_multimap<std::size_t, NodePtr> table_;
    std::map<std::pair<int, std::uint64_t>, Variable> constants_;
    std::uint64_t fired_ = 0;
    std::size_t merged_ = 0;
};

/// Rebuilds `g` bottom-up. `fn` sees each node with its already-rebuilt
/// inputs and may return replacement outputs; otherwise the node is
/// re-applied when an input changed.
using NodeRewrite =
    std::function<std::optional<std::vector<Variable>>(const NodePtr&, std::vector<Variable>&)>;
Graph rebuild(const Graph& g, const NodeRewrite& fn);

std::uint64_t micros_since(std::chrono::steady_clock::time_point t0);

}  // namespace graphc::detail
