// Copyright 2026 The graphc Authors
// SPDX-License-Identifier: Apache-2.0
//
// Staged graph optimizer: canonicalize, stabilize, specialize (including
// loop passes), fuse, constant-fold. Common subexpressions are merged on
// every local rewrite walk.

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "graphc/graph.hpp"
#include "graphc/op.hpp"

namespace graphc {

enum class OptLevel : std::uint8_t { none, stabilize_only, standard };

/// "none", "stabilize_only" or "default".
std::string_view opt_level_name(OptLevel level);
std::optional<OptLevel> parse_opt_level(std::string_view text);

enum class RewriteStage : std::uint8_t { canonicalize, stabilize, specialize, fuse, fold };

std::string_view stage_name(RewriteStage stage);

/// A local rewrite. `apply` receives a node whose inputs are already
/// rewritten and returns a replacement for its (single) output, or nullopt
/// when the rule does not match.
struct RewriteRule {
    std::string name;
    RewriteStage stage = RewriteStage::canonicalize;
    std::function<OptVar(const NodePtr&)> apply;
    // May change results outside the op's domain (e.g. exp(log x) for x <= 0).
    bool domain_unsafe = false;
    // Needs the default level; skipped by stabilize_only.
    bool default_only = false;
};

/// Built-in rules in registration order; the first matching rule wins.
const std::vector<RewriteRule>& builtin_rules();

struct OptimizeOptions {
    OptLevel level = OptLevel::standard;
    std::set<std::string> disabled_rules;
    std::int64_t fold_threshold = 4096;  // max elements of a folded constant
    int max_iterations = 8;              // per stage
};

struct RuleCount {
    std::string rule;
    RewriteStage stage = RewriteStage::canonicalize;
    std::uint64_t count = 0;
    std::uint64_t micros = 0;  // time spent matching and building
};

struct StageReport {
    RewriteStage stage = RewriteStage::canonicalize;
    std::size_t nodes_before = 0;
    std::size_t nodes_after = 0;
    std::uint64_t micros = 0;
    int iterations = 0;
};

struct PassReport {
    OptLevel level = OptLevel::standard;
    std::vector<RuleCount> rules;  // every rule that fired, first-fire order
    std::vector<StageReport> stages;
    std::size_t nodes_before = 0;
    std::size_t nodes_after = 0;
    std::size_t cse_merged = 0;
    std::vector<std::string> warnings;

    std::uint64_t count(std::string_view rule) const;
    void add(std::string_view rule, RewriteStage stage, std::uint64_t n, std::uint64_t micros = 0);
    const StageReport* stage(RewriteStage s) const;

    std::string to_text() const;
    /// {"level", "nodes_before", "nodes_after", "cse_merged", "warnings",
    ///  "stages": [...], "rules": [{rule, stage, count, nodes_before,
    ///  nodes_after, micros}]}; per-rule node counts are those of its stage.
    std::string to_json() const;
};

/// Optimizes `g`. Never throws on reaching an iteration cap; the report
/// carries a warning instead.
std::pair<Graph, PassReport> optimize(const Graph& g, const OptimizeOptions& options = {});

/// Single stages, exposed for tests.
Graph cse(const Graph& g, std::size_t* merged = nullptr);
Graph fuse_elementwise(const Graph& g, std::size_t* fused = nullptr);
Graph constant_fold(const Graph& g, std::int64_t threshold = 4096, std::size_t* folded = nullptr);

struct SemanticsReport {
    int trials = 0;
    double max_rel_deviation = 0.0;
    std::vector<std::string> failures;
    bool ok = true;
};

/// Evaluates both graphs (same input signature) on `trials` random inputs
/// and compares every output and update. Deviation per element is
/// |a - b| / max(|a|, |b|, 1e-8); NaNs and equal infinities match.
SemanticsReport check_semantics(const Graph& before, const Graph& after, int trials = 10,
                                double tolerance = 1e-12, std::uint64_t seed = 1);

}  // namespace graphc
