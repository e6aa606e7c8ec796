// Copyright 2026 The graphc Authors
// SPDX-License-Identifier: Apache-2.0
//
// Lowering of parsed programs to graphs, one per declared function.

#pragma once

#include <map>
#include <string>
#include <vector>

#include "graphc/dsl/ast.hpp"
#include "graphc/dsl/parser.hpp"
#include "graphc/graph.hpp"

namespace graphc::dsl {

struct LoweredFunction {
    Graph graph;
    SourceSpan span;
};

struct LowerResult {
    std::map<std::string, LoweredFunction> functions;
    std::vector<std::string> order;  // declaration order
    std::vector<Diagnostic> diagnostics;
    bool ok() const { return diagnostics.empty(); }
};

/// Resolves names, builds expressions through the builder API, lowers scan
/// blocks to loops and grad() through reverse mode. Functions whose bodies
/// have errors are left out of the result.
LowerResult lower(const Program& program);

/// Parse and lower in one step; parse diagnostics stop before lowering.
LowerResult compile_source(std::string_view source, const std::string& file = "<input>");

/// Names of the builtin functions callable from expressions.
std::vector<std::string> builtin_functions();

}  // namespace graphc::dsl
