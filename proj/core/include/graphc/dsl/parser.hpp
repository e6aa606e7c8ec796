// Copyright 2026 The graphc Authors
// SPDX-License-Identifier: Apache-2.0
//
// Parser for .gx programs.
//
//   input x : f64[3, ?];
//   shared W = [[0.1, 0.2], [0.3, 0.4]];
//   let y = sigmoid(dot(W, x)) + 1;
//   let gW, gb = grad(loss, W, b);
//   scan s over xs from 0 { state h; h' = h + xs; } until h' - 10 steps 100;
//   fn f(x) -> (y) updates W <- W - 0.1 * gW;
//
// A '#' starts a comment that runs to the end of the line.

#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "graphc/dsl/ast.hpp"

namespace graphc::dsl {

inline constexpr int kMaxNesting = 256;

struct ParseResult {
    Program program;
    std::vector<Diagnostic> diagnostics;
    bool ok() const { return diagnostics.empty(); }
};

/// Never throws on malformed input; every problem becomes a diagnostic.
ParseResult parse(std::string_view source, const std::string& file = "<input>");

/// Parses a standalone tensor literal (`3`, `-1.5`, `[[1, 2], [3, 4]]`) as a
/// value of `dtype`. Returns nullopt and sets `error` on failure, including
/// non-integer values for i64.
std::optional<Tensor> parse_tensor_literal(std::string_view text, DType dtype,
                                           std::string* error = nullptr);

}  // namespace graphc::dsl
