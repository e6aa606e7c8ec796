// Copyright 2026 The graphc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>

#include "graphc/dsl/ast.hpp"

namespace graphc::dsl {

/// Canonical source text. Parentheses are emitted only where precedence
/// requires them, so parse(print(p)) has the same structure as p.
std::string print(const Program& program);
std::string print(const Decl& decl);
std::string print(const Expr& expr);

}  // namespace graphc::dsl
