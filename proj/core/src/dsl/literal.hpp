// Copyright 2026 The graphc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string>

#include "graphc/dsl/ast.hpp"

namespace graphc::dsl {

/// Tensor value of a literal expression (numbers, negated numbers, nested
/// lists), or nullopt with `error` set.
std::optional<Tensor> literal_value(const Expr& e, DType dtype, std::string* error);

}  // namespace graphc::dsl
