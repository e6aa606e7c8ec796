// Copyright 2026 The graphc Authors
// SPDX-License-Identifier: Apache-2.0
//
// Whole-graph reverse mode (L-operator, gradients) and forward mode
// (R-operator) as graph-to-graph transformations.

#pragma once

#include <span>
#include <vector>

#include "graphc/graph.hpp"
#include "graphc/op.hpp"

namespace graphc {

/// d(cost)/d(wrt) for a scalar cost. Variables the cost does not depend on
/// get zeros of their own type.
std::vector<Variable> grad(const Variable& cost, std::span<const Variable> wrt);

/// Vector-Jacobian product eta^T J of outputs `f` with respect to `wrt`.
/// `eta[j]` must have the type of `f[j]`.
std::vector<Variable> lop(std::span<const Variable> f, std::span<const Variable> wrt,
                          std::span<const Variable> eta);

/// Jacobian-vector product J gamma. `gamma[i]` must have the type of `wrt[i]`.
std::vector<Variable> rop(std::span<const Variable> f, std::span<const Variable> wrt,
                          std::span<const Variable> gamma);

/// J^T (J gamma), built as lop(f, wrt, rop(f, wrt, gamma)).
std::vector<Variable> gauss_newton_vector_product(std::span<const Variable> f,
                                                  std::span<const Variable> wrt,
                                                  std::span<const Variable> gamma);

/// Lower-level forms used inside loop bodies: missing seeds are allowed and
/// results are nullopt where no differentiable path exists. Integer-typed
/// `wrt` entries yield nullopt instead of an error.
std::vector<OptVar> lop_partial(std::span<const Variable> f, std::span<const Variable> wrt,
                                std::span<const OptVar> eta);
std::vector<OptVar> rop_partial(std::span<const Variable> f, std::span<const Variable> wrt,
                                std::span<const OptVar> gamma);

/// Coerces `v` to `type` (summing broadcast axes, pinning dims, casting).
Variable fit_to_type(const Variable& v, const TensorType& type);

}  // namespace graphc
