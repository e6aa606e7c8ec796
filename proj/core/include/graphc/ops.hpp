// Copyright 2026 The graphc Authors
// SPDX-License-Identifier: Apache-2.0
//
// Expression builder API. Every function applies one op and returns its
// output variable(s); nothing is evaluated.

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "graphc/graph.hpp"
#include "graphc/ops/scalar.hpp"

namespace graphc {

// Elementwise (broadcasting).
Variable elemwise(ScalarOpCode code, const Variable& a, double param = 0.0);
Variable elemwise(ScalarOpCode code, const Variable& a, const Variable& b);

Variable add(const Variable& a, const Variable& b);
Variable sub(const Variable& a, const Variable& b);
Variable mul(const Variable& a, const Variable& b);
Variable div(const Variable& a, const Variable& b);
Variable neg(const Variable& x);
Variable exp(const Variable& x);
Variable log(const Variable& x);
Variable log1p(const Variable& x);
Variable sigmoid(const Variable& x);
Variable softplus(const Variable& x);
Variable tanh(const Variable& x);
Variable sqr(const Variable& x);
Variable sqrt(const Variable& x);
Variable pow(const Variable& x, double exponent);
Variable maximum(const Variable& a, const Variable& b);
Variable minimum(const Variable& a, const Variable& b);
Variable gt(const Variable& a, const Variable& b);
Variable lt(const Variable& a, const Variable& b);
Variable ge(const Variable& a, const Variable& b);
Variable le(const Variable& a, const Variable& b);
Variable eq(const Variable& a, const Variable& b);
Variable ne(const Variable& a, const Variable& b);

Variable operator+(const Variable& a, const Variable& b);
Variable operator-(const Variable& a, const Variable& b);
Variable operator*(const Variable& a, const Variable& b);
Variable operator/(const Variable& a, const Variable& b);
Variable operator-(const Variable& x);
// Scalar operands become f64 constants.
Variable operator+(const Variable& a, double b);
Variable operator+(double a, const Variable& b);
Variable operator-(const Variable& a, double b);
Variable operator-(double a, const Variable& b);
Variable operator*(const Variable& a, double b);
Variable operator*(double a, const Variable& b);
Variable operator/(const Variable& a, double b);
Variable operator/(double a, const Variable& b);

// Reductions. Negative axes count from the end; nullopt reduces all axes.
Variable sum(const Variable& x, std::optional<int> axis = std::nullopt, bool keepdims = false);
Variable sum_axes(const Variable& x, std::vector<int> axes, bool keepdims = false);
Variable max(const Variable& x, std::optional<int> axis = std::nullopt, bool keepdims = false);
Variable mean(const Variable& x, std::optional<int> axis = std::nullopt);

Variable dot(const Variable& a, const Variable& b);
/// Empty perm reverses the axes.
Variable transpose(const Variable& x, std::vector<int> perm = {});
Variable reshape(const Variable& x, std::vector<std::int64_t> target);
Variable reshape_like(const Variable& x, const Variable& like);
Variable expand_dims(const Variable& x, int axis);
Variable broadcast_like(const Variable& x, const Variable& like);
Variable zeros_like(const Variable& x);
Variable ones_like(const Variable& x);
Variable argmax(const Variable& x, int axis = -1);

Variable softmax(const Variable& x);
Variable crossentropy(const Variable& p, const Variable& targets);
Variable crossentropy_grad(const Variable& g, const Variable& p, const Variable& targets);

Variable if_else(const Variable& cond, const Variable& then_v, const Variable& else_v);

Variable take_row(const Variable& x, std::int64_t index);
Variable pad_rows(const Variable& src, const Variable& like, std::int64_t start,
                  bool from_end = false);
Variable concat_rows(const Variable& a, const Variable& b);
Variable rows_like(const Variable& x, const Variable& like, std::int64_t start,
                   bool from_end = false);
Variable stack_rows(const std::vector<Variable>& xs);
Variable shape_of(const Variable& x, int axis);
Variable specify(const Variable& x, const TensorType& type);

/// Sums `g` over the axes along which a value of type `target` was
/// broadcast, and converts to target's dtype. Used by gradient rules.
Variable sum_to(const Variable& g, const TensorType& target);
/// Broadcasts `v` to the type of `like` when the types differ.
Variable expand_to(const Variable& v, const Variable& like);
/// Zero value of the given type: a constant when fully static, otherwise
/// zeros_like(like).
Variable zeros_of(const TensorType& type, const Variable& like);

/// Names of every op in the library.
std::vector<std::string> op_set();

}  // namespace graphc
