// Copyright 2026 The graphc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <vector>

#include "graphc/graph.hpp"

namespace graphc::detail {

/// Rebuilds `roots` so that structurally identical nodes (equal ops applied
/// to identical inputs) and equal scalar constants are shared. `merged`
/// receives the number of eliminated duplicates.
std::vector<Variable> cse_roots(std::span<const Variable> roots, std::size_t* merged = nullptr);

}  // namespace graphc::detail
