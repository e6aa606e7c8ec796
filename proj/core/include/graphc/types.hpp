// Copyright 2026 The graphc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "graphc/tensor.hpp"

namespace graphc {

/// Extent marker for a dimension whose size is only known at call time.
inline constexpr std::int64_t kUnknownDim = -1;

/// Static type of a graph variable: dtype, rank, and per-dimension extent
/// (or kUnknownDim). A static extent of 1 broadcasts; Unknown never does.
struct TensorType {
    DType dtype = DType::f64;
    std::vector<std::int64_t> dims;

    TensorType() = default;
    TensorType(DType dt, std::vector<std::int64_t> d) : dtype(dt), dims(std::move(d)) {}

    static TensorType scalar(DType dt = DType::f64) { return {dt, {}}; }
    static TensorType vector(std::int64_t n = kUnknownDim, DType dt = DType::f64) {
        return {dt, {n}};
    }
    static TensorType matrix(std::int64_t m = kUnknownDim, std::int64_t n = kUnknownDim,
                             DType dt = DType::f64) {
        return {dt, {m, n}};
    }
    static TensorType of(const Tensor& t) { return {t.dtype(), t.shape()}; }

    std::size_t rank() const { return dims.size(); }
    bool is_scalar() const { return dims.empty(); }
    bool fully_static() const;
    /// Number of elements when fully static, otherwise -1.
    std::int64_t static_size() const;
    /// True when a runtime shape conforms (same rank, known extents equal).
    bool accepts(const Shape& shape) const;
    TensorType with_dtype(DType dt) const { return {dt, dims}; }
    /// Drops the leading dimension.
    TensorType row_type() const;
    /// Prepends a leading dimension.
    TensorType stacked(std::int64_t extent) const;

    std::string to_string() const;

    friend bool operator==(const TensorType& a, const TensorType& b) {
        return a.dtype == b.dtype && a.dims == b.dims;
    }
};

/// Static broadcast of two dim lists (right-aligned). Returns false with
/// `bad_axis` set on a static conflict.
bool broadcast_dims(const std::vector<std::int64_t>& a, const std::vector<std::int64_t>& b,
                    std::vector<std::int64_t>& out, std::size_t& bad_axis);

/// Runtime numpy-style broadcast of concrete shapes; throws on mismatch.
Shape broadcast_shapes(const Shape& a, const Shape& b);

/// True when `narrow` is at least as specific as `wide` (same dtype and
/// rank, and every known extent of `wide` matches).
bool refines(const TensorType& narrow, const TensorType& wide);

}  // namespace graphc
