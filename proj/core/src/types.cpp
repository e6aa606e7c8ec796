// Copyright 2026 The graphc Authors
// SPDX-License-Identifier: Apache-2.0

#include "graphc/types.hpp"

#include <stdexcept>

namespace graphc {

bool TensorType::fully_static() const {
    for (auto d : dims) {
        if (d == kUnknownDim) return false;
    }
    return true;
}

std::int64_t TensorType::static_size() const {
    if (!fully_static()) return -1;
    std::int64_t n = 1;
    for (auto d : dims) n *= d;
    return n;
}

bool TensorType::accepts(const Shape& shape) const {
    if (shape.size() != dims.size()) return false;
    for (std::size_t i = 0; i < dims.size(); ++i) {
        if (dims[i] != kUnknownDim && dims[i] != shape[i]) return false;
    }
    return true;
}

TensorType TensorType::row_type() const {
    if (dims.empty()) throw std::logic_error("row_type of a scalar type");
    return {dtype, std::vector<std::int64_t>(dims.begin() + 1, dims.end())};
}

TensorType TensorType::stacked(std::int64_t extent) const {
    std::vector<std::int64_t> d;
    d.reserve(dims.size() + 1);
    d.push_back(extent);
    d.insert(d.end(), dims.begin(), dims.end());
    return {dtype, std::move(d)};
}

std::string TensorType::to_string() const {
    std::string s{dtype_name(dtype)};
    s += "[";
    for (std::size_t i = 0; i < dims.size(); ++i) {
        if (i) s += ",";
        s += dims[i] == kUnknownDim ? std::string("?") : std::to_string(dims[i]);
    }
    return s + "]";
}

bool broadcast_dims(const std::vector<std::int64_t>& a, const std::vector<std::int64_t>& b,
                    std::vector<std::int64_t>& out, std::size_t& bad_axis) {
    std::size_t rank = std::max(a.size(), b.size());
    out.assign(rank, 1);
    for (std::size_t i = 0; i < rank; ++i) {
        // Right-aligned: missing leading dims behave like static 1.
        std::int64_t da = i + a.size() >= rank ? a[i + a.size() - rank] : 1;
        std::int64_t db = i + b.size() >= rank ? b[i + b.size() - rank] : 1;
        if (da == 1) {
            out[i] = db;
        } else if (db == 1) {
            out[i] = da;
        } else if (da == kUnknownDim) {
            out[i] = db;
        } else if (db == kUnknownDim || da == db) {
            out[i] = da;
        } else {
            bad_axis = i;
            return false;
        }
    }
    return true;
}

Shape broadcast_shapes(const Shape& a, const Shape& b) {
    std::size_t rank = std::max(a.size(), b.size());
    Shape out(rank, 1);
    for (std::size_t i = 0; i < rank; ++i) {
        std::int64_t da = i + a.size() >= rank ? a[i + a.size() - rank] : 1;
        std::int64_t db = i + b.size() >= rank ? b[i + b.size() - rank] : 1;
        if (da == db || db == 1) {
            out[i] = da;
        } else if (da == 1) {
            out[i] = db;
        } else {
            throw std::runtime_error("shape mismatch at runtime: " + shape_to_string(a) + " vs " +
                                     shape_to_string(b));
        }
    }
    return out;
}

bool refines(const TensorType& narrow, const TensorType& wide) {
    if (narrow.dtype != wide.dtype || narrow.rank() != wide.rank()) return false;
    for (std::size_t i = 0; i < wide.rank(); ++i) {
        if (wide.dims[i] != kUnknownDim && wide.dims[i] != narrow.dims[i]) return false;
    }
    return true;
}

}  // namespace graphc
