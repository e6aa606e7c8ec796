// Copyright 2026 The graphc Authors
// SPDX-License-Identifier: Apache-2.0
//
// Dense row-major tensors used as concrete values by kernels and the VM.

#pragma once

#include <cstdint>
#include <initializer_list>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace graphc {

enum class DType : std::uint8_t { f64, f32, i64 };

std::string_view dtype_name(DType dtype);
std::optional<DType> parse_dtype(std::string_view text);

inline bool is_float(DType dtype) { return dtype != DType::i64; }

/// Result dtype of a binary arithmetic op (numpy-style upcast).
DType promote(DType a, DType b);

/// True when every value of `from` is exactly representable in `to`.
bool converts_losslessly(DType from, DType to);

using Shape = std::vector<std::int64_t>;

std::int64_t num_elements(const Shape& shape);
std::string shape_to_string(const Shape& shape);

/// Concrete n-dimensional value. Every dtype is stored as double; i64 values
/// are exact integers (|v| <= 2^53) and f32 values are rounded to float
/// precision by the kernels that produce them.
class Tensor {
public:
    Tensor() = default;
    Tensor(DType dtype, Shape shape, std::vector<double> data);

    static Tensor scalar(double value, DType dtype = DType::f64);
    static Tensor zeros(Shape shape, DType dtype = DType::f64);
    static Tensor full(Shape shape, double value, DType dtype = DType::f64);
    static Tensor vector(std::vector<double> values, DType dtype = DType::f64);
    static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows,
                         DType dtype = DType::f64);

    DType dtype() const { return dtype_; }
    const Shape& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::int64_t dim(std::size_t axis) const { return shape_[axis]; }
    std::size_t size() const { return data_.size(); }

    std::span<double> data() { return data_; }
    std::span<const double> data() const { return data_; }
    double operator[](std::size_t i) const { return data_[i]; }
    double& operator[](std::size_t i) { return data_[i]; }
    double item() const;

    /// Re-types and resizes in place, keeping capacity so buffers can be
    /// reused between calls. Contents are unspecified afterwards.
    void reset(DType dtype, const Shape& shape);
    void fill(double value);
    /// Drops the buffer and its memory.
    void release();
    std::size_t capacity() const { return data_.capacity(); }

    void set_dtype(DType dtype) { dtype_ = dtype; }
    /// Rounds stored values to the precision of the current dtype.
    void round_to_dtype();

    /// Number of elements in one leading-axis row.
    std::int64_t row_size() const;
    Tensor row(std::int64_t index) const;

    std::string to_string() const;

    friend bool operator==(const Tensor& a, const Tensor& b);

private:
    DType dtype_ = DType::f64;
    Shape shape_;
    std::vector<double> data_;
};

/// Bitwise equality (NaNs with equal payload compare equal).
bool bitwise_equal(const Tensor& a, const Tensor& b);

}  // namespace graphc
