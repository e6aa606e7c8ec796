// Copyright 2026 The graphc Authors
// SPDX-License-Identifier: Apache-2.0

#include "graphc/tensor.hpp"

#include <cmath>
#include <cstring>
#include <sstream>
#include <stdexcept>

namespace graphc {

std::string_view dtype_name(DType dtype) {
    switch (dtype) {
        case DType::f64: return "f64";
        case DType::f32: return "f32";
        case DType::i64: return "i64";
    }
    return "?";
}

std::optional<DType> parse_dtype(std::string_view text) {
    if (text == "f64") return DType::f64;
    if (text == "f32") return DType::f32;
    if (text == "i64") return DType::i64;
    return std::nullopt;
}

DType promote(DType a, DType b) {
    if (a == b) return a;
    // Any mix other than f32+f32 / i64+i64 needs the full double range.
    return DType::f64;
}

bool converts_losslessly(DType from, DType to) {
    if (from == to) return true;
    switch (to) {
        case DType::f64: return true;
        case DType::f32: return false;
        case DType::i64: return false;
    }
    return false;
}

std::int64_t num_elements(const Shape& shape) {
    std::int64_t n = 1;
    for (auto d : shape) n *= d;
    return n;
}

std::string shape_to_string(const Shape& shape) {
    std::string s = "(";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(shape[i]);
    }
    return s + ")";
}

Tensor::Tensor(DType dtype, Shape shape, std::vector<double> data)
    : dtype_(dtype), shape_(std::move(shape)), data_(std::move(data)) {
    for (auto d : shape_) {
        if (d < 0) throw std::invalid_argument("tensor extent must be non-negative");
    }
    if (static_cast<std::int64_t>(data_.size()) != num_elements(shape_)) {
        throw std::invalid_argument("tensor data size " + std::to_string(data_.size()) +
                                    " does not match shape " + shape_to_string(shape_));
    }
    round_to_dtype();
}

Tensor Tensor::scalar(double value, DType dtype) { return Tensor(dtype, {}, {value}); }

Tensor Tensor::zeros(Shape shape, DType dtype) { return full(std::move(shape), 0.0, dtype); }

Tensor Tensor::full(Shape shape, double value, DType dtype) {
    auto n = static_cast<std::size_t>(num_elements(shape));
    return Tensor(dtype, std::move(shape), std::vector<double>(n, value));
}

Tensor Tensor::vector(std::vector<double> values, DType dtype) {
    Shape shape{static_cast<std::int64_t>(values.size())};
    return Tensor(dtype, std::move(shape), std::move(values));
}

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<double>> rows, DType dtype) {
    std::vector<double> data;
    std::int64_t cols = rows.size() ? static_cast<std::int64_t>(rows.begin()->size()) : 0;
    for (const auto& r : rows) {
        if (static_cast<std::int64_t>(r.size()) != cols) {
            throw std::invalid_argument("ragged matrix literal");
        }
        data.insert(data.end(), r.begin(), r.end());
    }
    return Tensor(dtype, {static_cast<std::int64_t>(rows.size()), cols}, std::move(data));
}

double Tensor::item() const {
    if (data_.size() != 1) {
        throw std::runtime_error("item() on tensor of shape " + shape_to_string(shape_));
    }
    return data_[0];
}

void Tensor::reset(DType dtype, const Shape& shape) {
    dtype_ = dtype;
    if (shape_ != shape) shape_ = shape;
    data_.resize(static_cast<std::size_t>(num_elements(shape)));
}

void Tensor::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

void Tensor::release() {
    std::vector<double>().swap(data_);
    shape_.clear();
}

void Tensor::round_to_dtype() {
    if (dtype_ == DType::f32) {
        for (auto& v : data_) v = static_cast<double>(static_cast<float>(v));
    } else if (dtype_ == DType::i64) {
        for (auto& v : data_) {
            if (std::isfinite(v) && v != std::trunc(v)) {
                throw std::runtime_error("non-integer value in i64 tensor");
            }
        }
    }
}

std::int64_t Tensor::row_size() const {
    if (shape_.empty()) throw std::runtime_error("row access on a scalar");
    std::int64_t n = 1;
    for (std::size_t i = 1; i < shape_.size(); ++i) n *= shape_[i];
    return n;
}

Tensor Tensor::row(std::int64_t index) const {
    auto stride = row_size();
    if (index < 0) index += shape_[0];
    if (index < 0 || index >= shape_[0]) throw std::out_of_range("row index out of range");
    Shape sub(shape_.begin() + 1, shape_.end());
    std::vector<double> values(data_.begin() + index * stride, data_.begin() + (index + 1) * stride);
    Tensor t;
    t.dtype_ = dtype_;
    t.shape_ = std::move(sub);
    t.data_ = std::move(values);
    return t;
}

std::string Tensor::to_string() const {
    std::ostringstream os;
    os.precision(17);
    if (shape_.empty()) {
        os << (data_.empty() ? 0.0 : data_[0]);
        return os.str();
    }
    // Nested brackets, row-major.
    std::size_t flat = 0;
    auto emit = [&](auto&& self, std::size_t axis) -> void {
        os << '[';
        for (std::int64_t i = 0; i < shape_[axis]; ++i) {
            if (i) os << ", ";
            if (axis + 1 == shape_.size()) {
                os << data_[flat++];
            } else {
                self(self, axis + 1);
            }
        }
        os << ']';
    };
    emit(emit, 0);
    return os.str();
}

bool operator==(const Tensor& a, const Tensor& b) {
    return a.dtype_ == b.dtype_ && a.shape_ == b.shape_ && a.data_ == b.data_;
}

bool bitwise_equal(const Tensor& a, const Tensor& b) {
    if (a.dtype() != b.dtype() || a.shape() != b.shape()) return false;
    auto x = a.data();
    auto y = b.data();
    return x.size() == y.size() &&
           (x.empty() || std::memcmp(x.data(), y.data(), x.size() * sizeof(double)) == 0);
}

}  // namespace graphc
