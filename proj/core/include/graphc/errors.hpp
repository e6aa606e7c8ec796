// Copyright 2026 The graphc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace graphc {

class GraphError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised by type inference; names the op and the offending input.
class TypeError : public GraphError {
public:
    TypeError(std::string op, std::size_t input_index, const std::string& detail)
        : GraphError("op '" + op + "': input " + std::to_string(input_index) + ": " + detail),
          op_(std::move(op)),
          input_index_(input_index) {}

    const std::string& op() const { return op_; }
    std::size_t input_index() const { return input_index_; }

private:
    std::string op_;
    std::size_t input_index_;
};

class NonDifferentiableError : public GraphError {
public:
    using GraphError::GraphError;
};

class RopUnsupportedError : public GraphError {
public:
    using GraphError::GraphError;
};

/// Failure while executing a kernel (shape mismatch with Unknown extents,
/// untrusted input of the wrong dtype, ...).
class KernelError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Call-time input conversion failure (trust_input=false path).
class InputConversionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace graphc
