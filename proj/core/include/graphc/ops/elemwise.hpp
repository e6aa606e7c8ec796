// Copyright 2026 The graphc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "graphc/op.hpp"
#include "graphc/ops/scalar.hpp"

namespace graphc {

/// Applies one scalar function per element with right-aligned broadcasting.
class Elemwise final : public Op {
public:
    explicit Elemwise(ScalarOpCode code, double param = 0.0);

    ScalarOpCode code() const { return code_; }
    double param() const { return param_; }

    std::string name() const override;
    std::string label() const override;
    std::vector<TensorType> infer(std::span<const TensorType> inputs) const override;
    void compute(std::span<const Tensor* const> inputs, std::span<Tensor> outputs,
                 OpWorkspace* workspace) const override;
    bool has_grad() const override { return true; }
    std::vector<OptVar> grad(std::span<const Variable> inputs, std::span<const Variable> outputs,
                             std::span<const OptVar> output_grads) const override;
    bool has_rop() const override { return true; }
    std::vector<OptVar> rop(std::span<const Variable> inputs, std::span<const Variable> outputs,
                            std::span<const OptVar> perturbations) const override;
    const ScalarProgram* scalar_body() const override { return &program_; }
    bool equals(const Op& other) const override;
    std::size_t hash() const override;

private:
    ScalarOpCode code_;
    double param_;
    ScalarProgram program_;
};

/// Fused elementwise kernel: evaluates a scalar program per output element
/// in a single pass. Only produced by the fusion pass.
class Composite final : public Op {
public:
    explicit Composite(ScalarProgram program);

    const ScalarProgram& program() const { return program_; }

    std::string name() const override { return "composite"; }
    std::string label() const override;
    std::vector<TensorType> infer(std::span<const TensorType> inputs) const override;
    void compute(std::span<const Tensor* const> inputs, std::span<Tensor> outputs,
                 OpWorkspace* workspace) const override;
    const ScalarProgram* scalar_body() const override { return &program_; }
    bool equals(const Op& other) const override;
    std::size_t hash() const override;

private:
    ScalarProgram program_;
};

/// Output dtype of an elementwise op over the given input dtypes.
DType elemwise_dtype(const ScalarProgram& program, std::span<const TensorType> inputs);

/// Returns the Elemwise op producing `v` when its code matches, else null.
const Elemwise* elemwise_producer(const Variable& v, ScalarOpCode code);

}  // namespace graphc
