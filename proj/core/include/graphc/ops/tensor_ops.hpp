// Copyright 2026 The graphc Authors
// SPDX-License-Identifier: Apache-2.0
//
// Reductions, linear algebra, shape manipulation and row-wise helpers.

#pragma once

#include <vector>

#include "graphc/op.hpp"

namespace graphc {

class Reduce final : public Op {
public:
    enum class Kind : std::uint8_t { sum, max };

    /// `axes` must be normalized (non-negative, sorted, unique); empty
    /// reduces every axis.
    Reduce(Kind kind, std::vector<int> axes, bool keepdims);

    Kind kind() const { return kind_; }
    const std::vector<int>& axes() const { return axes_; }
    bool keepdims() const { return keepdims_; }
    /// Reduced axes for an input of the given rank.
    std::vector<int> resolved_axes(std::size_t rank) const;

    std::string name() const override { return kind_ == Kind::sum ? "sum" : "max"; }
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

private:
    Kind kind_;
    std::vector<int> axes_;
    bool keepdims_;
};

/// vector.vector, matrix.vector, vector.matrix and matrix.matrix products.
class Dot final : public Op {
public:
    std::string name() const override { return "dot"; }
    std::vector<TensorType> infer(std::span<const TensorType> inputs) const override;
    void compute(std::span<const Tensor* const> inputs, std::span<Tensor> outputs,
                 OpWorkspace* workspace) const override;
    bool has_grad() const override { return true; }
    std::vector<OptVar> grad(std::span<const Variable> inputs, std::span<const Variable> outputs,
                             std::span<const OptVar> output_grads) const override;
    bool has_rop() const override { return true; }
    std::vector<OptVar> rop(std::span<const Variable> inputs, std::span<const Variable> outputs,
                            std::span<const OptVar> perturbations) const override;
};

class Transpose final : public Op {
public:
    explicit Transpose(std::vector<int> perm);
    const std::vector<int>& perm() const { return perm_; }

    std::string name() const override { return "transpose"; }
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

private:
    std::vector<int> perm_;
};

/// Reshape to a static target; at most one extent may be -1 (inferred).
class Reshape final : public Op {
public:
    explicit Reshape(std::vector<std::int64_t> target);
    const std::vector<std::int64_t>& target() const { return target_; }

    std::string name() const override { return "reshape"; }
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

private:
    std::vector<std::int64_t> target_;
};

/// reshape_like(x, like): x's data with like's runtime shape.
class ReshapeLike final : public Op {
public:
    std::string name() const override { return "reshape_like"; }
    std::vector<TensorType> infer(std::span<const TensorType> inputs) const override;
    void compute(std::span<const Tensor* const> inputs, std::span<Tensor> outputs,
                 OpWorkspace* workspace) const override;
    bool has_grad() const override { return true; }
    std::vector<OptVar> grad(std::span<const Variable> inputs, std::span<const Variable> outputs,
                             std::span<const OptVar> output_grads) const override;
    bool has_rop() const override { return true; }
    std::vector<OptVar> rop(std::span<const Variable> inputs, std::span<const Variable> outputs,
                            std::span<const OptVar> perturbations) const override;
};

/// Inserts a static extent-1 axis.
class ExpandDims final : public Op {
public:
    explicit ExpandDims(int axis) : axis_(axis) {}
    int axis() const { return axis_; }

    std::string name() const override { return "expand_dims"; }
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

private:
    int axis_;
};

/// broadcast_like(x, like): x broadcast to like's shape (like's values unused).
class BroadcastLike final : public Op {
public:
    std::string name() const override { return "broadcast_like"; }
    std::vector<TensorType> infer(std::span<const TensorType> inputs) const override;
    void compute(std::span<const Tensor* const> inputs, std::span<Tensor> outputs,
                 OpWorkspace* workspace) const override;
    bool has_grad() const override { return true; }
    std::vector<OptVar> grad(std::span<const Variable> inputs, std::span<const Variable> outputs,
                             std::span<const OptVar> output_grads) const override;
    bool has_rop() const override { return true; }
    std::vector<OptVar> rop(std::span<const Variable> inputs, std::span<const Variable> outputs,
                            std::span<const OptVar> perturbations) const override;
};

/// Zeros with the runtime shape and dtype of its input.
class ZerosLike final : public Op {
public:
    std::string name() const override { return "zeros_like"; }
    std::vector<TensorType> infer(std::span<const TensorType> inputs) const override;
    void compute(std::span<const Tensor* const> inputs, std::span<Tensor> outputs,
                 OpWorkspace* workspace) const override;
    bool has_grad() const override { return true; }
    std::vector<OptVar> grad(std::span<const Variable> inputs, std::span<const Variable> outputs,
                             std::span<const OptVar> output_grads) const override;
    bool has_rop() const override { return true; }
    std::vector<OptVar> rop(std::span<const Variable> inputs, std::span<const Variable> outputs,
                            std::span<const OptVar> perturbations) const override;
};

class ArgMax final : public Op {
public:
    explicit ArgMax(int axis) : axis_(axis) {}
    int axis() const { return axis_; }

    std::string name() const override { return "argmax"; }
    std::string label() const override;
    std::vector<TensorType> infer(std::span<const TensorType> inputs) const override;
    void compute(std::span<const Tensor* const> inputs, std::span<Tensor> outputs,
                 OpWorkspace* workspace) const override;
    bool has_grad() const override { return true; }
    std::vector<OptVar> grad(std::span<const Variable> inputs, std::span<const Variable> outputs,
                             std::span<const OptVar> output_grads) const override;

private:
    int axis_;
};

/// x[index] along the leading axis; negative indices count from the end.
class TakeRow final : public Op {
public:
    explicit TakeRow(std::int64_t index) : index_(index) {}
    std::int64_t index() const { return index_; }

    std::string name() const override { return "take_row"; }
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

private:
    std::int64_t index_;
};

/// pad_rows(src, like): zeros shaped like `like` with a block of rows taken
/// from src. The block starts at `start` (negative counts from the end), or
/// occupies the last rows when `from_end` is set.
class PadRows final : public Op {
public:
    PadRows(std::int64_t start, bool from_end) : start_(start), from_end_(from_end) {}
    std::int64_t start() const { return start_; }
    bool from_end() const { return from_end_; }

    std::string name() const override { return "pad_rows"; }
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

private:
    std::int64_t start_;
    bool from_end_;
};

/// Concatenation of two tensors along the leading axis.
class ConcatRows final : public Op {
public:
    std::string name() const override { return "concat_rows"; }
    std::vector<TensorType> infer(std::span<const TensorType> inputs) const override;
    void compute(std::span<const Tensor* const> inputs, std::span<Tensor> outputs,
                 OpWorkspace* workspace) const override;
    bool has_grad() const override { return true; }
    std::vector<OptVar> grad(std::span<const Variable> inputs, std::span<const Variable> outputs,
                             std::span<const OptVar> output_grads) const override;
    bool has_rop() const override { return true; }
    std::vector<OptVar> rop(std::span<const Variable> inputs, std::span<const Variable> outputs,
                            std::span<const OptVar> perturbations) const override;
};

/// rows_like(x, like): rows(like) consecutive rows of x, placed as in PadRows.
class RowsLike final : public Op {
public:
    RowsLike(std::int64_t start, bool from_end) : start_(start), from_end_(from_end) {}
    std::int64_t start() const { return start_; }
    bool from_end() const { return from_end_; }

    std::string name() const override { return "rows_like"; }
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

private:
    std::int64_t start_;
    bool from_end_;
};

/// Stacks same-typed tensors along a new leading axis.
class StackRows final : public Op {
public:
    std::string name() const override { return "stack_rows"; }
    std::vector<TensorType> infer(std::span<const TensorType> inputs) const override;
    void compute(std::span<const Tensor* const> inputs, std::span<Tensor> outputs,
                 OpWorkspace* workspace) const override;
    bool has_grad() const override { return true; }
    std::vector<OptVar> grad(std::span<const Variable> inputs, std::span<const Variable> outputs,
                             std::span<const OptVar> output_grads) const override;
    bool has_rop() const override { return true; }
    std::vector<OptVar> rop(std::span<const Variable> inputs, std::span<const Variable> outputs,
                            std::span<const OptVar> perturbations) const override;
};

/// Runtime extent of one axis as an i64 scalar.
class ShapeOf final : public Op {
public:
    explicit ShapeOf(int axis) : axis_(axis) {}
    int axis() const { return axis_; }

    std::string name() const override { return "shape_of"; }
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

private:
    int axis_;
};

/// Identity that pins a more precise static type (checked at runtime) and
/// converts dtype.
class Specify final : public Op {
public:
    explicit Specify(TensorType type) : type_(std::move(type)) {}
    const TensorType& type() const { return type_; }

    std::string name() const override { return "specify"; }
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

private:
    TensorType type_;
};

}  // namespace graphc
