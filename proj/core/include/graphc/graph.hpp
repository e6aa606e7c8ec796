// Copyright 2026 The graphc Authors
// SPDX-License-Identifier: Apache-2.0
//
// Symbolic variables, op-application nodes and whole-function graphs.
//
// Nodes are immutable once built and own strong references to their input
// variables only, so an expression DAG is kept alive by whoever holds its
// outputs. A Variable is either a leaf (input, shared, constant) or the
// `index`-th output of an ApplyNode.

#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "graphc/errors.hpp"
#include "graphc/tensor.hpp"
#include "graphc/types.hpp"

namespace graphc {

class Op;
class ApplyNode;
using OpPtr = std::shared_ptr<const Op>;
using NodePtr = std::shared_ptr<const ApplyNode>;
using VarId = std::uint64_t;

enum class Origin : std::uint8_t { input, shared, constant, output };

std::string_view origin_name(Origin origin);

/// Mutable storage behind a shared variable. Compiled functions read it on
/// every call and write declared updates back into it.
struct SharedStorage {
    Tensor value;
};

class Variable {
public:
    Variable() = default;

    VarId id() const;
    const TensorType& type() const;
    Origin origin() const;
    const std::string& name() const;
    /// Human-readable name, falling back to a synthesized one.
    std::string display_name() const;
    const Variable& set_name(std::string name) const;

    bool is_leaf() const { return leaf_ != nullptr; }
    const NodePtr& owner() const { return owner_; }
    std::size_t index() const { return index_; }

    /// Value of a Constant leaf.
    const Tensor& constant_value() const;
    /// Storage of a Shared leaf.
    const std::shared_ptr<SharedStorage>& shared_storage() const;

    explicit operator bool() const { return leaf_ || owner_; }
    friend bool operator==(const Variable& a, const Variable& b) { return a.id() == b.id(); }

private:
    struct Leaf {
        VarId id;
        TensorType type;
        Origin origin;
        mutable std::string name;
        std::shared_ptr<const Tensor> constant;
        std::shared_ptr<SharedStorage> shared;
    };

    friend class ApplyNode;
    friend Variable make_input(TensorType, std::string);
    friend Variable make_shared(Tensor, std::string);
    friend Variable make_constant(Tensor, std::string);

    std::shared_ptr<const Leaf> leaf_;
    NodePtr owner_;
    std::size_t index_ = 0;
};

struct VariableHash {
    std::size_t operator()(const Variable& v) const { return std::hash<VarId>{}(v.id()); }
};

Variable make_input(TensorType type, std::string name = {});
Variable make_shared(Tensor initial, std::string name = {});
Variable make_constant(Tensor value, std::string name = {});
Variable scalar_constant(double value, DType dtype = DType::f64);

/// True for a rank-0 Constant leaf equal to `value`.
bool is_scalar_constant(const Variable& v, double value);
std::optional<double> scalar_constant_value(const Variable& v);

class ApplyNode : public std::enable_shared_from_this<ApplyNode> {
public:
    std::uint64_t id() const { return id_; }
    const Op& op() const { return *op_; }
    const OpPtr& op_ptr() const { return op_; }
    const std::vector<Variable>& inputs() const { return inputs_; }
    std::size_t num_outputs() const { return outputs_.size(); }
    Variable output(std::size_t index) const;
    std::vector<Variable> outputs() const;
    const TensorType& output_type(std::size_t index) const { return outputs_[index].type; }
    VarId output_id(std::size_t index) const { return outputs_[index].id; }

private:
    struct OutputSlot {
        VarId id;
        TensorType type;
        mutable std::string name;
    };

    friend class Variable;
    friend std::vector<Variable> apply(OpPtr op, std::vector<Variable> inputs);
    friend void rewire_input_for_testing(const NodePtr& node, std::size_t index,
                                         const Variable& replacement);

    ApplyNode() = default;

    std::uint64_t id_ = 0;
    OpPtr op_;
    std::vector<Variable> inputs_;
    std::vector<OutputSlot> outputs_;
};

/// Creates a node applying `op` to `inputs`; runs type inference and throws
/// TypeError on mismatch. No evaluation happens.
std::vector<Variable> apply(OpPtr op, std::vector<Variable> inputs);
Variable apply1(OpPtr op, std::vector<Variable> inputs);

/// Replaces an input of an existing node in place. Only meant for building
/// deliberately corrupted graphs in tests (e.g. cycles).
void rewire_input_for_testing(const NodePtr& node, std::size_t index, const Variable& replacement);

struct Update {
    Variable target;
    Variable expr;
};

struct Graph {
    std::vector<Variable> inputs;
    std::vector<Variable> outputs;
    std::vector<Update> updates;

    /// Outputs followed by update expressions: everything the graph computes.
    std::vector<Variable> roots() const;
};

/// Apply nodes reachable from the graph roots (unordered, deduplicated).
std::vector<NodePtr> collect_nodes(const Graph& g);
std::vector<NodePtr> collect_nodes(std::span<const Variable> roots);

/// Dependency order; ties broken by node id. Throws GraphError on a cycle.
std::vector<NodePtr> toposort(const Graph& g);
std::vector<NodePtr> toposort(std::span<const Variable> roots);

/// All violations of the graph invariants; empty means valid.
std::vector<std::string> validate(const Graph& g);

using Substitutions = std::unordered_map<VarId, Variable>;

/// Rebuilds `g` with variables replaced per `subs`. Nodes whose inputs are
/// unaffected are shared with the original. Throws GraphError on a
/// type-mismatched substitution unless `check_types` is false, in which
/// case consumers are re-inferred against the new types.
Graph clone_with_substitutions(const Graph& g, const Substitutions& subs,
                               bool check_types = true);
/// Same, for a set of root variables; returns the rebuilt roots.
std::vector<Variable> clone_with_substitutions(std::span<const Variable> roots,
                                               const Substitutions& subs,
                                               bool check_types = true);

/// Structural equality: same ops (by Op::equals) applied to structurally
/// equal inputs; leaves compare by identity, scalar constants by value.
bool structurally_equal(const Graph& a, const Graph& b);
bool structurally_equal(const Variable& a, const Variable& b);

/// GraphViz rendering; node labels are op name plus output type.
std::string export_dot(const Graph& g, const std::string& title = "graph");

std::size_t count_nodes(const Graph& g);
std::size_t count_nodes_named(const Graph& g, std::string_view op_name);

/// Leaves (input/shared/constant) reachable from `roots`.
std::vector<Variable> collect_leaves(std::span<const Variable> roots);

}  // namespace graphc
