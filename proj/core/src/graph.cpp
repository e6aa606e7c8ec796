// Copyright 2026 The graphc Authors
// SPDX-License-Identifier: Apache-2.0

#include "graphc/graph.hpp"

#include <algorithm>
#include <cmath>
#include <atomic>
#include <functional>
#include <queue>
#include <set>
#include <sstream>
#include <unordered_set>

#include "graphc/op.hpp"

namespace graphc {

namespace {

std::atomic<std::uint64_t> next_id{1};

std::uint64_t fresh_id() { return next_id.fetch_add(1, std::memory_order_relaxed); }

const std::string kEmptyName;

std::string dot_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '"' || c == '\\') out += '\\';
        out += c;
    }
    return out;
}

}  // namespace

std::string_view origin_name(Origin origin) {
    switch (origin) {
        case Origin::input: return "input";
        case Origin::shared: return "shared";
        case Origin::constant: return "constant";
        case Origin::output: return "output";
    }
    return "?";
}

// ---- Variable --------------------------------------------------------------

VarId Variable::id() const {
    if (leaf_) return leaf_->id;
    if (owner_) return owner_->outputs_[index_].id;
    return 0;
}

const TensorType& Variable::type() const {
    if (leaf_) return leaf_->type;
    if (owner_) return owner_->outputs_[index_].type;
    throw GraphError("type() of a null variable");
}

Origin Variable::origin() const { return leaf_ ? leaf_->origin : Origin::output; }

const std::string& Variable::name() const {
    if (leaf_) return leaf_->name;
    if (owner_) return owner_->outputs_[index_].name;
    return kEmptyName;
}

std::string Variable::display_name() const {
    if (!name().empty()) return name();
    if (leaf_ && leaf_->origin == Origin::constant && leaf_->type.is_scalar()) {
        std::ostringstream os;
        os << leaf_->constant->item();
        return os.str();
    }
    if (owner_) return owner_->op().name() + "#" + std::to_string(id());
    return std::string(origin_name(origin())) + "#" + std::to_string(id());
}

const Variable& Variable::set_name(std::string name) const {
    if (leaf_) {
        leaf_->name = std::move(name);
    } else if (owner_) {
        owner_->outputs_[index_].name = std::move(name);
    }
    return *this;
}

const Tensor& Variable::constant_value() const {
    if (!leaf_ || leaf_->origin != Origin::constant) {
        throw GraphError("constant_value() of non-constant variable " + display_name());
    }
    return *leaf_->constant;
}

const std::shared_ptr<SharedStorage>& Variable::shared_storage() const {
    if (!leaf_ || leaf_->origin != Origin::shared) {
        throw GraphError("shared_storage() of non-shared variable " + display_name());
    }
    return leaf_->shared;
}

Variable make_input(TensorType type, std::string name) {
    Variable v;
    v.leaf_ = std::make_shared<const Variable::Leaf>(
        Variable::Leaf{fresh_id(), std::move(type), Origin::input, std::move(name), nullptr, nullptr});
    return v;
}

Variable make_shared(Tensor initial, std::string name) {
    Variable v;
    auto type = TensorType::of(initial);
    auto storage = std::make_shared<SharedStorage>(SharedStorage{std::move(initial)});
    v.leaf_ = std::make_shared<const Variable::Leaf>(Variable::Leaf{
        fresh_id(), std::move(type), Origin::shared, std::move(name), nullptr, std::move(storage)});
    return v;
}

Variable make_constant(Tensor value, std::string name) {
    Variable v;
    auto type = TensorType::of(value);
    v.leaf_ = std::make_shared<const Variable::Leaf>(
        Variable::Leaf{fresh_id(), std::move(type), Origin::constant, std::move(name),
                       std::make_shared<const Tensor>(std::move(value)), nullptr});
    return v;
}

Variable scalar_constant(double value, DType dtype) {
    return make_constant(Tensor::scalar(value, dtype));
}

std::optional<double> scalar_constant_value(const Variable& v) {
    if (!v || v.origin() != Origin::constant || !v.type().is_scalar()) return std::nullopt;
    return v.constant_value().item();
}

bool is_scalar_constant(const Variable& v, double value) {
    auto c = scalar_constant_value(v);
    return c && *c == value;
}

// ---- ApplyNode -------------------------------------------------------------

Variable ApplyNode::output(std::size_t index) const {
    if (index >= outputs_.size()) throw GraphError("output index out of range");
    Variable v;
    v.owner_ = shared_from_this();
    v.index_ = index;
    return v;
}

std::vector<Variable> ApplyNode::outputs() const {
    std::vector<Variable> out;
    out.reserve(outputs_.size());
    for (std::size_t i = 0; i < outputs_.size(); ++i) out.push_back(output(i));
    return out;
}

std::vector<Variable> apply(OpPtr op, std::vector<Variable> inputs) {
    if (!op) throw GraphError("apply() with a null op");
    std::vector<TensorType> in_types;
    in_types.reserve(inputs.size());
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        if (!inputs[i]) throw TypeError(op->name(), i, "null input variable");
        in_types.push_back(inputs[i].type());
    }
    auto out_types = op->infer(in_types);
    std::shared_ptr<ApplyNode> node(new ApplyNode());
    node->id_ = fresh_id();
    node->op_ = std::move(op);
    node->inputs_ = std::move(inputs);
    node->outputs_.reserve(out_types.size());
    for (auto& t : out_types) {
        node->outputs_.push_back(ApplyNode::OutputSlot{fresh_id(), std::move(t), {}});
    }
    return std::const_pointer_cast<const ApplyNode>(node)->outputs();
}

Variable apply1(OpPtr op, std::vector<Variable> inputs) {
    auto name = op ? op->name() : std::string("?");
    auto outs = apply(std::move(op), std::move(inputs));
    if (outs.size() != 1) throw GraphError("op '" + name + "' does not have a single output");
    return outs[0];
}

void rewire_input_for_testing(const NodePtr& node, std::size_t index, const Variable& replacement) {
    auto* mutable_node = const_cast<ApplyNode*>(node.get());
    mutable_node->inputs_.at(index) = replacement;
}

// ---- Graph traversal -------------------------------------------------------

std::vector<Variable> Graph::roots() const {
    std::vector<Variable> r = outputs;
    for (const auto& u : updates) r.push_back(u.expr);
    return r;
}

std::vector<NodePtr> collect_nodes(std::span<const Variable> roots) {
    std::vector<NodePtr> result;
    std::unordered_set<std::uint64_t> seen;
    std::vector<const ApplyNode*> stack;
    auto visit = [&](const Variable& v) {
        if (v && v.owner() && seen.insert(v.owner()->id()).second) {
            result.push_back(v.owner());
            stack.push_back(v.owner().get());
        }
    };
    for (const auto& r : roots) visit(r);
    while (!stack.empty()) {
        const ApplyNode* n = stack.back();
        stack.pop_back();
        for (const auto& in : n->inputs()) visit(in);
    }
    return result;
}

std::vector<NodePtr> collect_nodes(const Graph& g) {
    auto roots = g.roots();
    return collect_nodes(std::span<const Variable>(roots));
}

std::vector<NodePtr> toposort(std::span<const Variable> roots) {
    auto nodes = collect_nodes(roots);
    std::unordered_map<std::uint64_t, std::size_t> index_of;
    for (std::size_t i = 0; i < nodes.size(); ++i) index_of[nodes[i]->id()] = i;

    std::vector<std::size_t> indegree(nodes.size(), 0);
    std::vector<std::vector<std::size_t>> consumers(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        for (const auto& in : nodes[i]->inputs()) {
            if (in.owner()) {
                auto p = index_of.at(in.owner()->id());
                consumers[p].push_back(i);
                ++indegree[i];
            }
        }
    }
    using Entry = std::pair<std::uint64_t, std::size_t>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> ready;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (indegree[i] == 0) ready.emplace(nodes[i]->id(), i);
    }
    std::vector<NodePtr> order;
    order.reserve(nodes.size());
    while (!ready.empty()) {
        auto [id, i] = ready.top();
        ready.pop();
        order.push_back(nodes[i]);
        for (auto c : consumers[i]) {
            if (--indegree[c] == 0) ready.emplace(nodes[c]->id(), c);
        }
    }
    if (order.size() != nodes.size()) throw GraphError("cycle detected in graph");
    return order;
}

std::vector<NodePtr> toposort(const Graph& g) {
    auto roots = g.roots();
    return toposort(std::span<const Variable>(roots));
}

std::vector<Variable> collect_leaves(std::span<const Variable> roots) {
    std::vector<Variable> leaves;
    std::unordered_set<VarId> seen;
    auto take = [&](const Variable& v) {
        if (v && v.is_leaf() && seen.insert(v.id()).second) leaves.push_back(v);
    };
    for (const auto& r : roots) take(r);
    for (const auto& n : collect_nodes(roots)) {
        for (const auto& in : n->inputs()) take(in);
    }
    return leaves;
}

// ---- Validation ------------------------------------------------------------

std::vector<std::string> validate(const Graph& g) {
    std::vector<std::string> violations;
    auto roots = g.roots();
    for (const auto& r : roots) {
        if (!r) {
            violations.emplace_back("null output or update expression");
            return violations;
        }
    }
    auto nodes = collect_nodes(std::span<const Variable>(roots));

    try {
        toposort(std::span<const Variable>(roots));
    } catch (const GraphError&) {
        violations.emplace_back("cycle: graph contains a dependency cycle");
    }

    for (const auto& n : nodes) {
        std::vector<TensorType> in_types;
        for (const auto& in : n->inputs()) in_types.push_back(in.type());
        try {
            auto out_types = n->op().infer(in_types);
            if (out_types.size() != n->num_outputs()) {
                violations.push_back("arity mismatch: node " + std::to_string(n->id()) + " (" +
                                     n->op().name() + ")");
            } else {
                for (std::size_t i = 0; i < out_types.size(); ++i) {
                    if (!(out_types[i] == n->output_type(i))) {
                        violations.push_back("type mismatch: node " + std::to_string(n->id()) +
                                             " (" + n->op().name() + ") output " +
                                             std::to_string(i) + " is " +
                                             n->output_type(i).to_string() + ", inferred " +
                                             out_types[i].to_string());
                    }
                }
            }
        } catch (const std::exception& e) {
            violations.push_back("type error: node " + std::to_string(n->id()) + ": " + e.what());
        }
    }

    std::unordered_set<VarId> bound;
    for (const auto& in : g.inputs) {
        if (!in || in.origin() != Origin::input) {
            violations.push_back("graph input '" + (in ? in.display_name() : std::string("null")) +
                                 "' is not an input variable");
        }
        if (in && !bound.insert(in.id()).second) {
            violations.push_back("duplicate graph input '" + in.display_name() + "'");
        }
    }
    for (const auto& leaf : collect_leaves(std::span<const Variable>(roots))) {
        if (leaf.origin() == Origin::input && !bound.count(leaf.id())) {
            violations.push_back("unbound input: '" + leaf.display_name() +
                                 "' is used but not a graph input");
        }
    }

    std::unordered_set<VarId> targets;
    for (const auto& u : g.updates) {
        if (!u.target || u.target.origin() != Origin::shared) {
            violations.push_back("update target '" +
                                 (u.target ? u.target.display_name() : std::string("null")) +
                                 "' is not a shared variable");
            continue;
        }
        if (!targets.insert(u.target.id()).second) {
            violations.push_back("duplicate update of '" + u.target.display_name() + "'");
        }
        if (!(u.target.type() == u.expr.type())) {
            violations.push_back("update type mismatch: '" + u.target.display_name() + "' is " +
                                 u.target.type().to_string() + ", update expression is " +
                                 u.expr.type().to_string());
        }
    }
    return violations;
}

// ---- Cloning ---------------------------------------------------------------

std::vector<Variable> clone_with_substitutions(std::span<const Variable> roots,
                                               const Substitutions& subs, bool check_types) {
    for (const auto& [id, replacement] : subs) {
        (void)id;
        if (!replacement) throw GraphError("substitution with a null variable");
    }
    std::unordered_map<VarId, Variable> memo;
    auto lookup = [&](const Variable& v) -> Variable {
        if (auto it = memo.find(v.id()); it != memo.end()) return it->second;
        return v;
    };
    // Type-check substitutions against the variables they replace as we meet them.
    auto check = [&](const Variable& original, const Variable& replacement) {
        if (check_types && !(original.type() == replacement.type())) {
            throw GraphError("substitution type mismatch for '" + original.display_name() +
                             "': " + original.type().to_string() + " vs " +
                             replacement.type().to_string());
        }
    };
    for (const auto& leaf : collect_leaves(roots)) {
        if (auto it = subs.find(leaf.id()); it != subs.end()) {
            check(leaf, it->second);
            memo[leaf.id()] = it->second;
        }
    }
    for (const auto& node : toposort(roots)) {
        std::vector<Variable> inputs;
        bool changed = false;
        for (const auto& in : node->inputs()) {
            inputs.push_back(lookup(in));
            changed |= inputs.back().id() != in.id();
        }
        std::vector<Variable> outs = changed ? apply(node->op_ptr(), std::move(inputs)) : node->outputs();
        for (std::size_t i = 0; i < outs.size(); ++i) {
            auto original = node->output(i);
            if (auto it = subs.find(original.id()); it != subs.end()) {
                check(original, it->second);
                memo[original.id()] = it->second;
            } else if (changed) {
                outs[i].set_name(original.name());
                memo[original.id()] = outs[i];
            }
        }
    }
    std::vector<Variable> result;
    result.reserve(roots.size());
    for (const auto& r : roots) {
        if (auto it = subs.find(r.id()); it != subs.end()) {
            check(r, it->second);
            result.push_back(it->second);
        } else {
            result.push_back(lookup(r));
        }
    }
    return result;
}

Graph clone_with_substitutions(const Graph& g, const Substitutions& subs, bool check_types) {
    auto roots = g.roots();
    auto new_roots = clone_with_substitutions(std::span<const Variable>(roots), subs, check_types);
    Graph out;
    for (const auto& in : g.inputs) {
        auto it = subs.find(in.id());
        if (it != subs.end() && it->second.origin() == Origin::input) {
            out.inputs.push_back(it->second);
        } else {
            out.inputs.push_back(in);
        }
    }
    out.outputs.assign(new_roots.begin(), new_roots.begin() + static_cast<long>(g.outputs.size()));
    for (std::size_t i = 0; i < g.updates.size(); ++i) {
        auto target = g.updates[i].target;
        if (auto it = subs.find(target.id());
            it != subs.end() && it->second.origin() == Origin::shared) {
            target = it->second;
        }
        out.updates.push_back({target, new_roots[g.outputs.size() + i]});
    }
    return out;
}

// ---- Structural equality ---------------------------------------------------

namespace {

struct PairHash {
    std::size_t operator()(const std::pair<VarId, VarId>& p) const {
        return std::hash<VarId>{}(p.first) * 31u + std::hash<VarId>{}(p.second);
    }
};

bool struct_eq(const Variable& a, const Variable& b,
               std::unordered_set<std::pair<VarId, VarId>, PairHash>& proven) {
    if (a.id() == b.id()) return true;
    if (proven.count({a.id(), b.id()})) return true;
    if (a.is_leaf() || b.is_leaf()) {
        auto ca = scalar_constant_value(a);
        auto cb = scalar_constant_value(b);
        return ca && cb && a.type() == b.type() &&
               (*ca == *cb || (std::isnan(*ca) && std::isnan(*cb)));
    }
    if (a.index() != b.index()) return false;
    const auto& na = *a.owner();
    const auto& nb = *b.owner();
    if (!na.op().equals(nb.op())) return false;
    if (na.inputs().size() != nb.inputs().size()) return false;
    for (std::size_t i = 0; i < na.inputs().size(); ++i) {
        if (!struct_eq(na.inputs()[i], nb.inputs()[i], proven)) return false;
    }
    proven.insert({a.id(), b.id()});
    return true;
}

}  // namespace

bool structurally_equal(const Variable& a, const Variable& b) {
    std::unordered_set<std::pair<VarId, VarId>, PairHash> proven;
    return struct_eq(a, b, proven);
}

bool structurally_equal(const Graph& a, const Graph& b) {
    if (a.inputs.size() != b.inputs.size() || a.outputs.size() != b.outputs.size() ||
        a.updates.size() != b.updates.size()) {
        return false;
    }
    std::unordered_set<std::pair<VarId, VarId>, PairHash> proven;
    for (std::size_t i = 0; i < a.inputs.size(); ++i) {
        if (a.inputs[i].id() != b.inputs[i].id()) return false;
    }
    for (std::size_t i = 0; i < a.outputs.size(); ++i) {
        if (!struct_eq(a.outputs[i], b.outputs[i], proven)) return false;
    }
    for (std::size_t i = 0; i < a.updates.size(); ++i) {
        if (a.updates[i].target.id() != b.updates[i].target.id()) return false;
        if (!struct_eq(a.updates[i].expr, b.updates[i].expr, proven)) return false;
    }
    return true;
}

// ---- DOT -------------------------------------------------------------------

std::string export_dot(const Graph& g, const std::string& title) {
    std::ostringstream os;
    os << "digraph \"" << dot_escape(title) << "\" {\n";
    os << "  rankdir=TB;\n";
    auto roots = g.roots();
    auto order = toposort(std::span<const Variable>(roots));
    std::unordered_set<VarId> leaves_emitted;
    auto leaf_node = [&](const Variable& v) {
        if (!leaves_emitted.insert(v.id()).second) return;
        const char* shape = v.origin() == Origin::constant ? "plaintext" : "box";
        os << "  v" << v.id() << " [label=\"" << dot_escape(v.display_name()) << " : "
           << v.type().to_string() << "\", shape=" << shape << ", kind=" << origin_name(v.origin())
           << "];\n";
    };
    auto source = [&](const Variable& v) {
        return v.is_leaf() ? "v" + std::to_string(v.id()) : "n" + std::to_string(v.owner()->id());
    };
    for (const auto& n : order) {
        std::string types;
        for (std::size_t i = 0; i < n->num_outputs(); ++i) {
            if (i) types += ", ";
            types += n->output_type(i).to_string();
        }
        os << "  n" << n->id() << " [label=\"" << dot_escape(n->op().label()) << " : " << types
           << "\", shape=ellipse, kind=apply];\n";
        for (std::size_t i = 0; i < n->inputs().size(); ++i) {
            const auto& in = n->inputs()[i];
            if (in.is_leaf()) leaf_node(in);
            os << "  " << source(in) << " -> n" << n->id() << " [label=\"" << i << "\"];\n";
        }
    }
    for (std::size_t i = 0; i < g.outputs.size(); ++i) {
        const auto& out = g.outputs[i];
        if (out.is_leaf()) leaf_node(out);
        os << "  out" << i << " [label=\"output " << i << "\", shape=doublecircle, kind=output];\n";
        os << "  " << source(out) << " -> out" << i << ";\n";
    }
    for (std::size_t i = 0; i < g.updates.size(); ++i) {
        const auto& u = g.updates[i];
        if (u.expr.is_leaf()) leaf_node(u.expr);
        os << "  upd" << i << " [label=\"update " << dot_escape(u.target.display_name())
           << "\", shape=doublecircle, kind=output];\n";
        os << "  " << source(u.expr) << " -> upd" << i << ";\n";
    }
    os << "}\n";
    return os.str();
}

std::size_t count_nodes(const Graph& g) { return collect_nodes(g).size(); }

std::size_t count_nodes_named(const Graph& g, std::string_view op_name) {
    std::size_t n = 0;
    for (const auto& node : collect_nodes(g)) {
        if (node->op().name() == op_name) ++n;
    }
    return n;
}

}  // namespace graphc
