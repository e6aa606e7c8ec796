// Copyright 2026 The graphc Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <functional>
#include <map>
#include <unordered_map>
#include <unordered_set>

#include "graphc/ops.hpp"
#include "graphc/ops/tensor_ops.hpp"
#include "graphc/scan.hpp"
#include "rewrite/cse.hpp"

namespace graphc {

namespace {

Variable conform(const Variable& v, const TensorType& t) {
    if (v.type() == t) return v;
    return specify(v, t);
}

// Editable view of a scan node.
struct Parts {
    struct Seq {
        Variable outer;
        std::vector<std::int64_t> offsets;
        std::vector<Variable> inner;
    };
    struct State {
        Variable init;
        std::vector<std::int64_t> taps;
        std::vector<Variable> inner;
        Variable update;
        std::int64_t keep = 0;
    };
    struct Nonseq {
        Variable outer;
        Variable inner;
    };
    struct Collected {
        Variable value;
        std::int64_t keep = 0;
    };

    ScanSteps steps = ScanSteps::derived;
    std::int64_t const_steps = 0;
    std::optional<Variable> n_var;
    bool reverse = false;
    bool inner_optimized = false;
    std::vector<Seq> seqs;
    std::vector<State> states;
    std::vector<Nonseq> nonseqs;
    std::vector<Collected> collected;
    std::optional<Variable> cond;

    std::int64_t max_offset0() const {
        return *std::max_element(seqs[0].offsets.begin(), seqs[0].offsets.end());
    }
    std::int64_t depth(std::size_t k) const {
        std::int64_t d = 0;
        for (auto t : states[k].taps) d = std::max(d, -t);
        return d;
    }
};

Parts decompose(const NodePtr& node) {
    const auto& sp = scan_op(node)->spec();
    const auto& in = node->inputs();
    Parts p;
    p.steps = sp.steps;
    p.const_steps = sp.const_steps;
    p.reverse = sp.reverse;
    p.inner_optimized = sp.inner_optimized;
    if (sp.steps == ScanSteps::symbolic) p.n_var = in[0];
    for (std::size_t s = 0; s < sp.n_sequences(); ++s) {
        Parts::Seq q{in[sp.outer_seq(s)], sp.seq_offsets[s], {}};
        for (std::size_t j = 0; j < q.offsets.size(); ++j) q.inner.push_back(sp.inner_inputs[sp.seq_input(s) + j]);
        p.seqs.push_back(std::move(q));
    }
    for (std::size_t k = 0; k < sp.n_states(); ++k) {
        Parts::State st{in[sp.outer_init(k)], sp.state_taps[k], {}, sp.inner_outputs[k], sp.keep_rows[k]};
        for (std::size_t j = 0; j < st.taps.size(); ++j) st.inner.push_back(sp.inner_inputs[sp.state_input(k) + j]);
        p.states.push_back(std::move(st));
    }
    for (std::size_t m = 0; m < sp.n_nonseqs; ++m) {
        p.nonseqs.push_back({in[sp.outer_nonseq(m)], sp.inner_inputs[sp.nonseq_input(m)]});
    }
    for (std::size_t j = 0; j < sp.n_collected; ++j) {
        p.collected.push_back({sp.inner_outputs[sp.n_states() + j], sp.keep_rows[sp.n_states() + j]});
    }
    if (sp.until) p.cond = sp.inner_outputs.back();
    return p;
}

std::vector<Variable> inner_roots(const Parts& p) {
    std::vector<Variable> r;
    for (const auto& s : p.states) r.push_back(s.update);
    for (const auto& c : p.collected) r.push_back(c.value);
    if (p.cond) r.push_back(*p.cond);
    return r;
}

void set_inner_roots(Parts& p, const std::vector<Variable>& r) {
    std::size_t i = 0;
    for (auto& s : p.states) s.update = r[i++];
    for (auto& c : p.collected) c.value = r[i++];
    if (p.cond) p.cond = r[i++];
}

void substitute_inner(Parts& p, const Substitutions& subs) {
    if (subs.empty()) return;
    set_inner_roots(p, clone_with_substitutions(inner_roots(p), subs));
}

std::vector<Variable> assemble(const Parts& p) {
    ScanSpec sp;
    std::vector<Variable> outer;
    sp.steps = p.steps;
    sp.const_steps = p.const_steps;
    sp.reverse = p.reverse;
    sp.until = p.cond.has_value();
    sp.inner_optimized = p.inner_optimized;
    if (p.n_var) outer.push_back(*p.n_var);
    for (const auto& s : p.seqs) {
        sp.seq_offsets.push_back(s.offsets);
        sp.inner_inputs.insert(sp.inner_inputs.end(), s.inner.begin(), s.inner.end());
        outer.push_back(s.outer);
    }
    for (const auto& st : p.states) {
        sp.state_taps.push_back(st.taps);
        sp.inner_inputs.insert(sp.inner_inputs.end(), st.inner.begin(), st.inner.end());
        sp.inner_outputs.push_back(st.update);
        sp.keep_rows.push_back(st.keep);
        outer.push_back(st.init);
    }
    for (const auto& n : p.nonseqs) {
        sp.inner_inputs.push_back(n.inner);
        outer.push_back(n.outer);
    }
    sp.n_nonseqs = p.nonseqs.size();
    for (const auto& c : p.collected) {
        sp.inner_outputs.push_back(c.value);
        sp.keep_rows.push_back(c.keep);
    }
    sp.n_collected = p.collected.size();
    if (p.cond) sp.inner_outputs.push_back(*p.cond);
    return make_scan(std::move(sp), std::move(outer));
}

std::vector<NodePtr> scan_nodes(const Graph& g) {
    std::vector<NodePtr> out;
    for (const auto& n : toposort(g)) {
        if (scan_op(n)) out.push_back(n);
    }
    return out;
}

// Replaces old outputs by new ones throughout `g`.
void replace_outputs(Graph& g, const Substitutions& subs, bool check_types = true) {
    g = clone_with_substitutions(g, subs, check_types);
}

// Variable whose leading extent provably equals that of `v`.
Variable row_root(Variable v) {
    while (!v.is_leaf()) {
        const auto& node = *v.owner();
        const auto rank = v.type().rank();
        if (rank == 0) return v;
        if (node.op().elementwise()) {
            std::optional<Variable> root;
            bool ok = true;
            for (const auto& x : node.inputs()) {
                if (x.type().rank() < rank || x.type().dims[0] == 1) continue;
                Variable r = row_root(x);
                if (root && root->id() != r.id()) ok = false;
                root = r;
            }
            if (!ok || !root) return v;
            return *root;
        }
        if (dynamic_cast<const Dot*>(&node.op()) && rank == 2 &&
            node.inputs()[0].type().rank() == 2) {
            v = node.inputs()[0];
            continue;
        }
        if (dynamic_cast<const Specify*>(&node.op())) {
            v = node.inputs()[0];
            continue;
        }
        return v;
    }
    return v;
}

std::unordered_set<std::uint64_t> ancestors(const NodePtr& node) {
    std::unordered_set<std::uint64_t> seen;
    std::vector<NodePtr> stack{node};
    while (!stack.empty()) {
        auto n = stack.back();
        stack.pop_back();
        for (const auto& in : n->inputs()) {
            if (in.is_leaf()) continue;
            if (seen.insert(in.owner()->id()).second) stack.push_back(in.owner());
        }
    }
    return seen;
}

// Consumers of each variable in `g`; graph roots count as a consumer
// with a null node.
std::unordered_map<VarId, std::vector<std::pair<NodePtr, std::size_t>>> clients_of(const Graph& g) {
    std::unordered_map<VarId, std::vector<std::pair<NodePtr, std::size_t>>> clients;
    for (const auto& n : toposort(g)) {
        for (std::size_t i = 0; i < n->inputs().size(); ++i) {
            clients[n->inputs()[i].id()].push_back({n, i});
        }
    }
    for (const auto& r : g.roots()) clients[r.id()].push_back({nullptr, 0});
    return clients;
}

// Merges equivalent states (same initial value and taps, updates equal
// once equivalent states are identified) and identical collected outputs.
// Returns, for every original output, its index after deduplication.
std::vector<std::size_t> dedupe(Parts& p, bool& changed) {
    const std::size_t ns = p.states.size();
    std::vector<std::size_t> cls(ns);
    // Initial partition.
    for (std::size_t k = 0; k < ns; ++k) {
        cls[k] = k;
        for (std::size_t q = 0; q < k; ++q) {
            if (cls[q] != q) continue;
            const auto& a = p.states[q];
            const auto& b = p.states[k];
            if (a.init.id() == b.init.id() && a.taps == b.taps && a.keep == b.keep &&
                a.update.type() == b.update.type()) {
                cls[k] = q;
                break;
            }
        }
    }
    // Refine to the greatest fixed point.
    for (bool split = true; split;) {
        split = false;
        Substitutions subs;
        for (std::size_t k = 0; k < ns; ++k) {
            if (cls[k] == k) continue;
            for (std::size_t j = 0; j < p.states[k].inner.size(); ++j) {
                subs.emplace(p.states[k].inner[j].id(), p.states[cls[k]].inner[j]);
            }
        }
        std::vector<Variable> updates;
        for (const auto& s : p.states) updates.push_back(s.update);
        auto canon = clone_with_substitutions(updates, subs);
        std::vector<std::size_t> next(ns);
        for (std::size_t k = 0; k < ns; ++k) {
            next[k] = k;
            if (cls[k] == k) continue;
            // First member of the same class with an equal update.
            for (std::size_t q = 0; q < k; ++q) {
                if (cls[q] == cls[k] && next[q] == q && structurally_equal(canon[q], canon[k])) {
                    next[k] = q;
                    break;
                }
            }
            if (next[k] == k) split = true;
        }
        // Keep the class leader stable: leaders map to themselves.
        if (split) cls = next;
    }
    std::vector<std::size_t> out_map(ns + p.collected.size());
    Substitutions subs;
    std::vector<Parts::State> kept;
    std::vector<std::size_t> new_index(ns);
    for (std::size_t k = 0; k < ns; ++k) {
        if (cls[k] == k) {
            new_index[k] = kept.size();
            kept.push_back(p.states[k]);
        }
    }
    for (std::size_t k = 0; k < ns; ++k) {
        out_map[k] = new_index[cls[k]];
        if (cls[k] != k) {
            for (std::size_t j = 0; j < p.states[k].inner.size(); ++j) {
                subs.emplace(p.states[k].inner[j].id(), p.states[cls[k]].inner[j]);
            }
        }
    }
    if (kept.size() != ns) {
        changed = true;
        p.states = std::move(kept);
        substitute_inner(p, subs);
    }
    std::vector<Parts::Collected> coll;
    for (std::size_t j = 0; j < p.collected.size(); ++j) {
        std::size_t found = SIZE_MAX;
        for (std::size_t q = 0; q < coll.size(); ++q) {
            if (coll[q].keep == p.collected[j].keep &&
                structurally_equal(coll[q].value, p.collected[j].value)) {
                found = q;
                break;
            }
        }
        if (found == SIZE_MAX) {
            found = coll.size();
            coll.push_back(p.collected[j]);
        }
        out_map[ns + j] = p.states.size() + found;
    }
    if (coll.size() != p.collected.size()) changed = true;
    p.collected = std::move(coll);
    return out_map;
}

void cse_inner(Parts& p) { set_inner_roots(p, detail::cse_roots(inner_roots(p))); }

// Removes inner inputs that no inner output uses (keeping what defines
// the step count). Returns whether anything was removed.
bool drop_unused_inputs(Parts& p) {
    std::unordered_set<VarId> used;
    auto roots = inner_roots(p);
    for (const auto& v : collect_leaves(roots)) used.insert(v.id());
    for (const auto& r : roots) used.insert(r.id());
    bool changed = false;
    std::vector<Parts::Seq> seqs;
    for (std::size_t s = 0; s < p.seqs.size(); ++s) {
        Parts::Seq q{p.seqs[s].outer, {}, {}};
        const bool defines_steps = s == 0 && p.steps == ScanSteps::derived;
        const auto maxoff = defines_steps ? p.max_offset0() : -1;
        for (std::size_t j = 0; j < p.seqs[s].offsets.size(); ++j) {
            const auto o = p.seqs[s].offsets[j];
            if (used.count(p.seqs[s].inner[j].id()) || (defines_steps && o == maxoff)) {
                q.offsets.push_back(o);
                q.inner.push_back(p.seqs[s].inner[j]);
            } else {
                changed = true;
            }
        }
        if (!q.offsets.empty()) seqs.push_back(std::move(q));
    }
    p.seqs = std::move(seqs);
    std::vector<Parts::Nonseq> ns;
    for (const auto& n : p.nonseqs) {
        if (used.count(n.inner.id())) ns.push_back(n);
        else changed = true;
    }
    p.nonseqs = std::move(ns);
    return changed;
}

}  // namespace

std::size_t count_scans(const Graph& g) { return count_nodes_named(g, "scan"); }

// ---- Unrolling -------------------------------------------------------------------

bool unroll_single_step_scans(Graph& g) {
    bool changed = false;
    for (bool again = true; again;) {
        again = false;
        for (const auto& node : scan_nodes(g)) {
            const auto& sp = scan_op(node)->spec();
            if (sp.steps != ScanSteps::constant || sp.const_steps != 1) continue;
            Parts p = decompose(node);
            Substitutions inner;
            for (const auto& s : p.seqs) {
                for (std::size_t j = 0; j < s.offsets.size(); ++j) {
                    inner.emplace(s.inner[j].id(), conform(take_row(s.outer, s.offsets[j]), s.inner[j].type()));
                }
            }
            for (std::size_t k = 0; k < p.states.size(); ++k) {
                const auto& st = p.states[k];
                const auto d = p.depth(k);
                for (std::size_t j = 0; j < st.taps.size(); ++j) {
                    Variable v = d == 1 ? st.init : take_row(st.init, d + st.taps[j]);
                    inner.emplace(st.inner[j].id(), conform(v, st.inner[j].type()));
                }
            }
            for (const auto& n : p.nonseqs) inner.emplace(n.inner.id(), conform(n.outer, n.inner.type()));
            auto values = clone_with_substitutions(inner_roots(p), inner);
            Substitutions outer;
            for (std::size_t o = 0; o < node->num_outputs(); ++o) {
                outer.emplace(node->output_id(o),
                              conform(expand_dims(values[o], 0), node->output_type(o)));
            }
            replace_outputs(g, outer);
            changed = again = true;
            break;
        }
    }
    return changed;
}

// ---- Hoisting --------------------------------------------------------------------

namespace {

struct SliceInfo {
    Variable outer;  // the sequence
    std::int64_t offset;
};

// Hoists work out of one scan. Returns new outer outputs, or empty when
// nothing moved.
std::optional<std::vector<Variable>> hoist_one(const NodePtr& node) {
    Parts p = decompose(node);
    std::unordered_map<VarId, SliceInfo> slice;     // inner var -> sequence slice
    std::unordered_map<VarId, Variable> invariant;  // inner var -> outer value
    std::unordered_set<VarId> hoisted;              // computed outside
    for (const auto& s : p.seqs) {
        for (std::size_t j = 0; j < s.offsets.size(); ++j) slice.emplace(s.inner[j].id(), SliceInfo{s.outer, s.offsets[j]});
    }
    for (const auto& n : p.nonseqs) invariant.emplace(n.inner.id(), n.outer);
    auto roots = inner_roots(p);
    auto constant_leaf = [](const Variable& v) { return v.is_leaf() && v.origin() == Origin::constant; };
    auto invariant_value = [&](const Variable& v) -> std::optional<Variable> {
        if (constant_leaf(v)) return v;
        if (auto it = invariant.find(v.id()); it != invariant.end()) return it->second;
        return std::nullopt;
    };

    for (const auto& n : toposort(roots)) {
        if (n->num_outputs() != 1) continue;
        const auto& ins = n->inputs();
        const Variable out = n->output(0);
        if (n->op().lazy() || scan_op(n)) continue;
        // (a) loop-invariant work.
        std::vector<Variable> outer_ins;
        bool all_inv = true;
        bool all_const = true;
        for (const auto& x : ins) {
            auto v = invariant_value(x);
            if (!v) {
                all_inv = false;
                break;
            }
            all_const = all_const && constant_leaf(x);
            outer_ins.push_back(*v);
        }
        if (all_inv) {
            if (all_const) continue;
            try {
                Variable o = apply1(n->op_ptr(), outer_ins);
                invariant.emplace(out.id(), o);
                hoisted.insert(out.id());
            } catch (const GraphError&) {
            }
            continue;
        }
        // (b) per-step elementwise work on aligned slices.
        const auto rank = out.type().rank();
        if (n->op().elementwise()) {
            std::optional<std::int64_t> offset;
            std::optional<VarId> root;
            bool ok = true;
            outer_ins.clear();
            for (const auto& x : ins) {
                if (auto it = slice.find(x.id()); it != slice.end()) {
                    const auto r = row_root(it->second.outer).id();
                    if ((offset && *offset != it->second.offset) || (root && *root != r) ||
                        x.type().rank() != rank) {
                        ok = false;
                        break;
                    }
                    offset = it->second.offset;
                    root = r;
                    outer_ins.push_back(it->second.outer);
                } else if (auto v = invariant_value(x); v && x.type().rank() <= rank) {
                    outer_ins.push_back(*v);
                } else {
                    ok = false;
                    break;
                }
            }
            if (ok && offset) {
                try {
                    Variable o = apply1(n->op_ptr(), outer_ins);
                    if (o.type().rank() == rank + 1) {
                        slice.emplace(out.id(), SliceInfo{o, *offset});
                        hoisted.insert(out.id());
                    }
                } catch (const GraphError&) {
                }
            }
            continue;
        }
        // (c) vector-matrix products against an invariant matrix.
        if (dynamic_cast<const Dot*>(&n->op()) && rank == 1) {
            auto s0 = slice.find(ins[0].id());
            auto s1 = slice.find(ins[1].id());
            std::optional<Variable> o;
            std::int64_t offset = 0;
            try {
                if (s0 != slice.end() && ins[0].type().rank() == 1 && ins[1].type().rank() == 2) {
                    if (auto w = invariant_value(ins[1])) {
                        o = dot(s0->second.outer, *w);
                        offset = s0->second.offset;
                    }
                } else if (s1 != slice.end() && ins[1].type().rank() == 1 &&
                           ins[0].type().rank() == 2) {
                    if (auto w = invariant_value(ins[0])) {
                        o = dot(s1->second.outer, transpose(*w));
                        offset = s1->second.offset;
                    }
                }
            } catch (const GraphError&) {
                o.reset();
            }
            if (o) {
                slice.emplace(out.id(), SliceInfo{*o, offset});
                hoisted.insert(out.id());
            }
        }
    }
    if (hoisted.empty()) return std::nullopt;

    // Frontier: hoisted values read by work that stays inside.
    std::unordered_set<VarId> frontier;
    for (const auto& r : roots) {
        if (hoisted.count(r.id())) frontier.insert(r.id());
    }
    for (const auto& n : toposort(roots)) {
        if (hoisted.count(n->output_id(0))) continue;
        for (const auto& x : n->inputs()) {
            if (hoisted.count(x.id())) frontier.insert(x.id());
        }
    }
    if (frontier.empty()) return std::nullopt;
    Substitutions subs;
    for (const auto& n : toposort(roots)) {
        for (std::size_t o = 0; o < n->num_outputs(); ++o) {
            const Variable v = n->output(o);
            if (!frontier.count(v.id())) continue;
            Variable in = make_input(v.type(), v.name());
            if (auto it = slice.find(v.id()); it != slice.end()) {
                p.seqs.push_back({it->second.outer, {it->second.offset}, {in}});
            } else {
                p.nonseqs.push_back({invariant.at(v.id()), in});
            }
            subs.emplace(v.id(), in);
        }
    }
    substitute_inner(p, subs);
    drop_unused_inputs(p);
    p.inner_optimized = false;
    return assemble(p);
}

// Replacement values when a scan has nothing left to iterate, or nullopt.
std::optional<std::vector<Variable>> eliminate(const NodePtr& node) {
    Parts p = decompose(node);
    if (!p.states.empty() || p.cond || p.collected.empty()) return std::nullopt;
    std::unordered_map<VarId, std::pair<Variable, std::int64_t>> slices;
    for (const auto& s : p.seqs) {
        for (std::size_t j = 0; j < s.offsets.size(); ++j) slices.emplace(s.inner[j].id(), std::make_pair(s.outer, s.offsets[j]));
    }
    const auto T = node->output_type(0).dims[0];
    std::vector<Variable> out;
    for (std::size_t j = 0; j < p.collected.size(); ++j) {
        if (p.collected[j].keep != 0) return std::nullopt;
        auto it = slices.find(p.collected[j].value.id());
        if (it == slices.end() || it->second.second != 0) return std::nullopt;
        const Variable& seq = it->second.first;
        bool aligned = false;
        if (p.steps == ScanSteps::derived && p.max_offset0() == 0 &&
            row_root(seq).id() == row_root(p.seqs[0].outer).id()) {
            aligned = true;
        }
        if (T != kUnknownDim && seq.type().dims[0] == T) aligned = true;
        if (!aligned) return std::nullopt;
        try {
            out.push_back(conform(seq, node->output_type(j)));
        } catch (const GraphError&) {
            return std::nullopt;
        }
    }
    return out;
}

}  // namespace

bool hoist_scan_invariants(Graph& g) {
    bool changed = false;
    for (bool again = true; again;) {
        again = false;
        for (const auto& node : scan_nodes(g)) {
            auto repl = eliminate(node);
            if (!repl) repl = hoist_one(node);
            if (!repl) continue;
            Substitutions subs;
            for (std::size_t o = 0; o < node->num_outputs(); ++o) {
                subs.emplace(node->output_id(o), conform((*repl)[o], node->output_type(o)));
            }
            replace_outputs(g, subs);
            changed = again = true;
            break;
        }
    }
    return changed;
}

// ---- Merging ---------------------------------------------------------------------

namespace {

bool same_steps(const Parts& a, const Parts& b) {
    if (a.steps != b.steps || a.reverse != b.reverse) return false;
    switch (a.steps) {
        case ScanSteps::constant: return a.const_steps == b.const_steps;
        case ScanSteps::symbolic: return a.n_var->id() == b.n_var->id();
        case ScanSteps::derived:
            return a.max_offset0() == b.max_offset0() &&
                   row_root(a.seqs[0].outer).id() == row_root(b.seqs[0].outer).id();
    }
    return false;
}

bool mergeable(const Parts& p) {
    if (p.cond) return false;
    for (const auto& s : p.states) {
        if (s.keep) return false;
    }
    for (const auto& c : p.collected) {
        if (c.keep) return false;
    }
    return true;
}

std::vector<Variable> merge_pair(const Parts& a, const Parts& b, std::size_t& a_count) {
    Parts m;
    m.steps = a.steps;
    m.const_steps = a.const_steps;
    m.n_var = a.n_var;
    m.reverse = a.reverse;
    Substitutions subs;
    std::map<std::pair<VarId, std::int64_t>, Variable> seq_inputs;
    std::unordered_map<VarId, std::size_t> seq_index;
    auto add_seqs = [&](const Parts& p) {
        for (const auto& s : p.seqs) {
            auto [it, fresh] = seq_index.emplace(s.outer.id(), m.seqs.size());
            if (fresh) m.seqs.push_back({s.outer, {}, {}});
            auto& q = m.seqs[it->second];
            for (std::size_t j = 0; j < s.offsets.size(); ++j) {
                auto key = std::make_pair(s.outer.id(), s.offsets[j]);
                auto f = seq_inputs.find(key);
                if (f == seq_inputs.end()) {
                    q.offsets.push_back(s.offsets[j]);
                    q.inner.push_back(s.inner[j]);
                    seq_inputs.emplace(key, s.inner[j]);
                } else if (f->second.id() != s.inner[j].id()) {
                    subs.emplace(s.inner[j].id(), conform(f->second, s.inner[j].type()));
                }
            }
        }
    };
    add_seqs(a);
    add_seqs(b);
    m.states = a.states;
    m.states.insert(m.states.end(), b.states.begin(), b.states.end());
    std::unordered_map<VarId, Variable> nonseq_inputs;
    for (const auto* p : {&a, &b}) {
        for (const auto& n : p->nonseqs) {
            auto [it, fresh] = nonseq_inputs.emplace(n.outer.id(), n.inner);
            if (fresh) m.nonseqs.push_back(n);
            else subs.emplace(n.inner.id(), conform(it->second, n.inner.type()));
        }
    }
    m.collected = a.collected;
    m.collected.insert(m.collected.end(), b.collected.begin(), b.collected.end());
    // Outputs of `a` first, then `b`, in each one's own order.
    substitute_inner(m, subs);
    bool changed = false;
    std::vector<std::size_t> out_map = dedupe(m, changed);
    cse_inner(m);
    drop_unused_inputs(m);
    auto outs = assemble(m);
    // Map back: merged output order is states (a, b) then collected (a, b).
    const std::size_t nsa = a.states.size(), nsb = b.states.size();
    const std::size_t nca = a.collected.size(), ncb = b.collected.size();
    std::vector<Variable> result;
    auto pick = [&](std::size_t merged_index) { return outs[out_map[merged_index]]; };
    for (std::size_t k = 0; k < nsa; ++k) result.push_back(pick(k));
    for (std::size_t j = 0; j < nca; ++j) result.push_back(pick(nsa + nsb + j));
    for (std::size_t k = 0; k < nsb; ++k) result.push_back(pick(nsa + k));
    for (std::size_t j = 0; j < ncb; ++j) result.push_back(pick(nsa + nsb + nca + j));
    a_count = nsa + nca;
    return result;
}

}  // namespace

bool merge_scans(Graph& g) {
    bool changed = false;
    for (bool again = true; again;) {
        again = false;
        auto nodes = scan_nodes(g);
        for (std::size_t i = 0; i < nodes.size() && !again; ++i) {
            Parts a = decompose(nodes[i]);
            if (!mergeable(a)) continue;
            const auto anc_a = ancestors(nodes[i]);
            for (std::size_t j = i + 1; j < nodes.size(); ++j) {
                Parts b = decompose(nodes[j]);
                if (!mergeable(b) || !same_steps(a, b)) continue;
                if (anc_a.count(nodes[j]->id()) || ancestors(nodes[j]).count(nodes[i]->id())) continue;
                std::size_t a_count = 0;
                auto outs = merge_pair(a, b, a_count);
                Substitutions subs;
                for (std::size_t o = 0; o < a_count; ++o) {
                    subs.emplace(nodes[i]->output_id(o), conform(outs[o], nodes[i]->output_type(o)));
                }
                for (std::size_t o = 0; o < nodes[j]->num_outputs(); ++o) {
                    subs.emplace(nodes[j]->output_id(o),
                                 conform(outs[a_count + o], nodes[j]->output_type(o)));
                }
                replace_outputs(g, subs);
                changed = again = true;
                break;
            }
        }
    }
    return changed;
}

// ---- Pruning ---------------------------------------------------------------------

bool prune_scans(Graph& g) {
    bool changed = false;
    for (bool again = true; again;) {
        again = false;
        const auto clients = clients_of(g);
        for (const auto& node : scan_nodes(g)) {
            Parts p = decompose(node);
            const std::size_t ns = p.states.size();
            std::vector<char> used(node->num_outputs(), 0);
            bool any = false;
            for (std::size_t o = 0; o < node->num_outputs(); ++o) {
                auto it = clients.find(node->output_id(o));
                used[o] = it != clients.end() && !it->second.empty();
                any |= used[o] != 0;
            }
            if (!any) continue;
            // States needed by used outputs, transitively through taps.
            std::unordered_map<VarId, std::size_t> tap_owner;
            for (std::size_t k = 0; k < ns; ++k) {
                for (const auto& v : p.states[k].inner) tap_owner.emplace(v.id(), k);
            }
            std::vector<char> need(ns, 0);
            std::vector<Variable> frontier;
            for (std::size_t k = 0; k < ns; ++k) {
                if (used[k]) {
                    need[k] = 1;
                    frontier.push_back(p.states[k].update);
                }
            }
            for (std::size_t j = 0; j < p.collected.size(); ++j) {
                if (used[ns + j]) frontier.push_back(p.collected[j].value);
            }
            if (p.cond) frontier.push_back(*p.cond);
            while (!frontier.empty()) {
                std::vector<Variable> next;
                std::vector<Variable> leaves = collect_leaves(frontier);
                leaves.insert(leaves.end(), frontier.begin(), frontier.end());
                for (const auto& v : leaves) {
                    auto it = tap_owner.find(v.id());
                    if (it != tap_owner.end() && !need[it->second]) {
                        need[it->second] = 1;
                        next.push_back(p.states[it->second].update);
                    }
                }
                frontier = std::move(next);
            }
            Parts q = p;
            q.states.clear();
            q.collected.clear();
            std::vector<std::size_t> new_index(node->num_outputs(), SIZE_MAX);
            for (std::size_t k = 0; k < ns; ++k) {
                if (need[k]) {
                    new_index[k] = q.states.size();
                    q.states.push_back(p.states[k]);
                }
            }
            for (std::size_t j = 0; j < p.collected.size(); ++j) {
                if (used[ns + j]) {
                    new_index[ns + j] = q.collected.size();
                    q.collected.push_back(p.collected[j]);
                }
            }
            for (std::size_t j = 0; j < p.collected.size(); ++j) {
                if (new_index[ns + j] != SIZE_MAX) new_index[ns + j] += q.states.size();
            }
            bool local = q.states.size() != ns || q.collected.size() != p.collected.size();
            std::vector<std::size_t> dmap = dedupe(q, local);
            local |= drop_unused_inputs(q);
            if (!local) continue;
            cse_inner(q);
            auto outs = assemble(q);
            Substitutions subs;
            for (std::size_t o = 0; o < node->num_outputs(); ++o) {
                if (new_index[o] == SIZE_MAX) continue;
                subs.emplace(node->output_id(o),
                             conform(outs[dmap[new_index[o]]], node->output_type(o)));
            }
            replace_outputs(g, subs);
            changed = again = true;
            break;
        }
    }
    return changed;
}

// ---- Inner graphs ----------------------------------------------------------------

bool optimize_scan_bodies(Graph& g, const std::function<Graph(const Graph&)>& fn) {
    bool changed = false;
    for (bool again = true; again;) {
        again = false;
        for (const auto& node : scan_nodes(g)) {
            const auto& sp = scan_op(node)->spec();
            if (sp.inner_optimized) continue;
            Graph inner;
            inner.inputs = sp.inner_inputs;
            inner.outputs = sp.inner_outputs;
            Graph opt = fn(inner);
            ScanSpec ns = sp;
            for (std::size_t i = 0; i < ns.inner_outputs.size(); ++i) {
                ns.inner_outputs[i] = conform(opt.outputs[i], sp.inner_outputs[i].type());
            }
            ns.inner_optimized = true;
            auto outs = make_scan(std::move(ns), node->inputs());
            Substitutions subs;
            for (std::size_t o = 0; o < node->num_outputs(); ++o) subs.emplace(node->output_id(o), outs[o]);
            replace_outputs(g, subs);
            changed = again = true;
            break;
        }
    }
    return changed;
}

// ---- Memory plan -----------------------------------------------------------------

std::vector<ScanPlanEntry> scan_memory_plan(const Graph& g) {
    std::vector<ScanPlanEntry> plan;
    const auto clients = clients_of(g);
    for (const auto& node : scan_nodes(g)) {
        const auto& sp = scan_op(node)->spec();
        const auto T = node->output_type(0).dims[0];
        for (std::size_t o = 0; o < node->num_outputs(); ++o) {
            ScanPlanEntry e{node->id(), o, sp.keep_rows[o]};
            if (e.rows == 0) {
                std::int64_t need = 0;
                bool ok = true;
                auto it = clients.find(node->output_id(o));
                if (it != clients.end()) {
                    for (const auto& [consumer, idx] : it->second) {
                        (void)idx;
                        const auto* take = consumer ? dynamic_cast<const TakeRow*>(&consumer->op()) : nullptr;
                        if (!take) {
                            ok = false;
                            break;
                        }
                        const auto i = take->index();
                        if (sp.reverse ? i < 0 : i >= 0) {
                            ok = false;
                            break;
                        }
                        need = std::max(need, sp.reverse ? i + 1 : -i);
                    }
                }
                if (ok && need > 0) {
                    std::int64_t keep = need;
                    if (o < sp.n_states()) keep = std::max(keep, sp.depth(o) + 1);
                    if (T == kUnknownDim || keep < T) e.rows = keep;
                }
            }
            plan.push_back(e);
        }
    }
    return plan;
}

bool apply_scan_memory_plan(Graph& g) {
    const auto plan = scan_memory_plan(g);
    std::unordered_map<std::uint64_t, std::vector<std::int64_t>> rows;
    for (const auto& e : plan) rows[e.node_id].push_back(e.rows);
    Substitutions subs;
    for (const auto& node : scan_nodes(g)) {
        const auto& sp = scan_op(node)->spec();
        const auto& r = rows[node->id()];
        if (r == sp.keep_rows) continue;
        ScanSpec ns = sp;
        ns.keep_rows = r;
        auto outs = graphc::apply(std::make_shared<Scan>(std::move(ns)), node->inputs());
        for (std::size_t o = 0; o < node->num_outputs(); ++o) subs.emplace(node->output_id(o), outs[o]);
    }
    if (subs.empty()) return false;
    replace_outputs(g, subs, false);
    return true;
}

}  // namespace graphc
