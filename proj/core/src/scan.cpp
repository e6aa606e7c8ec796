// Copyright 2026 The graphc Authors
// SPDX-License-Identifier: Apache-2.0

#include "graphc/scan.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_map>
#include <unordered_set>

#include "graphc/autodiff.hpp"
#include "graphc/ops.hpp"
#include "graphc/program.hpp"

namespace graphc {

// ---- ScanSpec ----------------------------------------------------------------

std::size_t ScanSpec::n_seq_inputs() const {
    std::size_t n = 0;
    for (const auto& o : seq_offsets) n += o.size();
    return n;
}

std::size_t ScanSpec::n_tap_inputs() const {
    std::size_t n = 0;
    for (const auto& t : state_taps) n += t.size();
    return n;
}

std::int64_t ScanSpec::depth(std::size_t state) const {
    std::int64_t d = 0;
    for (auto t : state_taps[state]) d = std::max(d, -t);
    return d;
}

std::int64_t ScanSpec::max_offset(std::size_t seq) const {
    std::int64_t m = 0;
    for (auto o : seq_offsets[seq]) m = std::max(m, o);
    return m;
}

std::size_t ScanSpec::state_input(std::size_t state) const {
    std::size_t i = n_seq_inputs();
    for (std::size_t k = 0; k < state; ++k) i += state_taps[k].size();
    return i;
}

std::size_t ScanSpec::seq_input(std::size_t seq) const {
    std::size_t i = 0;
    for (std::size_t s = 0; s < seq; ++s) i += seq_offsets[s].size();
    return i;
}

TensorType ScanSpec::init_type(std::size_t k) const {
    const auto d = depth(k);
    return d == 1 ? state_type(k) : state_type(k).stacked(d);
}

// ---- Scan op -------------------------------------------------------------------

namespace {

bool compatible(const TensorType& a, const TensorType& b) {
    if (a.dtype != b.dtype || a.rank() != b.rank()) return false;
    for (std::size_t i = 0; i < a.rank(); ++i) {
        if (a.dims[i] != b.dims[i] && a.dims[i] != kUnknownDim && b.dims[i] != kUnknownDim) {
            return false;
        }
    }
    return true;
}

void validate_spec(const ScanSpec& sp) {
    auto fail = [](const std::string& m) { throw GraphError("scan: " + m); };
    if (sp.inner_inputs.size() != sp.n_seq_inputs() + sp.n_tap_inputs() + sp.n_nonseqs) {
        fail("inner input count does not match taps and non-sequences");
    }
    if (sp.inner_outputs.size() != sp.n_outputs() + (sp.until ? 1u : 0u)) {
        fail("inner output count does not match states and collected outputs");
    }
    for (const auto& offs : sp.seq_offsets) {
        if (offs.empty()) fail("sequence without offsets");
        for (auto o : offs) {
            if (o < 0) fail("sequence offsets must be >= 0, got " + std::to_string(o));
        }
    }
    for (std::size_t k = 0; k < sp.n_states(); ++k) {
        const auto& taps = sp.state_taps[k];
        if (taps.empty()) fail("state " + std::to_string(k) + " has no taps");
        std::unordered_set<std::int64_t> seen;
        for (auto t : taps) {
            if (t >= 0) fail("state taps must be negative, got " + std::to_string(t));
            if (!seen.insert(t).second) fail("duplicate tap " + std::to_string(t));
        }
        const auto first = sp.state_input(k);
        for (std::size_t j = 0; j < taps.size(); ++j) {
            if (!(sp.inner_inputs[first + j].type() == sp.state_type(k))) {
                fail("state " + std::to_string(k) + " update type " +
                     sp.state_type(k).to_string() + " differs from its tap type " +
                     sp.inner_inputs[first + j].type().to_string());
            }
        }
    }
    if (sp.until) {
        const auto& cond = sp.inner_outputs.back();
        if (!cond.type().is_scalar()) fail("until condition must be a scalar");
        if (sp.reverse) fail("until condition on a reverse scan");
    }
    if (sp.steps == ScanSteps::constant && sp.const_steps < 1) {
        fail("n_steps must be >= 1, got " + std::to_string(sp.const_steps));
    }
    if (sp.steps == ScanSteps::derived && sp.n_sequences() == 0) {
        fail("step count must be given when there are no sequences");
    }
    if (!sp.keep_rows.empty() && sp.keep_rows.size() != sp.n_outputs()) {
        fail("memory plan size mismatch");
    }
}

void copy_row(const Tensor& src, std::int64_t row, Tensor& dst) {
    Shape shape(src.shape().begin() + 1, src.shape().end());
    dst.reset(src.dtype(), shape);
    const auto rs = static_cast<std::size_t>(src.row_size());
    auto first = src.data().begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(row) * rs);
    std::copy(first, first + static_cast<std::ptrdiff_t>(rs), dst.data().begin());
}

void copy_all(const Tensor& src, Tensor& dst) {
    dst.reset(src.dtype(), src.shape());
    std::copy(src.data().begin(), src.data().end(), dst.data().begin());
}

struct ScanWorkspace final : OpWorkspace {
    std::unique_ptr<Frame> frame;
    std::vector<Tensor> feeds;  // sequence slices and state taps
    std::vector<Tensor> rings;  // per output, used when keep_rows > 0
    std::vector<int> out_cells;
};

}  // namespace

Scan::Scan(ScanSpec spec) : spec_(std::move(spec)) {
    if (spec_.keep_rows.empty()) spec_.keep_rows.assign(spec_.n_outputs(), 0);
    validate_spec(spec_);
    program_ = std::make_shared<Program>(spec_.inner_inputs, spec_.inner_outputs);
}

std::string Scan::label() const {
    std::string s = "scan{";
    switch (spec_.steps) {
        case ScanSteps::derived: s += "steps=seq"; break;
        case ScanSteps::constant: s += "steps=" + std::to_string(spec_.const_steps); break;
        case ScanSteps::symbolic: s += "steps=var"; break;
    }
    s += ",seqs=" + std::to_string(spec_.n_sequences());
    s += ",states=" + std::to_string(spec_.n_states());
    s += ",outs=" + std::to_string(spec_.n_collected);
    if (spec_.until) s += ",until";
    if (spec_.reverse) s += ",reverse";
    return s + "}";
}

std::size_t Scan::hash() const { return std::hash<const void*>{}(this); }

std::vector<TensorType> Scan::infer(std::span<const TensorType> in) const {
    const auto& sp = spec_;
    if (in.size() != sp.n_outer_inputs()) {
        throw TypeError(name(), in.size(), "expected " + std::to_string(sp.n_outer_inputs()) +
                                               " inputs");
    }
    if (sp.steps == ScanSteps::symbolic &&
        !(in[0].is_scalar() && in[0].dtype == DType::i64)) {
        throw TypeError(name(), 0, "step count must be an i64 scalar, got " + in[0].to_string());
    }
    std::int64_t steps = kUnknownDim;
    if (sp.steps == ScanSteps::constant) steps = sp.const_steps;
    for (std::size_t s = 0; s < sp.n_sequences(); ++s) {
        const auto idx = sp.outer_seq(s);
        const auto& t = in[idx];
        if (t.rank() == 0) throw TypeError(name(), idx, "sequence must have rank >= 1");
        const auto& inner = sp.inner_inputs[sp.seq_input(s)].type();
        if (!compatible(t.row_type(), inner)) {
            throw TypeError(name(), idx, "sequence rows " + t.row_type().to_string() +
                                             " do not match slice type " + inner.to_string());
        }
        if (s == 0 && sp.steps == ScanSteps::derived && t.dims[0] != kUnknownDim) {
            steps = t.dims[0] - sp.max_offset(0);
            if (steps < 1) {
                throw TypeError(name(), idx, "sequence shorter than required by offsets");
            }
        }
    }
    for (std::size_t s = 0; s < sp.n_sequences() && steps != kUnknownDim; ++s) {
        const auto idx = sp.outer_seq(s);
        const auto rows = in[idx].dims[0];
        if (rows != kUnknownDim && rows < steps + sp.max_offset(s)) {
            throw TypeError(name(), idx, "sequence shorter than required by offsets");
        }
    }
    for (std::size_t k = 0; k < sp.n_states(); ++k) {
        const auto idx = sp.outer_init(k);
        if (!compatible(in[idx], sp.init_type(k))) {
            throw TypeError(name(), idx, "initial value " + in[idx].to_string() +
                                             " does not match " + sp.init_type(k).to_string());
        }
    }
    for (std::size_t m = 0; m < sp.n_nonseqs; ++m) {
        const auto idx = sp.outer_nonseq(m);
        const auto& inner = sp.inner_inputs[sp.nonseq_input(m)].type();
        if (!compatible(in[idx], inner)) {
            throw TypeError(name(), idx, "non-sequence " + in[idx].to_string() +
                                             " does not match " + inner.to_string());
        }
    }
    if (sp.until) steps = kUnknownDim;
    std::vector<TensorType> out;
    for (std::size_t o = 0; o < sp.n_outputs(); ++o) {
        std::int64_t lead = steps;
        const auto keep = sp.keep_rows[o];
        if (keep > 0) lead = steps == kUnknownDim ? kUnknownDim : std::min(keep, steps);
        out.push_back(sp.inner_outputs[o].type().stacked(lead));
    }
    return out;
}

std::unique_ptr<OpWorkspace> Scan::make_workspace() const {
    auto ws = std::make_unique<ScanWorkspace>();
    ws->frame = std::make_unique<Frame>(program_);
    const auto& sp = spec_;
    ws->feeds.resize(sp.n_seq_inputs() + sp.n_tap_inputs());
    ws->rings.resize(sp.n_outputs());
    const auto& inputs = program_->input_cells();
    for (std::size_t i = 0; i < ws->feeds.size(); ++i) ws->frame->bind(inputs[i], &ws->feeds[i]);
    ws->out_cells = program_->output_cells();
    return ws;
}

void Scan::compute(std::span<const Tensor* const> in, std::span<Tensor> out,
                   OpWorkspace* workspace) const {
    const auto& sp = spec_;
    auto& ws = *static_cast<ScanWorkspace*>(workspace);
    Frame& frame = *ws.frame;

    std::int64_t T = 0;
    switch (sp.steps) {
        case ScanSteps::constant: T = sp.const_steps; break;
        case ScanSteps::symbolic: {
            const double v = in[0]->item();
            T = static_cast<std::int64_t>(v);
            if (static_cast<double>(T) != v) throw KernelError("scan: non-integer step count");
            break;
        }
        case ScanSteps::derived: {
            const Tensor& s0 = *in[sp.outer_seq(0)];
            if (s0.rank() == 0) throw KernelError("scan: sequence must have rank >= 1");
            T = s0.dim(0) - sp.max_offset(0);
            break;
        }
    }
    if (T < 1) throw KernelError("scan: n_steps must be >= 1, got " + std::to_string(T));
    for (std::size_t s = 0; s < sp.n_sequences(); ++s) {
        const Tensor& seq = *in[sp.outer_seq(s)];
        if (seq.rank() == 0) throw KernelError("scan: sequence must have rank >= 1");
        if (seq.dim(0) < T + sp.max_offset(s)) {
            throw KernelError("scan: sequence " + std::to_string(s) +
                              " shorter than required by offsets (" +
                              std::to_string(seq.dim(0)) + " rows, need " +
                              std::to_string(T + sp.max_offset(s)) + ")");
        }
    }
    for (std::size_t k = 0; k < sp.n_states(); ++k) {
        const Tensor& init = *in[sp.outer_init(k)];
        const auto d = sp.depth(k);
        if (d > 1 && (init.rank() == 0 || init.dim(0) != d)) {
            throw KernelError("scan: initial value of state " + std::to_string(k) + " needs " +
                              std::to_string(d) + " rows");
        }
    }
    const auto& inputs = program_->input_cells();
    for (std::size_t m = 0; m < sp.n_nonseqs; ++m) {
        frame.bind(inputs[sp.nonseq_input(m)], in[sp.outer_nonseq(m)]);
    }

    const std::size_t n_out = sp.n_outputs();
    auto storage = [&](std::size_t o) -> Tensor& {
        return sp.keep_rows[o] > 0 ? ws.rings[o] : out[o];
    };
    auto slot = [&](std::size_t o, std::int64_t m) {
        if (sp.keep_rows[o] > 0) return m % sp.keep_rows[o];
        return sp.reverse ? T - 1 - m : m;
    };
    std::vector<Shape> row_shape(n_out);
    std::vector<char> allocated(n_out, 0);
    const ExecOptions opts{false, false};

    std::int64_t executed = 0;
    for (std::int64_t i = 0; i < T; ++i) {
        const std::int64_t tau = sp.reverse ? T - 1 - i : i;
        std::size_t f = 0;
        for (std::size_t s = 0; s < sp.n_sequences(); ++s) {
            const Tensor& seq = *in[sp.outer_seq(s)];
            for (auto o : sp.seq_offsets[s]) copy_row(seq, tau + o, ws.feeds[f++]);
        }
        for (std::size_t k = 0; k < sp.n_states(); ++k) {
            const Tensor& init = *in[sp.outer_init(k)];
            const auto d = sp.depth(k);
            for (auto tap : sp.state_taps[k]) {
                const std::int64_t m = i + tap;
                Tensor& feed = ws.feeds[f++];
                if (m >= 0) copy_row(storage(k), slot(k, m), feed);
                else if (d == 1) copy_all(init, feed);
                else copy_row(init, d + m, feed);
            }
        }
        frame.run(ws.out_cells, opts, true);
        for (std::size_t o = 0; o < n_out; ++o) {
            const Tensor& v = *frame.value(ws.out_cells[o]);
            if (!allocated[o]) {
                row_shape[o] = v.shape();
                Shape full = v.shape();
                full.insert(full.begin(), sp.keep_rows[o] > 0 ? std::min(sp.keep_rows[o], T) : T);
                storage(o).reset(v.dtype(), full);
                allocated[o] = 1;
            } else if (v.shape() != row_shape[o]) {
                throw KernelError("scan: output " + std::to_string(o) + " changed shape from " +
                                  shape_to_string(row_shape[o]) + " to " +
                                  shape_to_string(v.shape()) + " between steps");
            }
            Tensor& dst = storage(o);
            const auto rs = v.size();
            std::copy(v.data().begin(), v.data().end(),
                      dst.data().begin() + static_cast<std::ptrdiff_t>(
                                               static_cast<std::size_t>(slot(o, i)) * rs));
        }
        executed = i + 1;
        if (sp.until && frame.value(ws.out_cells.back())->item() != 0.0) break;
    }

    for (std::size_t o = 0; o < n_out; ++o) {
        const auto keep = sp.keep_rows[o];
        if (keep == 0) {
            if (executed < T) {
                Shape s = row_shape[o];
                s.insert(s.begin(), executed);
                out[o].reset(out[o].dtype(), s);
            }
            continue;
        }
        const Tensor& ring = ws.rings[o];
        const std::int64_t R = std::min(keep, executed);
        Shape s = row_shape[o];
        s.insert(s.begin(), R);
        out[o].reset(ring.dtype(), s);
        const auto rs = static_cast<std::size_t>(out[o].row_size());
        for (std::int64_t r = 0; r < R; ++r) {
            // Forward: last R iterations in order. Reverse: time rows 0..R-1,
            // which are the last R iterations.
            const std::int64_t m = sp.reverse ? T - 1 - r : executed - R + r;
            auto src = ring.data().begin() +
                       static_cast<std::ptrdiff_t>(static_cast<std::size_t>(m % keep) * rs);
            std::copy(src, src + static_cast<std::ptrdiff_t>(rs),
                      out[o].data().begin() + static_cast<std::ptrdiff_t>(
                                                  static_cast<std::size_t>(r) * rs));
        }
    }
}

const Scan* scan_op(const NodePtr& node) {
    return node ? dynamic_cast<const Scan*>(&node->op()) : nullptr;
}

// ---- Construction ----------------------------------------------------------------

namespace {

Variable conform(const Variable& v, const TensorType& t) {
    if (v.type() == t) return v;
    return specify(v, t);
}

// Replaces inner references to outer values by new non-sequence inputs.
void capture_free_variables(ScanSpec& sp, std::vector<Variable>& outer) {
    std::unordered_set<VarId> inner_ids;
    for (const auto& v : sp.inner_inputs) inner_ids.insert(v.id());
    std::unordered_set<VarId> depends(inner_ids);
    for (const auto& node : toposort(sp.inner_outputs)) {
        for (const auto& x : node->inputs()) {
            if (depends.count(x.id())) {
                for (std::size_t o = 0; o < node->num_outputs(); ++o) {
                    depends.insert(node->output_id(o));
                }
                break;
            }
        }
    }
    std::unordered_map<VarId, bool> const_only;
    std::function<bool(const Variable&)> is_const = [&](const Variable& v) -> bool {
        if (v.is_leaf()) return v.origin() == Origin::constant;
        if (auto it = const_only.find(v.id()); it != const_only.end()) return it->second;
        bool c = true;
        for (const auto& x : v.owner()->inputs()) c = c && is_const(x);
        const_only[v.id()] = c;
        return c;
    };
    // Existing non-sequences, so direct references to them reuse the input.
    std::unordered_map<VarId, Variable> captured;
    for (std::size_t m = 0; m < sp.n_nonseqs; ++m) {
        captured.emplace(outer[sp.outer_nonseq(m)].id(), sp.inner_inputs[sp.nonseq_input(m)]);
    }
    Substitutions subs;
    std::unordered_set<VarId> visited;
    std::vector<Variable> stack(sp.inner_outputs.begin(), sp.inner_outputs.end());
    while (!stack.empty()) {
        Variable v = stack.back();
        stack.pop_back();
        if (!visited.insert(v.id()).second || inner_ids.count(v.id())) continue;
        if (depends.count(v.id())) {
            for (const auto& x : v.owner()->inputs()) stack.push_back(x);
            continue;
        }
        if (is_const(v)) continue;
        auto it = captured.find(v.id());
        if (it == captured.end()) {
            Variable in = make_input(v.type(), v.name().empty() ? "captured" : v.name());
            sp.inner_inputs.push_back(in);
            outer.push_back(v);
            sp.n_nonseqs++;
            it = captured.emplace(v.id(), in).first;
        }
        subs.emplace(v.id(), it->second);
    }
    if (!subs.empty()) sp.inner_outputs = clone_with_substitutions(sp.inner_outputs, subs);
}

}  // namespace

std::vector<Variable> make_scan(ScanSpec spec, std::vector<Variable> outer_inputs) {
    if (outer_inputs.size() != spec.n_outer_inputs()) {
        throw GraphError("scan: expected " + std::to_string(spec.n_outer_inputs()) +
                         " outer inputs, got " + std::to_string(outer_inputs.size()));
    }
    capture_free_variables(spec, outer_inputs);
    return graphc::apply(std::make_shared<Scan>(std::move(spec)), std::move(outer_inputs));
}

ScanResult scan(const StepFn& step, const ScanArgs& args) {
    ScanSpec sp;
    std::vector<Variable> outer;
    StepInputs si;
    if (args.n_steps && args.n_steps_var) throw GraphError("scan: give n_steps or n_steps_var, not both");
    if (args.n_steps_var) {
        sp.steps = ScanSteps::symbolic;
        outer.push_back(*args.n_steps_var);
    } else if (args.n_steps) {
        sp.steps = ScanSteps::constant;
        sp.const_steps = *args.n_steps;
        if (*args.n_steps < 1) {
            throw GraphError("scan: n_steps must be >= 1, got " + std::to_string(*args.n_steps));
        }
    } else if (args.sequences.empty()) {
        throw GraphError("scan: step count must be given when there are no sequences");
    }
    std::vector<Variable> seq_inputs, tap_inputs, nonseq_inputs;
    for (std::size_t s = 0; s < args.sequences.size(); ++s) {
        const auto& seq = args.sequences[s];
        if (seq.seq.type().rank() == 0) throw GraphError("scan: sequence must have rank >= 1");
        sp.seq_offsets.push_back(seq.offsets);
        si.sequences.emplace_back();
        for (auto o : seq.offsets) {
            auto v = make_input(seq.seq.type().row_type(),
                                seq.seq.display_name() + "[t+" + std::to_string(o) + "]");
            seq_inputs.push_back(v);
            si.sequences.back().push_back(v);
        }
        outer.push_back(seq.seq);
    }
    std::vector<TensorType> state_types;
    for (const auto& st : args.states) {
        sp.state_taps.push_back(st.taps);
        std::int64_t d = 0;
        for (auto t : st.taps) d = std::max(d, -t);
        TensorType type = st.init.type();
        if (d > 1) {
            if (type.rank() == 0) {
                throw GraphError("scan: initial value for taps deeper than 1 needs a leading axis");
            }
            type = type.row_type();
        }
        state_types.push_back(type);
        si.states.emplace_back();
        for (auto t : st.taps) {
            auto v = make_input(type, st.init.display_name() + "[t" + std::to_string(t) + "]");
            tap_inputs.push_back(v);
            si.states.back().push_back(v);
        }
    }
    for (const auto& st : args.states) outer.push_back(st.init);
    for (const auto& ns : args.non_sequences) {
        auto v = make_input(ns.type(), ns.display_name());
        nonseq_inputs.push_back(v);
        si.non_sequences.push_back(v);
        outer.push_back(ns);
    }
    sp.n_nonseqs = nonseq_inputs.size();

    StepResult r = step(si);
    if (r.states.size() != args.states.size()) {
        throw GraphError("scan: step returned " + std::to_string(r.states.size()) +
                         " state updates for " + std::to_string(args.states.size()) + " states");
    }
    for (std::size_t k = 0; k < r.states.size(); ++k) {
        sp.inner_outputs.push_back(conform(r.states[k], state_types[k]));
    }
    for (const auto& y : r.collected) sp.inner_outputs.push_back(y);
    sp.n_collected = r.collected.size();
    if (r.until) {
        sp.until = true;
        sp.inner_outputs.push_back(*r.until);
    }
    sp.inner_inputs = seq_inputs;
    sp.inner_inputs.insert(sp.inner_inputs.end(), tap_inputs.begin(), tap_inputs.end());
    sp.inner_inputs.insert(sp.inner_inputs.end(), nonseq_inputs.begin(), nonseq_inputs.end());

    const std::size_t n_states = args.states.size();
    auto outs = make_scan(std::move(sp), std::move(outer));
    ScanResult res;
    res.states.assign(outs.begin(), outs.begin() + static_cast<long>(n_states));
    res.collected.assign(outs.begin() + static_cast<long>(n_states), outs.end());
    return res;
}

// ---- Differentiation ----------------------------------------------------------------

namespace {

Variable sum_vars(const std::vector<Variable>& parts) {
    Variable acc = parts[0];
    for (std::size_t i = 1; i < parts.size(); ++i) acc = add(acc, parts[i]);
    return acc;
}

// A variable of the state type, for zeros_like.
Variable state_like(const ScanSpec& sp, std::size_t k, const Variable& init) {
    return sp.depth(k) == 1 ? init : take_row(init, 0);
}

}  // namespace

std::vector<OptVar> Scan::grad(std::span<const Variable> inputs, std::span<const Variable> outputs,
                               std::span<const OptVar> og) const {
    const auto& sp = spec_;
    std::vector<OptVar> result(inputs.size());
    if (std::none_of(og.begin(), og.end(), [](const OptVar& g) { return g.has_value(); })) {
        return result;
    }
    if (sp.reverse || sp.until) {
        throw NonDifferentiableError("non-differentiable op 'scan' (reverse or early-exit loop)");
    }
    for (auto keep : sp.keep_rows) {
        if (keep > 0) throw NonDifferentiableError("non-differentiable op 'scan' (truncated history)");
    }
    const std::size_t ns = sp.n_states();
    ScanSpec b;
    std::vector<Variable> b_seq_in, b_tap_in, b_nonseq_in;
    std::vector<Variable> b_seqs, b_inits, b_nonseqs;
    Substitutions fwd2b;

    // Forward sequences, read at the same offsets.
    for (std::size_t s = 0; s < sp.n_sequences(); ++s) {
        b.seq_offsets.push_back(sp.seq_offsets[s]);
        for (std::size_t j = 0; j < sp.seq_offsets[s].size(); ++j) {
            const auto& fin = sp.inner_inputs[sp.seq_input(s) + j];
            auto v = make_input(fin.type(), fin.name());
            fwd2b.emplace(fin.id(), v);
            b_seq_in.push_back(v);
        }
        b_seqs.push_back(inputs[sp.outer_seq(s)]);
    }
    // Saved states: init rows followed by the forward history.
    for (std::size_t k = 0; k < ns; ++k) {
        const auto d = sp.depth(k);
        const Variable& init = inputs[sp.outer_init(k)];
        Variable rows = d == 1 ? expand_dims(init, 0) : init;
        b_seqs.push_back(concat_rows(rows, outputs[k]));
        b.seq_offsets.emplace_back();
        for (std::size_t j = 0; j < sp.state_taps[k].size(); ++j) {
            const auto tap = sp.state_taps[k][j];
            b.seq_offsets.back().push_back(d + tap);
            const auto& fin = sp.inner_inputs[sp.state_input(k) + j];
            auto v = make_input(fin.type(), fin.name());
            fwd2b.emplace(fin.id(), v);
            b_seq_in.push_back(v);
        }
    }
    // Output gradients, one row per step.
    std::vector<OptVar> g_in(sp.n_outputs());
    for (std::size_t o = 0; o < sp.n_outputs(); ++o) {
        if (!og[o] || !is_float(sp.inner_outputs[o].type().dtype)) continue;
        b_seqs.push_back(*og[o]);
        b.seq_offsets.push_back({0});
        auto v = make_input(sp.inner_outputs[o].type(), "g_out" + std::to_string(o));
        b_seq_in.push_back(v);
        g_in[o] = v;
    }
    // Adjoint accumulators: R[k][j-1] carries contributions to h_{t-j}.
    std::vector<std::vector<Variable>> r_in(ns);
    for (std::size_t k = 0; k < ns; ++k) {
        if (!is_float(sp.state_type(k).dtype)) continue;
        const auto d = sp.depth(k);
        const Variable like = state_like(sp, k, inputs[sp.outer_init(k)]);
        for (std::int64_t j = 1; j <= d; ++j) {
            auto v = make_input(sp.state_type(k), "adj" + std::to_string(k) + "_" + std::to_string(j));
            r_in[k].push_back(v);
            b_tap_in.push_back(v);
            b.state_taps.push_back({-1});
            b_inits.push_back(zeros_of(sp.state_type(k), like));
        }
    }
    for (std::size_t m = 0; m < sp.n_nonseqs; ++m) {
        const auto& fin = sp.inner_inputs[sp.nonseq_input(m)];
        auto v = make_input(fin.type(), fin.name());
        fwd2b.emplace(fin.id(), v);
        b_nonseq_in.push_back(v);
        b_nonseqs.push_back(inputs[sp.outer_nonseq(m)]);
    }

    std::vector<Variable> fwd_outs(sp.inner_outputs.begin(),
                                   sp.inner_outputs.begin() + static_cast<long>(sp.n_outputs()));
    auto cloned = clone_with_substitutions(fwd_outs, fwd2b);
    std::vector<OptVar> eta(sp.n_outputs());
    for (std::size_t k = 0; k < ns; ++k) {
        if (r_in[k].empty()) continue;
        eta[k] = g_in[k] ? add(*g_in[k], r_in[k][0]) : r_in[k][0];
    }
    for (std::size_t j = 0; j < sp.n_collected; ++j) eta[ns + j] = g_in[ns + j];
    std::vector<Variable> wrt;
    for (const auto& fin : sp.inner_inputs) wrt.push_back(fwd2b.at(fin.id()));
    auto c = lop_partial(cloned, wrt, eta);

    // State updates of the accumulators.
    std::vector<Variable> updates;
    for (std::size_t k = 0; k < ns; ++k) {
        const auto d = sp.depth(k);
        for (std::int64_t j = 1; j <= d && !r_in[k].empty(); ++j) {
            std::vector<Variable> parts;
            if (j < d) parts.push_back(r_in[k][static_cast<std::size_t>(j)]);
            const auto& taps = sp.state_taps[k];
            for (std::size_t q = 0; q < taps.size(); ++q) {
                if (taps[q] == -j && c[sp.state_input(k) + q]) {
                    parts.push_back(*c[sp.state_input(k) + q]);
                }
            }
            Variable u = parts.empty() ? zeros_like(r_in[k][0]) : sum_vars(parts);
            updates.push_back(conform(u, sp.state_type(k)));
        }
    }
    std::vector<std::size_t> g_of_nonseq(sp.n_nonseqs, SIZE_MAX);
    std::size_t n_r = updates.size();
    for (std::size_t m = 0; m < sp.n_nonseqs; ++m) {
        const auto& cm = c[sp.nonseq_input(m)];
        if (!cm) continue;
        const auto& type = sp.inner_inputs[sp.nonseq_input(m)].type();
        auto v = make_input(type, "acc" + std::to_string(m));
        b_tap_in.push_back(v);
        b.state_taps.push_back({-1});
        b_inits.push_back(zeros_of(type, inputs[sp.outer_nonseq(m)]));
        g_of_nonseq[m] = updates.size();
        updates.push_back(conform(add(v, *cm), type));
    }
    std::vector<std::size_t> z_of_seq_input(sp.n_seq_inputs(), SIZE_MAX);
    std::vector<Variable> collected;
    for (std::size_t i = 0; i < sp.n_seq_inputs(); ++i) {
        if (!c[i]) continue;
        z_of_seq_input[i] = updates.size() + collected.size();
        collected.push_back(*c[i]);
    }
    if (updates.empty() && collected.empty()) return result;

    b.inner_inputs = b_seq_in;
    b.inner_inputs.insert(b.inner_inputs.end(), b_tap_in.begin(), b_tap_in.end());
    b.inner_inputs.insert(b.inner_inputs.end(), b_nonseq_in.begin(), b_nonseq_in.end());
    b.inner_outputs = updates;
    b.inner_outputs.insert(b.inner_outputs.end(), collected.begin(), collected.end());
    b.n_nonseqs = b_nonseq_in.size();
    b.n_collected = collected.size();
    b.reverse = true;
    b.steps = sp.steps;
    b.const_steps = sp.const_steps;
    std::vector<Variable> outer;
    if (sp.steps == ScanSteps::symbolic) outer.push_back(inputs[0]);
    outer.insert(outer.end(), b_seqs.begin(), b_seqs.end());
    outer.insert(outer.end(), b_inits.begin(), b_inits.end());
    outer.insert(outer.end(), b_nonseqs.begin(), b_nonseqs.end());
    auto bo = make_scan(std::move(b), std::move(outer));

    // Initial states.
    std::size_t r = 0;
    for (std::size_t k = 0; k < ns; ++k) {
        if (r_in[k].empty()) continue;
        const auto d = sp.depth(k);
        if (d == 1) {
            result[sp.outer_init(k)] = take_row(bo[r], 0);
        } else {
            std::vector<Variable> rows;
            for (std::int64_t j = d; j >= 1; --j) {
                rows.push_back(take_row(bo[r + static_cast<std::size_t>(j - 1)], 0));
            }
            result[sp.outer_init(k)] = stack_rows(rows);
        }
        r += static_cast<std::size_t>(d);
    }
    (void)n_r;
    for (std::size_t m = 0; m < sp.n_nonseqs; ++m) {
        if (g_of_nonseq[m] != SIZE_MAX) result[sp.outer_nonseq(m)] = take_row(bo[g_of_nonseq[m]], 0);
    }
    for (std::size_t s = 0; s < sp.n_sequences(); ++s) {
        const Variable& seq = inputs[sp.outer_seq(s)];
        std::vector<Variable> parts;
        for (std::size_t j = 0; j < sp.seq_offsets[s].size(); ++j) {
            const auto zi = z_of_seq_input[sp.seq_input(s) + j];
            if (zi == SIZE_MAX) continue;
            parts.push_back(pad_rows(bo[zi], seq, sp.seq_offsets[s][j]));
        }
        if (!parts.empty()) result[sp.outer_seq(s)] = sum_vars(parts);
    }
    return result;
}

std::vector<OptVar> Scan::rop(std::span<const Variable> inputs, std::span<const Variable> outputs,
                              std::span<const OptVar> pert) const {
    (void)outputs;
    const auto& sp = spec_;
    std::vector<OptVar> result(sp.n_outputs());
    bool any = false;
    for (std::size_t i = sp.lead(); i < pert.size(); ++i) {
        any |= pert[i].has_value() && is_float(inputs[i].type().dtype);
    }
    if (!any) return result;
    for (auto keep : sp.keep_rows) {
        if (keep > 0) throw RopUnsupportedError("R-op unsupported for op 'scan' (truncated history)");
    }
    const std::size_t ns = sp.n_states();
    ScanSpec r;
    Substitutions fwd2r;
    std::vector<Variable> seq_in, tap_in, nonseq_in, seqs, inits, nonseqs;
    std::vector<OptVar> gamma_of(sp.inner_inputs.size());

    for (std::size_t s = 0; s < sp.n_sequences(); ++s) {
        r.seq_offsets.push_back(sp.seq_offsets[s]);
        seqs.push_back(inputs[sp.outer_seq(s)]);
        for (std::size_t j = 0; j < sp.seq_offsets[s].size(); ++j) {
            const auto& fin = sp.inner_inputs[sp.seq_input(s) + j];
            auto v = make_input(fin.type(), fin.name());
            fwd2r.emplace(fin.id(), v);
            seq_in.push_back(v);
        }
    }
    for (std::size_t s = 0; s < sp.n_sequences(); ++s) {
        const auto& p = pert[sp.outer_seq(s)];
        if (!p || !is_float(inputs[sp.outer_seq(s)].type().dtype)) continue;
        r.seq_offsets.push_back(sp.seq_offsets[s]);
        seqs.push_back(*p);
        for (std::size_t j = 0; j < sp.seq_offsets[s].size(); ++j) {
            const auto& fin = sp.inner_inputs[sp.seq_input(s) + j];
            auto v = make_input(fin.type(), "d_" + fin.name());
            gamma_of[sp.seq_input(s) + j] = v;
            seq_in.push_back(v);
        }
    }
    for (std::size_t k = 0; k < ns; ++k) {
        r.state_taps.push_back(sp.state_taps[k]);
        inits.push_back(inputs[sp.outer_init(k)]);
        for (std::size_t j = 0; j < sp.state_taps[k].size(); ++j) {
            const auto& fin = sp.inner_inputs[sp.state_input(k) + j];
            auto v = make_input(fin.type(), fin.name());
            fwd2r.emplace(fin.id(), v);
            tap_in.push_back(v);
        }
    }
    std::vector<std::size_t> pert_states;
    for (std::size_t k = 0; k < ns; ++k) {
        if (!is_float(sp.state_type(k).dtype)) continue;
        pert_states.push_back(k);
        r.state_taps.push_back(sp.state_taps[k]);
        const auto& init = inputs[sp.outer_init(k)];
        const auto& p = pert[sp.outer_init(k)];
        inits.push_back(p ? *p : zeros_of(sp.init_type(k), init));
        for (std::size_t j = 0; j < sp.state_taps[k].size(); ++j) {
            const auto& fin = sp.inner_inputs[sp.state_input(k) + j];
            auto v = make_input(fin.type(), "d_" + fin.name());
            gamma_of[sp.state_input(k) + j] = v;
            tap_in.push_back(v);
        }
    }
    for (std::size_t m = 0; m < sp.n_nonseqs; ++m) {
        const auto& fin = sp.inner_inputs[sp.nonseq_input(m)];
        auto v = make_input(fin.type(), fin.name());
        fwd2r.emplace(fin.id(), v);
        nonseq_in.push_back(v);
        nonseqs.push_back(inputs[sp.outer_nonseq(m)]);
    }
    for (std::size_t m = 0; m < sp.n_nonseqs; ++m) {
        const auto& p = pert[sp.outer_nonseq(m)];
        if (!p || !is_float(inputs[sp.outer_nonseq(m)].type().dtype)) continue;
        const auto& fin = sp.inner_inputs[sp.nonseq_input(m)];
        auto v = make_input(fin.type(), "d_" + fin.name());
        gamma_of[sp.nonseq_input(m)] = v;
        nonseq_in.push_back(v);
        nonseqs.push_back(*p);
    }

    auto cloned = clone_with_substitutions(sp.inner_outputs, fwd2r);
    std::vector<Variable> fwd_outs(cloned.begin(), cloned.begin() + static_cast<long>(sp.n_outputs()));
    std::vector<Variable> wrt;
    for (const auto& fin : sp.inner_inputs) wrt.push_back(fwd2r.at(fin.id()));
    auto d = rop_partial(fwd_outs, wrt, gamma_of);

    std::vector<Variable> outs(fwd_outs.begin(), fwd_outs.begin() + static_cast<long>(ns));
    for (auto k : pert_states) {
        outs.push_back(conform(d[k] ? *d[k] : zeros_like(fwd_outs[k]), sp.state_type(k)));
    }
    std::vector<std::size_t> pert_collected;
    for (std::size_t j = 0; j < sp.n_collected; ++j) outs.push_back(fwd_outs[ns + j]);
    for (std::size_t j = 0; j < sp.n_collected; ++j) {
        const auto& y = fwd_outs[ns + j];
        if (!is_float(y.type().dtype)) continue;
        pert_collected.push_back(j);
        outs.push_back(d[ns + j] ? *d[ns + j] : zeros_like(y));
    }
    if (sp.until) outs.push_back(cloned.back());

    r.inner_inputs = seq_in;
    r.inner_inputs.insert(r.inner_inputs.end(), tap_in.begin(), tap_in.end());
    r.inner_inputs.insert(r.inner_inputs.end(), nonseq_in.begin(), nonseq_in.end());
    r.inner_outputs = outs;
    r.n_nonseqs = nonseq_in.size();
    r.n_collected = sp.n_collected + pert_collected.size();
    r.steps = sp.steps;
    r.const_steps = sp.const_steps;
    r.until = sp.until;
    r.reverse = sp.reverse;
    std::vector<Variable> outer;
    if (sp.steps == ScanSteps::symbolic) outer.push_back(inputs[0]);
    outer.insert(outer.end(), seqs.begin(), seqs.end());
    outer.insert(outer.end(), inits.begin(), inits.end());
    outer.insert(outer.end(), nonseqs.begin(), nonseqs.end());
    const std::size_t n_r_states = ns + pert_states.size();
    auto ro = make_scan(std::move(r), std::move(outer));
    for (std::size_t q = 0; q < pert_states.size(); ++q) result[pert_states[q]] = ro[ns + q];
    for (std::size_t q = 0; q < pert_collected.size(); ++q) {
        result[ns + pert_collected[q]] = ro[n_r_states + sp.n_collected + q];
    }
    return result;
}

}  // namespace graphc
