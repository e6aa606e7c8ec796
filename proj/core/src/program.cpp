// Copyright 2026 The graphc Authors
// SPDX-License-Identifier: Apache-2.0

#include "graphc/program.hpp"

#include <chrono>

namespace graphc {

Program::Program(std::span<const Variable> inputs, std::span<const Variable> outputs) {
    auto add_cell = [&](const Variable& v, Origin origin) {
        ProgramCell c;
        c.type = v.type();
        c.origin = origin;
        c.name = v.display_name();
        if (origin == Origin::constant) c.constant = std::make_shared<Tensor>(v.constant_value());
        if (origin == Origin::shared) c.shared = v.shared_storage();
        cells_.push_back(std::move(c));
        int idx = static_cast<int>(cells_.size()) - 1;
        index_.emplace(v.id(), idx);
        return idx;
    };
    for (const auto& v : inputs) {
        if (index_.count(v.id())) throw GraphError("duplicate input: " + v.display_name());
        input_cells_.push_back(add_cell(v, Origin::input));
    }
    auto leaf_cell = [&](const Variable& v) {
        auto it = index_.find(v.id());
        if (it != index_.end()) return it->second;
        if (v.origin() == Origin::input) throw GraphError("unbound input: " + v.display_name());
        return add_cell(v, v.origin());
    };
    const auto order = toposort(outputs);
    instrs_.reserve(order.size());
    for (std::size_t n = 0; n < order.size(); ++n) {
        const auto& node = order[n];
        ProgramInstr ins;
        ins.node = node;
        ins.label = std::to_string(n) + ":" + node->op().label();
        for (const auto& in : node->inputs()) {
            int c = in.is_leaf() ? leaf_cell(in) : index_.at(in.id());
            cells_[c].consumers++;
            ins.in.push_back(c);
        }
        for (std::size_t o = 0; o < node->num_outputs(); ++o) {
            Variable out = node->output(o);
            int c = add_cell(out, Origin::output);
            cells_[c].producer = static_cast<int>(n);
            cells_[c].producer_output = o;
            ins.out.push_back(c);
        }
        has_lazy_ |= node->op().lazy();
        instrs_.push_back(std::move(ins));
    }
    for (const auto& v : outputs) {
        output_cells_.push_back(v.is_leaf() ? leaf_cell(v) : index_.at(v.id()));
    }
    // Eager-mode release points.
    std::vector<int> last_use(cells_.size(), -1);
    for (std::size_t n = 0; n < instrs_.size(); ++n) {
        for (int c : instrs_[n].in) last_use[c] = static_cast<int>(n);
    }
    std::vector<bool> keep(cells_.size(), false);
    for (int c : output_cells_) keep[c] = true;
    for (std::size_t c = 0; c < cells_.size(); ++c) {
        if (cells_[c].producer < 0 || keep[c]) continue;
        int at = last_use[c] >= 0 ? last_use[c] : cells_[c].producer;
        instrs_[at].free_after.push_back(static_cast<int>(c));
    }
}

int Program::cell_of(VarId id) const {
    auto it = index_.find(id);
    return it == index_.end() ? -1 : it->second;
}

Frame::Frame(std::shared_ptr<const Program> program) : program_(std::move(program)) {
    const auto& cells = program_->cells();
    const auto& instrs = program_->instrs();
    out_.resize(instrs.size());
    value_.assign(cells.size(), nullptr);
    ready_.assign(cells.size(), 0);
    done_.assign(instrs.size(), 0);
    pending_.assign(cells.size(), 0);
    profile_.assign(instrs.size(), {});
    is_output_.assign(cells.size(), 0);
    for (int c : program_->output_cells()) is_output_[c] = 1;
    workspaces_.resize(instrs.size());
    for (std::size_t i = 0; i < instrs.size(); ++i) {
        out_[i].resize(instrs[i].out.size());
        for (std::size_t o = 0; o < instrs[i].out.size(); ++o) value_[instrs[i].out[o]] = &out_[i][o];
        workspaces_[i] = instrs[i].node->op().make_workspace();
    }
    for (std::size_t c = 0; c < cells.size(); ++c) {
        if (cells[c].constant) bind(static_cast<int>(c), cells[c].constant.get());
        if (cells[c].shared) bind(static_cast<int>(c), &cells[c].shared->value);
    }
}

Tensor& Frame::owned(int cell) {
    const auto& c = program_->cells()[cell];
    return out_[c.producer][c.producer_output];
}

void Frame::reset_profile() {
    for (auto& p : profile_) p = {};
}

std::size_t Frame::owned_capacity() const {
    std::size_t total = 0;
    for (const auto& outs : out_) {
        for (const auto& t : outs) total += t.capacity();
    }
    return total;
}

void Frame::begin_call() {
    const auto& cells = program_->cells();
    for (std::size_t c = 0; c < cells.size(); ++c) {
        if (cells[c].producer >= 0) ready_[c] = 0;
        pending_[c] = cells[c].consumers;
    }
    std::fill(done_.begin(), done_.end(), 0);
}

void Frame::release(int cell) {
    owned(cell).release();
    ready_[cell] = 0;
}

void Frame::execute(std::size_t i, std::span<const Tensor* const> inputs, const ExecOptions& opts) {
    const auto& ins = program_->instrs()[i];
    const Op& op = ins.node->op();
    try {
        if (opts.timing) {
            auto t0 = std::chrono::steady_clock::now();
            op.compute(inputs, out_[i], workspaces_[i].get());
            auto t1 = std::chrono::steady_clock::now();
            profile_[i].nanos += static_cast<std::uint64_t>(
                std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count());
        } else {
            op.compute(inputs, out_[i], workspaces_[i].get());
        }
    } catch (const KernelError&) {
        throw;
    } catch (const std::exception& e) {
        throw KernelError(op.name() + ": " + e.what());
    }
    profile_[i].count++;
    for (int c : ins.out) ready_[c] = 1;
    done_[i] = 1;
}

void Frame::run_eager(const ExecOptions& opts) {
    begin_call();
    const auto& instrs = program_->instrs();
    std::vector<const Tensor*> ptrs;
    for (std::size_t i = 0; i < instrs.size(); ++i) {
        const auto& ins = instrs[i];
        ptrs.resize(ins.in.size());
        for (std::size_t k = 0; k < ins.in.size(); ++k) ptrs[k] = value_[ins.in[k]];
        execute(i, ptrs, opts);
        if (opts.gc) {
            for (int c : ins.free_after) release(c);
        }
    }
}

void Frame::run_lazy(std::span<const int> demanded, const ExecOptions& opts) {
    begin_call();
    const auto& cells = program_->cells();
    const auto& instrs = program_->instrs();
    std::vector<std::size_t> stack;
    for (int c : demanded) {
        if (!ready_[c] && cells[c].producer >= 0) stack.push_back(cells[c].producer);
    }
    std::vector<const Tensor*> ptrs;
    auto consumed = [&](int c) {
        if (--pending_[c] == 0 && opts.gc && cells[c].producer >= 0 && !is_output_[c]) release(c);
    };
    while (!stack.empty()) {
        const std::size_t i = stack.back();
        if (done_[i]) {
            stack.pop_back();
            continue;
        }
        const auto& ins = instrs[i];
        const Op& op = ins.node->op();
        ptrs.assign(ins.in.size(), nullptr);
        bool waiting = false;
        if (op.lazy()) {
            for (std::size_t k = 0; k < ins.in.size(); ++k) {
                if (ready_[ins.in[k]]) ptrs[k] = value_[ins.in[k]];
            }
            while (true) {
                auto req = op.lazy_requires(ptrs);
                if (req.empty()) break;
                bool progressed = false;
                for (std::size_t k : req) {
                    int c = ins.in[k];
                    if (ready_[c]) {
                        if (!ptrs[k]) {
                            ptrs[k] = value_[c];
                            progressed = true;
                        }
                    } else {
                        stack.push_back(static_cast<std::size_t>(cells[c].producer));
                        waiting = true;
                    }
                }
                if (waiting) break;
                if (!progressed) throw KernelError("lazy op '" + op.name() + "' made no progress");
            }
        } else {
            for (std::size_t k = 0; k < ins.in.size(); ++k) {
                int c = ins.in[k];
                if (ready_[c]) {
                    ptrs[k] = value_[c];
                } else {
                    stack.push_back(static_cast<std::size_t>(cells[c].producer));
                    waiting = true;
                }
            }
        }
        if (waiting) continue;
        stack.pop_back();
        execute(i, ptrs, opts);
        for (std::size_t k = 0; k < ins.in.size(); ++k) {
            if (ptrs[k]) consumed(ins.in[k]);
        }
    }
    if (opts.gc) collect_garbage();
}

void Frame::run(std::span<const int> demanded, const ExecOptions& opts, bool lazy) {
    if (lazy && program_->has_lazy()) run_lazy(demanded, opts);
    else run_eager(opts);
}

void Frame::collect_garbage() {
    const auto& cells = program_->cells();
    for (std::size_t c = 0; c < cells.size(); ++c) {
        if (cells[c].producer >= 0 && !is_output_[c]) release(static_cast<int>(c));
    }
}

}  // namespace graphc
