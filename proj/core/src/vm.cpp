// Copyright 2026 The graphc Authors
// SPDX-License-Identifier: Apache-2.0

#include "graphc/vm.hpp"

#include <cstdlib>
#include <mutex>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "graphc/program.hpp"
#include "graphc/scan.hpp"

namespace graphc {

struct CompiledFunction::Impl {
    RuntimeOptions options;
    Graph graph;
    PassReport report;
    std::shared_ptr<const Program> program;
    std::unique_ptr<Frame> frame;
    std::mutex mutex;
    std::vector<Tensor> staging;  // converted inputs
    std::vector<int> demanded;
    std::vector<bool> movable;  // per root: produced, referenced once
    std::vector<std::shared_ptr<SharedStorage>> targets;
    std::vector<Tensor> pending;  // update values awaiting the swap

    void bind_inputs(std::span<const Tensor> inputs);
    void execute();
    Tensor take(std::size_t root);
    void commit_updates();
};

CompiledFunction::CompiledFunction(std::unique_ptr<Impl> impl) : impl_(std::move(impl)) {}
CompiledFunction::CompiledFunction(CompiledFunction&&) noexcept = default;
CompiledFunction& CompiledFunction::operator=(CompiledFunction&&) noexcept = default;
CompiledFunction::~CompiledFunction() = default;

void CompiledFunction::Impl::bind_inputs(std::span<const Tensor> inputs) {
    const auto& cells = program->cells();
    const auto& in_cells = program->input_cells();
    if (inputs.size() != in_cells.size()) {
        throw InputConversionError("expected " + std::to_string(in_cells.size()) +
                                   " inputs, got " + std::to_string(inputs.size()));
    }
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        const int c = in_cells[i];
        const Tensor& x = inputs[i];
        if (options.trust_input) {
            frame->bind(c, &x);
            continue;
        }
        const auto& type = cells[c].type;
        if (!type.accepts(x.shape())) {
            throw InputConversionError("input '" + cells[c].name + "': shape " +
                                       shape_to_string(x.shape()) + " does not conform to " +
                                       type.to_string());
        }
        if (x.dtype() == type.dtype) {
            frame->bind(c, &x);
        } else if (converts_losslessly(x.dtype(), type.dtype)) {
            staging[i] = x;
            staging[i].set_dtype(type.dtype);
            frame->bind(c, &staging[i]);
        } else {
            throw InputConversionError("input '" + cells[c].name + "': cannot convert " +
                                       std::string(dtype_name(x.dtype())) + " to " +
                                       std::string(dtype_name(type.dtype)) + " without loss");
        }
    }
}

void CompiledFunction::Impl::execute() {
    const ExecOptions exec{options.gc, options.timing};
    if (options.lazy) frame->run_lazy(demanded, exec);
    else frame->run_eager(exec);
}

Tensor CompiledFunction::Impl::take(std::size_t root) {
    const int c = program->output_cells()[root];
    if (options.gc && movable[root]) return std::move(frame->owned(c));
    return *frame->value(c);
}

void CompiledFunction::Impl::commit_updates() {
    const std::size_t n_out = graph.outputs.size();
    // Without gc a produced update value trades buffers with its target, so
    // the old parameter storage is reused by the next call.
    auto swappable = [&](std::size_t u) { return !options.gc && movable[n_out + u]; };
    for (std::size_t u = 0; u < targets.size(); ++u) {
        if (!swappable(u)) pending[u] = take(n_out + u);
    }
    for (std::size_t u = 0; u < targets.size(); ++u) {
        if (swappable(u)) {
            std::swap(targets[u]->value, frame->owned(program->output_cells()[n_out + u]));
        } else {
            std::swap(targets[u]->value, pending[u]);
        }
    }
}

std::vector<Tensor> CompiledFunction::call(std::span<const Tensor> inputs) {
    auto& m = *impl_;
    std::lock_guard<std::mutex> lock(m.mutex);
    m.bind_inputs(inputs);
    m.execute();
    std::vector<Tensor> out;
    out.reserve(m.graph.outputs.size());
    for (std::size_t k = 0; k < m.graph.outputs.size(); ++k) out.push_back(m.take(k));
    m.commit_updates();
    return out;
}

std::vector<Tensor> CompiledFunction::call(std::initializer_list<Tensor> inputs) {
    return call(std::span<const Tensor>(inputs.begin(), inputs.size()));
}

std::vector<Tensor> CompiledFunction::call_repeated(std::int64_t n) {
    auto& m = *impl_;
    if (n < 1) throw std::invalid_argument("call_repeated: n_calls must be >= 1");
    if (!m.program->input_cells().empty()) {
        throw std::invalid_argument("call_repeated: function takes " +
                                    std::to_string(m.program->input_cells().size()) +
                                    " inputs; all state must live in shared variables");
    }
    std::lock_guard<std::mutex> lock(m.mutex);
    std::vector<Tensor> out;
    for (std::int64_t i = 0; i < n; ++i) {
        m.execute();
        if (i + 1 == n) {
            for (std::size_t k = 0; k < m.graph.outputs.size(); ++k) out.push_back(m.take(k));
        }
        m.commit_updates();
    }
    return out;
}

const RuntimeOptions& CompiledFunction::options() const { return impl_->options; }
const Graph& CompiledFunction::optimized_graph() const { return impl_->graph; }
const PassReport& CompiledFunction::report() const { return impl_->report; }
std::size_t CompiledFunction::num_instructions() const { return impl_->program->instrs().size(); }

std::vector<ProfileEntry> CompiledFunction::profile() const {
    const auto& instrs = impl_->program->instrs();
    const auto& prof = impl_->frame->profile();
    std::vector<ProfileEntry> out;
    out.reserve(instrs.size());
    for (std::size_t i = 0; i < instrs.size(); ++i) {
        out.push_back({instrs[i].label, instrs[i].node->op().name(), prof[i].count, prof[i].nanos});
    }
    return out;
}

std::string CompiledFunction::profile_json() const {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& e : profile()) {
        j.push_back({{"node", e.node}, {"op", e.op}, {"count", e.count}, {"nanos", e.nanos}});
    }
    return j.dump(2);
}

std::string CompiledFunction::profile_text() const {
    std::ostringstream os;
    for (const auto& e : profile()) {
        os << e.count << "\t" << e.nanos << "\t" << e.node << "\n";
    }
    return os.str();
}

void CompiledFunction::reset_profile() { impl_->frame->reset_profile(); }

std::size_t CompiledFunction::buffered_elements() const { return impl_->frame->owned_capacity(); }

std::vector<ProfileEntry> parse_profile_json(const std::string& text) {
    std::vector<ProfileEntry> out;
    for (const auto& e : nlohmann::json::parse(text)) {
        out.push_back({e.at("node").get<std::string>(), e.at("op").get<std::string>(),
                       e.at("count").get<std::uint64_t>(), e.at("nanos").get<std::uint64_t>()});
    }
    return out;
}

std::optional<OptLevel> env_opt_level() {
    const char* v = std::getenv("GRAPHC_OPT_LEVEL");
    if (!v) return std::nullopt;
    return parse_opt_level(v);
}

CompiledFunction compile(const Graph& g, const RuntimeOptions& options,
                         std::optional<OptLevel> level, const OptimizeOptions& opt_options) {
    auto problems = validate(g);
    if (!problems.empty()) {
        std::string msg = "invalid graph:";
        for (const auto& p : problems) msg += "\n  " + p;
        throw GraphError(msg);
    }
    OptimizeOptions oo = opt_options;
    oo.level = level ? *level : env_opt_level().value_or(OptLevel::standard);
    auto impl = std::make_unique<CompiledFunction::Impl>();
    impl->options = options;
    auto [graph, report] = optimize(g, oo);
    apply_scan_memory_plan(graph);
    impl->graph = std::move(graph);
    impl->report = std::move(report);
    auto roots = impl->graph.roots();
    impl->program = std::make_shared<const Program>(impl->graph.inputs, roots);
    impl->frame = std::make_unique<Frame>(impl->program);
    impl->staging.resize(impl->graph.inputs.size());
    impl->demanded = impl->program->output_cells();
    const auto& cells = impl->program->cells();
    for (std::size_t r = 0; r < roots.size(); ++r) {
        const int c = impl->demanded[r];
        bool unique = cells[c].producer >= 0;
        for (std::size_t s = 0; s < roots.size() && unique; ++s) {
            unique = s == r || impl->demanded[s] != c;
        }
        impl->movable.push_back(unique);
    }
    for (const auto& u : impl->graph.updates) impl->targets.push_back(u.target.shared_storage());
    impl->pending.resize(impl->targets.size());
    return CompiledFunction(std::move(impl));
}

}  // namespace graphc
