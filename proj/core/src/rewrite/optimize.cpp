// Copyright 2026 The graphc Authors
// SPDX-License-Identifier: Apache-2.0

#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "graphc/rewrite.hpp"
#include "graphc/scan.hpp"
#include "rewrite/walk.hpp"

namespace graphc {

std::string_view opt_level_name(OptLevel level) {
    switch (level) {
        case OptLevel::none: return "none";
        case OptLevel::stabilize_only: return "stabilize_only";
        case OptLevel::standard: return "default";
    }
    return "default";
}

std::optional<OptLevel> parse_opt_level(std::string_view text) {
    if (text == "none") return OptLevel::none;
    if (text == "stabilize_only") return OptLevel::stabilize_only;
    if (text == "default") return OptLevel::standard;
    return std::nullopt;
}

std::string_view stage_name(RewriteStage stage) {
    switch (stage) {
        case RewriteStage::canonicalize: return "canonicalize";
        case RewriteStage::stabilize: return "stabilize";
        case RewriteStage::specialize: return "specialize";
        case RewriteStage::fuse: return "fuse";
        case RewriteStage::fold: return "fold";
    }
    return "?";
}

// ---- PassReport ------------------------------------------------------------

std::uint64_t PassReport::count(std::string_view rule) const {
    for (const auto& r : rules) {
        if (r.rule == rule) return r.count;
    }
    return 0;
}

void PassReport::add(std::string_view rule, RewriteStage stage, std::uint64_t n,
                     std::uint64_t micros) {
    for (auto& r : rules) {
        if (r.rule == rule) {
            r.count += n;
            r.micros += micros;
            return;
        }
    }
    rules.push_back({std::string(rule), stage, n, micros});
}

const StageReport* PassReport::stage(RewriteStage s) const {
    for (const auto& st : stages) {
        if (st.stage == s) return &st;
    }
    return nullptr;
}

std::string PassReport::to_text() const {
    std::ostringstream os;
    os << "optimize level=" << opt_level_name(level) << " nodes " << nodes_before << " -> "
       << nodes_after << " (cse merged " << cse_merged << ")\n";
    os << std::left << std::setw(14) << "stage" << std::right << std::setw(8) << "before"
       << std::setw(8) << "after" << std::setw(6) << "iter" << std::setw(10) << "micros" << "\n";
    for (const auto& s : stages) {
        os << std::left << std::setw(14) << stage_name(s.stage) << std::right << std::setw(8)
           << s.nodes_before << std::setw(8) << s.nodes_after << std::setw(6) << s.iterations
           << std::setw(10) << s.micros << "\n";
    }
    os << std::left << std::setw(20) << "rule" << std::setw(14) << "stage" << std::right
       << std::setw(8) << "count" << std::setw(10) << "micros" << "\n";
    for (const auto& r : rules) {
        os << std::left << std::setw(20) << r.rule << std::setw(14) << stage_name(r.stage)
           << std::right << std::setw(8) << r.count << std::setw(10) << r.micros << "\n";
    }
    for (const auto& w : warnings) os << "warning: " << w << "\n";
    return os.str();
}

std::string PassReport::to_json() const {
    nlohmann::json j;
    j["level"] = opt_level_name(level);
    j["nodes_before"] = nodes_before;
    j["nodes_after"] = nodes_after;
    j["cse_merged"] = cse_merged;
    j["warnings"] = warnings;
    j["stages"] = nlohmann::json::array();
    for (const auto& s : stages) {
        j["stages"].push_back({{"stage", stage_name(s.stage)},
                               {"nodes_before", s.nodes_before},
                               {"nodes_after", s.nodes_after},
                               {"micros", s.micros},
                               {"iterations", s.iterations}});
    }
    j["rules"] = nlohmann::json::array();
    for (const auto& r : rules) {
        const StageReport* s = stage(r.stage);
        j["rules"].push_back({{"rule", r.rule},
                              {"stage", stage_name(r.stage)},
                              {"count", r.count},
                              {"nodes_before", s ? s->nodes_before : 0},
                              {"nodes_after", s ? s->nodes_after : 0},
                              {"micros", r.micros}});
    }
    return j.dump(2);
}

// ---- Driver ----------------------------------------------------------------

Graph cse(const Graph& g, std::size_t* merged) {
    PassReport scratch;
    detail::RuleWalker walker({}, scratch, RewriteStage::canonicalize);
    auto roots = g.roots();
    auto out_roots = walker.run(roots);
    Graph out;
    out.inputs = g.inputs;
    out.outputs.assign(out_roots.begin(), out_roots.begin() + static_cast<long>(g.outputs.size()));
    for (std::size_t i = 0; i < g.updates.size(); ++i) {
        out.updates.push_back({g.updates[i].target, out_roots[g.outputs.size() + i]});
    }
    if (merged) *merged = walker.merged();
    return out;
}

namespace {

class Optimizer {
public:
    Optimizer(const OptimizeOptions& opts, PassReport& report) : opts_(opts), report_(report) {}

    Graph run(Graph g) {
        report_.level = opts_.level;
        report_.nodes_before = count_nodes(g);
        if (opts_.level != OptLevel::none) {
            g = staged(std::move(g), RewriteStage::canonicalize, [&](Graph& cur) {
                bool changed = walk(cur, RewriteStage::canonicalize);
                if (opts_.level == OptLevel::standard) changed |= fold_once(cur);
                return changed;
            });
            g = local_stage(std::move(g), RewriteStage::stabilize);
        }
        if (opts_.level == OptLevel::standard) {
            g = specialize(std::move(g));
            g = fuse(std::move(g));
            g = fold(std::move(g));
        }
        report_.nodes_after = count_nodes(g);
        return g;
    }

private:
    bool enabled(std::string_view name) const { return !opts_.disabled_rules.count(std::string(name)); }

    std::vector<const RewriteRule*> rules_for(RewriteStage stage) const {
        std::vector<const RewriteRule*> out;
        for (const auto& r : builtin_rules()) {
            if (r.stage != stage || !enabled(r.name)) continue;
            if (r.default_only && opts_.level != OptLevel::standard) continue;
            out.push_back(&r);
        }
        return out;
    }

    // One rule walk; returns whether anything changed.
    bool walk(Graph& g, RewriteStage stage) {
        detail::RuleWalker walker(rules_for(stage), report_, stage);
        auto roots = g.roots();
        auto out = walker.run(roots);
        report_.cse_merged += walker.merged();
        bool changed = walker.fired() > 0 || walker.merged() > 0;
        for (std::size_t i = 0; i < roots.size() && !changed; ++i) changed = roots[i].id() != out[i].id();
        if (!changed) return false;
        for (std::size_t i = 0; i < g.outputs.size(); ++i) g.outputs[i] = out[i];
        for (std::size_t i = 0; i < g.updates.size(); ++i) g.updates[i].expr = out[g.outputs.size() + i];
        return true;
    }

    template <typename Body>
    Graph staged(Graph g, RewriteStage stage, Body body) {
        StageReport sr;
        sr.stage = stage;
        sr.nodes_before = count_nodes(g);
        const auto t0 = std::chrono::steady_clock::now();
        bool settled = false;
        while (sr.iterations < opts_.max_iterations) {
            ++sr.iterations;
            if (!body(g)) {
                settled = true;
                break;
            }
        }
        if (!settled) {
            report_.warnings.push_back(std::string(stage_name(stage)) + ": iteration cap (" +
                                       std::to_string(opts_.max_iterations) + ") reached");
        }
        sr.micros = detail::micros_since(t0);
        sr.nodes_after = count_nodes(g);
        report_.stages.push_back(sr);
        return g;
    }

    Graph local_stage(Graph g, RewriteStage stage) {
        return staged(std::move(g), stage, [&](Graph& cur) { return walk(cur, stage); });
    }

    bool scan_pass(Graph& g, const char* name, bool (*pass)(Graph&)) {
        if (!enabled(name)) return false;
        const auto t0 = std::chrono::steady_clock::now();
        bool changed = pass(g);
        if (changed) report_.add(name, RewriteStage::specialize, 1, detail::micros_since(t0));
        return changed;
    }

    Graph specialize(Graph g) {
        return staged(std::move(g), RewriteStage::specialize, [&](Graph& cur) {
            bool changed = walk(cur, RewriteStage::specialize);
            if (count_scans(cur) == 0) return changed;
            changed |= scan_pass(cur, "scan_unroll", unroll_single_step_scans);
            changed |= scan_pass(cur, "scan_hoist", hoist_scan_invariants);
            changed |= scan_pass(cur, "scan_prune", prune_scans);
            changed |= scan_pass(cur, "scan_merge", merge_scans);
            if (enabled("scan_inner")) {
                const auto t0 = std::chrono::steady_clock::now();
                bool inner = optimize_scan_bodies(cur, [&](const Graph& body) {
                    auto [opt, rep] = optimize(body, opts_);
                    for (const auto& r : rep.rules) report_.add(r.rule, r.stage, r.count, r.micros);
                    return opt;
                });
                if (inner) report_.add("scan_inner", RewriteStage::specialize, 1, detail::micros_since(t0));
                changed |= inner;
            }
            return changed;
        });
    }

    Graph fuse(Graph g) {
        return staged(std::move(g), RewriteStage::fuse, [&](Graph& cur) {
            if (!enabled("fuse_elementwise")) return false;
            const auto t0 = std::chrono::steady_clock::now();
            std::size_t n = 0;
            cur = fuse_elementwise(cur, &n);
            if (n) report_.add("fuse_elementwise", RewriteStage::fuse, n, detail::micros_since(t0));
            return n > 0;
        });
    }

    bool fold_once(Graph& g) {
        if (!enabled("constant_fold")) return false;
        const auto t0 = std::chrono::steady_clock::now();
        std::size_t n = 0;
        g = constant_fold(g, opts_.fold_threshold, &n);
        if (n) report_.add("constant_fold", RewriteStage::fold, n, detail::micros_since(t0));
        return n > 0;
    }

    Graph fold(Graph g) {
        return staged(std::move(g), RewriteStage::fold, [&](Graph& cur) { return fold_once(cur); });
    }

    const OptimizeOptions& opts_;
    PassReport& report_;
};

}  // namespace

std::pair<Graph, PassReport> optimize(const Graph& g, const OptimizeOptions& options) {
    PassReport report;
    Optimizer opt(options, report);
    Graph out = opt.run(g);
    return {std::move(out), std::move(report)};
}

}  // namespace graphc
