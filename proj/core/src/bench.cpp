// Copyright 2026 The graphc Authors
// SPDX-License-Identifier: Apache-2.0

#include "graphc/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <stdexcept>

#include <json.hpp>

#include "graphc/autodiff.hpp"
#include "graphc/ops.hpp"
#include "graphc/scan.hpp"

namespace graphc::bench {

namespace {

using Clock = std::chrono::steady_clock;

Tensor glorot(std::mt19937_64& rng, std::int64_t fan_in, std::int64_t fan_out) {
    const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> d(-a, a);
    Tensor t = Tensor::zeros({fan_in, fan_out});
    for (auto& v : t.data()) v = d(rng);
    return t;
}

// Rows of x drawn from N(0, 1); labels from a random linear teacher so the
// task is learnable.
void classification_data(std::mt19937_64& rng, const BenchConfig& cfg, Tensor& x, Tensor& y) {
    std::normal_distribution<double> n01(0.0, 1.0);
    x = Tensor::zeros({cfg.batch, cfg.input_dim});
    for (auto& v : x.data()) v = n01(rng);
    Tensor teacher = Tensor::zeros({cfg.input_dim, cfg.output_dim});
    for (auto& v : teacher.data()) v = n01(rng);
    y = Tensor::zeros({cfg.batch}, DType::i64);
    for (std::int64_t i = 0; i < cfg.batch; ++i) {
        std::int64_t best = 0;
        double best_score = -INFINITY;
        for (std::int64_t c = 0; c < cfg.output_dim; ++c) {
            double s = 0.0;
            for (std::int64_t k = 0; k < cfg.input_dim; ++k) {
                s += x[i * cfg.input_dim + k] * teacher[k * cfg.output_dim + c];
            }
            if (s > best_score) {
                best_score = s;
                best = c;
            }
        }
        y.data()[i] = static_cast<double>(best);
    }
}

// One-hot symbols; the target at step t is the symbol seen at step t - 1.
void sequence_data(std::mt19937_64& rng, const BenchConfig& cfg, Tensor& x, Tensor& y) {
    std::uniform_int_distribution<std::int64_t> sym(0, cfg.input_dim - 1);
    x = Tensor::zeros({cfg.seq_len, cfg.input_dim});
    y = Tensor::zeros({cfg.seq_len}, DType::i64);
    std::int64_t prev = 0;
    for (std::int64_t t = 0; t < cfg.seq_len; ++t) {
        const std::int64_t s = sym(rng);
        x.data()[t * cfg.input_dim + s] = 1.0;
        y.data()[t] = static_cast<double>(prev % cfg.output_dim);
        prev = s;
    }
}

Variable data_leaf(const Tensor& value, bool shared, const std::string& name) {
    if (shared) return make_shared(value, name);
    std::vector<std::int64_t> dims = value.shape();
    dims[0] = kUnknownDim;
    return make_input(TensorType(value.dtype(), dims), name);
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    if (n == 0) return 0.0;
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

std::string_view model_name(Model m) {
    switch (m) {
        case Model::logreg: return "logreg";
        case Model::mlp1: return "mlp1";
        case Model::mlp3: return "mlp3";
        case Model::rnn: return "rnn";
    }
    return "?";
}

std::optional<Model> parse_model(std::string_view name) {
    for (Model m : {Model::logreg, Model::mlp1, Model::mlp3, Model::rnn}) {
        if (model_name(m) == name) return m;
    }
    return std::nullopt;
}

LadderEntry ladder_entry(std::string_view name) {
    LadderEntry e;
    e.name = std::string(name);
    if (name == "default") return e;
    e.options.gc = false;
    if (name == "nogc") return e;
    e.options.trust_input = true;
    if (name == "trust") return e;
    if (name == "ncalls") {
        e.mode = CallMode::repeated;
        return e;
    }
    throw std::invalid_argument("unknown ladder entry '" + std::string(name) +
                                "' (expected default, nogc, trust or ncalls)");
}

std::vector<std::string> default_ladder() { return {"default", "nogc", "trust", "ncalls"}; }

BenchConfig default_config(Model m, std::int64_t batch, bool full) {
    BenchConfig c;
    c.model = m;
    c.batch = batch;
    switch (m) {
        case Model::logreg: break;
        case Model::mlp1: c.hidden = {500}; break;
        case Model::mlp3:
            c.hidden = full ? std::vector<std::int64_t>{1000, 1000, 1000}
                            : std::vector<std::int64_t>{200, 200, 200};
            break;
        case Model::rnn:
            c.input_dim = 50;
            c.output_dim = 50;
            c.hidden = {100};
            c.seq_len = 50;
            c.calls = 50;
            c.warmup = 5;
            break;
    }
    check_config(c);
    return c;
}

void check_config(const BenchConfig& cfg) {
    auto positive = [](std::int64_t v, const char* what) {
        if (v <= 0) throw std::invalid_argument(std::string(what) + " must be positive");
    };
    positive(cfg.input_dim, "input_dim");
    positive(cfg.output_dim, "output_dim");
    positive(cfg.batch, "batch");
    positive(cfg.calls, "calls");
    positive(cfg.repetitions, "repetitions");
    if (cfg.warmup < 0) throw std::invalid_argument("warmup must not be negative");
    for (auto h : cfg.hidden) positive(h, "hidden size");
    if (cfg.model == Model::rnn) {
        positive(cfg.seq_len, "seq_len");
        if (cfg.batch != 1) throw std::invalid_argument("rnn runs with batch 1");
        if (cfg.hidden.size() != 1) throw std::invalid_argument("rnn takes one hidden size");
    }
    if (cfg.model == Model::logreg && !cfg.hidden.empty()) {
        throw std::invalid_argument("logreg has no hidden layers");
    }
    if ((cfg.model == Model::mlp1 && cfg.hidden.size() != 1) ||
        (cfg.model == Model::mlp3 && cfg.hidden.size() != 3)) {
        throw std::invalid_argument("wrong number of hidden sizes for " +
                                    std::string(model_name(cfg.model)));
    }
    for (const auto& name : cfg.ladder) ladder_entry(name);
}

std::int64_t items_per_call(const BenchConfig& cfg) {
    return cfg.model == Model::rnn ? cfg.seq_len * cfg.batch : cfg.batch;
}

void summarize(OptionResult& r, const BenchConfig& cfg) {
    r.median_seconds = median(r.seconds);
    const double items = static_cast<double>(items_per_call(cfg) * r.calls);
    r.throughput = r.median_seconds > 0.0 ? items / r.median_seconds : INFINITY;
}

BenchModel build_model(const BenchConfig& cfg, bool data_as_shared) {
    check_config(cfg);
    std::mt19937_64 rng(cfg.seed);
    BenchModel m;
    if (cfg.model == Model::rnn) {
        sequence_data(rng, cfg, m.x, m.y);
    } else {
        classification_data(rng, cfg, m.x, m.y);
    }
    Variable x = data_leaf(m.x, data_as_shared, "x");
    Variable y = data_leaf(m.y, data_as_shared, "y");

    Variable logits;
    if (cfg.model == Model::rnn) {
        const std::int64_t h = cfg.hidden[0];
        auto Wx = make_shared(glorot(rng, cfg.input_dim, h), "Wx");
        auto Wh = make_shared(glorot(rng, h, h), "Wh");
        auto bh = make_shared(Tensor::zeros({h}), "bh");
        auto Wo = make_shared(glorot(rng, h, cfg.output_dim), "Wo");
        auto bo = make_shared(Tensor::zeros({cfg.output_dim}), "bo");
        m.params = {Wx, Wh, bh, Wo, bo};
        ScanArgs args;
        args.sequences.push_back(ScanSequence{x, {0}});
        args.states.push_back(ScanState{make_constant(Tensor::zeros({h}), "h0"), {-1}});
        args.non_sequences = {Wx, Wh, bh};
        auto res = scan(
            [](const StepInputs& in) {
                const auto& ns = in.non_sequences;
                StepResult r;
                r.states.push_back(
                    tanh(add(add(dot(in.sequences[0][0], ns[0]), dot(in.states[0][0], ns[1])),
                             ns[2])));
                return r;
            },
            args);
        logits = add(dot(res.states[0], Wo), bo);
    } else {
        Variable act = x;
        std::int64_t fan_in = cfg.input_dim;
        for (std::size_t l = 0; l < cfg.hidden.size(); ++l) {
            auto W = make_shared(glorot(rng, fan_in, cfg.hidden[l]), "W" + std::to_string(l + 1));
            auto b = make_shared(Tensor::zeros({cfg.hidden[l]}), "b" + std::to_string(l + 1));
            m.params.push_back(W);
            m.params.push_back(b);
            act = tanh(add(dot(act, W), b));
            fan_in = cfg.hidden[l];
        }
        Tensor w0 = cfg.hidden.empty() ? Tensor::zeros({fan_in, cfg.output_dim})
                                       : glorot(rng, fan_in, cfg.output_dim);
        auto W = make_shared(std::move(w0), "W_out");
        auto b = make_shared(Tensor::zeros({cfg.output_dim}), "b_out");
        m.params.push_back(W);
        m.params.push_back(b);
        logits = add(dot(act, W), b);
    }
    Variable loss = mean(crossentropy(softmax(logits), y));
    loss.set_name("loss");

    auto grads = grad(loss, m.params);
    std::vector<Update> updates;
    const Variable lr = scalar_constant(cfg.learning_rate);
    for (std::size_t i = 0; i < m.params.size(); ++i) {
        updates.push_back(Update{m.params[i], sub(m.params[i], mul(lr, grads[i]))});
    }
    std::vector<Variable> inputs;
    if (!data_as_shared) inputs = {x, y};
    m.train = Graph{inputs, {loss}, updates};
    m.loss = Graph{inputs, {loss}, {}};
    return m;
}

std::vector<double> train_losses(const BenchConfig& cfg, std::int64_t steps,
                                 const RuntimeOptions& options) {
    BenchModel m = build_model(cfg, false);
    auto train = compile(m.train, options);
    auto loss = compile(m.loss, options);
    const std::vector<Tensor> data{m.x, m.y};
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(steps) + 1);
    for (std::int64_t s = 0; s < steps; ++s) out.push_back(train.call(data)[0][0]);
    out.push_back(loss.call(data)[0][0]);
    return out;
}

BenchResult run_bench(const BenchConfig& cfg) {
    check_config(cfg);
    BenchResult result;
    result.config = cfg;
    result.unit = cfg.model == Model::rnn ? "elements/s" : "examples/s";
    const auto start = Clock::now();

    struct Runner {
        bool repeated = false;
        BenchModel model;
        std::optional<CompiledFunction> fn;
        std::vector<Tensor> data;
        void run(std::int64_t n) {
            if (repeated) {
                if (n > 0) fn->call_repeated(n);
            } else {
                for (std::int64_t i = 0; i < n; ++i) fn->call(data);
            }
        }
    };
    std::vector<Runner> runners(cfg.ladder.size());
    for (std::size_t e = 0; e < cfg.ladder.size(); ++e) {
        const LadderEntry entry = ladder_entry(cfg.ladder[e]);
        Runner& r = runners[e];
        r.repeated = entry.mode == CallMode::repeated;
        r.model = build_model(cfg, r.repeated);
        r.fn.emplace(compile(r.model.train, entry.options));
        if (!r.repeated) r.data = {r.model.x, r.model.y};
        r.run(cfg.warmup);
        OptionResult opt;
        opt.option = cfg.ladder[e];
        opt.calls = cfg.calls;
        result.options.push_back(std::move(opt));
    }
    // Each repetition is cut into slices that rotate through the ladder, so
    // every entry samples the same stretch of wall time.
    const std::int64_t slices = std::min<std::int64_t>(cfg.calls, 100);
    const auto n = static_cast<std::int64_t>(runners.size());
    for (std::int64_t rep = 0; rep < cfg.repetitions; ++rep) {
        std::vector<double> secs(runners.size(), 0.0);
        for (std::int64_t s = 0; s < slices; ++s) {
            const std::int64_t chunk = cfg.calls * (s + 1) / slices - cfg.calls * s / slices;
            for (std::int64_t k = 0; k < n; ++k) {
                const auto e = static_cast<std::size_t>((k + s + rep) % n);
                const auto t0 = Clock::now();
                runners[e].run(chunk);
                secs[e] += std::chrono::duration<double>(Clock::now() - t0).count();
            }
        }
        for (std::size_t e = 0; e < runners.size(); ++e) result.options[e].seconds.push_back(secs[e]);
    }
    for (auto& opt : result.options) summarize(opt, cfg);
    result.wall_seconds = std::chrono::duration<double>(Clock::now() - start).count();
    return result;
}

std::vector<std::string> ladder_violations(const BenchResult& r, double tie) {
    std::vector<std::string> out;
    for (std::size_t i = 1; i < r.options.size(); ++i) {
        const auto& a = r.options[i - 1];
        const auto& b = r.options[i];
        if (b.throughput < a.throughput * (1.0 - tie)) {
            char buf[160];
            std::snprintf(buf, sizeof buf, "%s (%.1f) > %s (%.1f)", a.option.c_str(), a.throughput,
                          b.option.c_str(), b.throughput);
            out.emplace_back(buf);
        }
    }
    return out;
}

std::string format_table(const std::vector<BenchResult>& results) {
    auto hidden_text = [](const std::vector<std::int64_t>& h) {
        std::string s;
        for (std::size_t i = 0; i < h.size(); ++i) {
            if (i) s += "x";
            s += std::to_string(h[i]);
        }
        return s.empty() ? std::string("-") : s;
    };
    char line[256];
    std::string out;
    std::snprintf(line, sizeof line, "%-8s %6s %-14s %-8s %14s %12s %-10s\n", "model", "batch",
                  "hidden", "option", "throughput", "ms/call", "unit");
    out += line;
    for (const auto& r : results) {
        for (const auto& o : r.options) {
            const double ms = o.calls ? 1e3 * o.median_seconds / static_cast<double>(o.calls) : 0.0;
            std::snprintf(line, sizeof line, "%-8s %6lld %-14s %-8s %14.1f %12.4f %-10s\n",
                          std::string(model_name(r.config.model)).c_str(),
                          static_cast<long long>(r.config.batch),
                          hidden_text(r.config.hidden).c_str(), o.option.c_str(), o.throughput,
                          ms, r.unit.c_str());
            out += line;
        }
    }
    return out;
}

std::string to_json(const std::vector<BenchResult>& results) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : results) {
        const auto& c = r.config;
        nlohmann::json cfg = {{"model", model_name(c.model)},
                              {"input_dim", c.input_dim},
                              {"output_dim", c.output_dim},
                              {"hidden", c.hidden},
                              {"batch", c.batch},
                              {"seq_len", c.seq_len},
                              {"ladder", c.ladder},
                              {"calls", c.calls},
                              {"warmup", c.warmup},
                              {"repetitions", c.repetitions},
                              {"learning_rate", c.learning_rate},
                              {"seed", c.seed}};
        nlohmann::json opts = nlohmann::json::array();
        for (const auto& o : r.options) {
            opts.push_back({{"option", o.option},
                            {"calls", o.calls},
                            {"seconds", o.seconds},
                            {"median_seconds", o.median_seconds},
                            {"throughput", o.throughput}});
        }
        arr.push_back(
            {{"config", cfg}, {"unit", r.unit}, {"wall_seconds", r.wall_seconds}, {"options", opts}});
    }
    return arr.dump(2);
}

std::vector<BenchResult> from_json(std::string_view text) {
    std::vector<BenchResult> out;
    try {
        const auto arr = nlohmann::json::parse(text);
        if (!arr.is_array()) throw std::invalid_argument("expected a JSON array");
        for (const auto& j : arr) {
            BenchResult r;
            const auto& c = j.at("config");
            auto model = parse_model(c.at("model").get<std::string>());
            if (!model) throw std::invalid_argument("unknown model");
            r.config.model = *model;
            c.at("input_dim").get_to(r.config.input_dim);
            c.at("output_dim").get_to(r.config.output_dim);
            c.at("hidden").get_to(r.config.hidden);
            c.at("batch").get_to(r.config.batch);
            c.at("seq_len").get_to(r.config.seq_len);
            c.at("ladder").get_to(r.config.ladder);
            c.at("calls").get_to(r.config.calls);
            c.at("warmup").get_to(r.config.warmup);
            c.at("repetitions").get_to(r.config.repetitions);
            c.at("learning_rate").get_to(r.config.learning_rate);
            c.at("seed").get_to(r.config.seed);
            j.at("unit").get_to(r.unit);
            j.at("wall_seconds").get_to(r.wall_seconds);
            for (const auto& o : j.at("options")) {
                OptionResult opt;
                o.at("option").get_to(opt.option);
                o.at("calls").get_to(opt.calls);
                o.at("seconds").get_to(opt.seconds);
                o.at("median_seconds").get_to(opt.median_seconds);
                o.at("throughput").get_to(opt.throughput);
                r.options.push_back(std::move(opt));
            }
            out.push_back(std::move(r));
        }
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("bad benchmark JSON: ") + e.what());
    }
    return out;
}

std::string model_dot(const BenchConfig& cfg) {
    BenchModel m = build_model(cfg, false);
    auto f = compile(m.train, {});
    return export_dot(f.optimized_graph(), std::string(model_name(cfg.model)));
}

}  // namespace graphc::bench
