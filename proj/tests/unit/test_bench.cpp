// Copyright 2026 The graphc Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <sstream>

#include "graphc/bench.hpp"
#include "support/testing.hpp"

using namespace graphc;
using namespace graphc::bench;

namespace {

BenchConfig quick(Model m, std::int64_t batch) {
    BenchConfig c = default_config(m, batch);
    c.calls = 5;
    c.warmup = 1;
    c.repetitions = 3;
    return c;
}

std::size_t count_lines(const std::string& s) {
    std::size_t n = 0;
    for (char c : s) n += c == '\n';
    return n;
}

std::vector<Tensor> param_values(const BenchModel& m) {
    std::vector<Tensor> out;
    for (const auto& p : m.params) out.push_back(p.shared_storage()->value);
    return out;
}

}  // namespace

TEST_CASE("configs and ladder names") {
    CHECK(parse_model("mlp3") == Model::mlp3);
    CHECK_FALSE(parse_model("cnn"));
    CHECK(default_config(Model::mlp1, 10).hidden == std::vector<std::int64_t>{500});
    CHECK(default_config(Model::mlp3, 10).hidden == std::vector<std::int64_t>{200, 200, 200});
    CHECK(default_config(Model::mlp3, 10, true).hidden ==
          std::vector<std::int64_t>{1000, 1000, 1000});
    CHECK(default_config(Model::logreg, 1).input_dim == 784);
    CHECK(default_config(Model::logreg, 1).output_dim == 10);
    CHECK_THROWS_AS(default_config(Model::rnn, 10), std::invalid_argument);
    CHECK_THROWS_AS(default_config(Model::logreg, 0), std::invalid_argument);
    CHECK_THROWS_AS(ladder_entry("fast"), std::invalid_argument);
    CHECK(ladder_entry("default").options.gc);
    CHECK_FALSE(ladder_entry("nogc").options.gc);
    CHECK(ladder_entry("trust").options.trust_input);
    CHECK(ladder_entry("ncalls").mode == CallMode::repeated);
    BenchConfig bad = default_config(Model::mlp1, 10);
    bad.hidden = {0};
    CHECK_THROWS_AS(check_config(bad), std::invalid_argument);
}

TEST_CASE("logreg batch 60 populates every ladder entry") {
    auto r = run_bench(quick(Model::logreg, 60));
    CHECK(r.unit == "examples/s");
    REQUIRE(r.options.size() == 4);
    for (std::size_t i = 0; i < r.options.size(); ++i) {
        const auto& o = r.options[i];
        CHECK(o.option == default_ladder()[i]);
        CHECK(o.seconds.size() == 3);
        CHECK(o.throughput > 0.0);
        // Recomputable from the raw timings.
        OptionResult again = o;
        summarize(again, r.config);
        CHECK(again.throughput == o.throughput);
        std::vector<double> sorted = o.seconds;
        std::sort(sorted.begin(), sorted.end());
        CHECK(o.median_seconds == sorted[1]);
        CHECK(o.throughput == doctest::Approx(60.0 * 5 / sorted[1]).epsilon(1e-12));
    }
    CHECK(r.wall_seconds > 0.0);
}

TEST_CASE("table and JSON") {
    CHECK(count_lines(format_table({})) == 1);
    auto rnn = quick(Model::rnn, 1);
    rnn.ladder = {"default", "ncalls"};
    std::vector<BenchResult> results{run_bench(quick(Model::logreg, 1)), run_bench(rnn)};
    CHECK(results[1].unit == "elements/s");
    const std::string table = format_table(results);
    CHECK(count_lines(table) == 1 + 4 + 2);
    CHECK(table.find("nogc") != std::string::npos);

    const std::string json = to_json(results);
    auto back = from_json(json);
    CHECK(back == results);
    CHECK(to_json(back) == json);
    CHECK(from_json("[]").empty());
    CHECK_THROWS_AS(from_json("{"), std::invalid_argument);
    CHECK_THROWS_AS(from_json("[{\"config\": {}}]"), std::invalid_argument);
}

TEST_CASE("ladder violations honour the tie tolerance") {
    BenchResult r;
    r.options = {{"default", 1, {}, 0, 100.0}, {"nogc", 1, {}, 0, 97.0},
                 {"trust", 1, {}, 0, 90.0}, {"ncalls", 1, {}, 0, 120.0}};
    auto v = ladder_violations(r, 0.05);
    REQUIRE(v.size() == 1);
    CHECK(v[0].rfind("nogc", 0) == 0);
    CHECK(ladder_violations(r, 0.10).empty());
}

TEST_CASE("training is deterministic and every model learns") {
    for (Model m : {Model::logreg, Model::mlp1, Model::mlp3, Model::rnn}) {
        CAPTURE(model_name(m));
        const auto cfg = default_config(m, m == Model::rnn ? 1 : 10);
        auto a = train_losses(cfg, 200);
        auto b = train_losses(cfg, 200);
        REQUIRE(a.size() == 201);
        CHECK(a == b);
        CHECK(a.back() < a.front());
        for (double l : a) CHECK(std::isfinite(l));
    }
}

TEST_CASE("gc and trust options leave the loss trajectory unchanged") {
    const auto cfg = default_config(Model::mlp1, 10);
    auto base = train_losses(cfg, 20);
    RuntimeOptions o;
    o.gc = false;
    o.trust_input = true;
    CHECK(train_losses(cfg, 20, o) == base);
    o.lazy = false;
    CHECK(train_losses(cfg, 20, o) == base);
}

TEST_CASE("call_repeated matches sequential calls bitwise") {
    for (Model m : {Model::logreg, Model::mlp1, Model::rnn}) {
        CAPTURE(model_name(m));
        const auto cfg = default_config(m, m == Model::rnn ? 1 : 10);
        for (bool gc : {true, false}) {
            RuntimeOptions o;
            o.gc = gc;
            BenchModel a = build_model(cfg, true);
            BenchModel b = build_model(cfg, true);
            auto fa = compile(a.train, o);
            auto fb = compile(b.train, o);
            auto la = fa.call_repeated(10);
            std::vector<Tensor> lb;
            for (int i = 0; i < 10; ++i) lb = fb.call({});
            CHECK(gt::values(la[0]) == gt::values(lb[0]));
            auto pa = param_values(a);
            auto pb = param_values(b);
            REQUIRE(pa.size() == pb.size());
            for (std::size_t i = 0; i < pa.size(); ++i) CHECK(gt::values(pa[i]) == gt::values(pb[i]));
        }
    }
}

TEST_CASE("rnn throughput falls as the hidden layer grows") {
    std::vector<double> tp;
    for (std::int64_t h : {10, 50, 200}) {
        auto c = default_config(Model::rnn, 1);
        c.hidden = {h};
        c.ladder = {"default"};
        c.calls = 10;
        tp.push_back(run_bench(c).options[0].throughput);
    }
    MESSAGE("elements/s: " << tp[0] << ", " << tp[1] << ", " << tp[2]);
    CHECK(tp[0] > tp[1]);
    CHECK(tp[1] > tp[2]);
}

TEST_CASE("logreg batch 1: nogc is not slower than default") {
    auto c = default_config(Model::logreg, 1);
    c.ladder = {"default", "nogc"};
    c.calls = 500;
    auto r = run_bench(c);
    MESSAGE(format_table({r}));
    CHECK(ladder_violations(r).empty());
}

TEST_CASE("model DOT") {
    auto dot = model_dot(quick(Model::logreg, 10));
    CHECK(dot.rfind("digraph", 0) == 0);
    CHECK(dot.find("dot") != std::string::npos);
}
