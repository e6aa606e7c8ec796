// Copyright 2026 The graphc Authors
// SPDX-License-Identifier: Apache-2.0
//
// Front-end fuzzing: random bytes, token soup, mutated programs and slices of
// arbitrary text files. Every input must be handled without an escaping
// exception, and every diagnostic must point inside the input.

#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "graphc/dsl.hpp"

namespace gt {

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

inline std::vector<std::string> read_corpus(const std::filesystem::path& dir,
                                            const std::string& ext, std::size_t max_files = 0) {
    std::vector<std::filesystem::path> paths;
    if (!std::filesystem::exists(dir)) return {};
    for (const auto& e : std::filesystem::recursive_directory_iterator(dir)) {
        if (e.is_regular_file() && (ext.empty() || e.path().extension() == ext)) {
            paths.push_back(e.path());
        }
    }
    std::sort(paths.begin(), paths.end());
    if (max_files && paths.size() > max_files) paths.resize(max_files);
    std::vector<std::string> out;
    for (const auto& p : paths) out.push_back(read_file(p));
    return out;
}

struct FuzzStats {
    std::size_t inputs = 0;
    std::size_t parsed_ok = 0;
    std::size_t lowered = 0;
    std::size_t lowered_ok = 0;
    std::size_t crashes = 0;       // exceptions escaping parse/lower
    std::size_t bad_spans = 0;     // diagnostics outside the input
    std::size_t roundtrip_failures = 0;
    std::string first_failure;
};

class DslFuzzer {
public:
    DslFuzzer(std::vector<std::string> programs, std::vector<std::string> text_pool,
              std::uint64_t seed)
        : programs_(std::move(programs)), text_(std::move(text_pool)), rng_(seed) {}

    std::string next() {
        switch (pick(6)) {
            case 0: return random_bytes();
            case 1: return token_soup();
            case 2:
            case 3: return programs_.empty() ? token_soup() : mutate(choose(programs_));
            case 4: return text_.empty() ? random_bytes() : slice(choose(text_));
            default: return nesting();
        }
    }

    // Lowering is far more expensive than parsing; `lower_every` limits how
    // often a successfully parsed input is also lowered.
    FuzzStats run(std::size_t n, std::size_t lower_every = 1) {
        FuzzStats s;
        for (std::size_t i = 0; i < n; ++i) {
            check(next(), s, lower_every);
        }
        return s;
    }

    static void check(const std::string& src, FuzzStats& s, std::size_t lower_every = 1) {
        using namespace graphc::dsl;
        ++s.inputs;
        auto fail = [&](std::size_t& counter, const std::string& what) {
            ++counter;
            if (s.first_failure.empty()) s.first_failure = what + " on input: " + src.substr(0, 200);
        };
        try {
            ParseResult r = parse(src, "fuzz.gx");
            for (const auto& d : r.diagnostics) {
                if (!span_valid(d.span, src) || d.message.empty()) fail(s.bad_spans, "parse span");
            }
            if (!r.ok()) return;
            ++s.parsed_ok;
            const std::string printed = print(r.program);
            ParseResult again = parse(printed, "fuzz.gx");
            if (!again.ok() || !same_structure(r.program, again.program)) {
                fail(s.roundtrip_failures, "round trip");
            }
            if (lower_every == 0 || (s.parsed_ok % lower_every) != 0) return;
            ++s.lowered;
            LowerResult lr = lower(r.program);
            for (const auto& d : lr.diagnostics) {
                if (!span_valid(d.span, src) || d.message.empty()) fail(s.bad_spans, "lower span");
            }
            if (lr.ok()) ++s.lowered_ok;
        } catch (const std::exception& e) {
            fail(s.crashes, std::string("exception ") + e.what());
        } catch (...) {
            fail(s.crashes, "unknown exception");
        }
    }

private:
    std::size_t pick(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_); }

    const std::string& choose(const std::vector<std::string>& v) { return v[pick(v.size())]; }

    std::string random_bytes() {
        const std::size_t len = pick(160);
        std::string s(len, ' ');
        const bool printable = pick(2) == 0;
        for (auto& c : s) c = static_cast<char>(printable ? 32 + pick(95) : pick(256));
        return s;
    }

    std::string token_soup() {
        static const std::vector<std::string> vocab = {
            "input", "shared", "let", "scan", "over", "from", "state", "until", "steps", "fn",
            "updates", "x", "y", "h", "W", "f64", "i64", "sum", "dot", "grad", "exp", "log",
            "softmax", "if_else", "take_row", "reshape", "0", "1", "2.5", "1e-3", "-", "+", "*",
            "/", "(", ")", "[", "]", "{", "}", ",", ";", ":", "=", "'", "?", "<-", "->", "#c\n",
            "\n", " "};
        std::string s;
        const std::size_t n = pick(60);
        for (std::size_t i = 0; i < n; ++i) {
            s += choose(vocab);
            s += ' ';
        }
        return s;
    }

    std::string mutate(std::string s) {
        const std::size_t edits = 1 + pick(4);
        for (std::size_t e = 0; e < edits; ++e) {
            if (s.empty()) {
                s = token_soup();
                continue;
            }
            const std::size_t at = pick(s.size());
            const std::size_t len = 1 + pick(std::min<std::size_t>(12, s.size() - at));
            switch (pick(5)) {
                case 0: s.erase(at, len); break;
                case 1: s.insert(at, s.substr(pick(s.size()), len)); break;
                case 2: s[at] = static_cast<char>(32 + pick(95)); break;
                case 3: s.insert(at, 1, "()[]{},;='-"[pick(11)]); break;
                default: s.insert(at, token_soup().substr(0, len * 2)); break;
            }
        }
        return s;
    }

    std::string slice(const std::string& text) {
        if (text.empty()) return text;
        const std::size_t at = pick(text.size());
        return text.substr(at, 1 + pick(400));
    }

    std::string nesting() {
        const std::size_t depth = pick(400);
        const char* open[] = {"(", "-", "[", "f("};
        std::string body;
        const std::size_t kind = pick(4);
        for (std::size_t i = 0; i < depth; ++i) body += open[kind];
        body += "x";
        if (pick(2)) {
            for (std::size_t i = 0; i < depth; ++i) body += kind == 2 ? "]" : (kind == 1 ? "" : ")");
        }
        return "input x : f64[];\nlet y = " + body + ";\nfn f(x) -> (y);\n";
    }

    std::vector<std::string> programs_;
    std::vector<std::string> text_;
    std::mt19937_64 rng_;
};

}  // namespace gt
