// Copyright 2026 The graphc Authors
// SPDX-License-Identifier: Apache-2.0

#include "dsl/lexer.hpp"

namespace graphc::dsl::detail {

namespace {

bool ident_start(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_';
}
bool ident_char(char c) { return ident_start(c) || (c >= '0' && c <= '9'); }
bool digit(char c) { return c >= '0' && c <= '9'; }

class Lexer {
public:
    Lexer(std::string_view src, const std::string& file) : src_(src), file_(file) {}

    std::vector<Token> run() {
        std::vector<Token> out;
        while (true) {
            skip_space();
            if (pos_ >= src_.size()) break;
            const std::size_t start = pos_;
            const int line = line_, col = col_;
            const char c = src_[pos_];
            Tok kind = Tok::punct;
            if (ident_start(c)) {
                while (pos_ < src_.size() && ident_char(src_[pos_])) advance();
                kind = Tok::ident;
            } else if (digit(c) || (c == '.' && pos_ + 1 < src_.size() && digit(src_[pos_ + 1]))) {
                lex_number();
                kind = Tok::number;
            } else if ((c == '<' && peek(1) == '-') || (c == '-' && peek(1) == '>')) {
                advance();
                advance();
            } else if (std::string_view("()[]{},;:=+-*/'?").find(c) != std::string_view::npos) {
                advance();
            } else {
                // One error token per run of unknown bytes.
                advance();
                while (pos_ < src_.size() && !known_start(src_[pos_])) advance();
                kind = Tok::error;
            }
            out.push_back(make(kind, start, line, col));
        }
        out.push_back(make(Tok::end, pos_, line_, col_));
        return out;
    }

private:
    char peek(std::size_t k) const { return pos_ + k < src_.size() ? src_[pos_ + k] : '\0'; }

    void advance() {
        if (src_[pos_] == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        ++pos_;
    }

    static bool known_start(char c) {
        return ident_start(c) || digit(c) || c == ' ' || c == '\t' || c == '\r' || c == '\n' ||
               c == '#' || c == '.' || c == '<' ||
               std::string_view("()[]{},;:=+-*/'?").find(c) != std::string_view::npos;
    }

    void skip_space() {
        while (pos_ < src_.size()) {
            const char c = src_[pos_];
            if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
                advance();
            } else if (c == '#') {
                while (pos_ < src_.size() && src_[pos_] != '\n') advance();
            } else {
                break;
            }
        }
    }

    void lex_number() {
        while (pos_ < src_.size() && digit(src_[pos_])) advance();
        if (peek(0) == '.') {
            advance();
            while (pos_ < src_.size() && digit(src_[pos_])) advance();
        }
        if (peek(0) == 'e' || peek(0) == 'E') {
            std::size_t k = 1;
            if (peek(1) == '+' || peek(1) == '-') k = 2;
            if (digit(peek(k))) {
                for (std::size_t i = 0; i < k; ++i) advance();
                while (pos_ < src_.size() && digit(src_[pos_])) advance();
            }
        }
    }

    Token make(Tok kind, std::size_t start, int line, int col) const {
        Token t;
        t.kind = kind;
        t.text = src_.substr(start, pos_ - start);
        t.span = SourceSpan{file_, start, pos_ - start, line, col};
        return t;
    }

    std::string_view src_;
    const std::string& file_;
    std::size_t pos_ = 0;
    int line_ = 1;
    int col_ = 1;
};

}  // namespace

std::vector<Token> lex(std::string_view source, const std::string& file) {
    return Lexer(source, file).run();
}

SourceSpan span_between(const SourceSpan& first, const SourceSpan& last) {
    SourceSpan s = first;
    const std::size_t end = std::max(first.offset + first.length, last.offset + last.length);
    s.length = end - first.offset;
    return s;
}

}  // namespace graphc::dsl::detail
