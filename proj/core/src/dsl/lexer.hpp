// Copyright 2026 The graphc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "graphc/dsl/ast.hpp"

namespace graphc::dsl::detail {

enum class Tok : std::uint8_t { ident, number, punct, end, error };

struct Token {
    Tok kind = Tok::end;
    std::string_view text;
    SourceSpan span;
};

/// Splits `source` into tokens. Unknown bytes become `error` tokens (one per
/// run) and lexing continues. The last token is always `end`.
std::vector<Token> lex(std::string_view source, const std::string& file);

SourceSpan span_between(const SourceSpan& first, const SourceSpan& last);

}  // namespace graphc::dsl::detail
