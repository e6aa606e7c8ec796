// Copyright 2026 The graphc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "graphc/dsl/ast.hpp"
#include "graphc/dsl/lower.hpp"
#include "graphc/dsl/parser.hpp"
#include "graphc/dsl/printer.hpp"
