// Copyright (c) maskfuse contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace maskfuse {

// Mask/box dimension disagreement.
struct ShapeError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// API precondition violated by the caller (mixed image ids, unresolved weights, ...).
struct ContractError : std::logic_error {
    using std::logic_error::logic_error;
};

// Bad configuration value.
struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Malformed input data (RLE sum mismatch, unknown ids, unparseable files).
struct InputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace maskfuse
