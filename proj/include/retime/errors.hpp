// Copyright (c) 2026 the retime authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace retime {

// Error families map onto the CLI exit codes: config 2, data 3, numeric 4.
// Contract violations inside the library (dimension mismatches and the like)
// use std::invalid_argument.

class config_error : public std::runtime_error {
public:
    explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

class data_error : public std::runtime_error {
public:
    explicit data_error(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed or truncated input file; carries the byte offset of the defect.
class parse_error : public data_error {
public:
    parse_error(const std::string& what, std::size_t byte_offset)
        : data_error(what + " at byte offset " + std::to_string(byte_offset)),
          offset_(byte_offset) {}
    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

/// Motion spec rejected because an object leaves the frame bounds.
class motion_bounds_error : public data_error {
public:
    motion_bounds_error(int object_index, int step)
        : data_error("object " + std::to_string(object_index) +
                     " exits frame bounds at t=" + std::to_string(step)),
          object_(object_index),
          step_(step) {}
    int object_index() const noexcept { return object_; }
    int step() const noexcept { return step_; }

private:
    int object_;
    int step_;
};

class numeric_error : public std::runtime_error {
public:
    explicit numeric_error(const std::string& what) : std::runtime_error(what) {}
};

/// Training aborted on a non-finite loss; carries the offending step.
class train_divergence_error : public numeric_error {
public:
    explicit train_divergence_error(long step)
        : numeric_error("training diverged (non-finite loss) at step " + std::to_string(step)),
          step_(step) {}
    long step() const noexcept { return step_; }

private:
    long step_;
};

}  // namespace retime
