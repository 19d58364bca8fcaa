// Copyright (c) 2026 the retime authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <charconv>
#include <cstddef>
#include <string>
#include <system_error>

namespace retime {

/// Shortest round-trip decimal form of a double. Used everywhere numbers are
/// written to CSV so that repeated runs produce byte-identical files.
inline std::string fmt_double(double v) {
    std::array<char, 64> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
}

/// Pairwise (cascade) summation; bounds roundoff growth to O(log n) and keeps
/// batch reductions stable under input permutations.
inline double pairwise_sum(const double* v, std::size_t n) {
    if (n <= 8) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += v[i];
        return s;
    }
    const std::size_t half = n / 2;
    return pairwise_sum(v, half) + pairwise_sum(v + half, n - half);
}

}  // namespace retime
