// Copyright (c) 2026 the retime authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <vector>

#include "retime/media.hpp"
#include "retime/parallel.hpp"

namespace retime {

struct BlockMotion {
    int dx = 0;
    int dy = 0;
};

/// Block-resolution displacement field between two frames.
struct FlowField {
    int blocks_x = 0;
    int blocks_y = 0;
    int block_size = 0;
    int search_radius = 0;
    std::vector<BlockMotion> motion;  // row-major over blocks

    const BlockMotion& at(int bx, int by) const {
        return motion[static_cast<std::size_t>(by) * blocks_x + bx];
    }
};

/// Per-frame mean optical-flow magnitude, px/frame; always the same length
/// as the clip it was computed from.
struct FlowSeries {
    std::vector<double> values;
};

struct FlowParams {
    int block_size = 8;
    int search_radius = 7;
};

namespace detail {

/// Exhaustive-search SAD matching for one block. Candidates whose window
/// falls outside frame b are skipped, so border blocks never hallucinate
/// motion. Ties: smallest SAD, then smallest |dx|+|dy|, then dy, then dx.
inline BlockMotion match_block(const Frame& a, const Frame& b, int x0, int y0, int bs, int radius) {
    double best_sad = -1.0;
    int best_cost = 0, best_dx = 0, best_dy = 0;
    for (int dy = -radius; dy <= radius; ++dy) {
        const int cy = y0 + dy;
        if (cy < 0 || cy + bs > b.height) continue;
        for (int dx = -radius; dx <= radius; ++dx) {
            const int cx = x0 + dx;
            if (cx < 0 || cx + bs > b.width) continue;
            double sad = 0.0;
            for (int r = 0; r < bs; ++r) {
                const float* pa = a.row(y0 + r) + x0;
                const float* pb = b.row(cy + r) + cx;
                float row_sad = 0.0f;
                for (int c = 0; c < bs; ++c) row_sad += std::abs(pa[c] - pb[c]);
                sad += row_sad;
                // Strictly-worse rows cannot win on SAD; equal SADs must
                // still reach the tie-break below, so only abandon on >.
                if (best_sad >= 0.0 && sad > best_sad) break;
            }
            if (best_sad >= 0.0 && sad > best_sad) continue;
            const int cost = std::abs(dx) + std::abs(dy);
            if (best_sad < 0.0 || sad < best_sad ||
                (sad == best_sad &&
                 (cost < best_cost ||
                  (cost == best_cost && (dy < best_dy || (dy == best_dy && dx < best_dx)))))) {
                best_sad = sad;
                best_cost = cost;
                best_dx = dx;
                best_dy = dy;
            }
        }
    }
    return {best_dx, best_dy};
}

}  // namespace detail

/// Exhaustive block-matching flow from frame a to frame b.
inline FlowField block_flow(const Frame& a, const Frame& b, int block_size = 8,
                            int search_radius = 7) {
    if (a.width != b.width || a.height != b.height)
        throw std::invalid_argument("block_flow: frame dimension mismatch");
    if (block_size < 1) throw std::invalid_argument("block_flow: block_size must be >= 1");
    if (search_radius < 1) throw std::invalid_argument("block_flow: search_radius must be >= 1");
    FlowField field;
    field.block_size = block_size;
    field.search_radius = search_radius;
    field.blocks_x = a.width / block_size;
    field.blocks_y = a.height / block_size;
    if (field.blocks_x < 1 || field.blocks_y < 1)
        throw std::invalid_argument("block_flow: frame smaller than one block");
    field.motion.resize(static_cast<std::size_t>(field.blocks_x) * field.blocks_y);
    for (int by = 0; by < field.blocks_y; ++by)
        for (int bx = 0; bx < field.blocks_x; ++bx)
            field.motion[static_cast<std::size_t>(by) * field.blocks_x + bx] =
                detail::match_block(a, b, bx * block_size, by * block_size, block_size,
                                    search_radius);
    return field;
}

inline double mean_magnitude(const FlowField& field) {
    double sum = 0.0;
    for (const BlockMotion& m : field.motion)
        sum += std::sqrt(static_cast<double>(m.dx) * m.dx + static_cast<double>(m.dy) * m.dy);
    return sum / static_cast<double>(field.motion.size());
}

/// Mean flow magnitude between consecutive frames; value[T-1] duplicates
/// value[T-2] so the series has one entry per frame. Frame pairs are
/// independent, so they may be evaluated on several threads; the result is
/// bit-identical to the sequential order either way.
inline FlowSeries mean_flow_series(const Clip& clip, const FlowParams& params = {},
                                   int threads = 1) {
    const int len = clip.length();
    if (len < 2) throw std::invalid_argument("mean_flow_series: clip must have >= 2 frames");
    FlowSeries series;
    series.values.resize(static_cast<std::size_t>(len));
    parallel_for(static_cast<std::size_t>(len - 1), threads, [&](std::size_t t) {
        series.values[t] = mean_magnitude(block_flow(clip.frames[t], clip.frames[t + 1],
                                                     params.block_size, params.search_radius));
    });
    series.values[static_cast<std::size_t>(len - 1)] = series.values[static_cast<std::size_t>(len - 2)];
    return series;
}

}  // namespace retime
