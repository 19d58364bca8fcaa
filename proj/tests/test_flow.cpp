// Copyright (c) 2026 the retime authors
// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "retime/flow.hpp"
#include "retime/media.hpp"
#include "retime/rng.hpp"

using namespace retime;

namespace {

/// Clip whose whole content translates by `pan` px/frame: static value-noise
/// background shifted by the camera, no objects.
Clip pan_clip(double pan_x, double pan_y, int frames, int w, int h, std::uint64_t seed,
              double origin_x = 0.0) {
    MotionSpec spec;
    spec.background = BackgroundSpec::noise(0.5, 0.4);
    spec.pan_x = pan_x;
    spec.pan_y = pan_y;
    spec.pan_origin_x = origin_x;
    return generate_clip(spec, frames, w, h, seed);
}

Frame random_frame(int w, int h, Rng& rng) {
    Frame f(w, h);
    for (float& v : f.luma) v = static_cast<float>(rng.uniform());
    return f;
}

}  // namespace

TEST_CASE("block_flow: identical frames give identically zero flow") {
    Rng rng(5);
    const Frame a = random_frame(32, 32, rng);
    const FlowField field = block_flow(a, a, 8, 4);
    for (const BlockMotion& m : field.motion) {
        REQUIRE(m.dx == 0);
        REQUIRE(m.dy == 0);
    }
    // Uniform frames tie everywhere; the tie-break still forces (0,0).
    const Frame flat(32, 32, 0.5f);
    for (const BlockMotion& m : block_flow(flat, flat, 8, 4).motion) {
        REQUIRE(m.dx == 0);
        REQUIRE(m.dy == 0);
    }
}

TEST_CASE("block_flow: pure translation is recovered on interior blocks") {
    const Clip clip = pan_clip(3.0, 0.0, 2, 32, 32, 77);
    const FlowField field = block_flow(clip.frames[0], clip.frames[1], 8, 4);
    // Candidate (3,0) stays in-bounds for blocks with x0 <= 21.
    for (int by = 0; by < field.blocks_y; ++by)
        for (int bx = 0; bx < 3; ++bx) {
            REQUIRE(field.at(bx, by).dx == 3);
            REQUIRE(field.at(bx, by).dy == 0);
        }
}

TEST_CASE("block_flow: matches the exhaustive-search oracle exactly") {
    Rng rng(123);
    for (int trial = 0; trial < 20; ++trial) {
        const Frame a = random_frame(32, 32, rng);
        const Frame b = random_frame(32, 32, rng);
        const FlowField fast = block_flow(a, b, 8, 4);
        const FlowField ref = oracle::brute_force_flow(a, b, 8, 4);
        for (std::size_t i = 0; i < fast.motion.size(); ++i) {
            REQUIRE(fast.motion[i].dx == ref.motion[i].dx);
            REQUIRE(fast.motion[i].dy == ref.motion[i].dy);
        }
    }
}

TEST_CASE("block_flow: dimension mismatch is rejected") {
    Rng rng(1);
    const Frame a = random_frame(32, 32, rng);
    const Frame b = random_frame(16, 32, rng);
    REQUIRE_THROWS_AS(block_flow(a, b, 8, 4), std::invalid_argument);
    REQUIRE_THROWS_AS(block_flow(a, a, 64, 4), std::invalid_argument);
    REQUIRE_THROWS_AS(block_flow(a, a, 8, 0), std::invalid_argument);
}

TEST_CASE("mean_flow_series: static clip gives a zero vector of length T") {
    MotionSpec spec;
    spec.background = BackgroundSpec::noise(0.5, 0.3);
    const Clip clip = generate_clip(spec, 16, 32, 32, 2);
    const FlowSeries series = mean_flow_series(clip);
    REQUIRE(series.values.size() == 16);
    for (double v : series.values) REQUIRE(v == 0.0);
}

TEST_CASE("mean_flow_series: uniform 2 px/frame translation reads about 2") {
    const Clip clip = pan_clip(2.0, 0.0, 16, 256, 64, 31);
    const FlowSeries series = mean_flow_series(clip);
    REQUIRE(series.values.size() == 16);
    for (double v : series.values) REQUIRE(std::abs(v - 2.0) <= 0.5);
    REQUIRE(series.values[15] == series.values[14]);
}

TEST_CASE("mean_flow_series: piecewise speeds 1 then 4 are tracked") {
    // Two pan segments stitched on a shared world-anchored noise canvas:
    // 9 frames at 1 px/frame (offsets 0..8), then 8 frames at 4 px/frame
    // starting at offset 12 so the seam step is also 4 px.
    const Clip slow = pan_clip(1.0, 0.0, 9, 256, 64, 400);
    const Clip fast = pan_clip(4.0, 0.0, 8, 256, 64, 400, 12.0);
    const Clip clip = concat_clips(slow, fast);
    const FlowSeries series = mean_flow_series(clip);
    REQUIRE(series.values.size() == 17);
    for (int t = 0; t < 8; ++t) REQUIRE(std::abs(series.values[t] - 1.0) <= 0.5);
    for (int t = 8; t < 16; ++t) REQUIRE(std::abs(series.values[t] - 4.0) <= 0.5);
}

TEST_CASE("flow magnitude scales with temporal subsampling") {
    const Clip clip = pan_clip(1.0, 0.0, 32, 256, 64, 9);
    const FlowSeries half = mean_flow_series(subsample(clip, 2.0));
    const FlowSeries full = mean_flow_series(clip);
    for (std::size_t t = 0; t + 1 < half.values.size(); ++t)
        REQUIRE(std::abs(half.values[t] - 2.0 * full.values[t]) <= 0.5);
}

TEST_CASE("flow magnitude scales with spatial size") {
    const Clip clip = pan_clip(4.0, 0.0, 8, 512, 64, 13);
    const Clip small = resize_clip(clip, 256, 32);
    const FlowSeries big_series = mean_flow_series(clip);
    const FlowSeries small_series = mean_flow_series(small);
    for (std::size_t t = 0; t + 1 < small_series.values.size(); ++t) {
        REQUIRE(std::abs(big_series.values[t] - 4.0) <= 0.5);
        REQUIRE(std::abs(small_series.values[t] - 2.0) <= 0.5);
    }
}

TEST_CASE("mean_flow_series is bit-identical across thread counts") {
    const Clip clip = pan_clip(1.0, 0.5, 12, 96, 64, 55);
    const FlowSeries a = mean_flow_series(clip, {}, 1);
    const FlowSeries b = mean_flow_series(clip, {}, 4);
    REQUIRE(a.values == b.values);
}
