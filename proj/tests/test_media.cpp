// Copyright (c) 2026 the retime authors
// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "retime/media.hpp"
#include "retime/rng.hpp"

using namespace retime;

namespace {

MotionSpec single_disc(double x, double y, double speed, int profile_frames = 64,
                       double size = 10.0) {
    MotionSpec spec;
    ObjectSpec obj;
    obj.shape = ShapeKind::disc;
    obj.size = size;
    obj.path = PathSpec::line(x, y, 1.0, 0.0);
    obj.speed_profile = {{profile_frames, speed}};
    obj.brightness = 1.0;
    spec.objects.push_back(obj);
    spec.background = BackgroundSpec::uniform(0.0);
    return spec;
}

}  // namespace

TEST_CASE("generate_clip: zero motion yields identical frames") {
    const Clip clip = generate_clip(single_disc(16.0, 16.0, 0.0), 16, 32, 32, 7);
    REQUIRE(clip.length() == 16);
    for (int t = 1; t < clip.length(); ++t) REQUIRE(clip.frames[t].luma == clip.frames[0].luma);
}

TEST_CASE("generate_clip: linear motion moves centers by the profile value") {
    const Clip clip = generate_clip(single_disc(10.0, 10.0, 2.0), 3, 48, 24, 3);
    for (int t = 0; t < 3; ++t) {
        auto [cx, cy] = oracle::centroid(clip.frames[t]);
        REQUIRE(std::abs(cx - (10.0 + 2.0 * t)) < 0.05);
        REQUIRE(std::abs(cy - 10.0) < 0.05);
    }
}

TEST_CASE("generate_clip: two-segment profile yields the derived displacement vector") {
    MotionSpec spec = single_disc(8.0, 24.0, 1.0);
    spec.objects[0].speed_profile = {{16, 1.0}, {16, 4.0}};
    const Clip clip = generate_clip(spec, 32, 96, 48, 11);

    std::vector<double> displacement;
    auto prev = oracle::centroid(clip.frames[0]);
    for (int t = 1; t < 32; ++t) {
        auto cur = oracle::centroid(clip.frames[t]);
        displacement.push_back(std::hypot(cur.first - prev.first, cur.second - prev.second));
        prev = cur;
    }
    REQUIRE(displacement.size() == 31);
    for (int t = 0; t < 16; ++t) REQUIRE(std::abs(displacement[t] - 1.0) < 0.1);
    for (int t = 16; t < 31; ++t) REQUIRE(std::abs(displacement[t] - 4.0) < 0.1);
}

TEST_CASE("generate_clip: out-of-bounds motion is rejected with the first offending step") {
    // x_t = 10 + 2t with size 8 must satisfy x <= 27 in a 32-wide frame,
    // so t = 9 (x = 28) is the first violation.
    MotionSpec spec = single_disc(10.0, 16.0, 2.0, 64, 8.0);
    try {
        generate_clip(spec, 16, 32, 32, 1);
        FAIL("expected motion_bounds_error");
    } catch (const motion_bounds_error& e) {
        REQUIRE(e.step() == 9);
        REQUIRE(e.object_index() == 0);
    }
}

TEST_CASE("generate_clip: bit-deterministic per (spec, seed)") {
    MotionSpec spec = single_disc(20.0, 20.0, 1.0);
    spec.background = BackgroundSpec::noise(0.3, 0.15);
    const Clip a = generate_clip(spec, 8, 48, 48, 42);
    const Clip b = generate_clip(spec, 8, 48, 48, 42);
    const Clip c = generate_clip(spec, 8, 48, 48, 43);
    for (int t = 0; t < 8; ++t) REQUIRE(a.frames[t].luma == b.frames[t].luma);
    REQUIRE(a.frames[0].luma != c.frames[0].luma);
}

TEST_CASE("generate_clip: circle path keeps constant step length") {
    MotionSpec spec;
    ObjectSpec obj;
    obj.shape = ShapeKind::square;
    obj.size = 10.0;
    obj.path = PathSpec::circle(32.0, 32.0, 15.0, 0.5);
    obj.speed_profile = {{64, 1.5}};
    spec.objects.push_back(obj);
    spec.background = BackgroundSpec::uniform(0.0);
    const Clip clip = generate_clip(spec, 48, 64, 64, 3);
    auto prev = oracle::centroid(clip.frames[0]);
    for (int t = 1; t < 48; ++t) {
        auto cur = oracle::centroid(clip.frames[t]);
        const double chord = std::hypot(cur.first - prev.first, cur.second - prev.second);
        // chord of a 1.5 px arc on radius 15: 2 * 15 * sin(0.05) = 1.49944
        REQUIRE(std::abs(chord - 1.49944) < 0.1);
        prev = cur;
    }
}

TEST_CASE("subsample: factor 1 is the identity") {
    const Clip clip = generate_clip(single_disc(16.0, 16.0, 1.0), 10, 40, 40, 5);
    const Clip out = subsample(clip, 1.0, 0.0);
    REQUIRE(out.length() == 10);
    for (int t = 0; t < 10; ++t) {
        REQUIRE(out.frames[t].luma == clip.frames[t].luma);
        REQUIRE(out.src_index[t] == t);
    }
}

TEST_CASE("subsample: integer stride") {
    const Clip clip = generate_clip(single_disc(12.0, 16.0, 1.0), 10, 40, 40, 5);
    const Clip out = subsample(clip, 2.0, 0.0);
    REQUIRE(out.src_index == std::vector<std::int32_t>{0, 2, 4, 6, 8});
    REQUIRE(out.fps == clip.fps);
}

TEST_CASE("subsample: fractional factor follows round((j + phase) * factor)") {
    const Clip clip = generate_clip(single_disc(12.0, 16.0, 1.0), 10, 40, 40, 5);
    // Hand enumeration of round(j * 1.25), j = 0..7 (round half away from zero):
    // 0, 1.25, 2.5, 3.75, 5, 6.25, 7.5, 8.75 -> 0, 1, 3, 4, 5, 6, 8, 9.
    REQUIRE(subsample(clip, 1.25, 0.0).src_index ==
            std::vector<std::int32_t>{0, 1, 3, 4, 5, 6, 8, 9});
    // round((j + 0.5) * 2) = 2j + 1
    REQUIRE(subsample(clip, 2.0, 0.5).src_index == std::vector<std::int32_t>{1, 3, 5, 7, 9});
}

TEST_CASE("subsample: rejects slow-down factors and too-short clips") {
    const Clip clip = generate_clip(single_disc(12.0, 16.0, 0.0), 4, 40, 40, 5);
    REQUIRE_THROWS_AS(subsample(clip, 0.5), std::invalid_argument);
    REQUIRE_THROWS_AS(subsample(clip, 5.0), std::invalid_argument);
    REQUIRE_THROWS_AS(subsample(clip, 2.0, 1.0), std::invalid_argument);
}

TEST_CASE("subsample: chained factors match the combined factor within one frame") {
    Rng rng(99);
    const Clip clip = generate_clip(single_disc(16.0, 16.0, 0.0), 60, 40, 40, 5);
    for (int trial = 0; trial < 20; ++trial) {
        const double a = static_cast<double>(rng.uniform_int(1, 4));
        const double b = static_cast<double>(rng.uniform_int(1, 3));
        const Clip chained = subsample(subsample(clip, a), b);
        const Clip direct = subsample(clip, a * b);
        REQUIRE(std::abs(chained.length() - direct.length()) <= 1);
    }
}

TEST_CASE("subsample: displacement of a subsampled constant-speed clip scales by the factor") {
    const double s = 2.0, f = 1.5;
    const Clip clip = generate_clip(single_disc(8.0, 20.0, s, 40), 36, 128, 40, 5);
    const Clip out = subsample(clip, f);
    auto prev = oracle::centroid(out.frames[0]);
    for (int t = 1; t < out.length(); ++t) {
        auto cur = oracle::centroid(out.frames[t]);
        const double d = std::hypot(cur.first - prev.first, cur.second - prev.second);
        REQUIRE(std::abs(d - s * f) <= (f - std::floor(f)) * s + 0.1);
        prev = cur;
    }
}

TEST_CASE("resize: identity size leaves frames unchanged up to round-off") {
    MotionSpec spec = single_disc(20.0, 20.0, 0.5, 8);
    spec.background = BackgroundSpec::noise(0.4, 0.2);
    const Clip clip = generate_clip(spec, 4, 48, 48, 9);
    const Clip same = resize_clip(clip, 48, 48);
    for (int t = 0; t < 4; ++t)
        for (std::size_t i = 0; i < clip.frames[t].luma.size(); ++i)
            REQUIRE(std::abs(clip.frames[t].luma[i] - same.frames[t].luma[i]) < 1e-6f);
}

TEST_CASE("SpeedLabel enforces class factor ranges") {
    REQUIRE_NOTHROW(SpeedLabel(SpeedClass::normal, 1.2));
    REQUIRE_NOTHROW(SpeedLabel(SpeedClass::sped_up, 1.7));
    REQUIRE_THROWS_AS(SpeedLabel(SpeedClass::normal, 1.5), std::invalid_argument);
    REQUIRE_THROWS_AS(SpeedLabel(SpeedClass::sped_up, 1.0), std::invalid_argument);
}

TEST_CASE("clip_window and concat preserve provenance") {
    const Clip clip = generate_clip(single_disc(16.0, 16.0, 1.0), 20, 48, 48, 5);
    const Clip head = clip_window(clip, 2, 5);
    REQUIRE(head.src_index == std::vector<std::int32_t>{2, 3, 4, 5, 6});
    const Clip joined = concat_clips(head, clip_window(clip, 10, 3));
    REQUIRE(joined.src_index == std::vector<std::int32_t>{2, 3, 4, 5, 6, 10, 11, 12});
    REQUIRE_THROWS_AS(clip_window(clip, 18, 5), std::invalid_argument);
}
