// Copyright (c) 2026 the retime authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "retime/errors.hpp"
#include "retime/rng.hpp"

namespace retime {

// ---------------------------------------------------------------------------
// Frames and clips
// ---------------------------------------------------------------------------

/// Single-channel luminance image, intensities in [0,1], row-major.
struct Frame {
    int width = 0;
    int height = 0;
    std::vector<float> luma;

    Frame() = default;
    Frame(int w, int h, float fill = 0.0f) : width(w), height(h) {
        if (w < 8 || h < 8) throw std::invalid_argument("Frame: width and height must be >= 8");
        luma.assign(static_cast<std::size_t>(w) * h, fill);
    }

    float at(int x, int y) const { return luma[static_cast<std::size_t>(y) * width + x]; }
    float& at(int x, int y) { return luma[static_cast<std::size_t>(y) * width + x]; }
    const float* row(int y) const { return luma.data() + static_cast<std::size_t>(y) * width; }
};

/// Ordered frame sequence with a frame rate. `src_index` carries the original
/// source frame index of every frame through subsampling, windowing and
/// rendering; it is how ground-truth oracles recover playback provenance.
struct Clip {
    std::vector<Frame> frames;
    double fps = 0.0;
    std::string source_id;
    std::vector<std::int32_t> src_index;

    int length() const { return static_cast<int>(frames.size()); }
    int width() const { return frames.empty() ? 0 : frames.front().width; }
    int height() const { return frames.empty() ? 0 : frames.front().height; }
};

inline void validate_clip(const Clip& clip, const char* who) {
    if (clip.frames.size() < 2)
        throw std::invalid_argument(std::string(who) + ": clip must have at least 2 frames");
    if (clip.fps <= 0.0) throw std::invalid_argument(std::string(who) + ": fps must be > 0");
    const int w = clip.width(), h = clip.height();
    for (const Frame& f : clip.frames)
        if (f.width != w || f.height != h)
            throw std::invalid_argument(std::string(who) + ": frames must share dimensions");
}

/// Fills src_index with the identity mapping 0..n-1.
inline void reset_src_index(Clip& clip) {
    clip.src_index.resize(clip.frames.size());
    for (std::size_t i = 0; i < clip.src_index.size(); ++i)
        clip.src_index[i] = static_cast<std::int32_t>(i);
}

/// Copy of `count` frames starting at `start`, provenance preserved.
inline Clip clip_window(const Clip& clip, int start, int count) {
    if (start < 0 || count < 1 || start + count > clip.length())
        throw std::invalid_argument("clip_window: range out of bounds");
    Clip out;
    out.fps = clip.fps;
    out.source_id = clip.source_id;
    out.frames.assign(clip.frames.begin() + start, clip.frames.begin() + start + count);
    if (!clip.src_index.empty())
        out.src_index.assign(clip.src_index.begin() + start, clip.src_index.begin() + start + count);
    return out;
}

/// Concatenation; dimensions and fps must match. src_index is carried over
/// verbatim, so this only makes sense for parts of one source timeline.
inline Clip concat_clips(const Clip& a, const Clip& b) {
    if (a.width() != b.width() || a.height() != b.height())
        throw std::invalid_argument("concat_clips: dimension mismatch");
    if (a.fps != b.fps) throw std::invalid_argument("concat_clips: fps mismatch");
    Clip out = a;
    out.frames.insert(out.frames.end(), b.frames.begin(), b.frames.end());
    out.src_index.insert(out.src_index.end(), b.src_index.begin(), b.src_index.end());
    return out;
}

// ---------------------------------------------------------------------------
// Labels
// ---------------------------------------------------------------------------

enum class SpeedClass { normal, sped_up };

inline const char* to_string(SpeedClass c) { return c == SpeedClass::normal ? "normal" : "sped_up"; }

/// Class label plus the actual sampling factor that produced the example.
struct SpeedLabel {
    SpeedClass cls = SpeedClass::normal;
    double factor = 1.0;

    SpeedLabel() = default;
    SpeedLabel(SpeedClass c, double f) : cls(c), factor(f) {
        const bool ok = (c == SpeedClass::normal) ? (f >= 1.0 && f <= 1.2) : (f >= 1.7 && f <= 2.2);
        if (!ok)
            throw std::invalid_argument("SpeedLabel: factor " + std::to_string(f) +
                                        " outside the range of class " + to_string(c));
    }
};

// ---------------------------------------------------------------------------
// Motion specifications for the synthetic generator
// ---------------------------------------------------------------------------

enum class ShapeKind { disc, square };

struct PathSpec {
    enum class Kind { line, circle } kind = Kind::line;
    // line: start + dir * arc_length (dir normalized at use)
    double start_x = 0.0, start_y = 0.0;
    double dir_x = 1.0, dir_y = 0.0;
    // circle: center, radius, start angle; ccw=false runs clockwise
    double center_x = 0.0, center_y = 0.0;
    double radius = 1.0;
    double start_angle = 0.0;
    bool ccw = true;

    static PathSpec line(double sx, double sy, double dx, double dy) {
        PathSpec p;
        p.kind = Kind::line;
        p.start_x = sx; p.start_y = sy; p.dir_x = dx; p.dir_y = dy;
        return p;
    }
    static PathSpec circle(double cx, double cy, double r, double a0, bool counterclockwise = true) {
        PathSpec p;
        p.kind = Kind::circle;
        p.center_x = cx; p.center_y = cy; p.radius = r; p.start_angle = a0; p.ccw = counterclockwise;
        return p;
    }

    /// Position after travelling arc length s along the path.
    std::pair<double, double> at(double s) const {
        if (kind == Kind::line) {
            const double norm = std::hypot(dir_x, dir_y);
            if (norm <= 0.0) throw std::invalid_argument("PathSpec: line direction must be nonzero");
            return {start_x + dir_x / norm * s, start_y + dir_y / norm * s};
        }
        if (radius <= 0.0) throw std::invalid_argument("PathSpec: circle radius must be > 0");
        const double a = start_angle + (ccw ? 1.0 : -1.0) * s / radius;
        return {center_x + radius * std::cos(a), center_y + radius * std::sin(a)};
    }
};

/// Piecewise-constant speed: `frames` steps at `speed` px/frame.
struct SpeedSegment {
    int frames = 0;
    double speed = 0.0;
};

struct ObjectSpec {
    ShapeKind shape = ShapeKind::disc;
    double size = 8.0;  // disc diameter / square side, px
    PathSpec path;
    std::vector<SpeedSegment> speed_profile;
    double brightness = 1.0;
};

struct BackgroundSpec {
    enum class Kind { uniform, gradient, noise } kind = Kind::uniform;
    double base = 0.0;
    double amplitude = 0.0;
    // Off by default: when set, the noise texture is re-rolled every frame
    // instead of staying fixed for the whole clip.
    bool animate_noise = false;

    static BackgroundSpec uniform(double value) { return {Kind::uniform, value, 0.0, false}; }
    static BackgroundSpec gradient(double base, double amplitude) {
        return {Kind::gradient, base, amplitude, false};
    }
    static BackgroundSpec noise(double base, double amplitude, bool animate = false) {
        return {Kind::noise, base, amplitude, animate};
    }
};

struct MotionSpec {
    std::vector<ObjectSpec> objects;
    BackgroundSpec background;
    double pan_x = 0.0, pan_y = 0.0;           // camera pan, px/frame
    double pan_origin_x = 0.0, pan_origin_y = 0.0;  // world offset of frame 0
};

namespace detail {

inline double lattice_hash(std::uint64_t seed, long ix, long iy) {
    const std::uint64_t kx = static_cast<std::uint64_t>(ix) * 0x9e3779b97f4a7c15ULL;
    const std::uint64_t ky = static_cast<std::uint64_t>(iy) * 0xd1b54a32d192ed03ULL;
    const std::uint64_t h = splitmix64(seed ^ splitmix64(kx ^ ky));
    return static_cast<double>(h >> 11) * 0x1.0p-53;
}

/// Bilinearly interpolated value noise over the integer lattice; world
/// anchored so that camera pan translates the texture coherently.
inline double value_noise(std::uint64_t seed, double wx, double wy) {
    const double fx = std::floor(wx), fy = std::floor(wy);
    const long ix = static_cast<long>(fx), iy = static_cast<long>(fy);
    const double tx = wx - fx, ty = wy - fy;
    const double v00 = lattice_hash(seed, ix, iy);
    const double v10 = lattice_hash(seed, ix + 1, iy);
    const double v01 = lattice_hash(seed, ix, iy + 1);
    const double v11 = lattice_hash(seed, ix + 1, iy + 1);
    const double a = v00 + (v10 - v00) * tx;
    const double b = v01 + (v11 - v01) * tx;
    return a + (b - a) * ty;
}

/// Per-step speed lookup; the last segment extends past the profile's end.
inline double speed_at(const std::vector<SpeedSegment>& profile, int step) {
    if (profile.empty()) return 0.0;
    int t = step;
    for (const SpeedSegment& seg : profile) {
        if (t < seg.frames) return seg.speed;
        t -= seg.frames;
    }
    return profile.back().speed;
}

inline float quantize_255(double v) {
    const double c = std::clamp(v, 0.0, 1.0);
    return static_cast<float>(std::llround(c * 255.0) / 255.0);
}

/// Edge coverage of a pixel centered at (px,py) by the shape at (cx,cy);
/// a one-pixel-wide soft edge keeps rendered centroids sub-pixel accurate.
inline double shape_coverage(ShapeKind shape, double size, double cx, double cy, int px, int py) {
    if (shape == ShapeKind::disc) {
        const double d = std::hypot(px - cx, py - cy);
        return std::clamp(size / 2.0 - d + 0.5, 0.0, 1.0);
    }
    const double half = size / 2.0;
    const double covx = std::clamp(half - std::abs(px - cx) + 0.5, 0.0, 1.0);
    const double covy = std::clamp(half - std::abs(py - cy) + 0.5, 0.0, 1.0);
    return covx * covy;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Synthetic clip generation
// ---------------------------------------------------------------------------

/// Object center at frame t (pan included): the path position after the
/// cumulative profile distance, shifted by the camera pan.
inline std::pair<double, double> object_center(const MotionSpec& spec, int object_index, int t) {
    const ObjectSpec& obj = spec.objects.at(static_cast<std::size_t>(object_index));
    double s = 0.0;
    for (int u = 0; u < t; ++u) s += detail::speed_at(obj.speed_profile, u);
    auto [x, y] = obj.path.at(s);
    return {x + spec.pan_origin_x + spec.pan_x * t, y + spec.pan_origin_y + spec.pan_y * t};
}

/// Renders a deterministic synthetic clip. Objects advance along their paths
/// by exactly the profile's px/frame value; the background is uniform, a
/// horizontal ramp, or static value noise that the camera pan translates.
inline Clip generate_clip(const MotionSpec& spec, int n_frames, int width, int height,
                          std::uint64_t seed) {
    if (n_frames < 2) throw std::invalid_argument("generate_clip: n_frames must be >= 2");
    if (width < 8 || height < 8)
        throw std::invalid_argument("generate_clip: frame dimensions must be >= 8");
    for (const ObjectSpec& obj : spec.objects) {
        if (obj.size <= 0.0) throw data_error("generate_clip: object size must be > 0");
        for (const SpeedSegment& seg : obj.speed_profile)
            if (seg.speed < 0.0 || seg.frames < 0)
                throw data_error("generate_clip: speed profile entries must be >= 0");
    }

    // Validate bounds before rendering anything; report the first offending step.
    for (int t = 0; t < n_frames; ++t) {
        for (std::size_t k = 0; k < spec.objects.size(); ++k) {
            const double half = spec.objects[k].size / 2.0;
            auto [cx, cy] = object_center(spec, static_cast<int>(k), t);
            if (cx < half || cx > width - 1 - half || cy < half || cy > height - 1 - half)
                throw motion_bounds_error(static_cast<int>(k), t);
        }
    }

    const std::uint64_t noise_seed = splitmix64(seed ^ 0x6e6f697365ULL);
    Clip clip;
    clip.fps = 25.0;
    clip.frames.reserve(static_cast<std::size_t>(n_frames));

    std::vector<double> canvas(static_cast<std::size_t>(width) * height);
    for (int t = 0; t < n_frames; ++t) {
        const double shift_x = spec.pan_origin_x + spec.pan_x * t;
        const double shift_y = spec.pan_origin_y + spec.pan_y * t;
        const std::uint64_t frame_seed =
            spec.background.animate_noise ? splitmix64(noise_seed ^ static_cast<std::uint64_t>(t))
                                          : noise_seed;
        switch (spec.background.kind) {
            case BackgroundSpec::Kind::uniform:
                std::fill(canvas.begin(), canvas.end(), spec.background.base);
                break;
            case BackgroundSpec::Kind::gradient:
                for (int y = 0; y < height; ++y)
                    for (int x = 0; x < width; ++x)
                        canvas[static_cast<std::size_t>(y) * width + x] =
                            spec.background.base +
                            spec.background.amplitude * static_cast<double>(x) / (width - 1);
                break;
            case BackgroundSpec::Kind::noise:
                for (int y = 0; y < height; ++y)
                    for (int x = 0; x < width; ++x)
                        canvas[static_cast<std::size_t>(y) * width + x] =
                            spec.background.base +
                            spec.background.amplitude *
                                (2.0 * detail::value_noise(frame_seed, x - shift_x, y - shift_y) -
                                 1.0);
                break;
        }

        for (std::size_t k = 0; k < spec.objects.size(); ++k) {
            const ObjectSpec& obj = spec.objects[k];
            auto [cx, cy] = object_center(spec, static_cast<int>(k), t);
            const int x0 = std::max(0, static_cast<int>(std::floor(cx - obj.size / 2.0 - 1.0)));
            const int x1 = std::min(width - 1, static_cast<int>(std::ceil(cx + obj.size / 2.0 + 1.0)));
            const int y0 = std::max(0, static_cast<int>(std::floor(cy - obj.size / 2.0 - 1.0)));
            const int y1 = std::min(height - 1, static_cast<int>(std::ceil(cy + obj.size / 2.0 + 1.0)));
            for (int y = y0; y <= y1; ++y)
                for (int x = x0; x <= x1; ++x) {
                    const double a = detail::shape_coverage(obj.shape, obj.size, cx, cy, x, y);
                    if (a <= 0.0) continue;
                    double& px = canvas[static_cast<std::size_t>(y) * width + x];
                    px = px * (1.0 - a) + obj.brightness * a;
                }
        }

        Frame frame(width, height);
        for (std::size_t i = 0; i < canvas.size(); ++i)
            frame.luma[i] = detail::quantize_255(canvas[i]);
        clip.frames.push_back(std::move(frame));
    }
    reset_src_index(clip);
    return clip;
}

// ---------------------------------------------------------------------------
// Temporal subsampling
// ---------------------------------------------------------------------------

/// Playback compression by frame selection: output frame j is input frame
/// round((j + phase) * factor). Output length is exactly floor(len / factor);
/// duplicate indices produced by rounding are kept. fps is unchanged.
inline Clip subsample(const Clip& clip, double factor, double phase = 0.0) {
    if (!(factor >= 1.0))
        throw std::invalid_argument("subsample: factor must be >= 1 (slow-down is expressed by "
                                    "treating the sped-up variant as normal)");
    if (!(phase >= 0.0 && phase < 1.0))
        throw std::invalid_argument("subsample: phase must be in [0,1)");
    const int len = clip.length();
    if (len < static_cast<int>(std::ceil(factor)))
        throw std::invalid_argument("subsample: clip shorter than ceil(factor)");

    const int out_len = static_cast<int>(std::floor(static_cast<double>(len) / factor));
    Clip out;
    out.fps = clip.fps;
    out.source_id = clip.source_id;
    out.frames.reserve(static_cast<std::size_t>(out_len));
    const bool has_prov = !clip.src_index.empty();
    for (int j = 0; j < out_len; ++j) {
        long idx = std::llround((j + phase) * factor);
        idx = std::clamp<long>(idx, 0, len - 1);
        out.frames.push_back(clip.frames[static_cast<std::size_t>(idx)]);
        if (has_prov) out.src_index.push_back(clip.src_index[static_cast<std::size_t>(idx)]);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Bilinear resize
// ---------------------------------------------------------------------------

/// Bilinear resample with the half-pixel center convention (identity when the
/// size is unchanged); samples are clamped at the image border.
inline Frame resize_frame(const Frame& src, int out_w, int out_h) {
    if (out_w < 8 || out_h < 8) throw std::invalid_argument("resize_frame: target size must be >= 8");
    Frame dst(out_w, out_h);
    const double sx = static_cast<double>(src.width) / out_w;
    const double sy = static_cast<double>(src.height) / out_h;
    for (int y = 0; y < out_h; ++y) {
        const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, static_cast<double>(src.height - 1));
        const int y0 = static_cast<int>(fy);
        const int y1 = std::min(y0 + 1, src.height - 1);
        const float ty = static_cast<float>(fy - y0);
        for (int x = 0; x < out_w; ++x) {
            const double fx =
                std::clamp((x + 0.5) * sx - 0.5, 0.0, static_cast<double>(src.width - 1));
            const int x0 = static_cast<int>(fx);
            const int x1 = std::min(x0 + 1, src.width - 1);
            const float tx = static_cast<float>(fx - x0);
            const float a = src.at(x0, y0) + (src.at(x1, y0) - src.at(x0, y0)) * tx;
            const float b = src.at(x0, y1) + (src.at(x1, y1) - src.at(x0, y1)) * tx;
            dst.at(x, y) = a + (b - a) * ty;
        }
    }
    return dst;
}

inline Clip resize_clip(const Clip& clip, int out_w, int out_h) {
    Clip out;
    out.fps = clip.fps;
    out.source_id = clip.source_id;
    out.src_index = clip.src_index;
    out.frames.reserve(clip.frames.size());
    for (const Frame& f : clip.frames) out.frames.push_back(resize_frame(f, out_w, out_h));
    return out;
}

}  // namespace retime
