// Copyright (c) 2026 the retime authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "retime/format.hpp"
#include "retime/media.hpp"
#include "retime/optimizer.hpp"

namespace retime {

/// Mapping from output frames to fractional source positions.
struct FrameSchedule {
    std::vector<double> source_times;  // strictly non-decreasing, first is 0
    int source_len = 0;

    int output_len() const { return static_cast<int>(source_times.size()); }
};

/// Walks the source at the local speedup: u_{n+1} = u_n + S(round(u_n)).
/// Output frame n consumes source span [u_n, u_n + S); a position is emitted
/// only while that span fits inside the source, which makes a constant
/// integer speedup c reproduce subsample(video, c) frame-for-frame.
inline FrameSchedule build_schedule(std::span<const double> speed, int source_len) {
    if (source_len < 2) throw std::invalid_argument("build_schedule: source_len must be >= 2");
    if (static_cast<int>(speed.size()) != source_len)
        throw std::invalid_argument("build_schedule: speedup curve length must equal source_len");
    for (std::size_t t = 0; t < speed.size(); ++t)
        if (!(speed[t] > 0.0) || !std::isfinite(speed[t]))
            throw std::invalid_argument("build_schedule: speedup must be positive and finite at t=" +
                                        std::to_string(t));

    FrameSchedule sched;
    sched.source_len = source_len;
    sched.source_times.push_back(0.0);
    double u = 0.0;
    while (true) {
        const int idx = static_cast<int>(
            std::clamp<long>(std::llround(u), 0, static_cast<long>(source_len) - 1));
        u += speed[static_cast<std::size_t>(idx)];
        const int next_idx = static_cast<int>(
            std::clamp<long>(std::llround(u), 0, static_cast<long>(source_len) - 1));
        const double consumed = std::max(speed[static_cast<std::size_t>(next_idx)], 1.0);
        if (u > static_cast<double>(source_len) - consumed) break;
        sched.source_times.push_back(u);
    }
    return sched;
}

inline SpeedupCurve build_speedup_curve(std::vector<double> speed) {
    SpeedupCurve c;
    c.achieved_mean = arithmetic_mean(speed);
    c.speed = std::move(speed);
    return c;
}

/// Nearest-frame playback of the schedule; fps is preserved.
inline Clip render_schedule(const Clip& video, const FrameSchedule& schedule) {
    validate_clip(video, "render_schedule");
    if (schedule.source_len != video.length())
        throw std::invalid_argument("render_schedule: schedule built for a different length");
    if (schedule.source_times.empty() || schedule.source_times.front() != 0.0)
        throw std::invalid_argument("render_schedule: schedule must start at source time 0");
    Clip out;
    out.fps = video.fps;
    out.source_id = video.source_id;
    out.frames.reserve(schedule.source_times.size());
    double prev = 0.0;
    for (double t : schedule.source_times) {
        if (t < prev)
            throw std::invalid_argument("render_schedule: source times must be non-decreasing");
        prev = t;
        const long idx = std::clamp<long>(std::llround(t), 0, video.length() - 1);
        out.frames.push_back(video.frames[static_cast<std::size_t>(idx)]);
        if (!video.src_index.empty())
            out.src_index.push_back(video.src_index[static_cast<std::size_t>(idx)]);
    }
    return out;
}

/// CSV rows: output_frame,source_time,source_frame_used
inline std::string schedule_to_csv(const FrameSchedule& schedule) {
    std::string csv = "output_frame,source_time,source_frame_used\n";
    for (std::size_t n = 0; n < schedule.source_times.size(); ++n) {
        const double t = schedule.source_times[n];
        const long idx = std::clamp<long>(std::llround(t), 0, schedule.source_len - 1);
        csv += std::to_string(n) + "," + fmt_double(t) + "," + std::to_string(idx) + "\n";
    }
    return csv;
}

}  // namespace retime
