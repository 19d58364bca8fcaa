// Copyright (c) 2026 the retime authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "retime/format.hpp"
#include "retime/media.hpp"
#include "retime/predictor.hpp"

namespace retime {

// Multi-rate speediness estimation. A video is subsampled by exponential
// factors X^0..X^k; the predictor runs over each variant in a sliding
// window; curves are aligned onto the original timeline, binarized at a
// threshold rho and combined into the per-frame maximum admissible speedup
// V(t). The speediness curve is 1 - Vhat(t).

struct SpeedinessParams {
    double rate_base = 1.25;  // X
    int rate_count = 10;      // k
    int window = 16;          // T
    int stride = 1;
    double rho = 0.5;
};

struct RateVariant {
    int index = 0;
    double factor = 1.0;
    Clip clip;
};

struct RateStack {
    double base = 1.25;
    int count = 0;  // actual max exponent (may be reduced for short videos)
    std::vector<RateVariant> variants;
};

/// Variants v_i = subsample(video, X^i), i = 0..k. k is reduced to the
/// largest exponent whose variant still spans one prediction window.
inline RateStack build_rate_stack(const Clip& video, double rate_base, int rate_count,
                                  int window) {
    if (!(rate_base > 1.0))
        throw std::invalid_argument("build_rate_stack: rate base must be > 1");
    if (rate_count < 0) throw std::invalid_argument("build_rate_stack: rate count must be >= 0");
    if (window < 2) throw std::invalid_argument("build_rate_stack: window must be >= 2");
    if (video.length() < window)
        throw std::invalid_argument("build_rate_stack: video shorter than one window");

    RateStack stack;
    stack.base = rate_base;
    int feasible = 0;
    while (feasible < rate_count &&
           static_cast<int>(std::floor(video.length() / std::pow(rate_base, feasible + 1))) >=
               window)
        ++feasible;
    stack.count = feasible;
    stack.variants.reserve(static_cast<std::size_t>(feasible) + 1);
    for (int i = 0; i <= feasible; ++i) {
        const double factor = std::pow(rate_base, i);
        RateVariant v;
        v.index = i;
        v.factor = factor;
        v.clip = i == 0 ? video : subsample(video, factor, 0.0);
        stack.variants.push_back(std::move(v));
    }
    return stack;
}

struct PredictionCurve {
    int rate_index = 0;
    double factor = 1.0;
    std::vector<double> values;  // one per variant frame
    int window = 16;
    int stride = 1;
};

/// Sliding-window prediction. Each window's probability is assigned to its
/// middle frame; frames before the first and after the last assignment copy
/// the nearest value; stride gaps are linearly interpolated.
inline PredictionCurve predict_curve(const Predictor& predictor, const Clip& variant, int window,
                                     int stride = 1) {
    if (window < 2) throw std::invalid_argument("predict_curve: window must be >= 2");
    if (stride < 1) throw std::invalid_argument("predict_curve: stride must be >= 1");
    if (variant.length() < window)
        throw std::invalid_argument("predict_curve: variant shorter than the window");

    std::vector<double> probs;
    if (auto bulk = predictor.predict_windows(variant, window, stride)) {
        probs = std::move(*bulk);
    } else {
        for (int s = 0; s + window <= variant.length(); s += stride)
            probs.push_back(predictor(clip_window(variant, s, window)));
    }
    const int starts = (variant.length() - window) / stride + 1;
    if (static_cast<int>(probs.size()) != starts)
        throw std::logic_error("predict_curve: bulk path returned a wrong window count");
    for (double p : probs)
        if (!(p >= 0.0 && p <= 1.0))
            throw std::invalid_argument("predict_curve: predictor value outside [0,1]");

    PredictionCurve curve;
    curve.factor = 1.0;
    curve.window = window;
    curve.stride = stride;
    curve.values.assign(static_cast<std::size_t>(variant.length()), 0.0);
    const int mid0 = window / 2;
    for (int t = 0; t < variant.length(); ++t) {
        if (t <= mid0) {
            curve.values[static_cast<std::size_t>(t)] = probs.front();
        } else if (t >= mid0 + stride * (starts - 1)) {
            curve.values[static_cast<std::size_t>(t)] = probs.back();
        } else {
            const int j = (t - mid0) / stride;
            const int lo = mid0 + j * stride;
            if (t == lo) {
                curve.values[static_cast<std::size_t>(t)] = probs[static_cast<std::size_t>(j)];
            } else {
                const double w = static_cast<double>(t - lo) / stride;
                curve.values[static_cast<std::size_t>(t)] =
                    probs[static_cast<std::size_t>(j)] * (1.0 - w) +
                    probs[static_cast<std::size_t>(j + 1)] * w;
            }
        }
    }
    return curve;
}

/// One prediction curve per stack variant, in stack order.
inline std::vector<PredictionCurve> predict_stack_curves(const Predictor& predictor,
                                                         const RateStack& stack, int window,
                                                         int stride = 1) {
    std::vector<PredictionCurve> curves;
    curves.reserve(stack.variants.size());
    for (const RateVariant& v : stack.variants) {
        PredictionCurve c = predict_curve(predictor, v.clip, window, stride);
        c.rate_index = v.index;
        c.factor = v.factor;
        curves.push_back(std::move(c));
    }
    return curves;
}

/// Linear stretch of a curve onto a timeline of target_len frames
/// (endpoint-proportional interpolation).
inline std::vector<double> stretch_curve(std::span<const double> values, int target_len) {
    if (values.empty()) throw std::invalid_argument("stretch_curve: empty curve");
    if (target_len < 1) throw std::invalid_argument("stretch_curve: bad target length");
    std::vector<double> out(static_cast<std::size_t>(target_len));
    if (values.size() == 1 || target_len == 1) {
        for (int t = 0; t < target_len; ++t) out[static_cast<std::size_t>(t)] = values[0];
        return out;
    }
    const double scale =
        static_cast<double>(values.size() - 1) / static_cast<double>(target_len - 1);
    for (int t = 0; t < target_len; ++t) {
        const double pos = t * scale;
        const std::size_t lo = static_cast<std::size_t>(pos);
        const std::size_t hi = std::min(lo + 1, values.size() - 1);
        const double w = pos - static_cast<double>(lo);
        out[static_cast<std::size_t>(t)] = values[lo] * (1.0 - w) + values[hi] * w;
    }
    return out;
}

/// Curves of every variant resampled to the original video's timeline.
inline std::vector<std::vector<double>> align_curves(const RateStack& stack,
                                                     const std::vector<PredictionCurve>& curves) {
    if (curves.size() != stack.variants.size())
        throw std::invalid_argument("align_curves: need one curve per variant");
    const int target = stack.variants.front().clip.length();
    std::vector<std::vector<double>> aligned;
    aligned.reserve(curves.size());
    for (const PredictionCurve& c : curves) aligned.push_back(stretch_curve(c.values, target));
    return aligned;
}

/// bit = 1 ("not sped-up") iff P(t) >= rho.
inline std::vector<std::uint8_t> binarize(std::span<const double> curve, double rho) {
    if (!(rho > 0.0 && rho < 1.0)) throw std::invalid_argument("binarize: rho must be in (0,1)");
    std::vector<std::uint8_t> bits(curve.size());
    for (std::size_t t = 0; t < curve.size(); ++t) bits[t] = curve[t] >= rho ? 1 : 0;
    return bits;
}

struct SpeedupVector {
    std::vector<double> v;      // max admissible speedup per frame, >= 1
    std::vector<double> v_hat;  // min-max normalized to [0,1]
    double rho = 0.5;
};

/// V(t) = max_i bit_i(t) X^i, clamped below at 1: a video cannot be played
/// slower than its own frames here, so an all-zero column still means "play
/// as is". Vhat is per-video min-max; a constant V maps to Vhat = 0 (the
/// conservative choice: no extra speedup signal).
inline SpeedupVector combine_speedup(const std::vector<std::vector<std::uint8_t>>& bits,
                                     std::span<const double> factors, double rho) {
    if (bits.empty() || bits.size() != factors.size())
        throw std::invalid_argument("combine_speedup: need one binary curve per factor");
    const std::size_t len = bits.front().size();
    for (const auto& b : bits)
        if (b.size() != len)
            throw std::invalid_argument("combine_speedup: curves must share one timeline");

    SpeedupVector sv;
    sv.rho = rho;
    sv.v.assign(len, 1.0);
    for (std::size_t t = 0; t < len; ++t) {
        double best = 1.0;
        for (std::size_t i = 0; i < bits.size(); ++i)
            if (bits[i][t]) best = std::max(best, factors[i]);
        sv.v[t] = best;
    }
    double vmin = sv.v[0], vmax = sv.v[0];
    for (double v : sv.v) {
        vmin = std::min(vmin, v);
        vmax = std::max(vmax, v);
    }
    sv.v_hat.assign(len, 0.0);
    if (vmax > vmin)
        for (std::size_t t = 0; t < len; ++t) sv.v_hat[t] = (sv.v[t] - vmin) / (vmax - vmin);
    return sv;
}

inline std::vector<double> speediness_curve(const SpeedupVector& sv) {
    std::vector<double> out(sv.v_hat.size());
    for (std::size_t t = 0; t < out.size(); ++t) out[t] = 1.0 - sv.v_hat[t];
    return out;
}

/// A frame is in slow motion when the prediction on its roughly-2x variant
/// (X^3 under the default base) still reads "normal speed".
inline std::vector<bool> detect_slow_motion(const Predictor& predictor, const Clip& video,
                                            double rho, const SpeedinessParams& params = {}) {
    if (!(rho > 0.0 && rho < 1.0))
        throw std::invalid_argument("detect_slow_motion: rho must be in (0,1)");
    if (video.length() < 2 * params.window)
        throw std::invalid_argument("detect_slow_motion: video must span at least 2T frames");
    const double factor = std::pow(params.rate_base, 3);
    const Clip variant = subsample(video, factor, 0.0);
    const PredictionCurve curve = predict_curve(predictor, variant, params.window, params.stride);
    const std::vector<double> aligned = stretch_curve(curve.values, video.length());
    std::vector<bool> flags(aligned.size());
    for (std::size_t t = 0; t < aligned.size(); ++t) flags[t] = aligned[t] >= rho;
    return flags;
}

// ---------------------------------------------------------------------------
// Full pipeline result and export
// ---------------------------------------------------------------------------

struct SpeedinessResult {
    RateStack stack;
    std::vector<PredictionCurve> curves;           // raw, per-variant timeline
    std::vector<std::vector<double>> aligned;      // on v_0's timeline
    SpeedupVector speedup;
    std::vector<double> speediness;
    std::vector<bool> slow_motion;
    SpeedinessParams params;
};

inline SpeedinessResult compute_speediness(const Predictor& predictor, const Clip& video,
                                           const SpeedinessParams& params = {}) {
    SpeedinessResult r;
    r.params = params;
    r.stack = build_rate_stack(video, params.rate_base, params.rate_count, params.window);
    r.curves = predict_stack_curves(predictor, r.stack, params.window, params.stride);
    r.aligned = align_curves(r.stack, r.curves);
    std::vector<std::vector<std::uint8_t>> bits;
    std::vector<double> factors;
    bits.reserve(r.aligned.size());
    for (std::size_t i = 0; i < r.aligned.size(); ++i) {
        bits.push_back(binarize(r.aligned[i], params.rho));
        factors.push_back(r.stack.variants[i].factor);
    }
    r.speedup = combine_speedup(bits, factors, params.rho);
    r.speediness = speediness_curve(r.speedup);
    if (video.length() >= 2 * params.window && r.stack.count >= 3)
        r.slow_motion = detect_slow_motion(predictor, video, params.rho, params);
    else
        r.slow_motion.assign(static_cast<std::size_t>(video.length()), false);
    return r;
}

/// CSV columns: frame, P_v0..P_vk (aligned), V, V_hat, speediness,
/// slow_motion_flag, and the display curves 1-P_v0 / 1-P_v3 when available.
inline std::string speediness_to_csv(const SpeedinessResult& r) {
    const int len = r.stack.variants.front().clip.length();
    const std::size_t k_n = r.aligned.size();
    std::string csv = "frame";
    for (std::size_t i = 0; i < k_n; ++i) csv += ",P_v" + std::to_string(i);
    csv += ",V,V_hat,speediness,slow_motion_flag,one_minus_P_v0";
    const bool has_v3 = k_n > 3;
    if (has_v3) csv += ",one_minus_P_v3";
    csv += "\n";
    for (int t = 0; t < len; ++t) {
        const std::size_t ti = static_cast<std::size_t>(t);
        csv += std::to_string(t);
        for (std::size_t i = 0; i < k_n; ++i) csv += "," + fmt_double(r.aligned[i][ti]);
        csv += "," + fmt_double(r.speedup.v[ti]);
        csv += "," + fmt_double(r.speedup.v_hat[ti]);
        csv += "," + fmt_double(r.speediness[ti]);
        csv += r.slow_motion[ti] ? ",1" : ",0";
        csv += "," + fmt_double(1.0 - r.aligned[0][ti]);
        if (has_v3) csv += "," + fmt_double(1.0 - r.aligned[3][ti]);
        csv += "\n";
    }
    return csv;
}

inline nlohmann::json speediness_metadata(const SpeedinessResult& r) {
    return nlohmann::json{{"X", r.params.rate_base}, {"k", r.stack.count},
                          {"rho", r.params.rho},     {"T", r.params.window},
                          {"stride", r.params.stride}};
}

}  // namespace retime
