// Copyright (c) 2026 the retime authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "retime/optimizer.hpp"
#include "retime/speediness.hpp"

namespace retime {

// Threshold selection: solve the speedup curve for each binarization
// threshold rho in {0.1 .. 0.9} and keep the one whose overall speedup (the
// arithmetic mean of S*, the quantity the rate term constrains) lands
// closest to the target. Ties go to the smaller rho.

struct ThresholdSweepEntry {
    double rho = 0.0;
    double achieved_mean = 0.0;
    bool solved = false;
    std::string error;
};

struct ThresholdSelection {
    double rho_star = 0.0;
    SpeedupVector speedup;
    SpeedupCurve curve;
    double achieved_duration_ratio = 0.0;  // harmonic mean of S*, reported only
    std::vector<ThresholdSweepEntry> sweep;
};

namespace detail {

/// argmin |mean - target| over solved candidates, smallest rho on ties.
inline std::size_t choose_best_rho(const std::vector<ThresholdSweepEntry>& sweep, double target) {
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < sweep.size(); ++i) {
        if (!sweep[i].solved) continue;
        if (!best ||
            std::abs(sweep[i].achieved_mean - target) < std::abs(sweep[*best].achieved_mean - target))
            best = i;
    }
    if (!best) throw numeric_error("threshold selection: no threshold admitted a solution");
    return *best;
}

}  // namespace detail

/// Core selection over already-aligned prediction curves.
inline ThresholdSelection select_threshold_curves(
    const std::vector<std::vector<double>>& aligned_curves, std::span<const double> factors,
    const RetimeParams& params) {
    if (aligned_curves.empty() || aligned_curves.size() != factors.size())
        throw std::invalid_argument("select_threshold: need one aligned curve per factor");

    ThresholdSelection sel;
    std::vector<SpeedupVector> speedups;
    std::vector<SpeedupCurve> curves;
    speedups.reserve(9);
    curves.reserve(9);
    std::string first_error;
    for (int i = 1; i <= 9; ++i) {
        const double rho = static_cast<double>(i) / 10.0;
        ThresholdSweepEntry entry;
        entry.rho = rho;
        std::vector<std::vector<std::uint8_t>> bits;
        bits.reserve(aligned_curves.size());
        for (const auto& curve : aligned_curves) bits.push_back(binarize(curve, rho));
        SpeedupVector sv = combine_speedup(bits, factors, rho);
        try {
            SpeedupCurve curve = solve_speedup(sv.v_hat, params);
            entry.achieved_mean = curve.achieved_mean;
            entry.solved = true;
            speedups.push_back(std::move(sv));
            curves.push_back(std::move(curve));
        } catch (const numeric_error& e) {
            entry.error = e.what();
            if (first_error.empty()) first_error = e.what();
            speedups.emplace_back();
            curves.emplace_back();
        }
        sel.sweep.push_back(std::move(entry));
    }

    bool any = false;
    for (const ThresholdSweepEntry& e : sel.sweep) any = any || e.solved;
    if (!any) throw numeric_error(first_error);

    const std::size_t best = detail::choose_best_rho(sel.sweep, params.target_speedup);
    sel.rho_star = sel.sweep[best].rho;
    sel.speedup = std::move(speedups[best]);
    sel.curve = std::move(curves[best]);
    sel.achieved_duration_ratio = harmonic_mean(sel.curve.speed);
    return sel;
}

/// Full pipeline: rate stack, prediction curves, alignment, nine-threshold
/// sweep. The prediction curves are threshold independent, so they are
/// computed once.
inline ThresholdSelection select_threshold(const Clip& video, const Predictor& predictor,
                                           const SpeedinessParams& sp, const RetimeParams& rp) {
    const RateStack stack = build_rate_stack(video, sp.rate_base, sp.rate_count, sp.window);
    const std::vector<PredictionCurve> curves =
        predict_stack_curves(predictor, stack, sp.window, sp.stride);
    const std::vector<std::vector<double>> aligned = align_curves(stack, curves);
    std::vector<double> factors;
    factors.reserve(stack.variants.size());
    for (const RateVariant& v : stack.variants) factors.push_back(v.factor);
    return select_threshold_curves(aligned, factors, rp);
}

}  // namespace retime
