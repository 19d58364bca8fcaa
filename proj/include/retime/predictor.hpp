// Copyright (c) 2026 the retime authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "retime/errors.hpp"
#include "retime/flow.hpp"
#include "retime/media.hpp"
#include "retime/model.hpp"

namespace retime {

/// A speediness predictor maps a T-frame clip to the probability that it
/// plays at normal speed. Deterministic in inference; output in [0,1].
class Predictor {
public:
    virtual ~Predictor() = default;

    virtual double operator()(const Clip& window) const = 0;

    /// Optional bulk path: probabilities for every sliding-window start
    /// (0, stride, 2*stride, ...) of a variant. Implementations must return
    /// exactly what per-window calls would.
    virtual std::optional<std::vector<double>> predict_windows(const Clip& /*variant*/,
                                                               int /*window*/,
                                                               int /*stride*/) const {
        return std::nullopt;
    }
};

class ConstantPredictor final : public Predictor {
public:
    explicit ConstantPredictor(double p) : p_(p) {
        if (!(p >= 0.0 && p <= 1.0))
            throw std::invalid_argument("ConstantPredictor: probability outside [0,1]");
    }
    double operator()(const Clip&) const override { return p_; }
    std::optional<std::vector<double>> predict_windows(const Clip& variant, int window,
                                                       int stride) const override {
        if (variant.length() < window) return std::nullopt;
        const int starts = (variant.length() - window) / stride + 1;
        return std::vector<double>(static_cast<std::size_t>(starts), p_);
    }

private:
    double p_;
};

/// Common machinery for predictors that read the clip through the per-frame
/// mean-flow feature. The bulk path computes the variant's flow series once;
/// a window's feature is the series slice with its last entry duplicated,
/// which is exactly mean_flow_series of the window.
class FlowFeaturePredictor : public Predictor {
public:
    FlowFeaturePredictor(FlowParams flow, int eval_resize, int threads = 1)
        : flow_(flow), eval_resize_(eval_resize), threads_(threads) {}

    double operator()(const Clip& window) const override {
        const Clip prepared = prepare(window);
        const FlowSeries series = mean_flow_series(prepared, flow_, threads_);
        return head(series.values);
    }

    std::optional<std::vector<double>> predict_windows(const Clip& variant, int window,
                                                       int stride) const override {
        if (variant.length() < window) return std::nullopt;
        const Clip prepared = prepare(variant);
        const FlowSeries full = mean_flow_series(prepared, flow_, threads_);
        std::vector<double> probs;
        std::vector<double> feature(static_cast<std::size_t>(window));
        for (int s = 0; s + window <= variant.length(); s += stride) {
            for (int j = 0; j + 1 < window; ++j)
                feature[static_cast<std::size_t>(j)] = full.values[static_cast<std::size_t>(s + j)];
            feature[static_cast<std::size_t>(window - 1)] =
                feature[static_cast<std::size_t>(window - 2)];
            probs.push_back(head(feature));
        }
        return probs;
    }

protected:
    virtual double head(std::span<const double> flow_feature) const = 0;

private:
    Clip prepare(const Clip& clip) const {
        if (eval_resize_ > 0 && (clip.width() != eval_resize_ || clip.height() != eval_resize_))
            return resize_clip(clip, eval_resize_, eval_resize_);
        return clip;
    }

    FlowParams flow_;
    int eval_resize_;
    int threads_;
};

/// The trained mean-flow classifier wrapped as a clip predictor.
class MlpFlowPredictor final : public FlowFeaturePredictor {
public:
    MlpFlowPredictor(MlpParams params, FlowParams flow, int eval_resize, int threads = 1)
        : FlowFeaturePredictor(flow, eval_resize, threads), params_(std::move(params)) {}

    const MlpParams& params() const { return params_; }

protected:
    double head(std::span<const double> flow_feature) const override {
        return forward(params_, flow_feature);
    }

private:
    MlpParams params_;
};

/// Motion-magnitude heuristic: normal speed while the window's mean flow
/// stays at or below a threshold. softness > 0 swaps the step for a logistic.
class ThresholdFlowPredictor final : public FlowFeaturePredictor {
public:
    ThresholdFlowPredictor(double threshold_px, FlowParams flow, int eval_resize = 0,
                           double softness = 0.0, int threads = 1)
        : FlowFeaturePredictor(flow, eval_resize, threads),
          threshold_(threshold_px),
          softness_(softness) {}

protected:
    double head(std::span<const double> flow_feature) const override {
        double mean = 0.0;
        for (double v : flow_feature) mean += v;
        mean /= static_cast<double>(flow_feature.size());
        if (softness_ <= 0.0) return mean <= threshold_ ? 1.0 : 0.0;
        return 1.0 / (1.0 + std::exp((mean - threshold_) / softness_));
    }

private:
    double threshold_;
    double softness_;
};

// ---------------------------------------------------------------------------
// Ground-truth oracle
// ---------------------------------------------------------------------------

/// World seconds represented by each source frame, in units of natural
/// frames: 1.0 for natural speed, 0.5 for half-speed (slow-motion) footage.
struct SpeedTruth {
    std::map<std::string, std::vector<double>> world_per_frame;
};

/// Reads playback provenance instead of pixels: the effective factor of a
/// window is the world time it spans divided by its playback length. Ideal
/// for pipeline tests independent of training quality.
class OracleSpeedPredictor final : public Predictor {
public:
    explicit OracleSpeedPredictor(SpeedTruth truth, double normal_cutoff = 1.2,
                                  double softness = 0.0)
        : truth_(std::move(truth)), cutoff_(normal_cutoff), softness_(softness) {}

    double operator()(const Clip& window) const override {
        if (window.src_index.size() != window.frames.size() || window.length() < 2)
            throw data_error("oracle predictor: clip carries no source provenance");
        const std::vector<double>& g = truth_for(window.source_id, window.src_index.back());
        return probability(effective_factor(g, window.src_index, 0, window.length()));
    }

    std::optional<std::vector<double>> predict_windows(const Clip& variant, int window,
                                                       int stride) const override {
        if (variant.src_index.size() != variant.frames.size() || variant.length() < window)
            return std::nullopt;
        const std::vector<double>& g = truth_for(variant.source_id, variant.src_index.back());
        std::vector<double> probs;
        for (int s = 0; s + window <= variant.length(); s += stride)
            probs.push_back(probability(effective_factor(g, variant.src_index, s, window)));
        return probs;
    }

private:
    const std::vector<double>& truth_for(const std::string& source_id, int max_index) const {
        const auto it = truth_.world_per_frame.find(source_id);
        if (it == truth_.world_per_frame.end())
            throw data_error("oracle predictor: no ground truth for source '" + source_id + "'");
        if (static_cast<int>(it->second.size()) <= max_index)
            throw data_error("oracle predictor: ground truth shorter than source '" + source_id +
                             "'");
        return it->second;
    }

    static double effective_factor(const std::vector<double>& g,
                                   const std::vector<std::int32_t>& idx, int start, int window) {
        double world = 0.0;
        for (int j = start; j + 1 < start + window; ++j)
            for (std::int32_t u = idx[static_cast<std::size_t>(j)];
                 u < idx[static_cast<std::size_t>(j + 1)]; ++u)
                world += g[static_cast<std::size_t>(u)];
        return world / static_cast<double>(window - 1);
    }

    double probability(double factor) const {
        if (softness_ <= 0.0) return factor <= cutoff_ ? 1.0 : 0.0;
        return 1.0 / (1.0 + std::exp((factor - cutoff_) / softness_));
    }

    SpeedTruth truth_;
    double cutoff_;
    double softness_;
};

}  // namespace retime
