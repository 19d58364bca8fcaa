// Copyright (c) 2026 the retime authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "retime/errors.hpp"
#include "retime/format.hpp"
#include "retime/rng.hpp"

namespace retime {

// Speediness classifier over per-frame mean-flow features: a linear layer,
// batch normalization, ReLU, and a linear readout through a sigmoid.
//
//   p = sigmoid(w2 . relu(gamma * xhat + beta) + b2),
//   xhat = (w1 x + b1 - mu) / sqrt(var + eps)
//
// Training normalizes with current-batch statistics (mu, var over the batch)
// and maintains running statistics; inference uses the running statistics
// only. Gradients are exact analytic derivatives, including the batch-norm
// statistics terms, and are checked against finite differences in the tests.

constexpr double kBnEpsilon = 1e-5;
constexpr double kProbClamp = 1e-7;

struct MlpParams {
    int input_len = 16;  // T
    int hidden = 64;     // H
    std::vector<double> w1;  // hidden x input_len, row-major
    std::vector<double> b1;
    std::vector<double> bn_gamma;
    std::vector<double> bn_beta;
    std::vector<double> bn_running_mean;
    std::vector<double> bn_running_var;
    std::vector<double> w2;  // hidden
    double b2 = 0.0;
};

struct MlpGrad {
    std::vector<double> w1, b1, bn_gamma, bn_beta, w2;
    double b2 = 0.0;
};

enum class BnMode { train, infer };

/// One training/evaluation example: the flow feature vector and its label.
struct FlowExample {
    std::vector<double> features;
    bool is_normal = true;
    double factor = 1.0;
    std::string pair_id;
};

/// Example pool with optional (normal, sped_up) pair structure for
/// same-batch composition.
struct FlowExampleSet {
    std::vector<FlowExample> items;
    std::vector<std::pair<int, int>> pairs;  // indices into items
};

struct TrainConfig {
    double learning_rate = 1e-2;
    double momentum = 0.9;
    int batch_pairs = 8;
    long steps = 10000;
    std::uint64_t seed = 1;
    double bn_momentum = 0.99;
    double weight_init_scale = 1.0;
    int hidden = 64;
    int eval_every = 50;
};

inline void validate_train_config(const TrainConfig& c) {
    if (!(c.learning_rate >= 0.0) || !std::isfinite(c.learning_rate))
        throw std::invalid_argument("TrainConfig: learning_rate must be finite and >= 0");
    if (c.steps < 1) throw std::invalid_argument("TrainConfig: steps must be >= 1");
    if (c.batch_pairs < 1) throw std::invalid_argument("TrainConfig: batch_pairs must be >= 1");
    if (c.hidden < 1) throw std::invalid_argument("TrainConfig: hidden width must be >= 1");
    if (!(c.bn_momentum >= 0.0 && c.bn_momentum < 1.0))
        throw std::invalid_argument("TrainConfig: bn_momentum must be in [0,1)");
}

inline MlpParams init_params(int input_len, int hidden, double init_scale, Rng& rng) {
    MlpParams p;
    p.input_len = input_len;
    p.hidden = hidden;
    const double lim1 = init_scale * std::sqrt(6.0 / (input_len + hidden));
    const double lim2 = init_scale * std::sqrt(6.0 / (hidden + 1));
    p.w1.resize(static_cast<std::size_t>(hidden) * input_len);
    for (double& v : p.w1) v = rng.uniform(-lim1, lim1);
    p.b1.assign(static_cast<std::size_t>(hidden), 0.0);
    p.bn_gamma.assign(static_cast<std::size_t>(hidden), 1.0);
    p.bn_beta.assign(static_cast<std::size_t>(hidden), 0.0);
    p.bn_running_mean.assign(static_cast<std::size_t>(hidden), 0.0);
    p.bn_running_var.assign(static_cast<std::size_t>(hidden), 1.0);
    p.w2.resize(static_cast<std::size_t>(hidden));
    for (double& v : p.w2) v = rng.uniform(-lim2, lim2);
    p.b2 = 0.0;
    return p;
}

namespace detail {

/// Activations kept for backpropagation. Rows are examples.
struct ForwardCache {
    std::size_t batch = 0;
    std::vector<double> pre;   // B x H, w1 x + b1
    std::vector<double> mu;    // H, statistics actually used
    std::vector<double> var;   // H
    std::vector<double> xhat;  // B x H
    std::vector<double> act;   // B x H, relu output
    std::vector<double> y;     // B x H, pre-relu
    std::vector<double> p;     // B
    std::vector<double> tmp;   // batch-sized scratch for pairwise sums
};

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

/// Forward pass over a batch laid out as B rows of length T.
inline void forward_batch(const MlpParams& params, std::span<const double> x, std::size_t batch,
                          BnMode mode, ForwardCache& cache) {
    const std::size_t h_n = static_cast<std::size_t>(params.hidden);
    const std::size_t t_n = static_cast<std::size_t>(params.input_len);
    if (x.size() != batch * t_n)
        throw std::invalid_argument("forward: feature length must equal the model input length");
    if (batch == 0) throw std::invalid_argument("forward: empty batch");
    cache.batch = batch;
    cache.pre.assign(batch * h_n, 0.0);
    cache.mu.assign(h_n, 0.0);
    cache.var.assign(h_n, 0.0);
    cache.xhat.assign(batch * h_n, 0.0);
    cache.y.assign(batch * h_n, 0.0);
    cache.act.assign(batch * h_n, 0.0);
    cache.p.assign(batch, 0.0);
    cache.tmp.assign(batch, 0.0);

    for (std::size_t i = 0; i < batch; ++i) {
        const double* xi = x.data() + i * t_n;
        for (std::size_t h = 0; h < h_n; ++h) {
            const double* w = params.w1.data() + h * t_n;
            double acc = params.b1[h];
            for (std::size_t t = 0; t < t_n; ++t) acc += w[t] * xi[t];
            cache.pre[i * h_n + h] = acc;
        }
    }

    if (mode == BnMode::train) {
        for (std::size_t h = 0; h < h_n; ++h) {
            for (std::size_t i = 0; i < batch; ++i) cache.tmp[i] = cache.pre[i * h_n + h];
            const double mu = pairwise_sum(cache.tmp.data(), batch) / static_cast<double>(batch);
            for (std::size_t i = 0; i < batch; ++i) {
                const double d = cache.pre[i * h_n + h] - mu;
                cache.tmp[i] = d * d;
            }
            cache.mu[h] = mu;
            cache.var[h] = pairwise_sum(cache.tmp.data(), batch) / static_cast<double>(batch);
        }
    } else {
        cache.mu = params.bn_running_mean;
        cache.var = params.bn_running_var;
    }

    for (std::size_t i = 0; i < batch; ++i) {
        double logit = params.b2;
        for (std::size_t h = 0; h < h_n; ++h) {
            const double inv = 1.0 / std::sqrt(cache.var[h] + kBnEpsilon);
            const double xh = (cache.pre[i * h_n + h] - cache.mu[h]) * inv;
            const double y = params.bn_gamma[h] * xh + params.bn_beta[h];
            const double a = y > 0.0 ? y : 0.0;
            cache.xhat[i * h_n + h] = xh;
            cache.y[i * h_n + h] = y;
            cache.act[i * h_n + h] = a;
            logit += params.w2[h] * a;
        }
        cache.p[i] = sigmoid(logit);
    }
}

inline std::vector<double> pack_features(std::span<const FlowExample> batch, int input_len) {
    std::vector<double> x;
    x.reserve(batch.size() * static_cast<std::size_t>(input_len));
    for (const FlowExample& ex : batch) {
        if (static_cast<int>(ex.features.size()) != input_len)
            throw std::invalid_argument("feature length must equal the model input length");
        x.insert(x.end(), ex.features.begin(), ex.features.end());
    }
    return x;
}

}  // namespace detail

/// Probability of normal speed for a single feature vector.
/// Train mode normalizes with the (single-example) batch statistics and
/// updates the running statistics; inference uses running statistics only.
inline double forward(MlpParams& params, std::span<const double> x, BnMode mode) {
    detail::ForwardCache cache;
    detail::forward_batch(params, x, 1, mode, cache);
    if (mode == BnMode::train) {
        const double m = 0.99;
        for (int h = 0; h < params.hidden; ++h) {
            params.bn_running_mean[static_cast<std::size_t>(h)] =
                m * params.bn_running_mean[static_cast<std::size_t>(h)] + (1.0 - m) * cache.mu[static_cast<std::size_t>(h)];
            params.bn_running_var[static_cast<std::size_t>(h)] =
                m * params.bn_running_var[static_cast<std::size_t>(h)] + (1.0 - m) * cache.var[static_cast<std::size_t>(h)];
        }
    }
    return cache.p[0];
}

inline double forward(const MlpParams& params, std::span<const double> x) {
    detail::ForwardCache cache;
    detail::forward_batch(params, x, 1, BnMode::infer, cache);
    return cache.p[0];
}

/// Mean binary cross entropy over a batch, probabilities clamped away from
/// 0 and 1. Train mode uses batch statistics (no running-stat update here).
inline double loss(const MlpParams& params, std::span<const FlowExample> batch,
                   BnMode mode = BnMode::train) {
    if (batch.empty()) throw std::invalid_argument("loss: empty batch");
    detail::ForwardCache cache;
    const std::vector<double> x = detail::pack_features(batch, params.input_len);
    detail::forward_batch(params, x, batch.size(), mode, cache);
    std::vector<double> terms(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const double pc = std::clamp(cache.p[i], kProbClamp, 1.0 - kProbClamp);
        terms[i] = batch[i].is_normal ? -std::log(pc) : -std::log(1.0 - pc);
    }
    return pairwise_sum(terms.data(), terms.size()) / static_cast<double>(terms.size());
}

/// Exact analytic gradient of the train-mode loss, including the batch-norm
/// batch-statistics terms.
inline MlpGrad grad(const MlpParams& params, std::span<const FlowExample> batch) {
    if (batch.empty()) throw std::invalid_argument("grad: empty batch");
    const std::size_t b_n = batch.size();
    const std::size_t h_n = static_cast<std::size_t>(params.hidden);
    const std::size_t t_n = static_cast<std::size_t>(params.input_len);
    detail::ForwardCache cache;
    const std::vector<double> x = detail::pack_features(batch, params.input_len);
    detail::forward_batch(params, x, b_n, BnMode::train, cache);

    MlpGrad g;
    g.w1.assign(h_n * t_n, 0.0);
    g.b1.assign(h_n, 0.0);
    g.bn_gamma.assign(h_n, 0.0);
    g.bn_beta.assign(h_n, 0.0);
    g.w2.assign(h_n, 0.0);

    // d loss / d logit, through the probability clamp.
    std::vector<double> dz(b_n);
    for (std::size_t i = 0; i < b_n; ++i) {
        const double p = cache.p[i];
        const double pc = std::clamp(p, kProbClamp, 1.0 - kProbClamp);
        const double y = batch[i].is_normal ? 1.0 : 0.0;
        const double dl_dp = (-y / pc + (1.0 - y) / (1.0 - pc)) / static_cast<double>(b_n);
        const double dp_dz = (p > kProbClamp && p < 1.0 - kProbClamp) ? p * (1.0 - p) : 0.0;
        dz[i] = dl_dp * dp_dz;
    }

    std::vector<double>& tmp = cache.tmp;
    for (std::size_t i = 0; i < b_n; ++i) tmp[i] = dz[i];
    g.b2 = pairwise_sum(tmp.data(), b_n);

    std::vector<double> dxhat(b_n * h_n, 0.0);
    for (std::size_t h = 0; h < h_n; ++h) {
        // readout weight and bn affine gradients
        for (std::size_t i = 0; i < b_n; ++i) tmp[i] = dz[i] * cache.act[i * h_n + h];
        g.w2[h] = pairwise_sum(tmp.data(), b_n);
        for (std::size_t i = 0; i < b_n; ++i) {
            const double dy =
                (cache.y[i * h_n + h] > 0.0 ? 1.0 : 0.0) * dz[i] * params.w2[h];
            dxhat[i * h_n + h] = dy * params.bn_gamma[h];
            tmp[i] = dy * cache.xhat[i * h_n + h];
        }
        g.bn_gamma[h] = pairwise_sum(tmp.data(), b_n);
        for (std::size_t i = 0; i < b_n; ++i)
            tmp[i] = (cache.y[i * h_n + h] > 0.0 ? 1.0 : 0.0) * dz[i] * params.w2[h];
        g.bn_beta[h] = pairwise_sum(tmp.data(), b_n);

        // batch-norm backward with biased batch variance:
        // dpre_i = inv_std * (dxhat_i - mean(dxhat) - xhat_i * mean(dxhat * xhat))
        const double inv_std = 1.0 / std::sqrt(cache.var[h] + kBnEpsilon);
        for (std::size_t i = 0; i < b_n; ++i) tmp[i] = dxhat[i * h_n + h];
        const double mean_dxhat = pairwise_sum(tmp.data(), b_n) / static_cast<double>(b_n);
        for (std::size_t i = 0; i < b_n; ++i)
            tmp[i] = dxhat[i * h_n + h] * cache.xhat[i * h_n + h];
        const double mean_dxhat_xhat = pairwise_sum(tmp.data(), b_n) / static_cast<double>(b_n);

        for (std::size_t i = 0; i < b_n; ++i) {
            const double dpre = inv_std * (dxhat[i * h_n + h] - mean_dxhat -
                                           cache.xhat[i * h_n + h] * mean_dxhat_xhat);
            dxhat[i * h_n + h] = dpre;  // reuse the buffer for dpre
        }
        for (std::size_t t = 0; t < t_n; ++t) {
            for (std::size_t i = 0; i < b_n; ++i)
                tmp[i] = dxhat[i * h_n + h] * x[i * t_n + t];
            g.w1[h * t_n + t] = pairwise_sum(tmp.data(), b_n);
        }
        for (std::size_t i = 0; i < b_n; ++i) tmp[i] = dxhat[i * h_n + h];
        g.b1[h] = pairwise_sum(tmp.data(), b_n);
    }
    return g;
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

struct EvalResult {
    double accuracy = 0.0;
    long true_normal = 0, true_sped = 0, false_normal = 0, false_sped = 0;
    long count() const { return true_normal + true_sped + false_normal + false_sped; }
};

/// Accuracy under the "p >= threshold means normal" convention.
inline EvalResult evaluate_probabilities(std::span<const double> probs,
                                         const std::vector<bool>& labels_normal,
                                         double threshold = 0.5) {
    if (probs.empty() || probs.size() != labels_normal.size())
        throw std::invalid_argument("evaluate: empty or mismatched evaluation set");
    EvalResult r;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        const bool predicted_normal = probs[i] >= threshold;
        if (predicted_normal && labels_normal[i]) ++r.true_normal;
        else if (!predicted_normal && !labels_normal[i]) ++r.true_sped;
        else if (predicted_normal) ++r.false_normal;
        else ++r.false_sped;
    }
    r.accuracy = static_cast<double>(r.true_normal + r.true_sped) /
                 static_cast<double>(probs.size());
    return r;
}

inline EvalResult evaluate(const std::function<double(const FlowExample&)>& predictor,
                           std::span<const FlowExample> test_set, double threshold = 0.5) {
    std::vector<double> probs;
    std::vector<bool> labels;
    probs.reserve(test_set.size());
    labels.reserve(test_set.size());
    for (const FlowExample& ex : test_set) {
        probs.push_back(predictor(ex));
        labels.push_back(ex.is_normal);
    }
    return evaluate_probabilities(probs, labels, threshold);
}

inline EvalResult evaluate_params(const MlpParams& params, std::span<const FlowExample> test_set,
                                  double threshold = 0.5) {
    return evaluate([&](const FlowExample& ex) { return forward(params, ex.features); }, test_set,
                    threshold);
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

struct TrainRecord {
    long step = 0;
    double train_loss = 0.0;
    double val_accuracy = std::numeric_limits<double>::quiet_NaN();  // NaN between evals
};

struct TrainResult {
    MlpParams params;  // best validation accuracy (latest among ties)
    std::vector<TrainRecord> history;
    double best_val_accuracy = std::numeric_limits<double>::quiet_NaN();
    long best_step = 0;
};

/// SGD with momentum over batches drawn from a fixed example pool.
/// same_batch composes batches from (normal, sped-up) pairs that share a
/// source window; otherwise examples are drawn independently. Deterministic
/// given config.seed.
inline TrainResult train(const TrainConfig& config, const FlowExampleSet& train_set,
                         std::span<const FlowExample> val_set, bool same_batch = true) {
    validate_train_config(config);
    if (train_set.items.empty()) throw std::invalid_argument("train: empty training set");
    if (same_batch && train_set.pairs.empty())
        throw std::invalid_argument("train: same-batch mode needs pair structure");
    const int input_len = static_cast<int>(train_set.items.front().features.size());

    Rng rng(config.seed);
    MlpParams params = init_params(input_len, config.hidden, config.weight_init_scale, rng);
    MlpGrad velocity;
    velocity.w1.assign(params.w1.size(), 0.0);
    velocity.b1.assign(params.b1.size(), 0.0);
    velocity.bn_gamma.assign(params.bn_gamma.size(), 0.0);
    velocity.bn_beta.assign(params.bn_beta.size(), 0.0);
    velocity.w2.assign(params.w2.size(), 0.0);
    velocity.b2 = 0.0;

    TrainResult result;
    result.history.reserve(static_cast<std::size_t>(config.steps));

    const std::size_t pool =
        same_batch ? train_set.pairs.size() : train_set.items.size();
    const std::size_t want = same_batch ? static_cast<std::size_t>(config.batch_pairs)
                                        : static_cast<std::size_t>(2 * config.batch_pairs);
    std::vector<std::size_t> order(pool);
    std::vector<FlowExample> batch;

    detail::ForwardCache stat_cache;
    auto step_update = [&](std::span<double> w, std::span<double> v, std::span<const double> g) {
        for (std::size_t i = 0; i < w.size(); ++i) {
            v[i] = config.momentum * v[i] - config.learning_rate * g[i];
            w[i] += v[i];
        }
    };

    for (long step = 1; step <= config.steps; ++step) {
        // batch selection: partial Fisher-Yates, without replacement when the
        // pool allows it
        std::iota(order.begin(), order.end(), std::size_t{0});
        const std::size_t take = std::min(want, pool);
        for (std::size_t j = 0; j < take; ++j) {
            const std::size_t k = static_cast<std::size_t>(
                rng.uniform_int(static_cast<long>(j), static_cast<long>(pool) - 1));
            std::swap(order[j], order[k]);
        }
        batch.clear();
        for (std::size_t j = 0; j < want; ++j) {
            const std::size_t pick = order[j % take];
            if (same_batch) {
                batch.push_back(train_set.items[static_cast<std::size_t>(train_set.pairs[pick].first)]);
                batch.push_back(train_set.items[static_cast<std::size_t>(train_set.pairs[pick].second)]);
            } else {
                batch.push_back(train_set.items[pick]);
            }
        }

        const double batch_loss = loss(params, batch, BnMode::train);
        if (!std::isfinite(batch_loss)) throw train_divergence_error(step);
        const MlpGrad g = grad(params, batch);

        // Running statistics track the batch statistics of each step.
        {
            const std::vector<double> x = detail::pack_features(batch, params.input_len);
            detail::forward_batch(params, x, batch.size(), BnMode::train, stat_cache);
            const double m = config.bn_momentum;
            for (std::size_t h = 0; h < params.bn_running_mean.size(); ++h) {
                params.bn_running_mean[h] = m * params.bn_running_mean[h] + (1.0 - m) * stat_cache.mu[h];
                params.bn_running_var[h] = m * params.bn_running_var[h] + (1.0 - m) * stat_cache.var[h];
            }
        }

        step_update(params.w1, velocity.w1, g.w1);
        step_update(params.b1, velocity.b1, g.b1);
        step_update(params.bn_gamma, velocity.bn_gamma, g.bn_gamma);
        step_update(params.bn_beta, velocity.bn_beta, g.bn_beta);
        step_update(params.w2, velocity.w2, g.w2);
        velocity.b2 = config.momentum * velocity.b2 - config.learning_rate * g.b2;
        params.b2 += velocity.b2;

        // NaN weights can hide behind the ReLU and the probability clamp, so
        // the divergence guard also scans the updated parameters.
        bool finite = std::isfinite(params.b2);
        for (const std::vector<double>* block :
             {&params.w1, &params.b1, &params.bn_gamma, &params.bn_beta, &params.w2})
            for (double v : *block) finite = finite && std::isfinite(v);
        if (!finite) throw train_divergence_error(step);

        TrainRecord rec;
        rec.step = step;
        rec.train_loss = batch_loss;
        if (!val_set.empty() && (step % config.eval_every == 0 || step == config.steps)) {
            rec.val_accuracy = evaluate_params(params, val_set).accuracy;
            if (std::isnan(result.best_val_accuracy) ||
                rec.val_accuracy >= result.best_val_accuracy) {
                result.best_val_accuracy = rec.val_accuracy;
                result.best_step = step;
                result.params = params;
            }
        }
        result.history.push_back(rec);
    }
    if (std::isnan(result.best_val_accuracy)) {
        result.params = params;
        result.best_step = config.steps;
    }
    return result;
}

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

inline nlohmann::json checkpoint_json(const MlpParams& p) {
    return nlohmann::json{
        {"format_version", 1},
        {"kind", "flow_mlp"},
        {"T", p.input_len},
        {"H", p.hidden},
        {"shapes",
         {{"w1", {p.hidden, p.input_len}}, {"b1", {p.hidden}}, {"bn_gamma", {p.hidden}},
          {"bn_beta", {p.hidden}}, {"bn_running_mean", {p.hidden}},
          {"bn_running_var", {p.hidden}}, {"w2", {p.hidden}}}},
        {"w1", p.w1},
        {"b1", p.b1},
        {"bn_gamma", p.bn_gamma},
        {"bn_beta", p.bn_beta},
        {"bn_running_mean", p.bn_running_mean},
        {"bn_running_var", p.bn_running_var},
        {"w2", p.w2},
        {"b2", p.b2},
    };
}

inline MlpParams params_from_json(const nlohmann::json& j, int expected_input_len = -1) {
    if (j.value("kind", "") != "flow_mlp") throw config_error("checkpoint: kind is not flow_mlp");
    MlpParams p;
    p.input_len = j.at("T").get<int>();
    p.hidden = j.at("H").get<int>();
    if (expected_input_len > 0 && p.input_len != expected_input_len)
        throw config_error("checkpoint T=" + std::to_string(p.input_len) +
                           " does not match the configured window T=" +
                           std::to_string(expected_input_len));
    p.w1 = j.at("w1").get<std::vector<double>>();
    p.b1 = j.at("b1").get<std::vector<double>>();
    p.bn_gamma = j.at("bn_gamma").get<std::vector<double>>();
    p.bn_beta = j.at("bn_beta").get<std::vector<double>>();
    p.bn_running_mean = j.at("bn_running_mean").get<std::vector<double>>();
    p.bn_running_var = j.at("bn_running_var").get<std::vector<double>>();
    p.w2 = j.at("w2").get<std::vector<double>>();
    p.b2 = j.at("b2").get<double>();
    const std::size_t h = static_cast<std::size_t>(p.hidden);
    if (p.w1.size() != h * static_cast<std::size_t>(p.input_len) || p.b1.size() != h ||
        p.bn_gamma.size() != h || p.bn_beta.size() != h || p.bn_running_mean.size() != h ||
        p.bn_running_var.size() != h || p.w2.size() != h)
        throw config_error("checkpoint: weight shapes do not match T/H");
    return p;
}

}  // namespace retime
