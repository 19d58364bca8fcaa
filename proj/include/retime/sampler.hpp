// Copyright (c) 2026 the retime authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "retime/errors.hpp"
#include "retime/media.hpp"
#include "retime/rng.hpp"
#include "retime/video_io.hpp"

namespace retime {

// Self-supervised example construction. A training example is a T-frame clip
// cut from a 3T-frame window of a source video: the class's skip factor f is
// drawn, each window frame survives with probability 1/f, and T consecutive
// survivors are kept. Normal speed draws f in [1.0, 1.2], sped-up in
// [1.7, 2.2].

struct SamplerParams {
    int window_frames = 16;  // T
    int spatial_min = 64;
    int spatial_max = 336;
    int drop_retries = 8;
};

struct TrainExample {
    Clip clip;
    SpeedLabel label;
    std::string pair_id;
    int window_start = 0;
};

enum class BatchMode { same_batch, independent };

struct Batch {
    std::vector<TrainExample> examples;
};

namespace detail {

inline std::pair<double, double> factor_range(SpeedClass cls) {
    return cls == SpeedClass::normal ? std::pair{1.0, 1.2} : std::pair{1.7, 2.2};
}

/// Drop-sampling inside a fixed window: each of the 3T frames survives with
/// probability 1/f; T consecutive survivors starting at a random offset form
/// the clip. Too few survivors redraws the drop pattern, a bounded number of
/// times.
inline Clip sample_in_window(const Clip& source, int window_start, int t_frames, double factor,
                             Rng& rng, int retries, int* survivors_out = nullptr) {
    const int window = 3 * t_frames;
    const double keep = 1.0 / factor;
    for (int attempt = 0; attempt <= retries; ++attempt) {
        std::vector<int> survivors;
        survivors.reserve(static_cast<std::size_t>(window));
        for (int i = 0; i < window; ++i)
            if (rng.uniform() < keep) survivors.push_back(window_start + i);
        if (survivors_out) *survivors_out = static_cast<int>(survivors.size());
        if (static_cast<int>(survivors.size()) < t_frames) continue;
        const int start = static_cast<int>(
            rng.uniform_int(0, static_cast<long>(survivors.size()) - t_frames));
        Clip clip;
        clip.fps = source.fps;
        clip.source_id = source.source_id;
        clip.frames.reserve(static_cast<std::size_t>(t_frames));
        const bool prov = !source.src_index.empty();
        for (int j = 0; j < t_frames; ++j) {
            const int idx = survivors[static_cast<std::size_t>(start + j)];
            clip.frames.push_back(source.frames[static_cast<std::size_t>(idx)]);
            if (prov) clip.src_index.push_back(source.src_index[static_cast<std::size_t>(idx)]);
        }
        return clip;
    }
    throw data_error("temporal_sample: fewer than T survivors after " +
                     std::to_string(retries + 1) + " drop draws (factor " +
                     std::to_string(factor) + ")");
}

/// Deterministic-rate sampling used when temporal augmentation is disabled:
/// normal is T consecutive frames, sped-up is a stride-2 walk over 2T frames.
inline std::pair<Clip, double> sample_fixed_in_window(const Clip& source, int window_start,
                                                      int t_frames, SpeedClass cls, Rng& rng) {
    const int window = 3 * t_frames;
    const int span = cls == SpeedClass::normal ? t_frames : 2 * t_frames;
    const int stride = cls == SpeedClass::normal ? 1 : 2;
    const int start =
        window_start + static_cast<int>(rng.uniform_int(0, static_cast<long>(window - span)));
    Clip clip;
    clip.fps = source.fps;
    clip.source_id = source.source_id;
    const bool prov = !source.src_index.empty();
    for (int j = 0; j < t_frames; ++j) {
        const int idx = start + j * stride;
        clip.frames.push_back(source.frames[static_cast<std::size_t>(idx)]);
        if (prov) clip.src_index.push_back(source.src_index[static_cast<std::size_t>(idx)]);
    }
    return {std::move(clip), cls == SpeedClass::normal ? 1.0 : 2.0};
}

}  // namespace detail

struct TemporalSample {
    Clip clip;
    double factor = 1.0;
    int window_start = 0;
};

/// Full temporal augmentation: random 3T window, class-dependent skip factor,
/// stochastic frame drops.
inline TemporalSample temporal_sample(const Clip& source, SpeedClass cls, Rng& rng,
                                      const SamplerParams& params = {}) {
    const int t_frames = params.window_frames;
    const int window = 3 * t_frames;
    if (source.length() < window)
        throw std::invalid_argument("temporal_sample: source shorter than 3T frames");
    const int window_start =
        static_cast<int>(rng.uniform_int(0, static_cast<long>(source.length() - window)));
    const auto [lo, hi] = detail::factor_range(cls);
    const double factor = rng.uniform(lo, hi);
    Clip clip =
        detail::sample_in_window(source, window_start, t_frames, factor, rng, params.drop_retries);
    return {std::move(clip), factor, window_start};
}

/// Random square rescale: N drawn uniformly from [spatial_min, spatial_max],
/// the same N for every frame of the clip.
inline Clip spatial_augment(const Clip& clip, Rng& rng, const SamplerParams& params = {}) {
    if (clip.frames.empty()) throw std::invalid_argument("spatial_augment: empty clip");
    const int n = static_cast<int>(rng.uniform_int(params.spatial_min, params.spatial_max));
    return resize_clip(clip, n, n);
}

struct BatchOptions {
    BatchMode mode = BatchMode::same_batch;
    bool temporal_augment = true;
};

/// Builds one training batch. In same_batch mode every pair shares one 3T
/// window of one source and the batch holds both class versions of it; in
/// independent mode examples and classes are drawn independently.
inline Batch make_batch(std::span<const Clip> sources, int batch_pairs, const BatchOptions& opts,
                        Rng& rng, const SamplerParams& params = {}) {
    if (batch_pairs < 1) throw std::invalid_argument("make_batch: batch_pairs must be >= 1");
    const int window = 3 * params.window_frames;
    std::vector<std::size_t> eligible;
    for (std::size_t i = 0; i < sources.size(); ++i)
        if (sources[i].length() >= window) eligible.push_back(i);
    if (eligible.empty()) throw data_error("make_batch: no source has at least 3T frames");

    Batch batch;
    auto sample_one = [&](const Clip& src, int window_start, SpeedClass cls) {
        if (opts.temporal_augment) {
            const auto [lo, hi] = detail::factor_range(cls);
            const double f = rng.uniform(lo, hi);
            Clip clip = detail::sample_in_window(src, window_start, params.window_frames, f, rng,
                                                 params.drop_retries);
            return std::pair{std::move(clip), f};
        }
        return detail::sample_fixed_in_window(src, window_start, params.window_frames, cls, rng);
    };

    if (opts.mode == BatchMode::same_batch) {
        batch.examples.reserve(static_cast<std::size_t>(2 * batch_pairs));
        for (int p = 0; p < batch_pairs; ++p) {
            const Clip& src =
                sources[eligible[static_cast<std::size_t>(rng.uniform_int(0, static_cast<long>(eligible.size()) - 1))]];
            const int window_start =
                static_cast<int>(rng.uniform_int(0, static_cast<long>(src.length() - window)));
            const std::string pair_id =
                "p" + std::to_string(p) + "_" + src.source_id + "_" + std::to_string(window_start);
            for (SpeedClass cls : {SpeedClass::normal, SpeedClass::sped_up}) {
                auto [clip, factor] = sample_one(src, window_start, cls);
                batch.examples.push_back(
                    {std::move(clip), SpeedLabel(cls, factor), pair_id, window_start});
            }
        }
    } else {
        batch.examples.reserve(static_cast<std::size_t>(2 * batch_pairs));
        for (int j = 0; j < 2 * batch_pairs; ++j) {
            const Clip& src =
                sources[eligible[static_cast<std::size_t>(rng.uniform_int(0, static_cast<long>(eligible.size()) - 1))]];
            const int window_start =
                static_cast<int>(rng.uniform_int(0, static_cast<long>(src.length() - window)));
            const SpeedClass cls = rng.bernoulli(0.5) ? SpeedClass::normal : SpeedClass::sped_up;
            auto [clip, factor] = sample_one(src, window_start, cls);
            const std::string pair_id =
                "x" + std::to_string(j) + "_" + src.source_id + "_" + std::to_string(window_start);
            batch.examples.push_back(
                {std::move(clip), SpeedLabel(cls, factor), pair_id, window_start});
        }
    }
    return batch;
}

// ---------------------------------------------------------------------------
// Dataset manifest and example cache
// ---------------------------------------------------------------------------

/// Line-delimited source paths, resolved relative to the manifest location.
inline std::vector<std::string> load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot open manifest: " + path);
    const std::filesystem::path base = std::filesystem::path(path).parent_path();
    std::vector<std::string> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::filesystem::path p(line);
        out.push_back(p.is_absolute() ? p.string() : (base / p).string());
    }
    if (out.empty()) throw data_error("manifest lists no sources: " + path);
    return out;
}

inline void save_manifest(const std::vector<std::string>& relative_paths,
                          const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw data_error("cannot write manifest: " + path);
    for (const std::string& p : relative_paths) out << p << "\n";
}

/// Serialized example cache: one SPDV clip plus one JSON sidecar per example.
inline void write_example_cache(const std::vector<TrainExample>& examples,
                                const std::string& dir) {
    std::filesystem::create_directories(dir);
    char name[32];
    for (std::size_t i = 0; i < examples.size(); ++i) {
        std::snprintf(name, sizeof name, "ex_%05zu", i);
        const std::string stem = (std::filesystem::path(dir) / name).string();
        save_spdv(examples[i].clip, stem + ".spdv");
        nlohmann::json meta = {
            {"label", to_string(examples[i].label.cls)},
            {"factor", examples[i].label.factor},
            {"pair_id", examples[i].pair_id},
            {"source_id", examples[i].clip.source_id},
            {"window_start", examples[i].window_start},
        };
        std::ofstream out(stem + ".json", std::ios::trunc);
        if (!out) throw data_error("cannot write example sidecar: " + stem + ".json");
        out << meta.dump(2) << "\n";
    }
}

inline std::vector<TrainExample> load_example_cache(const std::string& dir) {
    std::vector<TrainExample> out;
    for (std::size_t i = 0;; ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "ex_%05zu", i);
        const std::string stem = (std::filesystem::path(dir) / name).string();
        if (!std::filesystem::exists(stem + ".spdv")) break;
        std::ifstream in(stem + ".json");
        if (!in) throw data_error("missing example sidecar: " + stem + ".json");
        const nlohmann::json meta = nlohmann::json::parse(in);
        TrainExample ex;
        ex.clip = load_spdv(stem + ".spdv");
        ex.clip.source_id = meta.at("source_id").get<std::string>();
        const SpeedClass cls = meta.at("label").get<std::string>() == "normal"
                                   ? SpeedClass::normal
                                   : SpeedClass::sped_up;
        ex.label = SpeedLabel(cls, meta.at("factor").get<double>());
        ex.pair_id = meta.at("pair_id").get<std::string>();
        ex.window_start = meta.at("window_start").get<int>();
        out.push_back(std::move(ex));
    }
    if (out.empty()) throw data_error("example cache is empty: " + dir);
    return out;
}

}  // namespace retime
