// Copyright (c) 2026 the retime authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "retime/errors.hpp"
#include "retime/format.hpp"

namespace retime {

// ---------------------------------------------------------------------------
// Adaptive-speedup energy
//
//   E(S) = sum_t (1 - Vhat_t) (S_t - R_min)^2
//        + gamma * sum_t Vhat_t (S_t - R_o)^2
//        + beta * (mean(S) - R_o)^2
//        + alpha * sum_{t<Tv-1} (S_t - S_{t+1})^2
//
// Frames free to be sped up (Vhat high) are pulled towards the target rate
// R_o, frames that already look fast (Vhat low) towards R_min, the mean
// towards R_o, and the curve towards smoothness. E is a convex quadratic;
// its minimizer solves A S = b with
//
//   A = 2 diag(w) + 2 alpha L + (2 beta / Tv^2) J,   w_t = (1-Vhat_t) + gamma Vhat_t
//   b = 2 ((1-Vhat) R_min + gamma Vhat R_o) + (2 beta / Tv) R_o 1
//
// where L is the path-graph Laplacian and J the all-ones matrix.
// ---------------------------------------------------------------------------

struct RetimeParams {
    double target_speedup = 2.0;  // R_o
    double min_speedup = 1.0;     // R_min
    double alpha = 10.0;          // smoothness weight
    double beta = 0.0;            // overall-rate weight
    double gamma = 0.1;           // pull of free frames towards R_o
};

/// Stock weights for a video of Tv frames: beta scales with Tv so the rate
/// term keeps its grip as videos get longer.
inline RetimeParams default_retime_params(std::size_t tv, double target_speedup) {
    RetimeParams p;
    p.target_speedup = target_speedup;
    p.min_speedup = 1.0;
    p.alpha = 10.0;
    p.beta = 100.0 * static_cast<double>(tv);
    p.gamma = 0.1;
    return p;
}

inline void validate_retime_params(const RetimeParams& p) {
    if (!(std::isfinite(p.alpha) && std::isfinite(p.beta) && std::isfinite(p.gamma)))
        throw std::invalid_argument("RetimeParams: weights must be finite");
    if (p.alpha < 0.0 || p.beta < 0.0 || p.gamma < 0.0)
        throw std::invalid_argument("RetimeParams: weights must be >= 0");
    if (!(p.min_speedup >= 1.0))
        throw std::invalid_argument("RetimeParams: min_speedup must be >= 1");
    if (!(p.target_speedup >= 1.0))
        throw std::invalid_argument("RetimeParams: target_speedup must be >= 1");
    if (p.min_speedup > p.target_speedup)
        throw std::invalid_argument("RetimeParams: min_speedup must be <= target_speedup");
}

namespace detail {

inline void check_curve_inputs(std::span<const double> s, std::span<const double> v_hat,
                               const char* who) {
    if (s.size() != v_hat.size())
        throw std::invalid_argument(std::string(who) + ": S and V_hat length mismatch");
    if (s.size() < 2) throw std::invalid_argument(std::string(who) + ": need at least 2 frames");
}

}  // namespace detail

inline double objective(std::span<const double> s, std::span<const double> v_hat,
                        const RetimeParams& p) {
    detail::check_curve_inputs(s, v_hat, "objective");
    validate_retime_params(p);
    const std::size_t tv = s.size();
    double e_speed = 0.0, e_reg = 0.0, e_smooth = 0.0, sum = 0.0;
    for (std::size_t t = 0; t < tv; ++t) {
        const double dmin = s[t] - p.min_speedup;
        const double dtgt = s[t] - p.target_speedup;
        e_speed += (1.0 - v_hat[t]) * dmin * dmin;
        e_reg += v_hat[t] * dtgt * dtgt;
        sum += s[t];
    }
    for (std::size_t t = 0; t + 1 < tv; ++t) {
        const double d = s[t] - s[t + 1];
        e_smooth += d * d;
    }
    const double rate_dev = sum / static_cast<double>(tv) - p.target_speedup;
    return e_speed + p.gamma * e_reg + p.beta * rate_dev * rate_dev + p.alpha * e_smooth;
}

inline std::vector<double> objective_grad(std::span<const double> s,
                                          std::span<const double> v_hat, const RetimeParams& p) {
    detail::check_curve_inputs(s, v_hat, "objective_grad");
    validate_retime_params(p);
    const std::size_t tv = s.size();
    double sum = 0.0;
    for (double v : s) sum += v;
    const double rate_pull =
        2.0 * p.beta / static_cast<double>(tv) * (sum / static_cast<double>(tv) - p.target_speedup);
    std::vector<double> g(tv);
    for (std::size_t t = 0; t < tv; ++t) {
        double smooth = 0.0;
        if (t > 0) smooth += s[t] - s[t - 1];
        if (t + 1 < tv) smooth += s[t] - s[t + 1];
        g[t] = 2.0 * (1.0 - v_hat[t]) * (s[t] - p.min_speedup) +
               2.0 * p.gamma * v_hat[t] * (s[t] - p.target_speedup) + rate_pull +
               2.0 * p.alpha * smooth;
    }
    return g;
}

// ---------------------------------------------------------------------------
// Closed-form solve
// ---------------------------------------------------------------------------

struct SpeedupCurve {
    std::vector<double> speed;  // S*(t), one entry per source frame
    double achieved_mean = 0.0;
};

inline double arithmetic_mean(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

/// Duration-consistent overall speedup: the harmonic mean of S.
inline double harmonic_mean(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) {
        if (x <= 0.0) return std::numeric_limits<double>::quiet_NaN();
        s += 1.0 / x;
    }
    return static_cast<double>(v.size()) / s;
}

namespace detail {

struct RetimeSystem {
    std::vector<double> diag;  // tridiagonal part: 2w + 2*alpha*L
    double off = 0.0;          // constant off-diagonal -2*alpha
    double rank1 = 0.0;        // 2*beta/Tv^2, coefficient of the all-ones dyad
    std::vector<double> rhs;
};

inline RetimeSystem build_system(std::span<const double> v_hat, const RetimeParams& p) {
    const std::size_t tv = v_hat.size();
    RetimeSystem sys;
    sys.diag.resize(tv);
    sys.rhs.resize(tv);
    sys.off = -2.0 * p.alpha;
    sys.rank1 = 2.0 * p.beta / (static_cast<double>(tv) * static_cast<double>(tv));
    const double rate_rhs = 2.0 * p.beta / static_cast<double>(tv) * p.target_speedup;
    for (std::size_t t = 0; t < tv; ++t) {
        const double w = (1.0 - v_hat[t]) + p.gamma * v_hat[t];
        const double degree = (t == 0 || t + 1 == tv) ? 1.0 : 2.0;
        sys.diag[t] = 2.0 * w + 2.0 * p.alpha * degree;
        sys.rhs[t] = 2.0 * ((1.0 - v_hat[t]) * p.min_speedup + p.gamma * v_hat[t] * p.target_speedup) +
                     rate_rhs;
    }
    return sys;
}

[[noreturn]] inline void throw_underdetermined() {
    throw numeric_error(
        "speedup system is underdetermined (singular); every frame is unconstrained "
        "- add a rate weight, a speed weight or a nonzero gamma");
}

/// Thomas algorithm on the tridiagonal part (uniform off-diagonal). Returns
/// false on a non-positive pivot instead of solving through it.
inline bool thomas_solve(const std::vector<double>& diag, double off,
                         const std::vector<double>& rhs, std::vector<double>& x) {
    const std::size_t n = diag.size();
    std::vector<double> c(n, 0.0), d(n, 0.0);
    double scale = 0.0;
    for (double v : diag) scale = std::max(scale, std::abs(v));
    scale = std::max(scale, std::abs(off));
    const double tiny = scale * 1e-14 + 1e-300;

    double pivot = diag[0];
    if (std::abs(pivot) <= tiny) return false;
    c[0] = off / pivot;
    d[0] = rhs[0] / pivot;
    for (std::size_t i = 1; i < n; ++i) {
        pivot = diag[i] - off * c[i - 1];
        if (std::abs(pivot) <= tiny) return false;
        c[i] = off / pivot;
        d[i] = (rhs[i] - off * d[i - 1]) / pivot;
    }
    x.assign(n, 0.0);
    x[n - 1] = d[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) x[i] = d[i] - c[i] * x[i + 1];
    return true;
}

/// O(Tv) path: Thomas on the tridiagonal part, Sherman-Morrison correction
/// for the rank-one rate term.
inline std::vector<double> solve_tridiag_sm(const RetimeSystem& sys) {
    std::vector<double> y, z;
    if (!thomas_solve(sys.diag, sys.off, sys.rhs, y)) throw_underdetermined();
    if (sys.rank1 == 0.0) return y;
    std::vector<double> ones(sys.diag.size(), 1.0);
    if (!thomas_solve(sys.diag, sys.off, ones, z)) throw_underdetermined();
    double sum_y = 0.0, sum_z = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        sum_y += y[i];
        sum_z += z[i];
    }
    const double denom = 1.0 + sys.rank1 * sum_z;
    if (std::abs(denom) <= 1e-14 * (1.0 + std::abs(sys.rank1 * sum_z))) throw_underdetermined();
    const double coef = sys.rank1 * sum_y / denom;
    for (std::size_t i = 0; i < y.size(); ++i) y[i] -= coef * z[i];
    return y;
}

/// Dense Cholesky on the fully assembled matrix; the reference path for
/// moderate Tv and the fallback when the tridiagonal split is singular.
inline std::vector<double> solve_dense(const RetimeSystem& sys) {
    const std::size_t n = sys.diag.size();
    std::vector<double> a(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) a[i * n + j] = sys.rank1;
        a[i * n + i] += sys.diag[i];
        if (i > 0) a[i * n + (i - 1)] += sys.off;
        if (i + 1 < n) a[i * n + (i + 1)] += sys.off;
    }
    double scale = 0.0;
    for (std::size_t i = 0; i < n; ++i) scale = std::max(scale, std::abs(a[i * n + i]));
    const double tiny = scale * 1e-13 + 1e-300;

    // In-place LL^T factorization; A is positive semidefinite by construction,
    // so a non-positive pivot means the system is singular.
    for (std::size_t k = 0; k < n; ++k) {
        double pivot = a[k * n + k];
        for (std::size_t m = 0; m < k; ++m) pivot -= a[k * n + m] * a[k * n + m];
        if (pivot <= tiny) throw_underdetermined();
        const double lkk = std::sqrt(pivot);
        a[k * n + k] = lkk;
        for (std::size_t i = k + 1; i < n; ++i) {
            double v = a[i * n + k];
            for (std::size_t m = 0; m < k; ++m) v -= a[i * n + m] * a[k * n + m];
            a[i * n + k] = v / lkk;
        }
    }
    std::vector<double> x(sys.rhs);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t m = 0; m < i; ++m) x[i] -= a[i * n + m] * x[m];
        x[i] /= a[i * n + i];
    }
    for (std::size_t i = n; i-- > 0;) {
        for (std::size_t m = i + 1; m < n; ++m) x[i] -= a[m * n + i] * x[m];
        x[i] /= a[i * n + i];
    }
    return x;
}

constexpr std::size_t kDenseSolveLimit = 4096;

}  // namespace detail

/// Minimizes the adaptive-speedup energy in closed form. Dense factorization
/// up to 4096 frames, Thomas + Sherman-Morrison beyond that; a singular
/// system raises an "underdetermined" error rather than returning a
/// pseudo-solution.
inline SpeedupCurve solve_speedup(std::span<const double> v_hat, const RetimeParams& p) {
    if (v_hat.size() < 2) throw std::invalid_argument("solve_speedup: need at least 2 frames");
    for (double v : v_hat)
        if (!(v >= 0.0 && v <= 1.0))
            throw std::invalid_argument("solve_speedup: V_hat values must be in [0,1]");
    validate_retime_params(p);
    const detail::RetimeSystem sys = detail::build_system(v_hat, p);
    SpeedupCurve out;
    if (v_hat.size() <= detail::kDenseSolveLimit)
        out.speed = detail::solve_dense(sys);
    else
        out.speed = detail::solve_tridiag_sm(sys);
    out.achieved_mean = arithmetic_mean(out.speed);
    return out;
}

}  // namespace retime
