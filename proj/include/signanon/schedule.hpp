// Copyright (C) 2026 signanon contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <vector>

#include "signanon/rng.hpp"
#include "signanon/tensor.hpp"

namespace signanon {

enum class ScheduleKind { linear_beta, cosine };

struct ScheduleParams {
    double beta_start = 1e-4;
    double beta_end = 0.02;
    double cosine_offset = 0.008;
};

/// Per-step noise levels: alphas[t-1] = alpha_t, alpha_bars[t-1] = prod(alpha_1..t).
/// Step indices are 1-based like the sampling loop; alpha_bar(0) == 1 by
/// convention so the final DDIM step returns the clean estimate exactly.
struct NoiseSchedule {
    int num_steps = 0; // T
    std::vector<double> alphas;
    std::vector<double> alpha_bars;

    double alpha(int t) const {
        SIGNANON_CHECK(t >= 1 && t <= num_steps, "NoiseSchedule: step " << t << " out of [1, " << num_steps << "]");
        return alphas[t - 1];
    }

    double alpha_bar(int t) const {
        if (t == 0) return 1.0;
        SIGNANON_CHECK(t >= 1 && t <= num_steps, "NoiseSchedule: step " << t << " out of [0, " << num_steps << "]");
        return alpha_bars[t - 1];
    }

    static NoiseSchedule from_alphas(std::vector<double> alphas) {
        SIGNANON_CHECK(!alphas.empty(), "NoiseSchedule: need at least one step");
        NoiseSchedule s;
        s.num_steps = static_cast<int>(alphas.size());
        s.alpha_bars.reserve(alphas.size());
        double cum = 1.0;
        for (size_t i = 0; i < alphas.size(); ++i) {
            SIGNANON_CHECK(alphas[i] > 0.0 && alphas[i] <= 1.0,
                           "NoiseSchedule: alpha_" << (i + 1) << " = " << alphas[i] << " outside (0, 1]");
            cum *= alphas[i];
            s.alpha_bars.push_back(cum);
        }
        s.alphas = std::move(alphas);
        return s;
    }
};

inline NoiseSchedule make_schedule(int num_steps, ScheduleKind kind, const ScheduleParams& params = {}) {
    SIGNANON_CHECK(num_steps >= 1, "make_schedule: num_steps must be >= 1, got " << num_steps);
    std::vector<double> alphas(num_steps);
    switch (kind) {
        case ScheduleKind::linear_beta: {
            SIGNANON_CHECK(params.beta_start >= 0.0 && params.beta_start < 1.0 &&
                           params.beta_end >= 0.0 && params.beta_end < 1.0,
                           "make_schedule: betas must lie in [0, 1), got ["
                               << params.beta_start << ", " << params.beta_end << "]");
            for (int t = 1; t <= num_steps; ++t) {
                const double frac = num_steps == 1 ? 0.0 : static_cast<double>(t - 1) / (num_steps - 1);
                alphas[t - 1] = 1.0 - (params.beta_start + (params.beta_end - params.beta_start) * frac);
            }
            break;
        }
        case ScheduleKind::cosine: {
            const double s = params.cosine_offset;
            SIGNANON_CHECK(s >= 0.0, "make_schedule: cosine offset must be >= 0, got " << s);
            auto f = [&](double t) {
                const double v = std::cos((t / num_steps + s) / (1.0 + s) * 3.14159265358979323846 / 2.0);
                return v * v;
            };
            const double f0 = f(0.0);
            double prev_bar = 1.0;
            for (int t = 1; t <= num_steps; ++t) {
                const double bar = f(static_cast<double>(t)) / f0;
                // clip beta at 0.999; alpha_bars stays the exact running product
                alphas[t - 1] = std::max(bar / prev_bar, 1.0 - 0.999);
                prev_bar = prev_bar * alphas[t - 1];
            }
            break;
        }
    }
    return NoiseSchedule::from_alphas(std::move(alphas));
}

/// Closed-form forward process: sqrt(abar_t) x0 + sqrt(1 - abar_t) noise.
inline LatentGrid add_noise(const LatentGrid& x0, int t, const LatentGrid& noise,
                            const NoiseSchedule& schedule) {
    check_same_shape(x0, noise, "add_noise");
    const double abar = schedule.alpha_bar(t);
    const double a = std::sqrt(abar);
    const double b = std::sqrt(1.0 - abar);
    Grid out = x0;
    for (size_t i = 0; i < out.data.size(); ++i) out.data[i] = a * x0.data[i] + b * noise.data[i];
    return out;
}

/// Clean-output estimate at step t: (x_t - sqrt(1 - abar_t) eps) / sqrt(abar_t).
inline LatentGrid estimate_x0(const LatentGrid& x_t, const LatentGrid& eps_pred, int t,
                              const NoiseSchedule& schedule) {
    check_same_shape(x_t, eps_pred, "estimate_x0");
    const double abar = schedule.alpha_bar(t);
    SIGNANON_CHECK(abar > 0.0, "estimate_x0: alpha_bar(" << t << ") must be positive");
    const double inv_a = 1.0 / std::sqrt(abar);
    const double b = std::sqrt(1.0 - abar);
    Grid out = x_t;
    for (size_t i = 0; i < out.data.size(); ++i)
        out.data[i] = (x_t.data[i] - b * eps_pred.data[i]) * inv_a;
    return out;
}

/// Deterministic (eta = 0) DDIM update from an already-known clean estimate.
/// Split out so the pipeline can fuse/correct x0_hat before re-sampling.
inline LatentGrid ddim_step_from_x0(const LatentGrid& x0_hat, const LatentGrid& eps_pred, int t,
                                    const NoiseSchedule& schedule) {
    check_same_shape(x0_hat, eps_pred, "ddim_step_from_x0");
    SIGNANON_CHECK(t >= 1 && t <= schedule.num_steps,
                   "ddim_step_from_x0: step " << t << " out of [1, " << schedule.num_steps << "]");
    const double abar_prev = schedule.alpha_bar(t - 1);
    const double a = std::sqrt(abar_prev);
    const double b = std::sqrt(1.0 - abar_prev);
    Grid out = x0_hat;
    for (size_t i = 0; i < out.data.size(); ++i)
        out.data[i] = a * x0_hat.data[i] + b * eps_pred.data[i];
    return out;
}

inline LatentGrid ddim_step(const LatentGrid& x_t, const LatentGrid& eps_pred, int t,
                            const NoiseSchedule& schedule) {
    return ddim_step_from_x0(estimate_x0(x_t, eps_pred, t, schedule), eps_pred, t, schedule);
}

struct SdeditInit {
    LatentGrid latent;
    int start_step = 0;
};

/// Image-to-image style start: noise the encoded frame up to
/// round(strength * T) (round-half-up) instead of starting from pure noise.
inline SdeditInit sdedit_init(const LatentGrid& x0, double strength, const NoiseSchedule& schedule,
                              uint64_t rng_seed) {
    SIGNANON_CHECK(strength > 0.0 && strength <= 1.0,
                   "sdedit_init: strength must lie in (0, 1], got " << strength);
    const int start_step = static_cast<int>(std::floor(strength * schedule.num_steps + 0.5));
    if (start_step == 0) return {x0, 0};
    const Grid noise = gaussian_grid(x0.channels, x0.height, x0.width, rng_seed, x0.space);
    return {add_noise(x0, start_step, noise, schedule), start_step};
}

} // namespace signanon
