// Copyright (C) 2026 signanon contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "signanon/flow.hpp"
#include "signanon/interfaces.hpp"
#include "signanon/rng.hpp"
#include "signanon/schedule.hpp"
#include "signanon/tensor.hpp"

namespace signanon {

/// Fused reference image plus the combined (anchor AND previous) occlusion
/// mask that gates the stage-2 latent blend.
struct ReferenceFrame {
    ImageGrid image;
    OcclusionMask combined_mask;
};

namespace detail {

// out = mask * own + (1 - mask) * other, mask broadcast over channels.
inline Grid masked_blend(const Grid& own, const Grid& other, const OcclusionMask& mask) {
    check_same_shape(own, other, "masked_blend");
    SIGNANON_CHECK(mask.height() == own.height && mask.width() == own.width,
                   "masked_blend: mask shape (" << mask.height() << ", " << mask.width()
                       << ") does not match content (" << own.height << ", " << own.width << ")");
    Grid out = own;
    for (int c = 0; c < own.channels; ++c)
        for (int y = 0; y < own.height; ++y)
            for (int x = 0; x < own.width; ++x) {
                const double m = mask.at(y, x);
                out.at(c, y, x) = m * own.at(c, y, x) + (1.0 - m) * other.at(c, y, x);
            }
    return out;
}

} // namespace detail

/// Stage-1 fusion on the clean estimate:
/// x0_hat_i <- M * x0_hat_i + (1 - M) * warp(x0_hat_anchor).
/// Applied while the denoising step is still large (early backward process).
inline LatentGrid ofg_stage1(const LatentGrid& x0_hat_i, const LatentGrid& x0_hat_anchor,
                             const FlowField& flow_anchor_to_i, const OcclusionMask& mask_anchor_i) {
    return detail::masked_blend(x0_hat_i, warp(x0_hat_anchor, flow_anchor_to_i), mask_anchor_i);
}

/// Stage-2 reference construction: the previous generated frame fills what it
/// can, the anchor fills the rest, the current decode keeps what neither
/// reference reaches. combined_mask = min(mask_anchor, mask_prev) after
/// binarization: a pixel keeps its own latent only if no reference is valid.
inline ReferenceFrame build_reference_frame(const ImageGrid& decoded_current,
                                            const ImageGrid& generated_prev,
                                            const ImageGrid& generated_anchor,
                                            const FlowField& flow_prev, const FlowField& flow_anchor,
                                            const OcclusionMask& mask_prev,
                                            const OcclusionMask& mask_anchor) {
    check_same_shape(decoded_current, generated_prev, "build_reference_frame");
    check_same_shape(decoded_current, generated_anchor, "build_reference_frame");
    const OcclusionMask mp = binarize(mask_prev);
    const OcclusionMask ma = binarize(mask_anchor);
    const Grid inner = detail::masked_blend(decoded_current, warp(generated_prev, flow_prev), mp);
    ReferenceFrame ref;
    ref.image = detail::masked_blend(inner, warp(generated_anchor, flow_anchor), ma);
    ref.combined_mask = OcclusionMask::zeros(ma.height(), ma.width());
    for (int y = 0; y < ma.height(); ++y)
        for (int x = 0; x < ma.width(); ++x)
            ref.combined_mask.mask.at(0, y, x) = std::min(ma.at(y, x), mp.at(y, x));
    return ref;
}

/// Fidelity-oriented encoding: additive residual correction
/// z <- z + encode(image - decode(z)), repeated up to correction_steps times.
/// A step that would increase the decode error is rejected (the residual
/// iteration can overshoot once the recoverable error is gone), which pins
/// the contract: decode error is never worse than plain encoding.
inline LatentGrid fidelity_encode(const ImageGrid& image, AutoEncoder& encoder, int correction_steps) {
    SIGNANON_CHECK(correction_steps >= 0, "fidelity_encode: correction_steps must be >= 0");
    Grid z = encoder.encode(image);
    if (correction_steps == 0) return z;
    Grid recon = encoder.decode(z);
    double err = mse(recon, image);
    for (int k = 0; k < correction_steps; ++k) {
        Grid residual = image;
        for (size_t i = 0; i < residual.data.size(); ++i) residual.data[i] -= recon.data[i];
        const Grid dz = encoder.encode(residual);
        Grid trial = z;
        for (size_t i = 0; i < trial.data.size(); ++i) trial.data[i] += dz.data[i];
        Grid trial_recon = encoder.decode(trial);
        const double trial_err = mse(trial_recon, image);
        if (trial_err > err) break;
        z = std::move(trial);
        recon = std::move(trial_recon);
        err = trial_err;
    }
    return z;
}

/// Stage-2 latent update: encode the reference with fidelity-oriented
/// encoding, renoise it to step t-1, and blend
/// x_{t-1} <- M * x_{t-1} + (1 - M) * x_ref_{t-1}.
inline LatentGrid ofg_stage2_update(const LatentGrid& x_next, const ReferenceFrame& reference, int t,
                                    const NoiseSchedule& schedule, AutoEncoder& encoder,
                                    uint64_t rng_seed, int correction_steps = 2) {
    const Grid z_ref = fidelity_encode(reference.image, encoder, correction_steps);
    check_same_shape(x_next, z_ref, "ofg_stage2_update");
    const Grid noise = gaussian_grid(z_ref.channels, z_ref.height, z_ref.width, rng_seed, z_ref.space);
    const Grid x_ref = add_noise(z_ref, t - 1, noise, schedule);
    const OcclusionMask mask = resize_mask(reference.combined_mask, x_next.height, x_next.width);
    return detail::masked_blend(x_next, x_ref, mask);
}

/// Adaptive instance normalization: re-standardize each channel of x to the
/// style reference's per-channel mean/std. Used against color drift between
/// frames. Channels with zero variance normalize to 0, i.e. map to the style
/// mean.
inline LatentGrid adain(const LatentGrid& x, const LatentGrid& style_ref) {
    SIGNANON_CHECK(x.channels == style_ref.channels,
                   "adain: channel counts differ, " << x.channels << " vs " << style_ref.channels);
    constexpr double kEps = 1e-12;
    Grid out = x;
    const size_t nx = static_cast<size_t>(x.height) * x.width;
    const size_t ns = static_cast<size_t>(style_ref.height) * style_ref.width;
    for (int c = 0; c < x.channels; ++c) {
        double mx = 0.0, ms = 0.0;
        for (size_t i = 0; i < nx; ++i) mx += x.data[c * nx + i];
        for (size_t i = 0; i < ns; ++i) ms += style_ref.data[c * ns + i];
        mx /= static_cast<double>(nx);
        ms /= static_cast<double>(ns);
        double vx = 0.0, vs = 0.0;
        for (size_t i = 0; i < nx; ++i) {
            const double d = x.data[c * nx + i] - mx;
            vx += d * d;
        }
        for (size_t i = 0; i < ns; ++i) {
            const double d = style_ref.data[c * ns + i] - ms;
            vs += d * d;
        }
        const double sx = std::sqrt(vx / static_cast<double>(nx));
        const double ss = std::sqrt(vs / static_cast<double>(ns));
        for (size_t i = 0; i < nx; ++i) {
            const double norm = sx > kEps ? (x.data[c * nx + i] - mx) / sx : 0.0;
            out.data[c * nx + i] = norm * ss + ms;
        }
    }
    return out;
}

/// Flow + occlusion between two source frames. The flow lives on frame_dst's
/// grid and pulls frame_src content; the occlusion mask marks where that
/// pull is invalid (forward-backward inconsistency or out-of-frame).
inline std::pair<FlowField, OcclusionMask> estimate_flow_and_occlusion(const ImageGrid& frame_src,
                                                                       const ImageGrid& frame_dst,
                                                                       FlowEstimator& estimator,
                                                                       double tau = 1.0) {
    check_same_shape(frame_src, frame_dst, "estimate_flow_and_occlusion");
    const FlowPair pair = estimator.estimate(frame_src, frame_dst);
    OcclusionMask occ = occlusion_from_forward_backward(pair.forward, pair.backward, tau);
    return {pair.forward, std::move(occ)};
}

} // namespace signanon
