// Copyright (C) 2026 signanon contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>

#include "signanon/tensor.hpp"

namespace signanon {

/// Per-pixel displacement (2, h, w): channel 0 = dx, channel 1 = dy.
/// Defined on the TARGET frame's grid; content[target p] is pulled from
/// source position p + displacement(p) (backward warping).
struct FlowField {
    Grid displacement;
    int source_id = -1;
    int target_id = -1;

    static FlowField zero(int h, int w) { return {Grid(2, h, w), -1, -1}; }

    int height() const { return displacement.height; }
    int width() const { return displacement.width; }

    double dx(int y, int x) const { return displacement.at(0, y, x); }
    double dy(int y, int x) const { return displacement.at(1, y, x); }
};

/// (1, h, w) validity map, entries in [0, 1]; 1 = occluded / invalid warp
/// (keep the frame's own content), 0 = valid (trust the warped reference).
struct OcclusionMask {
    Grid mask;

    static OcclusionMask zeros(int h, int w) { return {Grid(1, h, w)}; }
    static OcclusionMask ones(int h, int w) { return {Grid::constant(1, h, w, 1.0)}; }

    int height() const { return mask.height; }
    int width() const { return mask.width; }
    double at(int y, int x) const { return mask.at(0, y, x); }
};

/// Backward warp with bilinear sampling; out-of-bounds samples clamp to edge.
inline Grid warp(const Grid& content, const FlowField& flow) {
    SIGNANON_CHECK(content.height == flow.height() && content.width == flow.width(),
                   "warp: flow shape (" << flow.height() << ", " << flow.width()
                       << ") does not match content (" << content.height << ", " << content.width << ")");
    Grid out = content;
    for (int c = 0; c < content.channels; ++c)
        for (int y = 0; y < content.height; ++y)
            for (int x = 0; x < content.width; ++x)
                out.at(c, y, x) = bilinear_sample(content, c, x + flow.dx(y, x), y + flow.dy(y, x));
    return out;
}

/// Resize a displacement field, rescaling the values by the resolution ratio
/// (flows are estimated at image resolution and reused for latent warps).
inline FlowField resize_flow(const FlowField& flow, int out_h, int out_w) {
    if (out_h == flow.height() && out_w == flow.width()) return flow;
    FlowField out{resize_bilinear(flow.displacement, out_h, out_w), flow.source_id, flow.target_id};
    const double sx = static_cast<double>(out_w) / flow.width();
    const double sy = static_cast<double>(out_h) / flow.height();
    for (int y = 0; y < out_h; ++y)
        for (int x = 0; x < out_w; ++x) {
            out.displacement.at(0, y, x) *= sx;
            out.displacement.at(1, y, x) *= sy;
        }
    return out;
}

inline OcclusionMask binarize(const OcclusionMask& m, double threshold = 0.5) {
    OcclusionMask out = m;
    for (double& v : out.mask.data) v = v >= threshold ? 1.0 : 0.0;
    return out;
}

/// Bilinear resize followed by re-binarization at 0.5.
inline OcclusionMask resize_mask(const OcclusionMask& m, int out_h, int out_w) {
    if (out_h == m.height() && out_w == m.width()) return binarize(m);
    return binarize({resize_bilinear(m.mask, out_h, out_w)});
}

/// Forward-backward consistency occlusion mask on the target grid:
/// occluded where |fwd(p) + bwd(p + fwd(p))| > tau, or where p + fwd(p)
/// falls outside the source frame (disocclusion has no valid source).
inline OcclusionMask occlusion_from_forward_backward(const FlowField& fwd, const FlowField& bwd,
                                                     double tau = 1.0) {
    SIGNANON_CHECK(fwd.height() == bwd.height() && fwd.width() == bwd.width(),
                   "occlusion_from_forward_backward: flow shapes differ");
    const int h = fwd.height();
    const int w = fwd.width();
    OcclusionMask out = OcclusionMask::zeros(h, w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double fx = fwd.dx(y, x);
            const double fy = fwd.dy(y, x);
            const double sx = x + fx;
            const double sy = y + fy;
            if (sx < 0.0 || sx > w - 1 || sy < 0.0 || sy > h - 1) {
                out.mask.at(0, y, x) = 1.0;
                continue;
            }
            const double bx = bilinear_sample(bwd.displacement, 0, sx, sy);
            const double by = bilinear_sample(bwd.displacement, 1, sx, sy);
            const double err = std::sqrt((fx + bx) * (fx + bx) + (fy + by) * (fy + by));
            out.mask.at(0, y, x) = err > tau ? 1.0 : 0.0;
        }
    return out;
}

} // namespace signanon
