// Copyright (C) 2026 signanon contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "signanon/flow.hpp"
#include "signanon/tensor.hpp"

namespace signanon {

/// Row-major 2x3 affine: (u, v) crop coordinates -> (x, y) frame coordinates.
struct Affine2x3 {
    double m[6] = {1, 0, 0, 0, 1, 0}; // [a b tx; c d ty]

    void apply(double u, double v, double& x, double& y) const {
        x = m[0] * u + m[1] * v + m[2];
        y = m[3] * u + m[4] * v + m[5];
    }

    Affine2x3 inverse() const {
        const double det = m[0] * m[4] - m[1] * m[3];
        SIGNANON_CHECK(std::abs(det) > 1e-12, "Affine2x3: singular transform");
        Affine2x3 inv;
        inv.m[0] = m[4] / det;
        inv.m[1] = -m[1] / det;
        inv.m[3] = -m[3] / det;
        inv.m[4] = m[0] / det;
        inv.m[2] = -(inv.m[0] * m[2] + inv.m[1] * m[5]);
        inv.m[5] = -(inv.m[3] * m[2] + inv.m[4] * m[5]);
        return inv;
    }
};

/// Detector output in frame pixels.
struct FaceBox {
    double x = 0, y = 0, w = 0, h = 0;
};

/// Aligned square face crop plus the transform that pastes it back.
struct FaceCrop {
    ImageGrid image;          // (c, res, res)
    FaceBox bbox;             // square region in source-frame pixels (w == h)
    Affine2x3 align_transform; // crop coords -> frame coords
};

/// Dense motion at crop resolution plus multi-resolution occlusion maps
/// (levels halve in resolution, finest first).
struct MotionMap {
    FlowField dense_motion;
    std::vector<OcclusionMask> occlusion_pyramid;
};

/// Soft blend mask at frame resolution for face compositing.
struct FaceMask {
    Grid mask; // (1, H, W) in [0, 1]
};

/// Halving-resolution pyramid built by area averaging, finest level first.
inline std::vector<OcclusionMask> occlusion_pyramid(const OcclusionMask& finest, int levels) {
    SIGNANON_CHECK(levels >= 1, "occlusion_pyramid: need at least one level");
    std::vector<OcclusionMask> pyr;
    pyr.push_back(finest);
    for (int l = 1; l < levels; ++l) {
        const OcclusionMask& prev = pyr.back();
        SIGNANON_CHECK(prev.height() >= 2 && prev.width() >= 2,
                       "occlusion_pyramid: level " << l << " would drop below 1x1");
        pyr.push_back({pool_area(prev.mask, prev.height() / 2, prev.width() / 2)});
    }
    return pyr;
}

} // namespace signanon
