// Copyright (C) 2026 signanon contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "signanon/flow.hpp"
#include "signanon/rng.hpp"
#include "signanon/tensor.hpp"

namespace signanon {

/// Textured moving-square clip with exact per-frame motion ground truth.
/// gt_flow[i] sits on frame i's grid and pulls frame i-1 content;
/// gt_occlusion[i] marks the disoccluded band where that pull is invalid.
struct SyntheticClip {
    std::vector<ImageGrid> frames;
    std::vector<FlowField> gt_flow;          // [0] is identity, unused
    std::vector<OcclusionMask> gt_occlusion; // [0] all-valid, unused
    int square_size = 0;
    int vx = 0, vy = 0;
};

inline SyntheticClip make_moving_square_clip(int n_frames, int height, int width,
                                             uint64_t seed = 42, int square = 16,
                                             int vx = 2, int vy = 1, int x0 = 8, int y0 = 8) {
    SIGNANON_CHECK(n_frames >= 1, "make_moving_square_clip: need at least one frame");
    SIGNANON_CHECK(x0 + vx * (n_frames - 1) + square <= width &&
                   y0 + vy * (n_frames - 1) + square <= height && x0 >= 0 && y0 >= 0,
                   "make_moving_square_clip: square leaves the frame");
    SyntheticClip clip;
    clip.square_size = square;
    clip.vx = vx;
    clip.vy = vy;

    auto texture = [&](uint64_t tag, int c, int y, int x) {
        uint64_t k = hash_combine(seed, tag);
        k = hash_combine(k, static_cast<uint64_t>(c));
        k = hash_combine(k, static_cast<uint64_t>(y) * 131071 + static_cast<uint64_t>(x));
        DeterministicRng r(k);
        return r.uniform() - 0.5;
    };

    for (int i = 0; i < n_frames; ++i) {
        const int px = x0 + vx * i;
        const int py = y0 + vy * i;
        Grid frame(3, height, width, Space::image);
        for (int c = 0; c < 3; ++c)
            for (int y = 0; y < height; ++y)
                for (int x = 0; x < width; ++x) {
                    const bool in_square =
                        x >= px && x < px + square && y >= py && y < py + square;
                    double v;
                    if (in_square) {
                        v = 0.62 + 0.22 * texture(0xB10C, c, y - py, x - px);
                    } else {
                        v = 0.28 + 0.10 * (static_cast<double>(x) / width +
                                           static_cast<double>(y) / height) +
                            0.22 * texture(0xBAC6, c, y, x);
                    }
                    frame.at(c, y, x) = clamp01(v);
                }
        clip.frames.push_back(std::move(frame));

        FlowField flow = FlowField::zero(height, width);
        OcclusionMask occ = OcclusionMask::zeros(height, width);
        if (i >= 1) {
            const int qx = px - vx; // square position in frame i-1
            const int qy = py - vy;
            for (int y = 0; y < height; ++y)
                for (int x = 0; x < width; ++x) {
                    const bool in_cur = x >= px && x < px + square && y >= py && y < py + square;
                    const bool in_prev = x >= qx && x < qx + square && y >= qy && y < qy + square;
                    if (in_cur) {
                        flow.displacement.at(0, y, x) = -vx;
                        flow.displacement.at(1, y, x) = -vy;
                    } else if (in_prev) {
                        occ.mask.at(0, y, x) = 1.0; // revealed background
                    }
                }
            flow.source_id = i - 1;
            flow.target_id = i;
        }
        clip.gt_flow.push_back(std::move(flow));
        clip.gt_occlusion.push_back(std::move(occ));
    }
    return clip;
}

/// N copies of the same textured frame (zero-motion scene).
inline std::vector<ImageGrid> make_static_clip(int n_frames, int height, int width,
                                               uint64_t seed = 42) {
    const int square = std::max(1, std::min(height, width) / 4);
    const SyntheticClip one =
        make_moving_square_clip(1, height, width, seed, square, 0, 0, width / 4, height / 4);
    return std::vector<ImageGrid>(static_cast<size_t>(n_frames), one.frames.front());
}

} // namespace signanon
