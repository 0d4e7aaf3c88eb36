// Copyright (C) 2026 signanon contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>

#include "signanon/face_types.hpp"
#include "signanon/interfaces.hpp"

namespace signanon {

/// Square face cropping with a margin around the detected box and a
/// last-known-box fallback for frames where detection drops out.
class FaceExtractor {
public:
    explicit FaceExtractor(int crop_resolution = 256, double margin = 1.25)
        : res_(crop_resolution), margin_(margin) {
        SIGNANON_CHECK(crop_resolution >= 2, "FaceExtractor: crop resolution must be >= 2");
        SIGNANON_CHECK(margin >= 1.0, "FaceExtractor: margin must be >= 1");
    }

    /// nullopt only when the detector has never fired on this stream.
    std::optional<FaceCrop> extract(const ImageGrid& frame, FaceDetector& detector) {
        std::optional<FaceBox> box = detector.detect(frame);
        if (!box) box = last_box_;
        if (!box) return std::nullopt;
        last_box_ = box;
        return crop_from_box(frame, *box);
    }

    FaceCrop crop_from_box(const ImageGrid& frame, const FaceBox& box) const {
        const double fw = frame.width;
        const double fh = frame.height;
        const double cx = box.x + box.w / 2.0;
        const double cy = box.y + box.h / 2.0;
        double side = std::max(box.w, box.h) * margin_;
        side = std::min({side, fw, fh});
        SIGNANON_CHECK(side > 0.0, "FaceExtractor: degenerate face box");
        const double x0 = std::clamp(cx - side / 2.0, 0.0, fw - side);
        const double y0 = std::clamp(cy - side / 2.0, 0.0, fh - side);

        FaceCrop crop;
        crop.bbox = {x0, y0, side, side};
        const double scale = side / res_;
        crop.align_transform.m[0] = scale;
        crop.align_transform.m[1] = 0.0;
        crop.align_transform.m[2] = x0 + 0.5 * scale - 0.5;
        crop.align_transform.m[3] = 0.0;
        crop.align_transform.m[4] = scale;
        crop.align_transform.m[5] = y0 + 0.5 * scale - 0.5;

        crop.image = Grid(frame.channels, res_, res_, Space::image);
        for (int c = 0; c < frame.channels; ++c)
            for (int v = 0; v < res_; ++v)
                for (int u = 0; u < res_; ++u) {
                    double fx, fy;
                    crop.align_transform.apply(u, v, fx, fy);
                    crop.image.at(c, v, u) = bilinear_sample(frame, c, fx, fy);
                }
        return crop;
    }

    int crop_resolution() const { return res_; }
    bool has_history() const { return last_box_.has_value(); }
    void reset() { last_box_.reset(); }

private:
    int res_;
    double margin_;
    std::optional<FaceBox> last_box_;
};

/// Dense motion + occlusion pyramid between aligned crops.
inline MotionMap estimate_face_motion(const FaceCrop& source, const FaceCrop& driving,
                                      MotionEstimator& estimator) {
    check_same_shape(source.image, driving.image, "estimate_face_motion");
    return estimator.estimate(source, driving);
}

/// Animated crop with the source identity and the driving motion. The
/// returned crop keeps the source geometry; the caller rebinds the transform
/// to the paste location.
inline FaceCrop animate_face(const FaceCrop& source, const MotionMap& motion,
                             FaceGenerator& generator) {
    FaceCrop out = source;
    out.image = generator.generate(source, motion);
    SIGNANON_CHECK(out.image.same_shape(source.image),
                   "animate_face: generator must return a crop at source resolution");
    return out;
}

namespace detail {

// Linear edge ramp over feather_px: chamfer distance to the nearest zero
// pixel (the crop border counts as zero), clamped to [0, 1].
inline Grid feather_mask(const Grid& mask, int feather_px) {
    SIGNANON_CHECK(mask.channels == 1, "feather_mask: expected single-channel mask");
    if (feather_px <= 0) return mask;
    const int h = mask.height;
    const int w = mask.width;
    const double inf = 1e18;
    Grid dist(1, h, w, Space::image);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            if (mask.at(0, y, x) < 0.5) {
                dist.at(0, y, x) = 0.0;
            } else {
                // border pixels are one step from the implicit outside zero
                const int to_border = 1 + std::min(std::min(y, h - 1 - y), std::min(x, w - 1 - x));
                dist.at(0, y, x) = std::min(inf, static_cast<double>(to_border));
            }
        }
    auto relax = [&](int y, int x, int ny, int nx, double step) {
        if (ny < 0 || ny >= h || nx < 0 || nx >= w) return;
        dist.at(0, y, x) = std::min(dist.at(0, y, x), dist.at(0, ny, nx) + step);
    };
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            relax(y, x, y, x - 1, 1.0);
            relax(y, x, y - 1, x, 1.0);
            relax(y, x, y - 1, x - 1, 1.4);
            relax(y, x, y - 1, x + 1, 1.4);
        }
    for (int y = h - 1; y >= 0; --y)
        for (int x = w - 1; x >= 0; --x) {
            relax(y, x, y, x + 1, 1.0);
            relax(y, x, y + 1, x, 1.0);
            relax(y, x, y + 1, x + 1, 1.4);
            relax(y, x, y + 1, x - 1, 1.4);
        }
    Grid out = mask;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            out.at(0, y, x) = mask.at(0, y, x) * std::min(1.0, dist.at(0, y, x) / feather_px);
    return out;
}

// Bilinear sample treating everything outside the grid as zero.
inline double bilinear_sample_zeropad(const Grid& g, int c, double fx, double fy) {
    const int x0 = static_cast<int>(std::floor(fx));
    const int y0 = static_cast<int>(std::floor(fy));
    const double wx = fx - x0;
    const double wy = fy - y0;
    auto px = [&](int y, int x) -> double {
        if (y < 0 || y >= g.height || x < 0 || x >= g.width) return 0.0;
        return g.at(c, y, x);
    };
    const double top = px(y0, x0) * (1.0 - wx) + px(y0, x0 + 1) * wx;
    const double bot = px(y0 + 1, x0) * (1.0 - wx) + px(y0 + 1, x0 + 1) * wx;
    return top * (1.0 - wy) + bot * wy;
}

} // namespace detail

/// Compositing blend core: out = M * face + (1 - M) * frame with the mask
/// already at frame resolution. Face pixels are looked up through the crop's
/// align transform. Pixels with M == 0 are returned bit-identical.
inline ImageGrid composite_with_mask(const ImageGrid& frame, const FaceCrop& enhanced,
                                     const FaceMask& mask) {
    SIGNANON_CHECK(mask.mask.channels == 1 && mask.mask.same_spatial(frame),
                   "composite_with_mask: mask must be (1, H, W) at frame resolution");
    const Affine2x3 inv = enhanced.align_transform.inverse();
    Grid out = frame;
    for (int y = 0; y < frame.height; ++y)
        for (int x = 0; x < frame.width; ++x) {
            const double m = mask.mask.at(0, y, x);
            if (m == 0.0) continue;
            double u, v;
            inv.apply(x, y, u, v);
            for (int c = 0; c < frame.channels; ++c) {
                const double f = bilinear_sample(enhanced.image, c, u, v);
                out.at(c, y, x) = m * f + (1.0 - m) * frame.at(c, y, x);
            }
        }
    return out;
}

struct CompositeResult {
    ImageGrid frame;
    FaceMask mask; // frame-resolution blend mask actually applied
};

/// Full compositing stage: parse the enhanced crop, feather the mask edge,
/// warp mask and face into frame coordinates, blend.
inline CompositeResult composite_face(const ImageGrid& frame, const FaceCrop& enhanced,
                                      FaceParser& parser, int feather_px = 3) {
    Grid crop_mask = parser.parse(enhanced.image);
    SIGNANON_CHECK(crop_mask.channels == 1 && crop_mask.same_spatial(enhanced.image),
                   "composite_face: parser must return (1, res, res) mask");
    for (double m : crop_mask.data)
        SIGNANON_CHECK(m >= 0.0 && m <= 1.0, "composite_face: parser mask outside [0, 1]");
    crop_mask = detail::feather_mask(crop_mask, feather_px);

    const Affine2x3 inv = enhanced.align_transform.inverse();
    FaceMask frame_mask{Grid(1, frame.height, frame.width, Space::image)};
    for (int y = 0; y < frame.height; ++y)
        for (int x = 0; x < frame.width; ++x) {
            double u, v;
            inv.apply(x, y, u, v);
            if (u <= -1.0 || u >= crop_mask.width || v <= -1.0 || v >= crop_mask.height) continue;
            frame_mask.mask.at(0, y, x) = clamp01(detail::bilinear_sample_zeropad(crop_mask, 0, u, v));
        }
    return {composite_with_mask(frame, enhanced, frame_mask), std::move(frame_mask)};
}

} // namespace signanon
