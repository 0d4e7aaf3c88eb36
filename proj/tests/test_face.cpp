// Copyright (C) 2026 signanon contributors
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch.hpp>

#include "signanon/backbones.hpp"
#include "signanon/face.hpp"
#include "signanon/rng.hpp"

using namespace signanon;

namespace {

struct ScriptedDetector : FaceDetector {
    std::vector<std::optional<FaceBox>> boxes;
    size_t calls = 0;
    std::optional<FaceBox> detect(const ImageGrid&) override {
        const auto b = boxes[std::min(calls, boxes.size() - 1)];
        ++calls;
        return b;
    }
};

struct ConstMaskParser : FaceParser {
    Grid mask;
    Grid parse(const ImageGrid&) override { return mask; }
};

Grid textured(int c, int h, int w, uint64_t seed) {
    Grid g(c, h, w, Space::image);
    DeterministicRng rng(seed);
    for (double& v : g.data) v = rng.uniform();
    return g;
}

FaceCrop plain_crop(Grid image) {
    FaceCrop crop;
    crop.bbox = {0, 0, static_cast<double>(image.width), static_cast<double>(image.height)};
    crop.image = std::move(image);
    return crop; // identity align transform
}

} // namespace

TEST_CASE("extract_face produces a centered square crop with a round-trippable transform") {
    const Grid frame = textured(3, 32, 32, 1);
    ScriptedDetector det;
    det.boxes = {FaceBox{10, 10, 12, 12}};
    FaceExtractor extractor(16, 1.25);

    const auto crop = extractor.extract(frame, det);
    REQUIRE(crop.has_value());
    CHECK(crop->bbox.w == crop->bbox.h);                      // square
    CHECK(crop->bbox.w == Approx(15.0));                      // 12 * 1.25
    CHECK(crop->bbox.x == Approx(16.0 - 7.5));                // centered on the box center
    CHECK(crop->image.channels == 3);
    CHECK(crop->image.height == 16);

    const Affine2x3 inv = crop->align_transform.inverse();
    for (const auto& [u, v] : {std::pair{0.0, 0.0}, {15.0, 0.0}, {0.0, 15.0}, {15.0, 15.0}}) {
        double fx, fy, bu, bv;
        crop->align_transform.apply(u, v, fx, fy);
        inv.apply(fx, fy, bu, bv);
        CHECK(std::abs(bu - u) < 0.5);
        CHECK(std::abs(bv - v) < 0.5);
    }
}

TEST_CASE("missing detection falls back to the last known box") {
    const Grid frame = textured(3, 32, 32, 2);
    ScriptedDetector det;
    det.boxes = {FaceBox{4, 6, 10, 10}, std::nullopt};
    FaceExtractor extractor(8, 1.25);

    const auto first = extractor.extract(frame, det);
    const auto second = extractor.extract(frame, det);
    REQUIRE(first.has_value());
    REQUIRE(second.has_value());
    CHECK(first->bbox.x == second->bbox.x);
    CHECK(first->bbox.y == second->bbox.y);
    CHECK(first->bbox.w == second->bbox.w);
}

TEST_CASE("box at the image border yields a clamped square crop") {
    const Grid frame = textured(3, 32, 32, 3);
    ScriptedDetector det;
    det.boxes = {FaceBox{28, 28, 8, 8}};
    FaceExtractor extractor(8, 1.25);

    const auto crop = extractor.extract(frame, det);
    REQUIRE(crop.has_value());
    CHECK(crop->bbox.w == crop->bbox.h);
    CHECK(crop->bbox.x + crop->bbox.w <= 32.0 + 1e-9);
    CHECK(crop->bbox.y + crop->bbox.h <= 32.0 + 1e-9);
    CHECK(crop->bbox.x >= 0.0);
}

TEST_CASE("no detection ever gives no crop") {
    const Grid frame = textured(3, 16, 16, 4);
    ScriptedDetector det;
    det.boxes = {std::nullopt};
    FaceExtractor extractor(8);
    CHECK_FALSE(extractor.extract(frame, det).has_value());
    CHECK_FALSE(extractor.has_history());
}

TEST_CASE("face motion estimation on aligned crops") {
    BlockMatchingMotionEstimator estimator(BackboneOptions{{"block_size", "4"}, {"search_radius", "2"}});

    SECTION("identical crops give zero motion and zero occlusion") {
        const FaceCrop src = plain_crop(textured(1, 16, 16, 5));
        const MotionMap map = estimate_face_motion(src, src, estimator);
        for (double v : map.dense_motion.displacement.data) CHECK(v == 0.0);
        REQUIRE(map.occlusion_pyramid.size() == 1);
        for (double v : map.occlusion_pyramid[0].mask.data) CHECK(v == 0.0);
    }

    SECTION("2 px translation is recovered and reproduces the driving crop") {
        const int n = 16;
        const Grid src_img = textured(1, n, n, 6);
        Grid drv_img(1, n, n, Space::image);
        DeterministicRng rng(7);
        for (int y = 0; y < n; ++y)
            for (int x = 0; x < n; ++x)
                drv_img.at(0, y, x) = x < n - 2 ? src_img.at(0, y, x + 2) : rng.uniform();
        const FaceCrop src = plain_crop(src_img);
        const FaceCrop drv = plain_crop(drv_img);
        const MotionMap map = estimate_face_motion(src, drv, estimator);
        // blocks touching the novel revealed columns have no determined match;
        // assert over the fully determined region
        for (int y = 0; y < n; ++y)
            for (int x = 0; x < n - 4; ++x) {
                CHECK(map.dense_motion.dx(y, x) == 2.0);
                CHECK(map.dense_motion.dy(y, x) == 0.0);
            }
        const Grid rebuilt = warp(src.image, map.dense_motion);
        for (int y = 0; y < n; ++y)
            for (int x = 0; x < n - 4; ++x) CHECK(rebuilt.at(0, y, x) == drv.image.at(0, y, x));
    }
}

TEST_CASE("occlusion pyramid halves per level") {
    const auto pyr = occlusion_pyramid(OcclusionMask::zeros(256, 256), 4);
    REQUIRE(pyr.size() == 4);
    CHECK(pyr[0].height() == 256);
    CHECK(pyr[1].height() == 128);
    CHECK(pyr[2].height() == 64);
    CHECK(pyr[3].height() == 32);
}

TEST_CASE("animate_face with the warp generator") {
    WarpFaceGenerator generator;
    const FaceCrop src = plain_crop(textured(3, 16, 16, 8));

    SECTION("zero motion and zero occlusion return the source exactly") {
        MotionMap map{FlowField::zero(16, 16), {OcclusionMask::zeros(16, 16)}};
        const FaceCrop out = animate_face(src, map, generator);
        CHECK(max_abs_diff(out.image, src.image) == 0.0);
    }
    SECTION("translation motion shifts the source per the index oracle") {
        MotionMap map{FlowField::zero(16, 16), {OcclusionMask::zeros(16, 16)}};
        for (int y = 0; y < 16; ++y)
            for (int x = 0; x < 16; ++x) map.dense_motion.displacement.at(0, y, x) = 2.0;
        const FaceCrop out = animate_face(src, map, generator);
        for (int y = 0; y < 16; ++y)
            for (int x = 0; x < 16; ++x)
                CHECK(out.image.at(0, y, x) == src.image.at(0, y, std::min(x + 2, 15)));
    }
    SECTION("full occlusion trusts nothing from the warp") {
        MotionMap map{FlowField::zero(16, 16), {OcclusionMask::ones(16, 16)}};
        for (double& v : map.dense_motion.displacement.data) v = 3.0;
        const FaceCrop out = animate_face(src, map, generator);
        CHECK(max_abs_diff(out.image, src.image) == 0.0);
    }
}

TEST_CASE("composite_with_mask follows the per-pixel blend contract") {
    const Grid frame = textured(3, 16, 16, 9);
    const FaceCrop face = plain_crop(textured(3, 16, 16, 10)); // identity transform, 1:1

    SECTION("zero mask returns the frame bit-identical") {
        const FaceMask mask{Grid(1, 16, 16, Space::image)};
        CHECK(max_abs_diff(composite_with_mask(frame, face, mask), frame) == 0.0);
    }
    SECTION("unit mask returns the face exactly") {
        const FaceMask mask{Grid::constant(1, 16, 16, 1.0)};
        CHECK(max_abs_diff(composite_with_mask(frame, face, mask), face.image) == 0.0);
    }
    SECTION("checkerboard mask matches the per-pixel select oracle") {
        FaceMask mask{Grid(1, 16, 16, Space::image)};
        for (int y = 0; y < 16; ++y)
            for (int x = 0; x < 16; ++x) mask.mask.at(0, y, x) = (x + y) % 2;
        const Grid out = composite_with_mask(frame, face, mask);
        for (int c = 0; c < 3; ++c)
            for (int y = 0; y < 16; ++y)
                for (int x = 0; x < 16; ++x)
                    CHECK(out.at(c, y, x) ==
                          ((x + y) % 2 ? face.image.at(c, y, x) : frame.at(c, y, x)));
    }
    SECTION("convex combination for soft masks") {
        FaceMask mask{Grid(1, 16, 16, Space::image)};
        DeterministicRng rng(11);
        for (double& v : mask.mask.data) v = rng.uniform();
        const Grid out = composite_with_mask(frame, face, mask);
        for (int c = 0; c < 3; ++c)
            for (int y = 0; y < 16; ++y)
                for (int x = 0; x < 16; ++x) {
                    const double lo = std::min(frame.at(c, y, x), face.image.at(c, y, x));
                    const double hi = std::max(frame.at(c, y, x), face.image.at(c, y, x));
                    CHECK(out.at(c, y, x) >= lo - 1e-12);
                    CHECK(out.at(c, y, x) <= hi + 1e-12);
                }
    }
}

TEST_CASE("composite_face confines changes to the mapped crop region") {
    const Grid frame = textured(3, 32, 32, 12);
    FaceCrop face = plain_crop(textured(3, 16, 16, 13));
    face.bbox = {8, 8, 16, 16};
    face.align_transform.m[2] = 8.0; // 1:1 paste at (8, 8)
    face.align_transform.m[5] = 8.0;
    EllipseFaceParser parser;

    const CompositeResult res = composite_face(frame, face, parser, 3);
    bool saw_soft = false;
    for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 32; ++x) {
            const double m = res.mask.mask.at(0, y, x);
            if (x < 7 || x > 24 || y < 7 || y > 24) CHECK(m == 0.0);
            if (m > 0.0 && m < 1.0) saw_soft = true;
            if (m == 0.0)
                for (int c = 0; c < 3; ++c) CHECK(res.frame.at(c, y, x) == frame.at(c, y, x));
        }
    CHECK(saw_soft); // the 3 px feather band exists

    const CompositeResult hard = composite_face(frame, face, parser, 0);
    for (double m : hard.mask.mask.data) CHECK((m == 0.0 || m == 1.0));
}

TEST_CASE("driving == source end to end differs from the frame nowhere at 1:1 scale") {
    const Grid frame = textured(3, 32, 32, 14);
    ScriptedDetector det;
    det.boxes = {FaceBox{8, 8, 16, 16}};
    FaceExtractor extractor(16, 1.0); // side 16 at crop res 16: exact 1:1 sampling
    const auto source = extractor.extract(frame, det);
    REQUIRE(source.has_value());

    BlockMatchingMotionEstimator motion_est(BackboneOptions{{"block_size", "4"}});
    WarpFaceGenerator generator;
    EllipseFaceParser parser;

    const MotionMap motion = estimate_face_motion(*source, *source, motion_est);
    const FaceCrop animated = animate_face(*source, motion, generator);
    CHECK(max_abs_diff(animated.image, source->image) == 0.0);

    const CompositeResult res = composite_face(frame, animated, parser, 3);
    // pasted content equals the underlying frame, so even the feather band is exact
    CHECK(max_abs_diff(res.frame, frame) < 1e-12);
    for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 32; ++x)
            if (res.mask.mask.at(0, y, x) == 0.0)
                for (int c = 0; c < 3; ++c) CHECK(res.frame.at(c, y, x) == frame.at(c, y, x));
}
