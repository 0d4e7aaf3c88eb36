// Copyright (C) 2026 signanon contributors
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch.hpp>

#include "signanon/pipeline.hpp"
#include "signanon/synthetic.hpp"

using namespace signanon;

namespace {

struct CountingFlowEstimator : FlowEstimator {
    BlockMatchingFlowEstimator inner;
    int calls = 0;
    FlowPair estimate(const ImageGrid& src, const ImageGrid& dst) override {
        ++calls;
        return inner.estimate(src, dst);
    }
};

PipelineConfig small_config() {
    PipelineConfig config;
    config.prompt = "a cg character making gestures";
    config.seed = 7;
    config.steps = 10;
    config.face_crop_resolution = 16;
    return config;
}

FrameSequence to_sequence(std::vector<ImageGrid> frames, double fps = 24.0) {
    FrameSequence seq;
    seq.frames = std::move(frames);
    seq.fps = fps;
    return seq;
}

} // namespace

TEST_CASE("select_anchor") {
    FrameSequence seq = to_sequence(std::vector<ImageGrid>(8, Grid(1, 4, 4)));
    PipelineConfig config;
    CHECK(select_anchor(seq, config) == 4); // floor(8 / 2)

    seq.frames.resize(1);
    CHECK(select_anchor(seq, config) == 0);

    seq.frames.resize(8);
    config.anchor_index = 3;
    CHECK(select_anchor(seq, config) == 3);

    config.anchor_index = 8;
    CHECK_THROWS_AS(select_anchor(seq, config), std::invalid_argument);
}

TEST_CASE("config validation") {
    PipelineConfig config = small_config();
    config.strength = 0.0;
    CHECK_THROWS_AS(config.validate(), std::invalid_argument);

    config = small_config();
    config.stage1 = {0.5, 1.2};
    CHECK_THROWS_AS(config.validate(), std::invalid_argument);

    config = small_config();
    config.steps = 0;
    CHECK_THROWS_AS(config.validate(), std::invalid_argument);

    CHECK_NOTHROW(small_config().validate());
}

TEST_CASE("single-frame video reduces to single-image generation") {
    const SyntheticClip clip = make_moving_square_clip(1, 32, 32);
    FrameSequence input = to_sequence(clip.frames);

    PipelineConfig config = small_config();
    BackboneSet backbones = make_backbones(config);
    auto counting = std::make_shared<CountingFlowEstimator>();
    backbones.flow_estimator = counting;

    const RunResult run = anonymize_video(input, config, backbones);
    CHECK(run.output.frames.size() == 1);
    CHECK(counting->calls == 0); // fusion ops never invoked: no previous frame
}

TEST_CASE("static scene yields pairwise-equal outputs") {
    FrameSequence input = to_sequence(make_static_clip(6, 32, 32));
    PipelineConfig config = small_config();
    BackboneSet backbones = make_backbones(config);

    const RunResult run = anonymize_video(input, config, backbones);
    REQUIRE(run.output.frames.size() == 6);
    for (size_t i = 1; i < run.output.frames.size(); ++i)
        CHECK(max_abs_diff(run.output.frames[i], run.output.frames[0]) < 1e-5);
}

TEST_CASE("oracle denoiser + identity codec + zero motion reproduces the input everywhere") {
    FrameSequence input = to_sequence(make_static_clip(4, 32, 32));
    PipelineConfig config = small_config();
    config.face_enhance = false;
    BackboneSet backbones = make_backbones(config);

    // the oracle's recorded target is the shared latent of every input frame
    const NoiseSchedule schedule = make_schedule(config.steps, config.schedule_kind, config.schedule_params);
    Grid target = input.frames[0];
    target.space = Space::latent;
    backbones.denoiser = std::make_shared<OracleDenoiser>(target, schedule);

    const RunResult run = anonymize_video(input, config, backbones);
    for (size_t i = 0; i < run.output.frames.size(); ++i) {
        CHECK(max_abs_diff(run.output.frames[i], input.frames[i]) < 1e-5);
        if (i > 0) CHECK(max_abs_diff(run.output.frames[i], run.output.frames[0]) < 1e-5);
    }
}

TEST_CASE("identical runs are bit-identical") {
    const SyntheticClip clip = make_moving_square_clip(5, 32, 32, 43, 8, 2, 1, 4, 4);
    FrameSequence input = to_sequence(clip.frames);
    PipelineConfig config = small_config();

    BackboneSet b1 = make_backbones(config);
    BackboneSet b2 = make_backbones(config);
    const RunResult r1 = anonymize_video(input, config, b1);
    const RunResult r2 = anonymize_video(input, config, b2);

    REQUIRE(r1.output.frames.size() == r2.output.frames.size());
    for (size_t i = 0; i < r1.output.frames.size(); ++i)
        CHECK(r1.output.frames[i].data == r2.output.frames[i].data);
    for (size_t i = 0; i < r1.output.manifest.size(); ++i) {
        CHECK(r1.output.manifest[i].filename == r2.output.manifest[i].filename);
        CHECK(r1.output.manifest[i].source_checksum == r2.output.manifest[i].source_checksum);
    }

    PipelineConfig other = config;
    other.seed = 8;
    BackboneSet b3 = make_backbones(other);
    const RunResult r3 = anonymize_video(input, other, b3);
    CHECK(max_abs_diff(r1.output.frames[0], r3.output.frames[0]) > 0.0);
}

TEST_CASE("output preserves frame count, resolution and fps") {
    const SyntheticClip clip = make_moving_square_clip(4, 32, 48, 44, 8, 2, 1, 4, 4);
    FrameSequence input = to_sequence(clip.frames, 29.97);
    PipelineConfig config = small_config();
    config.face_enhance = false;
    BackboneSet backbones = make_backbones(config);

    const RunResult run = anonymize_video(input, config, backbones);
    CHECK(run.output.frames.size() == 4);
    CHECK(run.output.fps == 29.97);
    for (const auto& f : run.output.frames) {
        CHECK(f.height == 32);
        CHECK(f.width == 48);
        CHECK(f.channels == 3);
    }
    CHECK(run.output.manifest.size() == 4);
    CHECK(run.output.manifest[2].index == 2);
    CHECK(run.output.manifest[2].filename == "frame_00002.png");
}

TEST_CASE("frame cap truncates with a warning") {
    FrameSequence input = to_sequence(make_static_clip(6, 16, 16));
    PipelineConfig config = small_config();
    config.max_frames = 4;
    config.steps = 4;
    BackboneSet backbones = make_backbones(config);

    const RunResult run = anonymize_video(input, config, backbones);
    CHECK(run.output.frames.size() == 4);
    REQUIRE_FALSE(run.report.warnings.empty());
    CHECK(run.report.warnings[0].find("truncated") != std::string::npos);
}

TEST_CASE("face toggle changes pixels only inside the face-mask support") {
    const SyntheticClip clip = make_moving_square_clip(4, 32, 32, 45, 8, 2, 1, 4, 4);
    FrameSequence input = to_sequence(clip.frames);

    PipelineConfig with_face = small_config();
    BackboneSet b1 = make_backbones(with_face);
    const RunResult on = anonymize_video(input, with_face, b1);

    PipelineConfig without_face = with_face;
    without_face.face_enhance = false;
    BackboneSet b2 = make_backbones(without_face);
    const RunResult off = anonymize_video(input, without_face, b2);

    bool any_change = false;
    for (size_t i = 0; i < on.output.frames.size(); ++i) {
        REQUIRE(on.face_masks[i].channels == 1);
        for (int y = 0; y < 32; ++y)
            for (int x = 0; x < 32; ++x) {
                double diff = 0.0;
                for (int c = 0; c < 3; ++c)
                    diff = std::max(diff, std::abs(on.output.frames[i].at(c, y, x) -
                                                   off.output.frames[i].at(c, y, x)));
                if (on.face_masks[i].at(0, y, x) == 0.0)
                    CHECK(diff == 0.0);
                else if (diff > 0.0)
                    any_change = true;
            }
    }
    CHECK(any_change); // the enhancement stage actually did something
    CHECK(off.face_masks[0].channels == 0); // disabled mode records no masks
}

TEST_CASE("pipeline runs with the lossy pooled autoencoder") {
    const SyntheticClip clip = make_moving_square_clip(3, 32, 32, 46, 8, 2, 1, 4, 4);
    FrameSequence input = to_sequence(clip.frames);
    PipelineConfig config = small_config();
    config.backbones["autoencoder"] = "pooled";
    BackboneSet b1 = make_backbones(config);
    BackboneSet b2 = make_backbones(config);

    const RunResult r1 = anonymize_video(input, config, b1);
    const RunResult r2 = anonymize_video(input, config, b2);
    REQUIRE(r1.output.frames.size() == 3);
    for (size_t i = 0; i < 3; ++i) {
        CHECK(r1.output.frames[i].same_shape(input.frames[i])); // decoded back to image size
        CHECK(r1.output.frames[i].data == r2.output.frames[i].data);
        check_finite(r1.output.frames[i], "pooled pipeline output");
    }
}

TEST_CASE("cross-frame attention genuinely shapes the generated frames") {
    const SyntheticClip clip = make_moving_square_clip(4, 32, 32, 47, 8, 2, 1, 4, 4);
    FrameSequence input = to_sequence(clip.frames);
    PipelineConfig config = small_config();
    config.face_enhance = false;
    config.stage1 = {0.0, 0.0}; // isolate the attention path from fusion
    config.stage2 = {0.0, 0.0};

    PipelineConfig no_sites = config;
    no_sites.attention_sites = {"no_such_site"}; // allowlist excludes "mid"

    BackboneSet b1 = make_backbones(config);
    BackboneSet b2 = make_backbones(no_sites);
    const RunResult with_attention = anonymize_video(input, config, b1);
    const RunResult without_attention = anonymize_video(input, no_sites, b2);

    // the anchor is generated with plain self-attention either way
    const int anchor = with_attention.report.anchor;
    CHECK(max_abs_diff(with_attention.output.frames[anchor],
                       without_attention.output.frames[anchor]) == 0.0);
    // non-anchor frames see banked anchor/previous keys and values
    bool any_diff = false;
    for (size_t i = 0; i < 4; ++i)
        if (static_cast<int>(i) != anchor &&
            max_abs_diff(with_attention.output.frames[i], without_attention.output.frames[i]) > 0.0)
            any_diff = true;
    CHECK(any_diff);
}

TEST_CASE("empty input is rejected") {
    FrameSequence empty;
    PipelineConfig config = small_config();
    BackboneSet backbones = make_backbones(config);
    CHECK_THROWS_AS(anonymize_video(empty, config, backbones), std::invalid_argument);
}

TEST_CASE("mixed-resolution input is rejected") {
    FrameSequence input;
    input.frames.push_back(Grid(3, 16, 16));
    input.frames.push_back(Grid(3, 16, 17));
    PipelineConfig config = small_config();
    BackboneSet backbones = make_backbones(config);
    CHECK_THROWS_AS(anonymize_video(input, config, backbones), std::invalid_argument);
}
