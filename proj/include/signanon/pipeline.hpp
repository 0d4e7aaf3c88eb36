// Copyright (C) 2026 signanon contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <cstdio>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "signanon/backbones.hpp"
#include "signanon/face.hpp"
#include "signanon/fusion.hpp"
#include "signanon/interfaces.hpp"
#include "signanon/schedule.hpp"

namespace signanon {

/// Normalized denoising-step interval; a step t is inside when t/T lies in
/// [lo, hi]. lo >= hi disables the window.
struct StageWindow {
    double lo = 0.0;
    double hi = 0.0;

    bool contains(double u) const { return hi > lo && u >= lo && u <= hi; }
    bool enabled() const { return hi > lo; }
};

struct PipelineConfig {
    std::string prompt;
    double strength = 0.75;
    int steps = 20;
    uint64_t seed = 0;
    int anchor_index = -1; // -1 = auto: floor(N / 2)
    StageWindow stage1{0.5, 1.0}; // x0_hat fusion, early backward process (t/T large)
    StageWindow stage2{0.0, 0.3}; // reference latent blend + adain, late stages
    bool face_enhance = true;
    int max_frames = 180;
    int fidelity_correction_steps = 2;
    int face_crop_resolution = 256;
    double face_margin = 1.25;
    int face_feather_px = 3;
    double guidance_scale = 7.5;
    double flow_consistency_tau = 1.0;
    ScheduleKind schedule_kind = ScheduleKind::linear_beta;
    ScheduleParams schedule_params{};
    std::vector<std::string> attention_sites; // empty = all sites the denoiser exposes
    std::map<std::string, std::string> backbones;
    std::map<std::string, BackboneOptions> backbone_options;

    std::string backbone_kind(const std::string& key) const {
        static const std::map<std::string, std::string> defaults = {
            {"denoiser", "toy_hash"},       {"autoencoder", "identity"},
            {"edge", "sobel"},              {"flow", "block_match"},
            {"face_detector", "static_box"}, {"face_parser", "ellipse"},
            {"face_motion", "block_match"}, {"face_generator", "warp"},
        };
        if (auto it = backbones.find(key); it != backbones.end()) return it->second;
        auto it = defaults.find(key);
        SIGNANON_CHECK(it != defaults.end(), "unknown backbone key '" << key << "'");
        return it->second;
    }

    void validate() const {
        SIGNANON_CHECK(strength > 0.0 && strength <= 1.0,
                       "config: strength must lie in (0, 1], got " << strength);
        SIGNANON_CHECK(steps >= 1, "config: steps must be >= 1, got " << steps);
        SIGNANON_CHECK(max_frames >= 1, "config: max_frames must be >= 1");
        auto check_window = [](const StageWindow& w, const char* name) {
            SIGNANON_CHECK(w.lo >= 0.0 && w.lo <= 1.0 && w.hi >= 0.0 && w.hi <= 1.0,
                           "config: " << name << " window must lie within [0, 1]");
        };
        check_window(stage1, "stage1");
        check_window(stage2, "stage2");
        SIGNANON_CHECK(fidelity_correction_steps >= 0, "config: fidelity_correction_steps must be >= 0");
        SIGNANON_CHECK(face_crop_resolution >= 2, "config: face_crop_resolution must be >= 2");
        SIGNANON_CHECK(face_margin >= 1.0, "config: face_margin must be >= 1");
        SIGNANON_CHECK(face_feather_px >= 0, "config: face_feather_px must be >= 0");
    }
};

struct FrameRecord {
    std::string filename;
    int index = 0;
    std::string source_checksum;
};

struct FrameSequence {
    std::vector<ImageGrid> frames;
    double fps = 30.0;
    std::vector<FrameRecord> manifest;
};

struct BackboneSet {
    std::shared_ptr<Denoiser> denoiser;
    std::shared_ptr<AutoEncoder> autoencoder;
    std::shared_ptr<EdgeDetector> edge_detector;
    std::shared_ptr<FlowEstimator> flow_estimator;
    std::shared_ptr<FaceDetector> face_detector;
    std::shared_ptr<FaceParser> face_parser;
    std::shared_ptr<MotionEstimator> motion_estimator;
    std::shared_ptr<FaceGenerator> face_generator;
};

/// Instantiate the configured backbones from the registry. The run seed is
/// forwarded to the denoiser unless its options pin one explicitly.
inline BackboneSet make_backbones(const PipelineConfig& config) {
    auto& reg = BackboneRegistry::instance();
    auto opts = [&](const std::string& key) {
        auto it = config.backbone_options.find(key);
        return it == config.backbone_options.end() ? BackboneOptions{} : it->second;
    };
    BackboneOptions denoiser_opts = opts("denoiser");
    if (!denoiser_opts.count("seed")) denoiser_opts["seed"] = std::to_string(config.seed);

    BackboneSet set;
    set.denoiser = reg.denoisers.make(config.backbone_kind("denoiser"), denoiser_opts);
    set.autoencoder = reg.autoencoders.make(config.backbone_kind("autoencoder"), opts("autoencoder"));
    set.edge_detector = reg.edge_detectors.make(config.backbone_kind("edge"), opts("edge"));
    set.flow_estimator = reg.flow_estimators.make(config.backbone_kind("flow"), opts("flow"));
    set.face_detector = reg.face_detectors.make(config.backbone_kind("face_detector"), opts("face_detector"));
    set.face_parser = reg.face_parsers.make(config.backbone_kind("face_parser"), opts("face_parser"));
    set.motion_estimator = reg.motion_estimators.make(config.backbone_kind("face_motion"), opts("face_motion"));
    set.face_generator = reg.face_generators.make(config.backbone_kind("face_generator"), opts("face_generator"));
    return set;
}

/// Explicit anchor index if configured, otherwise the middle frame.
inline int select_anchor(const FrameSequence& sequence, const PipelineConfig& config) {
    const int n = static_cast<int>(sequence.frames.size());
    SIGNANON_CHECK(n >= 1, "select_anchor: empty sequence");
    if (config.anchor_index >= 0) {
        SIGNANON_CHECK(config.anchor_index < n,
                       "select_anchor: explicit anchor " << config.anchor_index
                           << " out of range [0, " << n - 1 << "]");
        return config.anchor_index;
    }
    return n / 2;
}

struct RunReport {
    PipelineConfig effective_config;
    int anchor = -1;
    std::vector<double> frame_ms;
    std::vector<std::string> warnings;
    std::string determinism_note =
        "outputs are bitwise reproducible for fixed (input, config, seed, backbones) on a given "
        "platform; cross-platform identity additionally requires identical libm rounding";
};

struct RunResult {
    FrameSequence output;
    std::vector<Grid> face_masks; // per frame, (1, H, W); empty grids when enhancement skipped
    RunReport report;
};

namespace detail {

/// Cached per-frame generation state: attention features per (site, step),
/// the anchor's clean estimates per step, and the decoded result.
struct FrameBank {
    int source_index = -1;
    std::map<std::string, std::map<int, Mat>> tokens;
    std::map<int, LatentGrid> x0_hat;
    ImageGrid decoded;
};

struct FlowBundle {
    FlowField flow_img;     // image resolution, pulls reference into this frame
    OcclusionMask occ_img;  // image resolution
    FlowField flow_lat;     // latent resolution (resized + value-rescaled)
    OcclusionMask occ_lat;  // latent resolution (resized + re-binarized)
};

inline FlowBundle make_flow_bundle(const ImageGrid& ref_frame, const ImageGrid& cur_frame,
                                   FlowEstimator& estimator, double tau, int latent_h, int latent_w) {
    FlowBundle b;
    auto [flow, occ] = estimate_flow_and_occlusion(ref_frame, cur_frame, estimator, tau);
    b.flow_lat = resize_flow(flow, latent_h, latent_w);
    b.occ_lat = resize_mask(occ, latent_h, latent_w);
    b.flow_img = std::move(flow);
    b.occ_img = binarize(occ);
    return b;
}

} // namespace detail

/// Full per-video loop: edge extraction, noisy-latent init, anchor generation
/// with plain self-attention, sequential frame generation with cross-frame
/// attention and two-stage optical-flow-guided fusion, decode, and the
/// optional face enhancement pass. Deterministic for fixed inputs and seed.
inline RunResult anonymize_video(const FrameSequence& sequence, const PipelineConfig& config,
                                 BackboneSet& backbones) {
    config.validate();
    SIGNANON_CHECK(!sequence.frames.empty(), "anonymize_video: empty frame sequence");

    RunResult result;
    result.report.effective_config = config;
    auto warn = [&](const std::string& w) { result.report.warnings.push_back(w); };

    FrameSequence input = sequence;
    if (static_cast<int>(input.frames.size()) > config.max_frames) {
        warn("input has " + std::to_string(input.frames.size()) + " frames; truncated to the " +
             std::to_string(config.max_frames) + "-frame cap");
        input.frames.resize(config.max_frames);
        if (input.manifest.size() > static_cast<size_t>(config.max_frames))
            input.manifest.resize(config.max_frames);
    }
    const int n = static_cast<int>(input.frames.size());
    for (int i = 0; i < n; ++i) {
        SIGNANON_CHECK(input.frames[i].same_shape(input.frames[0]),
                       "anonymize_video: frame " << i << " resolution differs from frame 0");
        check_finite(input.frames[i], "anonymize_video input");
    }

    const int anchor = select_anchor(input, config);
    result.report.anchor = anchor;
    const NoiseSchedule schedule = make_schedule(config.steps, config.schedule_kind, config.schedule_params);
    const std::vector<double> prompt_embedding = embed_prompt(config.prompt);

    const int scale = backbones.autoencoder->latent_scale();
    SIGNANON_CHECK(scale >= 1, "anonymize_video: invalid latent scale");

    // Allowed attention sites: configured allowlist intersected with what the
    // denoiser exposes; empty allowlist means every exposed site.
    std::vector<std::string> sites = backbones.denoiser->attention_sites();
    auto site_allowed = [&](const std::string& s) {
        if (std::find(sites.begin(), sites.end(), s) == sites.end()) return false;
        if (config.attention_sites.empty()) return true;
        return std::find(config.attention_sites.begin(), config.attention_sites.end(), s) !=
               config.attention_sites.end();
    };

    // Stage 1 of the run: edges, encodings, noisy-latent inits.
    std::vector<GuidanceContext> guidance(n);
    std::vector<LatentGrid> encoded(n);
    std::vector<SdeditInit> inits(n);
    int latent_h = 0, latent_w = 0;
    for (int i = 0; i < n; ++i) {
        try {
            const ImageGrid edges = backbones.edge_detector->detect(input.frames[i]);
            encoded[i] = backbones.autoencoder->encode(input.frames[i]);
            latent_h = encoded[i].height;
            latent_w = encoded[i].width;
            guidance[i].prompt_embedding = prompt_embedding;
            guidance[i].control_signal = resize_bilinear(edges, latent_h, latent_w);
            guidance[i].guidance_scale = config.guidance_scale;
            inits[i] =
                sdedit_init(encoded[i], config.strength, schedule, config.seed ^ static_cast<uint64_t>(i));
        } catch (const std::exception& e) {
            throw std::runtime_error("frame " + std::to_string(i) + ": " + e.what());
        }
    }

    std::vector<ImageGrid> outputs(n);
    std::vector<double> frame_ms(n, 0.0);
    const bool fusion_possible = config.stage1.enabled() || config.stage2.enabled();

    // Generates one frame; `anchor_bank` null means plain self-attention
    // (anchor mode), otherwise cross-frame attention against the banked
    // anchor/previous features plus the two OFG fusion stages.
    auto generate_frame = [&](int i, const detail::FrameBank* anchor_bank,
                              const detail::FrameBank* prev_bank,
                              const detail::FlowBundle* anchor_flow,
                              const detail::FlowBundle* prev_flow) -> detail::FrameBank {
        detail::FrameBank bank;
        bank.source_index = i;
        const bool is_anchor = anchor_bank == nullptr;
        const uint64_t frame_seed = config.seed ^ static_cast<uint64_t>(i);
        LatentGrid x = inits[i].latent;

        // the override closes over this stack frame; never leave it installed
        struct OverrideGuard {
            Denoiser& denoiser;
            ~OverrideGuard() { denoiser.clear_attention_override(); }
        } override_guard{*backbones.denoiser};

        for (int t = inits[i].start_step; t >= 1; --t) {
            const double u = static_cast<double>(t) / schedule.num_steps;

            backbones.denoiser->set_attention_override([&, t](const AttentionSiteCall& call) -> Mat {
                if (!site_allowed(call.site)) return self_attention(call.features, *call.weights);
                bank.tokens[call.site][t] = call.features.tokens;
                if (is_anchor) return self_attention(call.features, *call.weights);
                const auto site_a = anchor_bank->tokens.find(call.site);
                const auto site_p = prev_bank->tokens.find(call.site);
                if (site_a == anchor_bank->tokens.end() || site_p == prev_bank->tokens.end() ||
                    !site_a->second.count(t) || !site_p->second.count(t))
                    return self_attention(call.features, *call.weights);
                const FrameFeatures fa{site_a->second.at(t), anchor_bank->source_index};
                const FrameFeatures fp{site_p->second.at(t), prev_bank->source_index};
                return cross_frame_attention(call.features, fa, fp, *call.weights);
            });
            const LatentGrid eps = backbones.denoiser->predict_noise(x, t, guidance[i]);
            LatentGrid x0h = estimate_x0(x, eps, t, schedule);

            if (!is_anchor) {
                if (anchor_flow && config.stage1.contains(u))
                    x0h = ofg_stage1(x0h, anchor_bank->x0_hat.at(t), anchor_flow->flow_lat,
                                     anchor_flow->occ_lat);
                if (config.stage2.contains(u)) x0h = adain(x0h, anchor_bank->x0_hat.at(t));
            } else {
                bank.x0_hat.emplace(t, x0h);
            }

            x = ddim_step_from_x0(x0h, eps, t, schedule);

            if (!is_anchor && anchor_flow && prev_flow && config.stage2.contains(u)) {
                const ImageGrid current_decode = backbones.autoencoder->decode(x0h);
                const ReferenceFrame ref = build_reference_frame(
                    current_decode, outputs[prev_bank->source_index], outputs[anchor_bank->source_index],
                    prev_flow->flow_img, anchor_flow->flow_img, prev_flow->occ_img, anchor_flow->occ_img);
                const uint64_t renoise_seed =
                    hash_combine(hash_combine(frame_seed, 0x0F62ULL), static_cast<uint64_t>(t));
                x = ofg_stage2_update(x, ref, t, schedule, *backbones.autoencoder, renoise_seed,
                                      config.fidelity_correction_steps);
            }
        }
        bank.decoded = backbones.autoencoder->decode(x);
        return bank;
    };

    auto timed = [&](int i, auto&& fn) -> detail::FrameBank {
        const auto t0 = std::chrono::steady_clock::now();
        try {
            detail::FrameBank bank = fn();
            frame_ms[i] =
                std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
            return bank;
        } catch (const std::exception& e) {
            throw std::runtime_error("frame " + std::to_string(i) + ": " + e.what());
        }
    };

    // Anchor first: it constrains global style for every other frame.
    detail::FrameBank anchor_bank =
        timed(anchor, [&] { return generate_frame(anchor, nullptr, nullptr, nullptr, nullptr); });
    outputs[anchor] = anchor_bank.decoded;

    // Remaining frames in temporal order; "previous" is the temporal
    // predecessor once generated, and the anchor for the very first frame.
    detail::FrameBank prev_bank;
    bool have_prev = false;
    for (int i = 0; i < n; ++i) {
        if (i == anchor) continue;
        const detail::FrameBank& prev = have_prev && i > 0 && (i - 1) != anchor ? prev_bank : anchor_bank;
        detail::FlowBundle anchor_flow, previous_flow;
        const detail::FlowBundle* anchor_flow_ptr = nullptr;
        const detail::FlowBundle* prev_flow_ptr = nullptr;
        if (fusion_possible && inits[i].start_step >= 1) {
            anchor_flow = detail::make_flow_bundle(input.frames[anchor], input.frames[i],
                                                   *backbones.flow_estimator, config.flow_consistency_tau,
                                                   latent_h, latent_w);
            anchor_flow_ptr = &anchor_flow;
            if (prev.source_index == anchor) {
                prev_flow_ptr = &anchor_flow;
            } else {
                previous_flow = detail::make_flow_bundle(input.frames[prev.source_index], input.frames[i],
                                                         *backbones.flow_estimator,
                                                         config.flow_consistency_tau, latent_h, latent_w);
                prev_flow_ptr = &previous_flow;
            }
        }
        detail::FrameBank bank =
            timed(i, [&] { return generate_frame(i, &anchor_bank, &prev, anchor_flow_ptr, prev_flow_ptr); });
        outputs[i] = bank.decoded;
        prev_bank = std::move(bank);
        have_prev = true;
    }

    // Face enhancement pass: source face from the first
    // generated frame, driving faces from the original frames.
    result.face_masks.assign(n, Grid());
    if (config.face_enhance) {
        FaceExtractor source_extractor(config.face_crop_resolution, config.face_margin);
        std::optional<FaceCrop> source_face =
            source_extractor.extract(outputs[anchor], *backbones.face_detector);
        if (!source_face) {
            warn("no face detected in the generated anchor frame; face enhancement skipped");
        } else {
            FaceExtractor driving_extractor(config.face_crop_resolution, config.face_margin);
            FaceExtractor paste_extractor(config.face_crop_resolution, config.face_margin);
            for (int i = 0; i < n; ++i) {
                std::optional<FaceCrop> driving;
                std::optional<FaceCrop> paste_target;
                MotionMap motion;
                FaceCrop animated;
                try {
                    driving = driving_extractor.extract(input.frames[i], *backbones.face_detector);
                    paste_target = paste_extractor.extract(outputs[i], *backbones.face_detector);
                    if (!driving || !paste_target) {
                        warn("frame " + std::to_string(i) + ": no face detection yet; left unenhanced");
                        continue;
                    }
                    motion = estimate_face_motion(*source_face, *driving, *backbones.motion_estimator);
                    animated = animate_face(*source_face, motion, *backbones.face_generator);
                } catch (const std::exception& e) {
                    throw std::runtime_error("frame " + std::to_string(i) + ": " + e.what());
                }
                try {
                    FaceCrop paste = animated;
                    paste.bbox = paste_target->bbox;
                    paste.align_transform = paste_target->align_transform;
                    CompositeResult comp =
                        composite_face(outputs[i], paste, *backbones.face_parser, config.face_feather_px);
                    outputs[i] = std::move(comp.frame);
                    result.face_masks[i] = std::move(comp.mask.mask);
                } catch (const std::exception& e) {
                    warn("frame " + std::to_string(i) + ": face compositing failed (" + e.what() +
                         "); frame left unmodified");
                }
            }
        }
    }

    result.output.frames = std::move(outputs);
    result.output.fps = input.fps;
    result.output.manifest.reserve(n);
    for (int i = 0; i < n; ++i) {
        FrameRecord rec;
        char name[32];
        std::snprintf(name, sizeof(name), "frame_%05d.png", i);
        rec.filename = name;
        rec.index = i;
        if (i < static_cast<int>(input.manifest.size()) && !input.manifest[i].source_checksum.empty()) {
            rec.source_checksum = input.manifest[i].source_checksum;
        } else {
            char buf[32];
            std::snprintf(buf, sizeof(buf), "fnv1a64:%016llx",
                          static_cast<unsigned long long>(fnv1a_doubles(input.frames[i].data)));
            rec.source_checksum = buf;
        }
        result.output.manifest.push_back(std::move(rec));
    }
    result.report.frame_ms = std::move(frame_ms);
    return result;
}

} // namespace signanon
