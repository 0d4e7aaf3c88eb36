// Copyright (C) 2026 signanon contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "signanon/attention.hpp"
#include "signanon/face_types.hpp"
#include "signanon/flow.hpp"
#include "signanon/rng.hpp"
#include "signanon/tensor.hpp"

namespace signanon {

/// Conditioning bundle handed to the denoiser at every step: text embedding,
/// optional spatial control map (edge image) and the guidance strength.
struct GuidanceContext {
    std::vector<double> prompt_embedding;
    std::optional<ImageGrid> control_signal;
    double guidance_scale = 7.5;
};

/// Deterministic stand-in for a text encoder: hash-derived embedding so toy
/// backbones can react to prompt changes.
inline std::vector<double> embed_prompt(const std::string& text, int dims = 16) {
    std::vector<double> v(dims);
    const uint64_t h = fnv1a(text.data(), text.size());
    for (int i = 0; i < dims; ++i) v[i] = hash_gaussian(hash_combine(h, static_cast<uint64_t>(i)));
    return v;
}

/// Stable hash of the full conditioning (embedding + control map + scale).
inline uint64_t guidance_fingerprint(const GuidanceContext& g) {
    uint64_t h = fnv1a_doubles(g.prompt_embedding);
    if (g.control_signal) {
        h = hash_combine(h, static_cast<uint64_t>(g.control_signal->channels));
        h = hash_combine(h, static_cast<uint64_t>(g.control_signal->height));
        h = hash_combine(h, static_cast<uint64_t>(g.control_signal->width));
        h = fnv1a_doubles(g.control_signal->data, h);
    }
    uint64_t bits;
    std::memcpy(&bits, &g.guidance_scale, sizeof(bits));
    return hash_combine(h, bits);
}

/// One attention site invocation inside a denoiser.
struct AttentionSiteCall {
    std::string site;
    FrameFeatures features;
    const AttentionWeights* weights = nullptr;
};

/// Replacement installed by the pipeline; receives the current features and
/// returns the attention output (the pipeline closes over the banked anchor
/// and previous-frame features).
using AttentionOverride = std::function<Mat(const AttentionSiteCall&)>;

/// Noise predictor contract: output shape = input shape, deterministic for
/// fixed inputs. Implementations expose named attention sites so the pipeline
/// can swap self-attention for cross-frame attention.
class Denoiser {
public:
    virtual ~Denoiser() = default;

    virtual LatentGrid predict_noise(const LatentGrid& x_t, int t, const GuidanceContext& guidance) = 0;

    virtual std::vector<std::string> attention_sites() const { return {}; }

    void set_attention_override(AttentionOverride fn) { override_ = std::move(fn); }
    void clear_attention_override() { override_ = nullptr; }

protected:
    AttentionOverride override_;
};

class AutoEncoder {
public:
    virtual ~AutoEncoder() = default;
    virtual LatentGrid encode(const ImageGrid& image) = 0;
    virtual ImageGrid decode(const LatentGrid& latent) = 0;
    /// Spatial downsample factor from image to latent.
    virtual int latent_scale() const = 0;
};

/// Image -> single-channel edge map in [0, 1], same spatial size.
class EdgeDetector {
public:
    virtual ~EdgeDetector() = default;
    virtual ImageGrid detect(const ImageGrid& image) = 0;
};

struct FlowPair {
    FlowField forward;  // on dst grid, pulls src content into dst geometry
    FlowField backward; // on src grid, pulls dst content into src geometry
};

class FlowEstimator {
public:
    virtual ~FlowEstimator() = default;
    virtual FlowPair estimate(const ImageGrid& frame_src, const ImageGrid& frame_dst) = 0;
};

class FaceDetector {
public:
    virtual ~FaceDetector() = default;
    virtual std::optional<FaceBox> detect(const ImageGrid& frame) = 0;
};

/// Face crop -> soft segmentation mask (1, res, res) in [0, 1].
class FaceParser {
public:
    virtual ~FaceParser() = default;
    virtual Grid parse(const ImageGrid& face_crop) = 0;
};

class MotionEstimator {
public:
    virtual ~MotionEstimator() = default;
    virtual MotionMap estimate(const FaceCrop& source, const FaceCrop& driving) = 0;
};

/// (source crop, motion) -> animated crop with the source identity and the
/// driving expression. Crop-in/crop-out at fixed resolution.
class FaceGenerator {
public:
    virtual ~FaceGenerator() = default;
    virtual ImageGrid generate(const FaceCrop& source, const MotionMap& motion) = 0;
};

} // namespace signanon
