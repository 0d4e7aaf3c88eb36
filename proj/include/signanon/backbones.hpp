// Copyright (C) 2026 signanon contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <memory>
#include <string>

#include "signanon/interfaces.hpp"
#include "signanon/schedule.hpp"

namespace signanon {

using BackboneOptions = std::map<std::string, std::string>;

inline uint64_t opt_u64(const BackboneOptions& o, const std::string& key, uint64_t dflt) {
    auto it = o.find(key);
    if (it == o.end()) return dflt;
    try {
        return std::stoull(it->second);
    } catch (const std::exception&) {
        throw std::invalid_argument("backbone option '" + key + "': cannot parse '" + it->second + "'");
    }
}

inline int opt_int(const BackboneOptions& o, const std::string& key, int dflt) {
    auto it = o.find(key);
    if (it == o.end()) return dflt;
    try {
        return std::stoi(it->second);
    } catch (const std::exception&) {
        throw std::invalid_argument("backbone option '" + key + "': cannot parse '" + it->second + "'");
    }
}

inline double opt_double(const BackboneOptions& o, const std::string& key, double dflt) {
    auto it = o.find(key);
    if (it == o.end()) return dflt;
    try {
        return std::stod(it->second);
    } catch (const std::exception&) {
        throw std::invalid_argument("backbone option '" + key + "': cannot parse '" + it->second + "'");
    }
}

// ---------------------------------------------------------------------------
// Denoisers
// ---------------------------------------------------------------------------

/// Test-oracle denoiser: given the recorded clean latent, returns the exact
/// eps so that estimate_x0 recovers it at every step. A full reverse DDIM
/// sweep therefore reproduces the recorded target.
class OracleDenoiser : public Denoiser {
public:
    OracleDenoiser(LatentGrid target_x0, NoiseSchedule schedule)
        : target_(std::move(target_x0)), schedule_(std::move(schedule)) {}

    LatentGrid predict_noise(const LatentGrid& x_t, int t, const GuidanceContext&) override {
        check_same_shape(x_t, target_, "OracleDenoiser");
        const double abar = schedule_.alpha_bar(t);
        Grid eps = x_t;
        if (1.0 - abar < 1e-12) {
            std::fill(eps.data.begin(), eps.data.end(), 0.0);
            return eps;
        }
        const double a = std::sqrt(abar);
        const double inv_b = 1.0 / std::sqrt(1.0 - abar);
        for (size_t i = 0; i < eps.data.size(); ++i)
            eps.data[i] = (x_t.data[i] - a * target_.data[i]) * inv_b;
        return eps;
    }

private:
    LatentGrid target_;
    NoiseSchedule schedule_;
};

/// Hash-mode toy denoiser: deterministic pseudo-noise keyed on
/// (seed, step, guidance fingerprint, pixel), plus an attention term computed
/// on pooled latent tokens. The attention site "mid" is exposed for
/// cross-frame replacement, so the override genuinely shapes the output.
class HashDenoiser : public Denoiser {
public:
    explicit HashDenoiser(const BackboneOptions& options = {})
        : seed_(opt_u64(options, "seed", 0)),
          token_grid_(opt_int(options, "token_grid", 8)),
          attn_gain_(opt_double(options, "attn_gain", 0.35)) {
        SIGNANON_CHECK(token_grid_ >= 1, "HashDenoiser: token_grid must be >= 1");
    }

    std::vector<std::string> attention_sites() const override { return {"mid"}; }

    LatentGrid predict_noise(const LatentGrid& x_t, int t, const GuidanceContext& guidance) override {
        if (guidance.control_signal) {
            SIGNANON_CHECK(guidance.control_signal->same_spatial(x_t),
                           "HashDenoiser: control signal must be at latent resolution, got ("
                               << guidance.control_signal->height << ", " << guidance.control_signal->width
                               << ") for latent (" << x_t.height << ", " << x_t.width << ")");
        }
        const uint64_t fp = guidance_fingerprint(guidance);
        uint64_t key = hash_combine(seed_, static_cast<uint64_t>(t));
        key = hash_combine(key, fp);

        Grid eps = x_t;
        for (size_t i = 0; i < eps.data.size(); ++i)
            eps.data[i] = hash_gaussian(hash_combine(key, static_cast<uint64_t>(i)));

        // Attention term on pooled tokens; this is where the cross-frame
        // override hooks into the generation loop.
        const int tg = std::min({token_grid_, x_t.height, x_t.width});
        const Grid pooled = pool_area(x_t, tg, tg);
        FrameFeatures features;
        features.tokens = Mat(tg * tg, x_t.channels);
        for (int c = 0; c < x_t.channels; ++c)
            for (int i = 0; i < tg * tg; ++i)
                features.tokens.at(i, c) = pooled.data[static_cast<size_t>(c) * tg * tg + i];

        const AttentionWeights w = site_weights(x_t.channels);
        Mat attn = override_ ? override_({"mid", features, &w}) : self_attention(features, w);
        SIGNANON_CHECK(attn.rows == tg * tg && attn.cols == x_t.channels,
                       "HashDenoiser: attention override returned wrong shape");

        Grid attn_grid(x_t.channels, tg, tg, x_t.space);
        for (int c = 0; c < x_t.channels; ++c)
            for (int i = 0; i < tg * tg; ++i)
                attn_grid.data[static_cast<size_t>(c) * tg * tg + i] = attn.at(i, c);
        const Grid attn_full = upsample_nearest(attn_grid, x_t.height, x_t.width);
        for (size_t i = 0; i < eps.data.size(); ++i) eps.data[i] += attn_gain_ * attn_full.data[i];
        return eps;
    }

    AttentionWeights site_weights(int channels) const {
        AttentionWeights w;
        w.w_q = Mat(channels, channels);
        w.w_k = Mat(channels, channels);
        w.w_v = Mat(channels, channels);
        const double scale = 1.0 / std::sqrt(static_cast<double>(channels));
        Mat* mats[3] = {&w.w_q, &w.w_k, &w.w_v};
        for (int m = 0; m < 3; ++m) {
            uint64_t k = hash_combine(seed_, 0xA77E0000ULL + static_cast<uint64_t>(m));
            for (size_t i = 0; i < mats[m]->a.size(); ++i)
                mats[m]->a[i] = scale * hash_gaussian(hash_combine(k, static_cast<uint64_t>(i)));
        }
        return w;
    }

private:
    uint64_t seed_;
    int token_grid_;
    double attn_gain_;
};

// ---------------------------------------------------------------------------
// Autoencoders
// ---------------------------------------------------------------------------

/// Lossless codec: latent = image. decode(encode(x)) == x exactly.
class IdentityCodec : public AutoEncoder {
public:
    LatentGrid encode(const ImageGrid& image) override {
        Grid z = image;
        z.space = Space::latent;
        return z;
    }
    ImageGrid decode(const LatentGrid& latent) override {
        Grid img = latent;
        img.space = Space::image;
        return img;
    }
    int latent_scale() const override { return 1; }
};

/// Lossy codec: 2x average-pool down, bilinear up. Reconstruction is
/// genuinely imperfect, which is what fidelity-oriented encoding needs to
/// have something to correct.
class PooledCodec : public AutoEncoder {
public:
    LatentGrid encode(const ImageGrid& image) override {
        SIGNANON_CHECK(image.height % 2 == 0 && image.width % 2 == 0,
                       "PooledCodec: spatial dims must be even, got ("
                           << image.height << ", " << image.width << ")");
        Grid z = pool_area(image, image.height / 2, image.width / 2);
        z.space = Space::latent;
        return z;
    }
    ImageGrid decode(const LatentGrid& latent) override {
        Grid img = resize_bilinear(latent, latent.height * 2, latent.width * 2);
        img.space = Space::image;
        return img;
    }
    int latent_scale() const override { return 2; }
};

// ---------------------------------------------------------------------------
// Edge detection
// ---------------------------------------------------------------------------

/// Sobel gradient magnitude normalized to [0, 1]; stand-in for a learned
/// edge detector behind the same interface.
class SobelEdgeDetector : public EdgeDetector {
public:
    ImageGrid detect(const ImageGrid& image) override {
        const int h = image.height;
        const int w = image.width;
        Grid gray(1, h, w, Space::image);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                double acc = 0.0;
                for (int c = 0; c < image.channels; ++c) acc += image.at(c, y, x);
                gray.at(0, y, x) = acc / image.channels;
            }
        auto px = [&](int y, int x) {
            return gray.at(0, std::clamp(y, 0, h - 1), std::clamp(x, 0, w - 1));
        };
        Grid mag(1, h, w, Space::image);
        double peak = 0.0;
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                const double gx = px(y - 1, x + 1) + 2 * px(y, x + 1) + px(y + 1, x + 1) -
                                  px(y - 1, x - 1) - 2 * px(y, x - 1) - px(y + 1, x - 1);
                const double gy = px(y + 1, x - 1) + 2 * px(y + 1, x) + px(y + 1, x + 1) -
                                  px(y - 1, x - 1) - 2 * px(y - 1, x) - px(y - 1, x + 1);
                mag.at(0, y, x) = std::sqrt(gx * gx + gy * gy);
                peak = std::max(peak, mag.at(0, y, x));
            }
        if (peak > 0.0)
            for (double& v : mag.data) v /= peak;
        return mag;
    }
};

// ---------------------------------------------------------------------------
// Optical flow
// ---------------------------------------------------------------------------

/// Integer block matching over a +/- search window. Ties resolve toward zero
/// displacement, so untextured frames report zero flow.
class BlockMatchingFlowEstimator : public FlowEstimator {
public:
    explicit BlockMatchingFlowEstimator(const BackboneOptions& options = {})
        : block_size_(opt_int(options, "block_size", 8)),
          search_radius_(opt_int(options, "search_radius", 2)) {
        SIGNANON_CHECK(block_size_ >= 1 && search_radius_ >= 0,
                       "BlockMatchingFlowEstimator: invalid block_size/search_radius");
    }

    FlowPair estimate(const ImageGrid& frame_src, const ImageGrid& frame_dst) override {
        check_same_shape(frame_src, frame_dst, "BlockMatchingFlowEstimator");
        return {match(frame_src, frame_dst), match(frame_dst, frame_src)};
    }

private:
    // Flow on dst's grid: for each block the offset d minimizing
    // SAD(dst(p), src(p + d)); src samples clamp at frame borders.
    FlowField match(const ImageGrid& src, const ImageGrid& dst) const {
        const int h = dst.height;
        const int w = dst.width;
        FlowField flow = FlowField::zero(h, w);
        auto sad = [&](int by0, int by1, int bx0, int bx1, int ody, int odx) {
            double acc = 0.0;
            for (int c = 0; c < dst.channels; ++c)
                for (int y = by0; y < by1; ++y)
                    for (int x = bx0; x < bx1; ++x) {
                        const int sy = std::clamp(y + ody, 0, h - 1);
                        const int sx = std::clamp(x + odx, 0, w - 1);
                        acc += std::abs(dst.at(c, y, x) - src.at(c, sy, sx));
                    }
            return acc;
        };
        for (int by = 0; by < h; by += block_size_) {
            const int by1 = std::min(by + block_size_, h);
            for (int bx = 0; bx < w; bx += block_size_) {
                const int bx1 = std::min(bx + block_size_, w);
                int best_dy = 0, best_dx = 0;
                double best = sad(by, by1, bx, bx1, 0, 0);
                for (int ody = -search_radius_; ody <= search_radius_; ++ody)
                    for (int odx = -search_radius_; odx <= search_radius_; ++odx) {
                        if (ody == 0 && odx == 0) continue;
                        const double s = sad(by, by1, bx, bx1, ody, odx);
                        if (s < best) {
                            best = s;
                            best_dy = ody;
                            best_dx = odx;
                        }
                    }
                for (int y = by; y < by1; ++y)
                    for (int x = bx; x < bx1; ++x) {
                        flow.displacement.at(0, y, x) = best_dx;
                        flow.displacement.at(1, y, x) = best_dy;
                    }
            }
        }
        return flow;
    }

    int block_size_;
    int search_radius_;
};

// ---------------------------------------------------------------------------
// Face backbones
// ---------------------------------------------------------------------------

/// Fixed fractional box; enough to exercise the crop/paste geometry without
/// a trained detector.
class StaticBoxDetector : public FaceDetector {
public:
    explicit StaticBoxDetector(const BackboneOptions& options = {})
        : fx_(opt_double(options, "fx", 0.30)),
          fy_(opt_double(options, "fy", 0.12)),
          fw_(opt_double(options, "fw", 0.40)),
          fh_(opt_double(options, "fh", 0.40)) {}

    std::optional<FaceBox> detect(const ImageGrid& frame) override {
        return FaceBox{fx_ * frame.width, fy_ * frame.height, fw_ * frame.width, fh_ * frame.height};
    }

private:
    double fx_, fy_, fw_, fh_;
};

/// Hard inscribed ellipse; edge softening happens at composite time.
class EllipseFaceParser : public FaceParser {
public:
    explicit EllipseFaceParser(const BackboneOptions& options = {})
        : cx_(opt_double(options, "cx", 0.5)),
          cy_(opt_double(options, "cy", 0.48)),
          ax_(opt_double(options, "ax", 0.36)),
          ay_(opt_double(options, "ay", 0.46)) {}

    Grid parse(const ImageGrid& face_crop) override {
        const int h = face_crop.height;
        const int w = face_crop.width;
        Grid mask(1, h, w, Space::image);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                const double u = (x - cx_ * (w - 1)) / (ax_ * w);
                const double v = (y - cy_ * (h - 1)) / (ay_ * h);
                mask.at(0, y, x) = (u * u + v * v <= 1.0) ? 1.0 : 0.0;
            }
        return mask;
    }

private:
    double cx_, cy_, ax_, ay_;
};

/// Face motion via the same block matching used for frames, plus a
/// forward-backward occlusion pyramid.
class BlockMatchingMotionEstimator : public MotionEstimator {
public:
    explicit BlockMatchingMotionEstimator(const BackboneOptions& options = {})
        : flow_(options),
          pyramid_levels_(opt_int(options, "pyramid_levels", 1)),
          tau_(opt_double(options, "tau", 1.0)) {}

    MotionMap estimate(const FaceCrop& source, const FaceCrop& driving) override {
        check_same_shape(source.image, driving.image, "BlockMatchingMotionEstimator");
        const FlowPair pair = flow_.estimate(source.image, driving.image);
        MotionMap map;
        map.dense_motion = pair.forward;
        map.occlusion_pyramid =
            occlusion_pyramid(occlusion_from_forward_backward(pair.forward, pair.backward, tau_),
                              pyramid_levels_);
        return map;
    }

private:
    BlockMatchingFlowEstimator flow_;
    int pyramid_levels_;
    double tau_;
};

/// Direct image-space warp of the source crop; occluded pixels keep the
/// source content. Feature-pyramid generators are a plugin concern.
class WarpFaceGenerator : public FaceGenerator {
public:
    ImageGrid generate(const FaceCrop& source, const MotionMap& motion) override {
        SIGNANON_CHECK(motion.dense_motion.height() == source.image.height &&
                       motion.dense_motion.width() == source.image.width,
                       "WarpFaceGenerator: motion must be at crop resolution");
        SIGNANON_CHECK(!motion.occlusion_pyramid.empty(), "WarpFaceGenerator: empty occlusion pyramid");
        const Grid warped = warp(source.image, motion.dense_motion);
        const OcclusionMask finest =
            resize_mask(motion.occlusion_pyramid.front(), source.image.height, source.image.width);
        Grid out = source.image;
        for (int c = 0; c < out.channels; ++c)
            for (int y = 0; y < out.height; ++y)
                for (int x = 0; x < out.width; ++x) {
                    const double m = finest.at(y, x);
                    out.at(c, y, x) = m * source.image.at(c, y, x) + (1.0 - m) * warped.at(c, y, x);
                }
        return out;
    }
};

// ---------------------------------------------------------------------------
// Registry
// ---------------------------------------------------------------------------

namespace detail {

template <class T>
class FactoryMap {
public:
    using Factory = std::function<std::shared_ptr<T>(const BackboneOptions&)>;

    void add(const std::string& name, Factory fn) { factories_[name] = std::move(fn); }

    std::shared_ptr<T> make(const std::string& name, const BackboneOptions& options = {}) const {
        auto it = factories_.find(name);
        if (it == factories_.end()) {
            std::string known;
            for (const auto& [k, _] : factories_) known += (known.empty() ? "" : ", ") + k;
            throw std::invalid_argument("unknown backbone '" + name + "' (known: " + known + ")");
        }
        return it->second(options);
    }

    std::vector<std::string> names() const {
        std::vector<std::string> out;
        for (const auto& [k, _] : factories_) out.push_back(k);
        return out;
    }

private:
    std::map<std::string, Factory> factories_;
};

} // namespace detail

/// Configuration-key -> constructor registry. Plugin adapters register here
/// and receive the opaque options map; the toys are pre-registered.
class BackboneRegistry {
public:
    static BackboneRegistry& instance() {
        static BackboneRegistry reg;
        return reg;
    }

    detail::FactoryMap<Denoiser> denoisers;
    detail::FactoryMap<AutoEncoder> autoencoders;
    detail::FactoryMap<EdgeDetector> edge_detectors;
    detail::FactoryMap<FlowEstimator> flow_estimators;
    detail::FactoryMap<FaceDetector> face_detectors;
    detail::FactoryMap<FaceParser> face_parsers;
    detail::FactoryMap<MotionEstimator> motion_estimators;
    detail::FactoryMap<FaceGenerator> face_generators;

private:
    BackboneRegistry() {
        denoisers.add("toy_hash", [](const BackboneOptions& o) { return std::make_shared<HashDenoiser>(o); });
        autoencoders.add("identity", [](const BackboneOptions&) { return std::make_shared<IdentityCodec>(); });
        autoencoders.add("pooled", [](const BackboneOptions&) { return std::make_shared<PooledCodec>(); });
        edge_detectors.add("sobel", [](const BackboneOptions&) { return std::make_shared<SobelEdgeDetector>(); });
        flow_estimators.add("block_match",
                            [](const BackboneOptions& o) { return std::make_shared<BlockMatchingFlowEstimator>(o); });
        face_detectors.add("static_box",
                           [](const BackboneOptions& o) { return std::make_shared<StaticBoxDetector>(o); });
        face_parsers.add("ellipse",
                         [](const BackboneOptions& o) { return std::make_shared<EllipseFaceParser>(o); });
        motion_estimators.add("block_match", [](const BackboneOptions& o) {
            return std::make_shared<BlockMatchingMotionEstimator>(o);
        });
        face_generators.add("warp", [](const BackboneOptions&) { return std::make_shared<WarpFaceGenerator>(); });
    }
};

// ---------------------------------------------------------------------------
// Interface conformance checks (same suite for toys and plugin adapters)
// ---------------------------------------------------------------------------

inline void check_denoiser_conformance(Denoiser& d, int channels = 3, int h = 8, int w = 8) {
    const Grid x_t = gaussian_grid(channels, h, w, 1234, Space::latent);
    GuidanceContext g;
    g.prompt_embedding = embed_prompt("conformance probe");
    const Grid a = d.predict_noise(x_t, 1, g);
    const Grid b = d.predict_noise(x_t, 1, g);
    SIGNANON_CHECK(a.same_shape(x_t), "denoiser conformance: output shape must equal input shape");
    SIGNANON_CHECK(max_abs_diff(a, b) == 0.0, "denoiser conformance: output must be deterministic");
    check_finite(a, "denoiser conformance");
}

inline void check_autoencoder_conformance(AutoEncoder& ae, int channels = 3, int h = 8, int w = 8) {
    Grid img = gaussian_grid(channels, h, w, 77, Space::image);
    const Grid z1 = ae.encode(img);
    const Grid z2 = ae.encode(img);
    SIGNANON_CHECK(max_abs_diff(z1, z2) == 0.0, "autoencoder conformance: encode must be deterministic");
    const Grid back = ae.decode(z1);
    SIGNANON_CHECK(back.same_shape(img), "autoencoder conformance: decode(encode(x)) must preserve shape");
    SIGNANON_CHECK(z1.height * ae.latent_scale() == img.height &&
                   z1.width * ae.latent_scale() == img.width,
                   "autoencoder conformance: latent_scale inconsistent with encode output");
}

inline void check_edge_detector_conformance(EdgeDetector& e, int channels = 3, int h = 8, int w = 8) {
    const Grid img = gaussian_grid(channels, h, w, 99, Space::image);
    const Grid edges = e.detect(img);
    SIGNANON_CHECK(edges.channels == 1 && edges.same_spatial(img),
                   "edge detector conformance: expected single-channel map at input resolution");
    for (double v : edges.data)
        SIGNANON_CHECK(v >= 0.0 && v <= 1.0, "edge detector conformance: values must lie in [0, 1]");
    SIGNANON_CHECK(max_abs_diff(edges, e.detect(img)) == 0.0,
                   "edge detector conformance: output must be deterministic");
}

inline void check_flow_estimator_conformance(FlowEstimator& f, int channels = 3, int h = 16, int w = 16) {
    const Grid a = gaussian_grid(channels, h, w, 5, Space::image);
    const Grid b = gaussian_grid(channels, h, w, 6, Space::image);
    const FlowPair p = f.estimate(a, b);
    SIGNANON_CHECK(p.forward.height() == h && p.forward.width() == w &&
                   p.backward.height() == h && p.backward.width() == w,
                   "flow estimator conformance: flows must be at frame resolution");
    const FlowPair q = f.estimate(a, b);
    SIGNANON_CHECK(max_abs_diff(p.forward.displacement, q.forward.displacement) == 0.0,
                   "flow estimator conformance: output must be deterministic");
    check_finite(p.forward.displacement, "flow estimator conformance");
    check_finite(p.backward.displacement, "flow estimator conformance");
}

inline void check_face_backbone_conformance(FaceDetector& detector, FaceParser& parser,
                                            MotionEstimator& motion, FaceGenerator& generator,
                                            int crop_res = 16) {
    const Grid frame = gaussian_grid(3, 4 * crop_res, 4 * crop_res, 21, Space::image);
    const auto box = detector.detect(frame);
    if (box) {
        SIGNANON_CHECK(box->w > 0 && box->h > 0, "face detector conformance: degenerate box");
        const auto again = detector.detect(frame);
        SIGNANON_CHECK(again && again->x == box->x && again->y == box->y && again->w == box->w,
                       "face detector conformance: detection must be deterministic");
    }

    FaceCrop crop;
    crop.image = gaussian_grid(3, crop_res, crop_res, 22, Space::image);
    crop.bbox = {0, 0, static_cast<double>(crop_res), static_cast<double>(crop_res)};
    const Grid mask = parser.parse(crop.image);
    SIGNANON_CHECK(mask.channels == 1 && mask.same_spatial(crop.image),
                   "face parser conformance: expected (1, res, res) mask");
    for (double v : mask.data)
        SIGNANON_CHECK(v >= 0.0 && v <= 1.0, "face parser conformance: mask values must lie in [0, 1]");

    FaceCrop driving = crop;
    driving.image = gaussian_grid(3, crop_res, crop_res, 23, Space::image);
    const MotionMap map = motion.estimate(crop, driving);
    SIGNANON_CHECK(map.dense_motion.height() == crop_res && map.dense_motion.width() == crop_res,
                   "motion estimator conformance: dense motion must be at crop resolution");
    SIGNANON_CHECK(!map.occlusion_pyramid.empty(),
                   "motion estimator conformance: need at least one occlusion level");
    for (size_t l = 1; l < map.occlusion_pyramid.size(); ++l)
        SIGNANON_CHECK(2 * map.occlusion_pyramid[l].height() == map.occlusion_pyramid[l - 1].height(),
                       "motion estimator conformance: pyramid levels must halve");

    const Grid out = generator.generate(crop, map);
    SIGNANON_CHECK(out.same_shape(crop.image),
                   "face generator conformance: output must be a crop at source resolution");
    check_finite(out, "face generator conformance");
}

} // namespace signanon
