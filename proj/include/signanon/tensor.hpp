// Copyright (C) 2026 signanon contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#define SIGNANON_CHECK(cond, msg)                      \
    do {                                               \
        if (!(cond)) {                                 \
            std::ostringstream oss__;                  \
            oss__ << msg;                              \
            throw std::invalid_argument(oss__.str());  \
        }                                              \
    } while (0)

namespace signanon {

enum class Space { image, latent };

// Dense (channels, height, width) tensor, row-major within each channel.
// Used for decoded frames, latents, edge maps, masks and flow components.
struct Grid {
    int channels = 0;
    int height = 0;
    int width = 0;
    Space space = Space::image;
    std::vector<double> data;

    Grid() = default;
    Grid(int c, int h, int w, Space s = Space::image)
        : channels(c), height(h), width(w), space(s),
          data(static_cast<size_t>(c) * h * w, 0.0) {
        SIGNANON_CHECK(c >= 1 && h >= 1 && w >= 1,
                       "Grid: shape must be positive, got (" << c << ", " << h << ", " << w << ")");
    }

    static Grid constant(int c, int h, int w, double value, Space s = Space::image) {
        Grid g(c, h, w, s);
        std::fill(g.data.begin(), g.data.end(), value);
        return g;
    }

    double& at(int c, int y, int x) {
        return data[(static_cast<size_t>(c) * height + y) * width + x];
    }
    double at(int c, int y, int x) const {
        return data[(static_cast<size_t>(c) * height + y) * width + x];
    }

    size_t size() const { return data.size(); }

    bool same_shape(const Grid& o) const {
        return channels == o.channels && height == o.height && width == o.width;
    }
    bool same_spatial(const Grid& o) const {
        return height == o.height && width == o.width;
    }
};

// Domain aliases: latents and decoded frames share the layout, the
// space tag tells them apart at module boundaries.
using ImageGrid = Grid;
using LatentGrid = Grid;

inline void check_finite(const Grid& g, const char* what) {
    for (double v : g.data) {
        SIGNANON_CHECK(std::isfinite(v), what << ": grid contains a non-finite entry");
    }
}

inline void check_same_shape(const Grid& a, const Grid& b, const char* what) {
    SIGNANON_CHECK(a.same_shape(b),
                   what << ": shape mismatch, (" << a.channels << ", " << a.height << ", "
                        << a.width << ") vs (" << b.channels << ", " << b.height << ", "
                        << b.width << ")");
}

inline double clamp01(double v) { return std::min(1.0, std::max(0.0, v)); }

inline double mse(const Grid& a, const Grid& b) {
    check_same_shape(a, b, "mse");
    double acc = 0.0;
    for (size_t i = 0; i < a.data.size(); ++i) {
        const double d = a.data[i] - b.data[i];
        acc += d * d;
    }
    return acc / static_cast<double>(a.data.size());
}

inline double max_abs_diff(const Grid& a, const Grid& b) {
    check_same_shape(a, b, "max_abs_diff");
    double m = 0.0;
    for (size_t i = 0; i < a.data.size(); ++i) {
        m = std::max(m, std::abs(a.data[i] - b.data[i]));
    }
    return m;
}

// Bilinear lookup with clamp-to-edge semantics; (fx, fy) in pixel coordinates.
inline double bilinear_sample(const Grid& g, int c, double fx, double fy) {
    fx = std::min(static_cast<double>(g.width - 1), std::max(0.0, fx));
    fy = std::min(static_cast<double>(g.height - 1), std::max(0.0, fy));
    const int x0 = static_cast<int>(std::floor(fx));
    const int y0 = static_cast<int>(std::floor(fy));
    const int x1 = std::min(x0 + 1, g.width - 1);
    const int y1 = std::min(y0 + 1, g.height - 1);
    const double wx = fx - x0;
    const double wy = fy - y0;
    const double top = g.at(c, y0, x0) * (1.0 - wx) + g.at(c, y0, x1) * wx;
    const double bot = g.at(c, y1, x0) * (1.0 - wx) + g.at(c, y1, x1) * wx;
    return top * (1.0 - wy) + bot * wy;
}

// Pixel-center aligned bilinear resize.
inline Grid resize_bilinear(const Grid& g, int out_h, int out_w) {
    SIGNANON_CHECK(out_h >= 1 && out_w >= 1, "resize_bilinear: output shape must be positive");
    if (out_h == g.height && out_w == g.width) return g;
    Grid out(g.channels, out_h, out_w, g.space);
    const double sy = static_cast<double>(g.height) / out_h;
    const double sx = static_cast<double>(g.width) / out_w;
    for (int c = 0; c < g.channels; ++c) {
        for (int y = 0; y < out_h; ++y) {
            const double fy = (y + 0.5) * sy - 0.5;
            for (int x = 0; x < out_w; ++x) {
                const double fx = (x + 0.5) * sx - 0.5;
                out.at(c, y, x) = bilinear_sample(g, c, fx, fy);
            }
        }
    }
    return out;
}

// Area averaging down to an explicit (out_h, out_w) cell grid.
inline Grid pool_area(const Grid& g, int out_h, int out_w) {
    SIGNANON_CHECK(out_h >= 1 && out_w >= 1 && out_h <= g.height && out_w <= g.width,
                   "pool_area: invalid output shape (" << out_h << ", " << out_w << ")");
    Grid out(g.channels, out_h, out_w, g.space);
    for (int c = 0; c < g.channels; ++c) {
        for (int y = 0; y < out_h; ++y) {
            const int y0 = y * g.height / out_h;
            const int y1 = std::max(y0 + 1, (y + 1) * g.height / out_h);
            for (int x = 0; x < out_w; ++x) {
                const int x0 = x * g.width / out_w;
                const int x1 = std::max(x0 + 1, (x + 1) * g.width / out_w);
                double acc = 0.0;
                for (int yy = y0; yy < y1; ++yy)
                    for (int xx = x0; xx < x1; ++xx)
                        acc += g.at(c, yy, xx);
                out.at(c, y, x) = acc / ((y1 - y0) * (x1 - x0));
            }
        }
    }
    return out;
}

inline Grid upsample_nearest(const Grid& g, int out_h, int out_w) {
    SIGNANON_CHECK(out_h >= g.height && out_w >= g.width,
                   "upsample_nearest: output must not be smaller than input");
    Grid out(g.channels, out_h, out_w, g.space);
    for (int c = 0; c < g.channels; ++c)
        for (int y = 0; y < out_h; ++y)
            for (int x = 0; x < out_w; ++x)
                out.at(c, y, x) = g.at(c, std::min(y * g.height / out_h, g.height - 1),
                                       std::min(x * g.width / out_w, g.width - 1));
    return out;
}

} // namespace signanon
