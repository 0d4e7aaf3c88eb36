// Copyright (C) 2026 signanon contributors
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch.hpp>

#include "signanon/flow.hpp"
#include "signanon/rng.hpp"

using namespace signanon;

TEST_CASE("warp with zero flow is the identity to machine precision") {
    const Grid content = gaussian_grid(3, 6, 5, 1, Space::image);
    const FlowField flow = FlowField::zero(6, 5);
    CHECK(max_abs_diff(warp(content, flow), content) == 0.0);
}

TEST_CASE("integer displacement shifts content with edge clamping") {
    Grid content(1, 4, 4, Space::image);
    DeterministicRng rng(2);
    for (double& v : content.data) v = rng.uniform();

    FlowField flow = FlowField::zero(4, 4);
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 4; ++x) flow.displacement.at(0, y, x) = 1.0; // sample source at x+1

    const Grid out = warp(content, flow);
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 4; ++x)
            CHECK(out.at(0, y, x) == content.at(0, y, std::min(x + 1, 3))); // index-shift oracle
}

TEST_CASE("constant content is invariant under any flow") {
    const Grid content = Grid::constant(2, 5, 5, 0.37);
    FlowField flow = FlowField::zero(5, 5);
    DeterministicRng rng(3);
    for (double& v : flow.displacement.data) v = (rng.uniform() - 0.5) * 20.0; // includes OOB
    CHECK(max_abs_diff(warp(content, flow), content) < 1e-15);
}

TEST_CASE("warp rejects mismatched flow shape") {
    CHECK_THROWS_AS(warp(Grid(1, 4, 4), FlowField::zero(4, 5)), std::invalid_argument);
}

TEST_CASE("resize_flow rescales displacement values by the resolution ratio") {
    FlowField flow = FlowField::zero(4, 4);
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 4; ++x) {
            flow.displacement.at(0, y, x) = 1.0;
            flow.displacement.at(1, y, x) = -2.0;
        }
    const FlowField up = resize_flow(flow, 8, 8);
    REQUIRE(up.height() == 8);
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x) {
            CHECK(up.dx(y, x) == Approx(2.0).margin(1e-12));
            CHECK(up.dy(y, x) == Approx(-4.0).margin(1e-12));
        }
    const FlowField down = resize_flow(flow, 2, 2);
    CHECK(down.dx(0, 0) == Approx(0.5).margin(1e-12));
    CHECK(down.dy(0, 0) == Approx(-1.0).margin(1e-12));
}

TEST_CASE("mask binarization and resize") {
    OcclusionMask m = OcclusionMask::zeros(2, 2);
    m.mask.at(0, 0, 0) = 0.2;
    m.mask.at(0, 0, 1) = 0.5;
    m.mask.at(0, 1, 0) = 0.7;
    const OcclusionMask b = binarize(m);
    CHECK(b.at(0, 0) == 0.0);
    CHECK(b.at(0, 1) == 1.0); // threshold is inclusive
    CHECK(b.at(1, 0) == 1.0);
    CHECK(b.at(1, 1) == 0.0);

    const OcclusionMask up = resize_mask(m, 4, 4);
    for (double v : up.mask.data) CHECK((v == 0.0 || v == 1.0));
}

TEST_CASE("forward-backward occlusion is exact on a constructed invertible shift") {
    const int n = 8;
    FlowField fwd = FlowField::zero(n, n);
    FlowField bwd = FlowField::zero(n, n);
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) {
            fwd.displacement.at(0, y, x) = -1.0; // content moved right by one
            bwd.displacement.at(0, y, x) = 1.0;
        }
    const OcclusionMask occ = occlusion_from_forward_backward(fwd, bwd, 1.0);
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) {
            if (x == 0)
                CHECK(occ.at(y, x) == 1.0); // flow target leaves the frame: disocclusion band
            else
                CHECK(occ.at(y, x) == 0.0);
        }
}

TEST_CASE("forward-backward occlusion flags inconsistent motion") {
    const int n = 6;
    FlowField fwd = FlowField::zero(n, n);
    FlowField bwd = FlowField::zero(n, n);
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) {
            fwd.displacement.at(0, y, x) = 2.0;
            bwd.displacement.at(0, y, x) = 1.5; // |2 + 1.5| = 3.5 > tau
        }
    const OcclusionMask occ = occlusion_from_forward_backward(fwd, bwd, 1.0);
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) CHECK(occ.at(y, x) == 1.0);
}
