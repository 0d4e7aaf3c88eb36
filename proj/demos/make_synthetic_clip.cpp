// Copyright (C) 2026 signanon contributors
// SPDX-License-Identifier: Apache-2.0
//
// Writes a textured moving-square test clip as a PNG frame directory, ready
// to feed to the `signanon` CLI:
//
//   make_synthetic_clip out_dir [frames] [size] [seed]
//   signanon --input out_dir --output anon_dir --prompt "..." --seed 7

#include <cstdio>
#include <cstdlib>
#include <string>

#include "signanon/image_io.hpp"
#include "signanon/synthetic.hpp"

int main(int argc, char** argv) {
    if (argc < 2) {
        std::fprintf(stderr, "usage: %s OUT_DIR [FRAMES=16] [SIZE=64] [SEED=42]\n", argv[0]);
        return 2;
    }
    const std::string out_dir = argv[1];
    const int frames = argc > 2 ? std::atoi(argv[2]) : 16;
    const int size = argc > 3 ? std::atoi(argv[3]) : 64;
    const uint64_t seed = argc > 4 ? std::strtoull(argv[4], nullptr, 10) : 42;

    try {
        const signanon::SyntheticClip clip = signanon::make_moving_square_clip(frames, size, size, seed);
        signanon::FrameSequence seq;
        seq.frames = clip.frames;
        seq.fps = 12.0;
        for (int i = 0; i < frames; ++i) {
            char name[32];
            std::snprintf(name, sizeof(name), "frame_%05d.png", i);
            seq.manifest.push_back({name, i, ""});
        }
        // checksums follow from the encoded files
        signanon::save_frame_sequence(out_dir, seq);
        signanon::FrameSequence reread = signanon::load_frame_sequence(out_dir);
        signanon::save_frame_sequence(out_dir, reread);
        std::printf("wrote %d %dx%d frames to %s\n", frames, size, size, out_dir.c_str());
        return 0;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
