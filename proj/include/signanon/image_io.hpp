// Copyright (C) 2026 signanon contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <png.h>

#include "json.hpp"
#include "signanon/pipeline.hpp"
#include "signanon/rng.hpp"
#include "signanon/tensor.hpp"

namespace signanon {

inline ImageGrid read_png(const std::string& path) {
    png_image img{};
    img.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&img, path.c_str()))
        throw std::runtime_error("read_png: cannot open '" + path + "': " + img.message);
    img.format = PNG_FORMAT_RGB;
    std::vector<png_byte> buffer(PNG_IMAGE_SIZE(img));
    if (!png_image_finish_read(&img, nullptr, buffer.data(), 0, nullptr)) {
        png_image_free(&img);
        throw std::runtime_error("read_png: failed to decode '" + path + "': " + img.message);
    }
    Grid out(3, static_cast<int>(img.height), static_cast<int>(img.width), Space::image);
    for (int y = 0; y < out.height; ++y)
        for (int x = 0; x < out.width; ++x)
            for (int c = 0; c < 3; ++c)
                out.at(c, y, x) = buffer[(static_cast<size_t>(y) * out.width + x) * 3 + c] / 255.0;
    return out;
}

/// Writes RGB8 (3-channel input) or gray (1-channel) PNG; values are clamped
/// to [0, 1] and rounded.
inline void write_png(const std::string& path, const ImageGrid& grid) {
    SIGNANON_CHECK(grid.channels == 3 || grid.channels == 1,
                   "write_png: expected 1 or 3 channels, got " << grid.channels);
    png_image img{};
    img.version = PNG_IMAGE_VERSION;
    img.width = static_cast<png_uint_32>(grid.width);
    img.height = static_cast<png_uint_32>(grid.height);
    img.format = grid.channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
    std::vector<png_byte> buffer(static_cast<size_t>(grid.width) * grid.height * grid.channels);
    for (int y = 0; y < grid.height; ++y)
        for (int x = 0; x < grid.width; ++x)
            for (int c = 0; c < grid.channels; ++c)
                buffer[(static_cast<size_t>(y) * grid.width + x) * grid.channels + c] =
                    static_cast<png_byte>(std::lround(clamp01(grid.at(c, y, x)) * 255.0));
    if (!png_image_write_to_file(&img, path.c_str(), 0, buffer.data(), 0, nullptr))
        throw std::runtime_error("write_png: failed to write '" + path + "': " + img.message);
}

inline std::string file_checksum(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("file_checksum: cannot open '" + path + "'");
    uint64_t h = kFnvOffset;
    char buf[4096];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0)
        h = fnv1a(buf, static_cast<size_t>(in.gcount()), h);
    char out[32];
    std::snprintf(out, sizeof(out), "fnv1a64:%016llx", static_cast<unsigned long long>(h));
    return out;
}

inline void write_manifest(const std::string& path, const FrameSequence& seq) {
    nlohmann::ordered_json j;
    j["version"] = 1;
    j["fps"] = seq.fps;
    j["frames"] = nlohmann::ordered_json::array();
    for (const FrameRecord& r : seq.manifest) {
        j["frames"].push_back({{"filename", r.filename},
                               {"index", r.index},
                               {"source_checksum", r.source_checksum}});
    }
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_manifest: cannot write '" + path + "'");
    out << j.dump(2) << "\n";
}

/// Loads the lexicographically ordered *.png frames from a directory.
/// A manifest.json next to them supplies fps when present.
inline FrameSequence load_frame_sequence(const std::string& dir, int max_frames = -1) {
    namespace fs = std::filesystem;
    SIGNANON_CHECK(fs::is_directory(dir), "load_frame_sequence: '" << dir << "' is not a directory");
    std::vector<std::string> names;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".png")
            names.push_back(entry.path().filename().string());
    }
    SIGNANON_CHECK(!names.empty(), "load_frame_sequence: no .png frames in '" << dir << "'");
    std::sort(names.begin(), names.end());
    if (max_frames > 0 && static_cast<int>(names.size()) > max_frames) names.resize(max_frames);

    FrameSequence seq;
    const fs::path manifest_path = fs::path(dir) / "manifest.json";
    if (fs::exists(manifest_path)) {
        std::ifstream in(manifest_path);
        const auto j = nlohmann::json::parse(in);
        if (j.contains("fps")) seq.fps = j["fps"].get<double>();
    }
    int index = 0;
    for (const std::string& name : names) {
        const std::string path = (fs::path(dir) / name).string();
        seq.frames.push_back(read_png(path));
        seq.manifest.push_back({name, index++, file_checksum(path)});
    }
    return seq;
}

/// Writes frames + manifest.json into `dir` (created if missing).
inline void save_frame_sequence(const std::string& dir, const FrameSequence& seq) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    SIGNANON_CHECK(seq.frames.size() == seq.manifest.size(),
                   "save_frame_sequence: manifest does not cover every frame");
    for (size_t i = 0; i < seq.frames.size(); ++i)
        write_png((fs::path(dir) / seq.manifest[i].filename).string(), seq.frames[i]);
    write_manifest((fs::path(dir) / "manifest.json").string(), seq);
}

} // namespace signanon
