// Copyright (C) 2026 signanon contributors
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch.hpp>
#include <filesystem>
#include <fstream>

#include "signanon/cli.hpp"
#include "signanon/synthetic.hpp"

using namespace signanon;
namespace fs = std::filesystem;

namespace {

int cli(std::vector<std::string> args) {
    args.insert(args.begin(), "signanon");
    std::vector<const char*> argv;
    for (const std::string& a : args) argv.push_back(a.c_str());
    return run_cli(static_cast<int>(argv.size()), argv.data());
}

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

fs::path write_clip(const std::string& name, int frames = 3, int size = 16) {
    const fs::path dir = fresh_dir(name);
    const SyntheticClip clip = make_moving_square_clip(frames, size, size, 9, 4, 2, 1, 2, 2);
    for (int i = 0; i < frames; ++i) {
        char fname[32];
        std::snprintf(fname, sizeof(fname), "frame_%05d.png", i);
        write_png((dir / fname).string(), clip.frames[i]);
    }
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

} // namespace

TEST_CASE("cli happy path writes frames, manifest and report") {
    const fs::path in = write_clip("signanon_cli_in");
    const fs::path out = fresh_dir("signanon_cli_out");
    const int rc = cli({"--input", in.string(), "--output", out.string(), "--prompt",
                        "a woman in Chinese ink wash painting is making gestures", "--seed", "7",
                        "--steps", "6", "--max-frames", "3"});
    REQUIRE(rc == 0);
    CHECK(fs::exists(out / "frame_00000.png"));
    CHECK(fs::exists(out / "frame_00002.png"));
    CHECK(fs::exists(out / "manifest.json"));
    CHECK(fs::exists(out / "run_report.json"));

    const auto manifest = nlohmann::json::parse(slurp(out / "manifest.json"));
    CHECK(manifest["version"] == 1);
    CHECK(manifest["frames"].size() == 3);
    CHECK(manifest["frames"][0]["filename"] == "frame_00000.png");
    CHECK(manifest["frames"][0]["index"] == 0);

    const auto report = nlohmann::json::parse(slurp(out / "run_report.json"));
    CHECK(report["config"]["seed"] == 7);
    CHECK(report["config"]["steps"] == 6);
    CHECK(report["frame_ms"].size() == 3);
}

TEST_CASE("cli help exits cleanly") { CHECK(cli({"--help"}) == 0); }

TEST_CASE("cli usage errors exit with code 2") {
    CHECK(cli({"--nonsense"}) == 2);
    CHECK(cli({"--input", "x"}) == 2); // missing required --output/--prompt
    const fs::path in = write_clip("signanon_cli_usage");
    const fs::path out = fresh_dir("signanon_cli_usage_out");
    CHECK(cli({"--input", in.string(), "--output", out.string(), "--prompt", "p", "--stage1",
               "half"}) == 2);
    CHECK(cli({"--input", in.string(), "--output", out.string(), "--prompt", "p", "--anchor",
               "middle"}) == 2);
    CHECK(cli({"--input", in.string(), "--output", out.string(), "--prompt", "p", "--backbone",
               "warpdrive=toy"}) == 2);
    CHECK(cli({"--input", in.string(), "--output", out.string(), "--prompt", "p", "--strength",
               "1.5"}) == 2);
}

TEST_CASE("cli runtime failures exit with code 1") {
    const fs::path out = fresh_dir("signanon_cli_rt_out");
    CHECK(cli({"--input", "/no/such/dir", "--output", out.string(), "--prompt", "p"}) == 1);
}

TEST_CASE("flags override the config file which overrides defaults") {
    const fs::path in = write_clip("signanon_cli_cfg");
    const fs::path out = fresh_dir("signanon_cli_cfg_out");
    const fs::path cfg = out / "cfg.json";
    std::ofstream(cfg) << R"({"steps": 3, "strength": 0.5, "face_enhance": false})";

    const int rc = cli({"--input", in.string(), "--output", out.string(), "--prompt", "p",
                        "--config", cfg.string(), "--steps", "2"});
    REQUIRE(rc == 0);
    const auto report = nlohmann::json::parse(slurp(out / "run_report.json"));
    CHECK(report["config"]["steps"] == 2);          // flag wins
    CHECK(report["config"]["strength"] == 0.5);     // file wins over default
    CHECK(report["config"]["face_enhance"] == false);
}

TEST_CASE("backbone selection flag reaches the effective config") {
    const fs::path in = write_clip("signanon_cli_bb");
    const fs::path out = fresh_dir("signanon_cli_bb_out");
    const int rc = cli({"--input", in.string(), "--output", out.string(), "--prompt", "p",
                        "--steps", "4", "--backbone", "autoencoder=pooled"});
    REQUIRE(rc == 0);
    const auto report = nlohmann::json::parse(slurp(out / "run_report.json"));
    CHECK(report["config"]["backbones"]["autoencoder"] == "pooled");

    // unknown backbone KIND is a usage error
    CHECK(cli({"--input", in.string(), "--output", out.string(), "--prompt", "p", "--backbone",
               "denoiser=imaginary"}) == 2);
}

TEST_CASE("no-face-enhance ablation flag is honored") {
    const fs::path in = write_clip("signanon_cli_abl");
    const fs::path out = fresh_dir("signanon_cli_abl_out");
    const int rc = cli({"--input", in.string(), "--output", out.string(), "--prompt", "p",
                        "--steps", "4", "--no-face-enhance"});
    REQUIRE(rc == 0);
    const auto report = nlohmann::json::parse(slurp(out / "run_report.json"));
    CHECK(report["config"]["face_enhance"] == false);
}

TEST_CASE("two identical cli runs produce byte-identical frames and manifests") {
    const fs::path in = write_clip("signanon_cli_det");
    const fs::path out1 = fresh_dir("signanon_cli_det1");
    const fs::path out2 = fresh_dir("signanon_cli_det2");
    const std::vector<std::string> base = {"--input", in.string(), "--prompt", "det probe",
                                           "--seed", "7", "--steps", "5"};
    auto with_out = [&](const fs::path& o) {
        std::vector<std::string> v = base;
        v.push_back("--output");
        v.push_back(o.string());
        return v;
    };
    REQUIRE(cli(with_out(out1)) == 0);
    REQUIRE(cli(with_out(out2)) == 0);

    CHECK(slurp(out1 / "manifest.json") == slurp(out2 / "manifest.json"));
    for (int i = 0; i < 3; ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "frame_%05d.png", i);
        const std::string a = slurp(out1 / name);
        const std::string b = slurp(out2 / name);
        CHECK(!a.empty());
        CHECK(a == b);
    }
}
