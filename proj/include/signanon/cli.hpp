// Copyright (C) 2026 signanon contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "signanon/image_io.hpp"
#include "signanon/pipeline.hpp"

namespace signanon {

inline const char* schedule_kind_name(ScheduleKind k) {
    return k == ScheduleKind::linear_beta ? "linear_beta" : "cosine";
}

inline ScheduleKind schedule_kind_from_name(const std::string& name) {
    if (name == "linear_beta") return ScheduleKind::linear_beta;
    if (name == "cosine") return ScheduleKind::cosine;
    throw std::invalid_argument("unknown schedule kind '" + name + "' (linear_beta | cosine)");
}

inline nlohmann::ordered_json config_to_json(const PipelineConfig& c) {
    nlohmann::ordered_json j;
    j["prompt"] = c.prompt;
    j["strength"] = c.strength;
    j["steps"] = c.steps;
    j["seed"] = c.seed;
    if (c.anchor_index < 0)
        j["anchor"] = "auto";
    else
        j["anchor"] = c.anchor_index;
    j["stage1"] = {c.stage1.lo, c.stage1.hi};
    j["stage2"] = {c.stage2.lo, c.stage2.hi};
    j["face_enhance"] = c.face_enhance;
    j["max_frames"] = c.max_frames;
    j["fidelity_correction_steps"] = c.fidelity_correction_steps;
    j["face_crop_resolution"] = c.face_crop_resolution;
    j["face_margin"] = c.face_margin;
    j["face_feather_px"] = c.face_feather_px;
    j["guidance_scale"] = c.guidance_scale;
    j["flow_consistency_tau"] = c.flow_consistency_tau;
    j["schedule"] = {{"kind", schedule_kind_name(c.schedule_kind)},
                     {"beta_start", c.schedule_params.beta_start},
                     {"beta_end", c.schedule_params.beta_end},
                     {"cosine_offset", c.schedule_params.cosine_offset}};
    j["attention_sites"] = c.attention_sites;
    j["backbones"] = c.backbones;
    j["backbone_options"] = c.backbone_options;
    return j;
}

/// Overlay semantics: only keys present in the JSON override `c`.
inline void apply_config_json(PipelineConfig& c, const nlohmann::json& j) {
    if (j.contains("prompt")) c.prompt = j["prompt"].get<std::string>();
    if (j.contains("strength")) c.strength = j["strength"].get<double>();
    if (j.contains("steps")) c.steps = j["steps"].get<int>();
    if (j.contains("seed")) c.seed = j["seed"].get<uint64_t>();
    if (j.contains("anchor")) {
        if (j["anchor"].is_string()) {
            SIGNANON_CHECK(j["anchor"] == "auto", "config: anchor must be an index or \"auto\"");
            c.anchor_index = -1;
        } else {
            c.anchor_index = j["anchor"].get<int>();
        }
    }
    auto window = [](const nlohmann::json& v, const char* name) {
        SIGNANON_CHECK(v.is_array() && v.size() == 2, "config: " << name << " must be [lo, hi]");
        return StageWindow{v[0].get<double>(), v[1].get<double>()};
    };
    if (j.contains("stage1")) c.stage1 = window(j["stage1"], "stage1");
    if (j.contains("stage2")) c.stage2 = window(j["stage2"], "stage2");
    if (j.contains("face_enhance")) c.face_enhance = j["face_enhance"].get<bool>();
    if (j.contains("max_frames")) c.max_frames = j["max_frames"].get<int>();
    if (j.contains("fidelity_correction_steps"))
        c.fidelity_correction_steps = j["fidelity_correction_steps"].get<int>();
    if (j.contains("face_crop_resolution")) c.face_crop_resolution = j["face_crop_resolution"].get<int>();
    if (j.contains("face_margin")) c.face_margin = j["face_margin"].get<double>();
    if (j.contains("face_feather_px")) c.face_feather_px = j["face_feather_px"].get<int>();
    if (j.contains("guidance_scale")) c.guidance_scale = j["guidance_scale"].get<double>();
    if (j.contains("flow_consistency_tau")) c.flow_consistency_tau = j["flow_consistency_tau"].get<double>();
    if (j.contains("schedule")) {
        const auto& s = j["schedule"];
        if (s.contains("kind")) c.schedule_kind = schedule_kind_from_name(s["kind"].get<std::string>());
        if (s.contains("beta_start")) c.schedule_params.beta_start = s["beta_start"].get<double>();
        if (s.contains("beta_end")) c.schedule_params.beta_end = s["beta_end"].get<double>();
        if (s.contains("cosine_offset")) c.schedule_params.cosine_offset = s["cosine_offset"].get<double>();
    }
    if (j.contains("attention_sites"))
        c.attention_sites = j["attention_sites"].get<std::vector<std::string>>();
    if (j.contains("backbones"))
        for (const auto& [k, v] : j["backbones"].items()) c.backbones[k] = v.get<std::string>();
    if (j.contains("backbone_options"))
        for (const auto& [k, v] : j["backbone_options"].items())
            for (const auto& [ok, ov] : v.items()) c.backbone_options[k][ok] = ov.get<std::string>();
}

namespace detail {

inline StageWindow parse_stage_window(const std::string& s, const char* name) {
    const auto colon = s.find(':');
    SIGNANON_CHECK(colon != std::string::npos, name << " must be LO:HI, got '" << s << "'");
    try {
        return {std::stod(s.substr(0, colon)), std::stod(s.substr(colon + 1))};
    } catch (const std::exception&) {
        throw std::invalid_argument(std::string(name) + " must be LO:HI, got '" + s + "'");
    }
}

inline int parse_anchor(const std::string& s) {
    if (s == "auto") return -1;
    try {
        const int v = std::stoi(s);
        SIGNANON_CHECK(v >= 0, "--anchor must be a non-negative index or 'auto'");
        return v;
    } catch (const std::invalid_argument&) {
        throw;
    } catch (const std::exception&) {
        throw std::invalid_argument("--anchor must be an index or 'auto', got '" + s + "'");
    }
}

inline void apply_backbone_kv(PipelineConfig& c, const std::string& kv) {
    const auto eq = kv.find('=');
    SIGNANON_CHECK(eq != std::string::npos && eq > 0 && eq + 1 < kv.size(),
                   "--backbone expects NAME=KIND, got '" << kv << "'");
    const std::string key = kv.substr(0, eq);
    static const char* known[] = {"denoiser",      "autoencoder", "edge",        "flow",
                                  "face_detector", "face_parser", "face_motion", "face_generator"};
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    SIGNANON_CHECK(ok, "--backbone: unknown interface '"
                           << key
                           << "' (denoiser, autoencoder, edge, flow, face_detector, face_parser, "
                              "face_motion, face_generator)");
    c.backbones[key] = kv.substr(eq + 1);
}

} // namespace detail

/// Full command-line entry point. Exit codes: 0 success, 1 runtime failure,
/// 2 usage error. Flags override the config file, which overrides defaults.
inline int run_cli(int argc, const char* const* argv) {
    CLI::App app{"Zero-shot text-guided sign language video anonymization"};
    app.get_formatter()->column_width(34);

    std::string input_dir, output_dir, prompt, config_file;
    std::string anchor_str, stage1_str, stage2_str;
    uint64_t seed = 0;
    int steps = 0, max_frames = 0;
    double strength = 0.0;
    bool no_face_enhance = false;
    std::vector<std::string> backbone_kvs;

    app.add_option("--input", input_dir, "Input directory of lexicographically ordered .png frames")
        ->required();
    app.add_option("--output", output_dir, "Output directory for frames, manifest and run report")
        ->required();
    app.add_option("--prompt", prompt, "Text prompt describing the target identity/style")->required();
    app.add_option("--config", config_file, "JSON config file (flags override file values)");
    auto* seed_opt = app.add_option("--seed", seed, "Master seed; per-frame seeds are seed XOR index");
    auto* steps_opt = app.add_option("--steps", steps, "Number of diffusion steps T");
    auto* strength_opt = app.add_option("--strength", strength, "Noising strength in (0, 1]");
    auto* anchor_opt = app.add_option("--anchor", anchor_str, "Anchor frame index or 'auto' (middle)");
    auto* stage1_opt = app.add_option("--stage1", stage1_str, "Stage-1 fusion window LO:HI over t/T");
    auto* stage2_opt = app.add_option("--stage2", stage2_str, "Stage-2 fusion window LO:HI over t/T");
    app.add_flag("--no-face-enhance", no_face_enhance, "Disable the face enhancement stage (ablation)");
    app.add_option("--backbone", backbone_kvs, "Backbone selection NAME=KIND (repeatable)");
    auto* max_frames_opt = app.add_option("--max-frames", max_frames, "Frame-count cap (default 180)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        std::cout << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n\n" << app.help();
        return 2;
    }

    PipelineConfig config;
    BackboneSet backbones;
    try {
        if (!config_file.empty()) {
            std::ifstream in(config_file);
            SIGNANON_CHECK(in.good(), "cannot open config file '" << config_file << "'");
            apply_config_json(config, nlohmann::json::parse(in));
        }
        config.prompt = prompt;
        if (*seed_opt) config.seed = seed;
        if (*steps_opt) config.steps = steps;
        if (*strength_opt) config.strength = strength;
        if (*anchor_opt) config.anchor_index = detail::parse_anchor(anchor_str);
        if (*stage1_opt) config.stage1 = detail::parse_stage_window(stage1_str, "--stage1");
        if (*stage2_opt) config.stage2 = detail::parse_stage_window(stage2_str, "--stage2");
        if (no_face_enhance) config.face_enhance = false;
        if (*max_frames_opt) config.max_frames = max_frames;
        for (const std::string& kv : backbone_kvs) detail::apply_backbone_kv(config, kv);
        config.validate();
        backbones = make_backbones(config); // unknown kinds / bad options are usage errors
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n\n" << app.help();
        return 2;
    }

    try {
        const FrameSequence input = load_frame_sequence(input_dir, config.max_frames);
        RunResult run = anonymize_video(input, config, backbones);
        save_frame_sequence(output_dir, run.output);

        nlohmann::ordered_json report;
        report["config"] = config_to_json(run.report.effective_config);
        report["anchor"] = run.report.anchor;
        report["frames"] = run.output.frames.size();
        report["frame_ms"] = run.report.frame_ms;
        report["warnings"] = run.report.warnings;
        report["determinism"] = run.report.determinism_note;
        std::ofstream rep((std::filesystem::path(output_dir) / "run_report.json").string());
        rep << report.dump(2) << "\n";

        for (const std::string& w : run.report.warnings) std::cerr << "warning: " << w << "\n";
        std::cout << "wrote " << run.output.frames.size() << " frames to " << output_dir << "\n";
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

} // namespace signanon
