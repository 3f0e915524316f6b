#pragma once

// TOML experiment configuration.
//
//   seed  = 7
//   modes = ["everything", "box", "multibox"]
//   [dataset]     dir = "data"
//   [prompts]     m = 8, jitter = 0.1
//   [degradation] settings = ["clean", "gaussian:0.05", "code:101"]
//                 sigma_noise, blur_radius, illum_strength
//   [backend]     kind = "synthetic" | "external", command, label,
//                 sigma_blur, kappa, distractors
//   [output]      dir = "out", artifacts = true, timing = false, jobs = 1
//
// Relative paths resolve against the directory holding the config file.

#include <filesystem>
#include <string>

#define TOML_EXCEPTIONS 1
#include <toml.hpp>

#include "samu/harness.hpp"

namespace samu {

namespace detail {

template <typename T>
void read_into(const toml::node_view<const toml::node>& node, T& out, const char* key) {
    if (!node) return;
    if constexpr (std::is_same_v<T, bool>) {
        if (auto v = node.value<bool>()) { out = *v; return; }
    } else if constexpr (std::is_integral_v<T>) {
        if (auto v = node.value<std::int64_t>()) {
            if constexpr (std::is_unsigned_v<T>) {
                if (*v < 0) throw InvalidArgument(std::string("config key '") + key + "' must be >= 0");
            }
            out = static_cast<T>(*v);
            return;
        }
    } else if constexpr (std::is_floating_point_v<T>) {
        if (auto v = node.value<double>()) { out = static_cast<T>(*v); return; }
    } else {
        if (auto v = node.value<std::string>()) { out = *v; return; }
    }
    throw InvalidArgument(std::string("config key '") + key + "' has the wrong type");
}

inline std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    const std::filesystem::path path(p);
    return path.is_absolute() ? path : base / path;
}

} // namespace detail

inline ExperimentConfig parse_config(const toml::table& tbl, const std::filesystem::path& base_dir = ".") {
    using detail::read_into;
    ExperimentConfig cfg;
    const toml::node_view<const toml::node> root{tbl};

    read_into(root["seed"], cfg.seed, "seed");
    if (const auto* arr = tbl["modes"].as_array()) {
        cfg.modes.clear();
        for (const auto& m : *arr) {
            const auto s = m.value<std::string>();
            if (!s) throw InvalidArgument("config 'modes' must hold strings");
            cfg.modes.push_back(parse_mode(*s));
        }
    }

    std::string dir;
    read_into(root["dataset"]["dir"], dir, "dataset.dir");
    if (!dir.empty()) cfg.dataset_dir = detail::resolve(base_dir, dir);

    read_into(root["prompts"]["m"], cfg.prompts.m, "prompts.m");
    read_into(root["prompts"]["jitter"], cfg.prompts.jitter_ratio, "prompts.jitter");

    const auto deg = root["degradation"];
    if (const auto* arr = deg["settings"].as_array()) {
        cfg.degradations.clear();
        for (const auto& d : *arr) {
            const auto s = d.value<std::string>();
            if (!s) throw InvalidArgument("config 'degradation.settings' must hold strings");
            cfg.degradations.push_back(DegradationSetting::parse(*s));
        }
    }
    read_into(deg["sigma_noise"], cfg.degradation_params.sigma_noise, "degradation.sigma_noise");
    read_into(deg["blur_radius"], cfg.degradation_params.blur_radius, "degradation.blur_radius");
    read_into(deg["illum_strength"], cfg.degradation_params.illum_strength, "degradation.illum_strength");

    const auto be = root["backend"];
    std::string kind = "synthetic";
    read_into(be["kind"], kind, "backend.kind");
    if (kind == "synthetic")
        cfg.backend.kind = BackendSpec::Kind::Synthetic;
    else if (kind == "external")
        cfg.backend.kind = BackendSpec::Kind::External;
    else
        throw InvalidArgument("backend.kind must be synthetic or external, got '" + kind + "'");
    read_into(be["command"], cfg.backend.command, "backend.command");
    read_into(be["label"], cfg.backend.label, "backend.label");
    read_into(be["sigma_blur"], cfg.backend.sigma_blur, "backend.sigma_blur");
    read_into(be["kappa"], cfg.backend.kappa, "backend.kappa");
    read_into(be["distractors"], cfg.backend.distractors, "backend.distractors");

    const auto out = root["output"];
    std::string out_dir;
    read_into(out["dir"], out_dir, "output.dir");
    if (!out_dir.empty()) cfg.out_dir = detail::resolve(base_dir, out_dir);
    read_into(out["artifacts"], cfg.artifacts, "output.artifacts");
    read_into(out["timing"], cfg.timing, "output.timing");
    read_into(out["jobs"], cfg.jobs, "output.jobs");
    return cfg;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw MissingFile("config not found: " + path.string());
    toml::table tbl;
    try {
        tbl = toml::parse_file(path.string());
    } catch (const toml::parse_error& e) {
        throw InvalidArgument("config parse error in " + path.string() + ": " + std::string(e.description()));
    }
    return parse_config(tbl, path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path());
}

} // namespace samu
