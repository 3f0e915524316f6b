// Command-line front end: per-stage subcommands plus the experiment runner.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "samu/samu.hpp"

namespace fs = std::filesystem;
using namespace samu;

namespace {

std::vector<ProbabilityMap> load_map_dir(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw MissingFile("not a directory: " + dir.string());
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".pmap") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    if (files.empty()) throw InvalidArgument("no .pmap files in " + dir.string());
    std::vector<ProbabilityMap> maps;
    for (const auto& f : files) maps.push_back(load_probability_map(f));
    return maps;
}

std::ofstream open_text(const fs::path& p) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream f(p, std::ios::binary);
    if (!f) throw IoFailure("cannot write " + p.string());
    return f;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-box prompt augmentation, fusion, uncertainty maps and evaluation"};
    app.require_subcommand(1);

    // degrade
    auto* degrade_cmd = app.add_subcommand("degrade", "Apply a coded degradation to an image");
    std::string d_in, d_out, d_code = "001";
    DegradationParams d_params;
    degrade_cmd->add_option("--in", d_in, "input PNG/PGM")->required();
    degrade_cmd->add_option("--out", d_out, "output image")->required();
    degrade_cmd->add_option("--code", d_code, "three bits: illumination, blur, noise")->capture_default_str();
    degrade_cmd->add_option("--sigma", d_params.sigma_noise, "noise std")->capture_default_str();
    degrade_cmd->add_option("--blur-radius", d_params.blur_radius, "blur std as a fraction of min(w,h)")
        ->capture_default_str();
    degrade_cmd->add_option("--illum-strength", d_params.illum_strength, "periphery brightness factor")
        ->capture_default_str();
    degrade_cmd->add_option("--seed", d_params.seed, "random seed")->capture_default_str();

    // prompts
    auto* prompts_cmd = app.add_subcommand("prompts", "Jittered box prompts around a mask's bounding box");
    std::string p_mask, p_out;
    PromptConfig p_cfg;
    prompts_cmd->add_option("--mask", p_mask, "ground-truth mask")->required();
    prompts_cmd->add_option("--m", p_cfg.m, "number of prompts")->capture_default_str();
    prompts_cmd->add_option("--jitter", p_cfg.jitter_ratio, "jitter ratio")->capture_default_str();
    prompts_cmd->add_option("--seed", p_cfg.seed, "random seed")->capture_default_str();
    prompts_cmd->add_option("--out", p_out, "CSV output (x0,y0,x1,y1 per row)")->required();

    // fuse
    auto* fuse_cmd = app.add_subcommand("fuse", "Mean-fuse a directory of .pmap predictions");
    std::string f_in, f_out;
    fuse_cmd->add_option("--in", f_in, "directory of .pmap files")->required();
    fuse_cmd->add_option("--out", f_out, "fused .pmap")->required();

    // uncertainty
    auto* unc_cmd = app.add_subcommand("uncertainty", "Per-pixel uncertainty from a directory of .pmap predictions");
    std::string u_in, u_out, u_kind = "predictive", u_cmap = "viridis", u_png;
    unc_cmd->add_option("--in", u_in, "directory of .pmap files")->required();
    unc_cmd->add_option("--kind", u_kind, "predictive|expected|variance")->capture_default_str();
    unc_cmd->add_option("--out", u_out, "uncertainty .pmap")->required();
    unc_cmd->add_option("--colormap", u_cmap, "viridis|gray")->capture_default_str();
    unc_cmd->add_option("--png", u_png, "also render to this PNG");

    // score
    auto* score_cmd = app.add_subcommand("score", "Dice, ECE, S-measure and weighted F-measure of one map");
    std::string s_pred, s_gt, s_out;
    float s_threshold = kDefaultThreshold;
    score_cmd->add_option("--pred", s_pred, "prediction .pmap")->required();
    score_cmd->add_option("--gt", s_gt, "ground-truth mask")->required();
    score_cmd->add_option("--out", s_out, "JSON output (stdout when omitted)");
    score_cmd->add_option("--threshold", s_threshold, "binarization threshold for Dice")->capture_default_str();

    // evaluate
    auto* eval_cmd = app.add_subcommand("evaluate", "Run the mode x degradation grid over a dataset");
    std::string e_config, e_dataset, e_out, e_backend, e_backend_cmd, e_label;
    std::vector<std::string> e_modes, e_degs;
    std::optional<int> e_m, e_jobs;
    std::optional<double> e_jitter;
    std::optional<std::uint64_t> e_seed;
    bool e_timing = false, e_no_artifacts = false;
    eval_cmd->add_option("--config", e_config, "TOML config");
    eval_cmd->add_option("--dataset", e_dataset, "dataset directory (<stem>.png + <stem>_mask.pgm)");
    eval_cmd->add_option("--out", e_out, "output directory");
    eval_cmd->add_option("--mode", e_modes, "everything|box|multibox (repeatable)");
    eval_cmd->add_option("--degradation", e_degs, "clean|gaussian:<sigma>|code:<bits> (repeatable)");
    eval_cmd->add_option("--m", e_m, "prompts per image in multibox mode");
    eval_cmd->add_option("--jitter", e_jitter, "jitter ratio");
    eval_cmd->add_option("--seed", e_seed, "experiment seed");
    eval_cmd->add_option("--jobs", e_jobs, "worker threads");
    eval_cmd->add_option("--backend", e_backend, "synthetic|external")->check(CLI::IsMember({"synthetic", "external"}));
    eval_cmd->add_option("--backend-cmd", e_backend_cmd, "command line of the external backend");
    eval_cmd->add_option("--backend-label", e_label, "free-text backend label for reports");
    eval_cmd->add_flag("--timing", e_timing, "record wall time per run");
    eval_cmd->add_flag("--no-artifacts", e_no_artifacts, "skip raster artifacts");

    // gen-synth
    auto* gen_cmd = app.add_subcommand("gen-synth", "Write a synthetic fundus-like dataset");
    int g_n = 20;
    std::uint64_t g_seed = 7;
    std::string g_out;
    SynthConfig g_cfg;
    gen_cmd->add_option("--n", g_n, "number of images")->capture_default_str();
    gen_cmd->add_option("--size", g_cfg.size, "image side in pixels")->capture_default_str();
    gen_cmd->add_option("--seed", g_seed, "random seed")->capture_default_str();
    gen_cmd->add_option("--out", g_out, "output directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (degrade_cmd->parsed()) {
            const Image img = load_image(d_in);
            save_image(degrade(img, DegradationCode::parse(d_code), d_params), d_out);
        } else if (prompts_cmd->parsed()) {
            const BinaryMask mask = load_mask(p_mask);
            const auto boxes = jitter_boxes(gt_bounding_box(mask), p_cfg, mask.width(), mask.height());
            auto f = open_text(p_out);
            for (const auto& b : boxes) f << b.x0 << ',' << b.y0 << ',' << b.x1 << ',' << b.y1 << '\n';
        } else if (fuse_cmd->parsed()) {
            save_raster_f32(fuse_mean(PredictionSet::from_maps(load_map_dir(f_in))).raster(), f_out);
        } else if (unc_cmd->parsed()) {
            const auto kind = parse_uncertainty_kind(u_kind);
            const auto cmap = parse_colormap(u_cmap);
            const UncertaintyMap u = uncertainty(PredictionSet::from_maps(load_map_dir(u_in)), kind);
            save_raster_f32(u.values, u_out);
            if (!u_png.empty()) save_image(render_colormap(u.values, cmap), u_png);
            std::printf("mean %s uncertainty: %.6f\n", std::string(to_string(kind)).c_str(), u.mean());
        } else if (score_cmd->parsed()) {
            const MetricReport r = evaluate(load_probability_map(s_pred), load_mask(s_gt), s_threshold);
            char buf[256];
            std::snprintf(buf, sizeof buf, "{\"dice\": %.6f, \"ece\": %.6f, \"sm\": %.6f, \"wfm\": %.6f}\n", r.dice,
                          r.ece, r.sm, r.wfm);
            if (s_out.empty()) {
                std::fputs(buf, stdout);
            } else {
                auto f = open_text(s_out);
                f << buf;
            }
        } else if (eval_cmd->parsed()) {
            ExperimentConfig cfg = e_config.empty() ? ExperimentConfig{} : load_config(e_config);
            if (!e_dataset.empty()) cfg.dataset_dir = e_dataset;
            if (!e_out.empty()) cfg.out_dir = e_out;
            if (!e_modes.empty()) {
                cfg.modes.clear();
                for (const auto& m : e_modes) cfg.modes.push_back(parse_mode(m));
            }
            if (!e_degs.empty()) {
                cfg.degradations.clear();
                for (const auto& d : e_degs) cfg.degradations.push_back(DegradationSetting::parse(d));
            }
            if (e_m) cfg.prompts.m = *e_m;
            if (e_jitter) cfg.prompts.jitter_ratio = *e_jitter;
            if (e_seed) cfg.seed = *e_seed;
            if (e_jobs) cfg.jobs = *e_jobs;
            if (e_backend == "synthetic") cfg.backend.kind = BackendSpec::Kind::Synthetic;
            if (e_backend == "external") cfg.backend.kind = BackendSpec::Kind::External;
            if (!e_backend_cmd.empty()) cfg.backend.command = e_backend_cmd;
            if (!e_label.empty()) cfg.backend.label = e_label;
            if (e_timing) cfg.timing = true;
            if (e_no_artifacts) cfg.artifacts = false;
            if (cfg.dataset_dir.empty()) throw InvalidArgument("no dataset directory (use --dataset or [dataset] dir)");

            const ExperimentResult res = run_experiment(cfg);
            std::printf("%-16s %-11s %4s %9s %9s %9s %9s\n", "degradation", "mode", "n", "dice", "ece", "sm", "wfm");
            for (const auto& c : res.cells)
                std::printf("%-16s %-11s %4zu %9.4f %9.4f %9.4f %9.4f\n", c.degradation.c_str(),
                            to_string(c.mode).c_str(), c.n, c.mean.dice, c.mean.ece, c.mean.sm, c.mean.wfm);
            for (const auto& d : res.deltas)
                std::printf("%-16s %-11s      %+9.4f %9s %+9.4f %+9.4f\n", d.degradation.c_str(),
                            ("d(" + to_string(d.mode) + ")").c_str(), d.diff.dice,
                            detail::ece_delta(d.diff.ece).c_str(), d.diff.sm, d.diff.wfm);
            if (!res.failures.empty())
                std::fprintf(stderr, "%zu run(s) failed; see %s\n", res.failures.size(),
                             (cfg.out_dir / "failures.csv").c_str());
        } else if (gen_cmd->parsed()) {
            const auto stems = write_synthetic_dataset(g_out, g_n, g_seed, g_cfg);
            std::printf("wrote %zu image/mask pairs to %s\n", stems.size(), g_out.c_str());
        }
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "unexpected error: %s\n", e.what());
        return 2;
    }
    return 0;
}
