#include <cstdlib>
#include <fstream>
#include <sstream>

#include "test_util.hpp"

using namespace samu;
using samu::testing::TempDir;

namespace {

std::string slurp(const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

std::vector<std::string> lines(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream in(s);
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
}

ExperimentConfig base_config(const TempDir& tmp, int n = 5) {
    write_synthetic_dataset(tmp / "data", n, 7);
    ExperimentConfig cfg;
    cfg.dataset_dir = tmp / "data";
    cfg.out_dir = tmp / "out";
    cfg.seed = 7;
    return cfg;
}

} // namespace

TEST(Dataset, ScanPairsAndSorts) {
    TempDir tmp;
    write_synthetic_dataset(tmp / "d", 3, 1);
    save_image(Image(4, 4, 1, 0.0f), tmp / "d" / "orphan.png");
    const auto items = scan_dataset(tmp / "d");
    ASSERT_EQ(items.size(), 3u);
    EXPECT_EQ(items[0].id, "synth_000");
    EXPECT_EQ(items[2].id, "synth_002");
}

TEST(Dataset, EmptyIsAnError) {
    TempDir tmp;
    std::filesystem::create_directories(tmp / "empty");
    ExperimentConfig cfg;
    cfg.dataset_dir = tmp / "empty";
    cfg.out_dir = tmp / "out";
    EXPECT_THROW(run_experiment(cfg), EmptyDataset);
    cfg.dataset_dir = tmp / "missing";
    EXPECT_THROW(run_experiment(cfg), EmptyDataset);
}

TEST(DegradationSetting, ParseAndLabel) {
    EXPECT_EQ(DegradationSetting::parse("clean").label(), "clean");
    EXPECT_EQ(DegradationSetting::parse("gaussian:0.05").label(), "gaussian:0.05");
    EXPECT_EQ(DegradationSetting::parse("gaussian:0.10").label(), "gaussian:0.1");
    EXPECT_EQ(DegradationSetting::parse("code:101").label(), "code:101");
    EXPECT_THROW(DegradationSetting::parse("gaussian:x"), InvalidArgument);
    EXPECT_THROW(DegradationSetting::parse("gaussian:-1"), InvalidArgument);
    EXPECT_THROW(DegradationSetting::parse("fog"), InvalidArgument);
}

TEST(RunImage, BoxOnCleanSyntheticIsAccurate) {
    const SynthSample s = make_synthetic(0, 7);
    ExperimentConfig cfg;
    cfg.artifacts = false;
    OracleConfig oc;
    oc.gt = s.mask;
    SyntheticOracle oracle(oc);
    const RunRecord r = run_image(cfg, Mode::Box, DegradationSetting::clean(), s.stem, s.image, s.mask, oracle);
    EXPECT_GE(r.metrics.dice, 0.95);
    EXPECT_EQ(r.m_used, 1);
}

TEST(RunImage, EverythingSelectsTrueCandidate) {
    ExperimentConfig cfg;
    cfg.artifacts = false;
    for (int i = 0; i < 5; ++i) {
        const SynthSample s = make_synthetic(i, 7);
        OracleConfig oc;
        oc.gt = s.mask;
        oc.seed = i;
        SyntheticOracle oracle(oc);
        const RunRecord r =
            run_image(cfg, Mode::Everything, DegradationSetting::clean(), s.stem, s.image, s.mask, oracle);
        ASSERT_TRUE(r.selected.has_value());
        EXPECT_EQ(*r.selected, 0u);
        EXPECT_EQ(r.m_used, 4);
    }
}

TEST(RunImage, ZeroJitterMultiboxCollapsesToBox) {
    const SynthSample s = make_synthetic(1, 7);
    ExperimentConfig cfg;
    cfg.artifacts = false;
    cfg.prompts.jitter_ratio = 0.0;
    OracleConfig oc;
    oc.gt = s.mask;
    oc.kappa = 0.0;
    SyntheticOracle oracle(oc);
    const auto box = run_image(cfg, Mode::Box, DegradationSetting::clean(), s.stem, s.image, s.mask, oracle);
    const auto multi = run_image(cfg, Mode::Multibox, DegradationSetting::clean(), s.stem, s.image, s.mask, oracle);
    EXPECT_NEAR(multi.metrics.dice, box.metrics.dice, 1e-6);
    EXPECT_EQ(multi.m_used, 8);
}

TEST(RunImage, WritesArtifacts) {
    TempDir tmp;
    const SynthSample s = make_synthetic(2, 7);
    ExperimentConfig cfg;
    cfg.out_dir = tmp.path();
    OracleConfig oc;
    oc.gt = s.mask;
    SyntheticOracle oracle(oc);
    run_image(cfg, Mode::Multibox, DegradationSetting::gaussian(0.05), s.stem, s.image, s.mask, oracle);
    const auto dir = tmp / s.stem;
    EXPECT_TRUE(std::filesystem::exists(dir / "multibox_gaussian-0.05_pred.pmap"));
    for (const char* k : {"predictive", "expected", "variance"}) {
        const std::string stem = std::string("multibox_gaussian-0.05_u_") + k;
        EXPECT_TRUE(std::filesystem::exists(dir / (stem + ".pmap")));
        EXPECT_TRUE(std::filesystem::exists(dir / (stem + ".png")));
    }
}

TEST(RunExperiment, RowAccountingAndDeltaRows) {
    TempDir tmp;
    ExperimentConfig cfg = base_config(tmp);
    cfg.modes = {Mode::Box, Mode::Multibox};
    cfg.artifacts = false;
    const auto res = run_experiment(cfg);
    EXPECT_EQ(res.runs.size(), 10u);
    EXPECT_TRUE(res.failures.empty());
    EXPECT_EQ(res.cells.size(), 2u);
    EXPECT_EQ(res.deltas.size(), 1u);

    const auto runs = lines(slurp(cfg.out_dir / "runs.csv"));
    ASSERT_EQ(runs.size(), 11u);
    EXPECT_EQ(runs[0], "image_id,mode,degradation,dice,ece,sm,wfm,m_used,wall_time_s");
    const auto agg = lines(slurp(cfg.out_dir / "aggregate.csv"));
    ASSERT_EQ(agg.size(), 4u);  // header + 2 data rows + 1 delta row
    EXPECT_NE(agg[3].find("delta(multibox-box)"), std::string::npos);
    EXPECT_TRUE(std::filesystem::exists(cfg.out_dir / "aggregate.json"));
}

TEST(RunExperiment, EceReductionIsParenthesized) {
    EXPECT_EQ(detail::ece_delta(-0.0125), "(0.012500)");
    EXPECT_EQ(detail::ece_delta(0.0125), "+0.012500");
}

TEST(RunExperiment, DeterministicAcrossRunsAndJobs) {
    TempDir tmp;
    ExperimentConfig cfg = base_config(tmp, 4);
    cfg.degradations = {DegradationSetting::clean(), DegradationSetting::gaussian(0.1)};
    run_experiment(cfg);
    const std::string a = slurp(cfg.out_dir / "runs.csv");
    const std::string pa = slurp(cfg.out_dir / "synth_001" / "multibox_gaussian-0.1_pred.pmap");
    cfg.out_dir = tmp / "out2";
    cfg.jobs = 3;
    run_experiment(cfg);
    EXPECT_EQ(slurp(cfg.out_dir / "runs.csv"), a);
    EXPECT_EQ(slurp(cfg.out_dir / "synth_001" / "multibox_gaussian-0.1_pred.pmap"), pa);
}

TEST(RunExperiment, BadImageIsRecordedNotFatal) {
    TempDir tmp;
    ExperimentConfig cfg = base_config(tmp, 3);
    cfg.artifacts = false;
    // A mask with no foreground makes the box modes fail for that image.
    save_mask(BinaryMask(128, 128, false), cfg.dataset_dir / "synth_001_mask.pgm");
    const auto res = run_experiment(cfg);
    EXPECT_EQ(res.runs.size() + res.failures.size(), 9u);
    EXPECT_FALSE(res.failures.empty());
    for (const auto& f : res.failures) EXPECT_EQ(f.image_id, "synth_001");
    for (const auto& r : res.runs) EXPECT_TRUE(r.metrics.finite());
    EXPECT_GE(lines(slurp(cfg.out_dir / "failures.csv")).size(), 2u);
}

TEST(RunExperiment, ExternalBackendErrorsDoNotAbort) {
    TempDir tmp;
    ExperimentConfig cfg = base_config(tmp, 2);
    cfg.modes = {Mode::Multibox};
    cfg.artifacts = false;
    cfg.backend.kind = BackendSpec::Kind::External;
    cfg.backend.command = std::string(SAMU_MOCK_BACKEND) + " err";
    auto res = run_experiment(cfg);
    EXPECT_TRUE(res.runs.empty());
    EXPECT_EQ(res.failures.size(), 2u);

    cfg.backend.command = std::string(SAMU_MOCK_BACKEND) + " ok";
    res = run_experiment(cfg);
    ASSERT_EQ(res.runs.size(), 2u);
    EXPECT_EQ(res.runs[0].m_used, 8);
}

TEST(Config, ParsesAllSections) {
    TempDir tmp;
    std::ofstream(tmp / "run.toml") << R"(
seed = 11
modes = ["box", "multibox"]
[dataset]
dir = "data"
[prompts]
m = 4
jitter = 0.2
[degradation]
settings = ["clean", "code:101"]
sigma_noise = 0.08
[backend]
kind = "external"
command = "my-backend --fast"
label = "vit-b"
[output]
dir = "results"
timing = true
jobs = 2
)";
    const auto cfg = load_config(tmp / "run.toml");
    EXPECT_EQ(cfg.seed, 11u);
    ASSERT_EQ(cfg.modes.size(), 2u);
    EXPECT_EQ(cfg.modes[1], Mode::Multibox);
    EXPECT_EQ(cfg.dataset_dir, tmp / "data");
    EXPECT_EQ(cfg.prompts.m, 4);
    EXPECT_DOUBLE_EQ(cfg.prompts.jitter_ratio, 0.2);
    ASSERT_EQ(cfg.degradations.size(), 2u);
    EXPECT_EQ(cfg.degradations[1].label(), "code:101");
    EXPECT_DOUBLE_EQ(cfg.degradation_params.sigma_noise, 0.08);
    EXPECT_EQ(cfg.backend.kind, BackendSpec::Kind::External);
    EXPECT_EQ(cfg.backend.command, "my-backend --fast");
    EXPECT_EQ(cfg.backend.label, "vit-b");
    EXPECT_EQ(cfg.out_dir, tmp / "results");
    EXPECT_TRUE(cfg.timing);
    EXPECT_EQ(cfg.jobs, 2);
}

TEST(Config, Errors) {
    TempDir tmp;
    EXPECT_THROW(load_config(tmp / "none.toml"), MissingFile);
    std::ofstream(tmp / "bad.toml") << "seed = [";
    EXPECT_THROW(load_config(tmp / "bad.toml"), InvalidArgument);
    std::ofstream(tmp / "type.toml") << "[prompts]\nm = \"eight\"\n";
    EXPECT_THROW(load_config(tmp / "type.toml"), InvalidArgument);
    std::ofstream(tmp / "mode.toml") << "modes = [\"sam\"]\n";
    EXPECT_THROW(load_config(tmp / "mode.toml"), InvalidArgument);
}

TEST(Cli, EndToEnd) {
    TempDir tmp;
    const std::string cli = SAMU_CLI;
    const auto run = [](const std::string& cmd) { return std::system((cmd + " > /dev/null").c_str()); };
    const std::string d = (tmp / "data").string(), o = (tmp / "out").string();
    ASSERT_EQ(run(cli + " gen-synth --n 2 --size 64 --seed 3 --out " + d), 0);
    ASSERT_EQ(run(cli + " prompts --mask " + d + "/synth_000_mask.pgm --m 3 --out " + (tmp / "b.csv").string()), 0);
    EXPECT_EQ(lines(slurp(tmp / "b.csv")).size(), 3u);
    ASSERT_EQ(run(cli + " degrade --in " + d + "/synth_000.png --out " + (tmp / "deg.png").string() +
                  " --code 101 --sigma 0.05 --seed 7"),
              0);
    ASSERT_EQ(run(cli + " evaluate --dataset " + d + " --out " + o + " --mode box --mode multibox"), 0);
    const std::string artifacts = o + "/synth_000";
    std::filesystem::create_directories(tmp / "maps");
    std::filesystem::copy_file(artifacts + "/box_clean_pred.pmap", tmp / "maps" / "a.pmap");
    std::filesystem::copy_file(artifacts + "/multibox_clean_pred.pmap", tmp / "maps" / "b.pmap");
    ASSERT_EQ(run(cli + " fuse --in " + (tmp / "maps").string() + " --out " + (tmp / "f.pmap").string()), 0);
    ASSERT_EQ(run(cli + " uncertainty --in " + (tmp / "maps").string() + " --kind variance --out " +
                  (tmp / "u.pmap").string() + " --png " + (tmp / "u.png").string()),
              0);
    ASSERT_EQ(run(cli + " score --pred " + (tmp / "f.pmap").string() + " --gt " + d + "/synth_000_mask.pgm --out " +
                  (tmp / "m.json").string()),
              0);
    const std::string json = slurp(tmp / "m.json");
    EXPECT_NE(json.find("\"dice\": 0."), std::string::npos);
    EXPECT_NE(json.find("\"wfm\": "), std::string::npos);
    // Errors exit non-zero without crashing.
    EXPECT_NE(run(cli + " score --pred " + (tmp / "nope.pmap").string() + " --gt " + d + "/synth_000_mask.pgm 2>/dev/null"), 0);
}
