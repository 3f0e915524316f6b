#include "test_util.hpp"

using namespace samu;
using samu::testing::as_prob;
using samu::testing::disc_mask;
using samu::testing::random_mask;
using samu::testing::random_prob;
using samu::testing::TempDir;

namespace {

SyntheticOracle make_oracle(const BinaryMask& gt, double kappa = 4.0, std::uint64_t seed = 1) {
    OracleConfig c;
    c.gt = gt;
    c.kappa = kappa;
    c.seed = seed;
    return SyntheticOracle(c);
}

Image flat_image(int n, float v = 0.3f) { return Image(n, n, 1, v); }

std::string mock(const std::string& mode) { return std::string(SAMU_MOCK_BACKEND) + " " + mode; }

} // namespace

TEST(SelectBestMask, PerfectCandidateWins) {
    const BinaryMask gt = disc_mask(16, 8, 8, 4);
    const auto sel = select_best_mask({as_prob(gt), ProbabilityMap(Raster(16, 16))}, gt);
    EXPECT_EQ(sel.index, 0u);
    EXPECT_EQ(sel.dice, 1.0);
    EXPECT_EQ(sel.all_scores.size(), 2u);
}

TEST(SelectBestMask, TiesGoToLowestIndex) {
    std::mt19937_64 gen(1);
    const auto gt = random_mask(8, 8, gen);
    const auto c = random_prob(8, 8, gen);
    EXPECT_EQ(select_best_mask({ProbabilityMap(Raster(8, 8)), c, c}, gt).index,
              dice(binarize(c), gt) > 0.0 ? 1u : 0u);
}

TEST(SelectBestMask, MatchesBruteForceArgmax) {
    std::mt19937_64 gen(2);
    for (int t = 0; t < 50; ++t) {
        const auto gt = random_mask(8, 8, gen);
        std::vector<ProbabilityMap> cands;
        for (int i = 0; i < 3; ++i) cands.push_back(random_prob(8, 8, gen));
        std::size_t best = 0;
        double best_d = -1.0;
        for (std::size_t i = 0; i < cands.size(); ++i) {
            std::uint64_t inter = 0, a = 0, b = 0;
            for (std::size_t j = 0; j < gt.size(); ++j) {
                const bool p = cands[i][j] >= 0.5f;
                inter += p && gt[j];
                a += p;
                b += gt[j];
            }
            const double d = a + b == 0 ? 1.0 : 2.0 * inter / double(a + b);
            if (d > best_d) {
                best_d = d;
                best = i;
            }
        }
        const auto sel = select_best_mask(cands, gt);
        EXPECT_EQ(sel.index, best);
        for (double s : sel.all_scores) EXPECT_GE(sel.dice, s);
    }
}

TEST(SelectBestMask, Errors) {
    EXPECT_THROW(select_best_mask({}, BinaryMask(4, 4)), EmptyCandidateList);
    EXPECT_THROW(select_best_mask({ProbabilityMap(Raster(3, 4))}, BinaryMask(4, 4)), DimensionMismatch);
}

TEST(SyntheticOracle, ExactBoxOnCleanDiscIsAccurate) {
    const BinaryMask gt = disc_mask(128, 64, 60, 22);
    auto oracle = make_oracle(gt, 0.0);
    const auto p = oracle.predict(flat_image(128), gt_bounding_box(gt));
    EXPECT_GE(dice(binarize(p), gt), 0.95);
}

TEST(SyntheticOracle, BoxAwayFromObjectGivesZeros) {
    const BinaryMask gt = disc_mask(64, 16, 16, 6);
    auto oracle = make_oracle(gt, 4.0);
    const auto p = oracle.predict(flat_image(64), {40, 40, 60, 60});
    for (float v : p.values()) EXPECT_LE(v, 1e-6f);
}

TEST(SyntheticOracle, Deterministic) {
    const BinaryMask gt = disc_mask(48, 24, 24, 10);
    const Image img = add_gaussian_noise(flat_image(48, 0.5f), 0.1, 3);
    auto a = make_oracle(gt), b = make_oracle(gt);
    EXPECT_EQ(a.predict(img, {10, 10, 38, 38}), b.predict(img, {10, 10, 38, 38}));
    EXPECT_EQ(a.predict(img, {10, 10, 38, 38}), a.predict(img, {10, 10, 38, 38}));
    EXPECT_NE(a.predict(img, {10, 10, 38, 38}), a.predict(img, {11, 10, 38, 38}));
}

TEST(SyntheticOracle, DiceDropsWithNoiseLevel) {
    double mean[3] = {0, 0, 0};
    const double sigmas[3] = {0.0, 0.05, 0.10};
    for (std::uint64_t s = 0; s < 20; ++s) {
        const SynthSample smp = make_synthetic(static_cast<int>(s), 11);
        auto oracle = make_oracle(smp.mask, 4.0, s);
        const BoxPrompt box = gt_bounding_box(smp.mask);
        for (int k = 0; k < 3; ++k) {
            const Image img = add_gaussian_noise(smp.image, sigmas[k], 100 + s);
            mean[k] += dice(binarize(oracle.predict(img, box)), smp.mask) / 20.0;
        }
    }
    EXPECT_GT(mean[0], mean[1]);
    EXPECT_GT(mean[1], mean[2]);
}

TEST(SyntheticOracle, EverythingHasFourCandidatesAndSelectsTrueOne) {
    for (int i = 0; i < 5; ++i) {
        const SynthSample smp = make_synthetic(i, 3);
        auto oracle = make_oracle(smp.mask, 4.0, i);
        const auto cands = oracle.predict_everything(smp.image);
        ASSERT_EQ(cands.size(), 4u);
        for (std::size_t k = 1; k < cands.size(); ++k)
            EXPECT_LT(dice(binarize(cands[k]), smp.mask), SyntheticOracle::kDistractorMaxDice);
        EXPECT_EQ(select_best_mask(cands, smp.mask).index, 0u);
        EXPECT_EQ(oracle.predict_everything(smp.image), cands);
    }
}

TEST(SyntheticOracle, DoesNotMutateInputs) {
    const BinaryMask gt = disc_mask(32, 16, 16, 8);
    const Image img = add_gaussian_noise(flat_image(32), 0.05, 1);
    const Image copy = img;
    auto oracle = make_oracle(gt);
    (void)oracle.predict(img, {4, 4, 28, 28});
    EXPECT_EQ(img, copy);
    EXPECT_EQ(oracle.config().gt, gt);
}

TEST(DegradationLevel, GrowsWithNoise) {
    const Image img = flat_image(64, 0.5f);
    EXPECT_EQ(degradation_level(img), 0.0);
    EXPECT_LT(degradation_level(add_gaussian_noise(img, 0.05, 1)), degradation_level(add_gaussian_noise(img, 0.10, 1)));
}

TEST(Protocol, RequestLiterals) {
    EXPECT_EQ(format_predict_request("img.png", {10, 20, 50, 60}, "out.pmap"), "PREDICT img.png 10 20 50 60 out.pmap\n");
    EXPECT_EQ(format_predict_all_request("img.png", "cands"), "PREDICT_ALL img.png cands\n");
}

TEST(Protocol, ResponseParsing) {
    EXPECT_EQ(parse_response("OK out.pmap\n"), "out.pmap");
    try {
        parse_response("ERR no such file\n");
        FAIL() << "expected BackendError";
    } catch (const BackendError& e) {
        EXPECT_STREQ(e.what(), "no such file");
    }
    EXPECT_THROW(parse_response("OK\n"), ProtocolViolation);
    EXPECT_THROW(parse_response("DONE x\n"), ProtocolViolation);
}

TEST(ExternalBackend, ConstantMapRoundTrip) {
    TempDir tmp;
    ExternalBackend be({mock("ok"), tmp / "work", "mock"});
    const Image img = flat_image(20);
    const auto p = be.predict(img, {2, 3, 10, 12});
    ASSERT_EQ(p.width(), 20);
    for (float v : p.values()) EXPECT_EQ(v, 0.5f);
    const auto all = be.predict_everything(img);
    EXPECT_EQ(all.size(), 2u);
    EXPECT_EQ(be.label(), "mock");
}

TEST(ExternalBackend, ErrorsMapToTypes) {
    TempDir tmp;
    const Image img = flat_image(12);
    {
        ExternalBackend be({mock("err"), tmp / "e"});
        EXPECT_THROW(be.predict(img, {0, 0, 4, 4}), BackendError);
        EXPECT_THROW(be.predict(img, {0, 0, 4, 4}), BackendError);  // channel survives
    }
    {
        ExternalBackend be({mock("badmagic"), tmp / "m"});
        EXPECT_THROW(be.predict(img, {0, 0, 4, 4}), BadMagic);
    }
    {
        ExternalBackend be({mock("baddims"), tmp / "d"});
        EXPECT_THROW(be.predict(img, {0, 0, 4, 4}), DimensionMismatch);
    }
    {
        ExternalBackend be({mock("garbage"), tmp / "g"});
        EXPECT_THROW(be.predict(img, {0, 0, 4, 4}), ProtocolViolation);
    }
    {
        ExternalBackend be({mock("die"), tmp / "x"});
        EXPECT_THROW(be.predict(img, {0, 0, 4, 4}), BackendUnavailable);
    }
    {
        ExternalBackend be({"/nonexistent/backend-binary", tmp / "n"});
        EXPECT_THROW(be.predict(img, {0, 0, 4, 4}), BackendUnavailable);
    }
}
