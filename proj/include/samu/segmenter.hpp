#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "samu/filters.hpp"
#include "samu/fusion.hpp"
#include "samu/imaging.hpp"
#include "samu/metrics.hpp"
#include "samu/prompts.hpp"
#include "samu/random.hpp"

namespace samu {

/// A promptable segmenter: one probability map per (image, box), plus an
/// unprompted mode that proposes several candidate masks.
///
/// Implementations must return maps with the image's dimensions and must be
/// deterministic in (image, box, configuration). Instances are not assumed
/// to be reentrant; run one per worker.
class SegmenterBackend {
public:
    virtual ~SegmenterBackend() = default;

    virtual ProbabilityMap predict(const Image& image, const BoxPrompt& box) = 0;
    virtual std::vector<ProbabilityMap> predict_everything(const Image& image) = 0;
    virtual std::string label() const = 0;
};

struct MaskSelection {
    std::size_t index = 0;
    double dice = 0.0;
    std::vector<double> all_scores;
};

/// Picks the candidate with the highest Dice against `gt` after binarizing
/// at `threshold`; ties go to the lowest index.
///
/// This uses the ground truth, so it is an evaluation protocol for the
/// unprompted mode, not a prediction-time procedure.
inline MaskSelection select_best_mask(const std::vector<ProbabilityMap>& candidates,
                                      const BinaryMask& gt, float threshold = kDefaultThreshold) {
    if (candidates.empty()) throw EmptyCandidateList("no candidate masks to select from");
    MaskSelection sel;
    sel.all_scores.reserve(candidates.size());
    for (const auto& c : candidates) {
        require_same_size(c, gt, "select_best_mask");
        sel.all_scores.push_back(dice(binarize(c, threshold), gt));
    }
    const auto best = std::max_element(sel.all_scores.begin(), sel.all_scores.end());
    sel.index = static_cast<std::size_t>(best - sel.all_scores.begin());
    sel.dice = *best;
    return sel;
}

/// Mean absolute 4-neighbour Laplacian of the gray image (replicated
/// borders). Grows with sensor noise and fine texture.
inline double degradation_level(const Image& image) {
    const Image gray = to_gray(image);
    const int w = gray.width(), h = gray.height();
    auto at = [&](int x, int y) {
        return static_cast<double>(gray(std::clamp(x, 0, w - 1), std::clamp(y, 0, h - 1)));
    };
    double acc = 0.0;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            acc += std::abs(4.0 * at(x, y) - at(x - 1, y) - at(x + 1, y) - at(x, y - 1) - at(x, y + 1));
    return acc / (static_cast<double>(w) * h);
}

struct OracleConfig {
    BinaryMask gt;
    double sigma_blur = 1.5;
    double kappa = 4.0;
    double window_margin = 0.05;  ///< box dilation per edge, as a fraction of the side
    int distractors = 3;
    std::uint64_t seed = 0;
};

/// Test backend that "knows" the ground truth.
///
///   p = clamp(blur(gt, sigma_blur) · window(box) + kappa · q · eta, 0, 1)
///
/// window(box) is the box dilated by window_margin of its side, q is
/// degradation_level(image) and eta ~ U(-0.5, 0.5) per pixel from a stream
/// keyed by (seed, box), so distinct prompts see independent noise.
class SyntheticOracle final : public SegmenterBackend {
public:
    explicit SyntheticOracle(OracleConfig cfg)
        : cfg_(std::move(cfg)), blurred_(gaussian_blur(cfg_.gt.raster(), cfg_.sigma_blur)) {
        if (!(cfg_.sigma_blur >= 0.0)) throw InvalidArgument("oracle sigma_blur must be >= 0");
        if (!(cfg_.kappa >= 0.0)) throw InvalidArgument("oracle kappa must be >= 0");
        if (cfg_.distractors < 0) throw InvalidArgument("oracle distractor count must be >= 0");
    }

    const OracleConfig& config() const noexcept { return cfg_; }

    ProbabilityMap predict(const Image& image, const BoxPrompt& box) override {
        require_same_size(image, cfg_.gt, "oracle predict");
        const int w = image.width(), h = image.height();
        if (!box.valid_for(w, h)) throw InvalidArgument("box prompt outside the image");

        const double mx = cfg_.window_margin * box.width();
        const double my = cfg_.window_margin * box.height();
        const int wx0 = std::max(0, static_cast<int>(std::floor(box.x0 - mx)));
        const int wx1 = std::min(w, static_cast<int>(std::ceil(box.x1 + mx)));
        const int wy0 = std::max(0, static_cast<int>(std::floor(box.y0 - my)));
        const int wy1 = std::min(h, static_cast<int>(std::ceil(box.y1 + my)));

        const double gain = cfg_.kappa * degradation_level(image);
        Rng rng(derive_seed(cfg_.seed, hash_string("oracle-noise"), box.x0, box.y0, box.x1, box.y1));
        Raster out(w, h);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                const bool inside = x >= wx0 && x < wx1 && y >= wy0 && y < wy1;
                double v = inside ? blurred_(x, y) : 0.0;
                if (gain > 0.0) v += gain * (rng.uniform() - 0.5);
                out(x, y) = static_cast<float>(std::clamp(v, 0.0, 1.0));
            }
        return ProbabilityMap(std::move(out));
    }

    /// Candidate 0 is the full-image-box prediction; the rest are blurred
    /// random blobs placed away from the object (Dice < 0.3 against gt).
    std::vector<ProbabilityMap> predict_everything(const Image& image) override {
        std::vector<ProbabilityMap> out;
        out.push_back(predict(image, BoxPrompt::full(image.width(), image.height())));
        for (int k = 0; k < cfg_.distractors; ++k) out.push_back(distractor(k));
        return out;
    }

    std::string label() const override { return "synthetic"; }

    static constexpr double kDistractorMaxDice = 0.3;

private:
    BinaryMask blob(Rng& rng) const {
        const int w = cfg_.gt.width(), h = cfg_.gt.height();
        const double scale = std::min(w, h);
        const double r0 = rng.uniform(0.04, 0.10) * scale;
        const double cx = rng.uniform(0.0, w), cy = rng.uniform(0.0, h);
        // A few overlapping discs; each is centred inside its predecessor's
        // radius so the union stays connected.
        struct Disc { double x, y, r; };
        std::vector<Disc> discs{{cx, cy, r0}};
        for (int i = 0; i < 3; ++i) {
            const Disc& prev = discs.back();
            const double ang = rng.uniform(0.0, 2.0 * M_PI);
            const double off = rng.uniform(0.3, 0.9) * prev.r;
            discs.push_back({prev.x + off * std::cos(ang), prev.y + off * std::sin(ang),
                             rng.uniform(0.5, 1.0) * r0});
        }
        Raster m(w, h);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                for (const auto& d : discs) {
                    const double dx = x + 0.5 - d.x, dy = y + 0.5 - d.y;
                    if (dx * dx + dy * dy <= d.r * d.r) {
                        m(x, y) = 1.0f;
                        break;
                    }
                }
        return BinaryMask(std::move(m));
    }

    ProbabilityMap distractor(int k) const {
        Rng rng(derive_seed(cfg_.seed, hash_string("distractor"), static_cast<std::uint64_t>(k)));
        constexpr int kTries = 64;
        BinaryMask best;
        double best_dice = 2.0;
        for (int t = 0; t < kTries; ++t) {
            BinaryMask b = blob(rng);
            if (b.count() == 0) continue;
            const double d = dice(b, cfg_.gt);
            if (d < best_dice) {
                best_dice = d;
                best = std::move(b);
            }
            if (best_dice < kDistractorMaxDice) break;
        }
        if (best.size() == 0) best = BinaryMask(cfg_.gt.width(), cfg_.gt.height(), false);
        Raster r = gaussian_blur(best.raster(), cfg_.sigma_blur);
        for (std::size_t i = 0; i < r.size(); ++i) r[i] = std::clamp(r[i], 0.0f, 1.0f);
        return ProbabilityMap(std::move(r));
    }

    OracleConfig cfg_;
    Raster blurred_;
};

} // namespace samu
