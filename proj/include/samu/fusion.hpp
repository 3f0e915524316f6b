#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "samu/imaging.hpp"
#include "samu/prompts.hpp"

namespace samu {

/// The Monte Carlo sample set: M predictions plus the prompts that made them.
class PredictionSet {
public:
    PredictionSet(std::vector<ProbabilityMap> maps, std::vector<BoxPrompt> boxes)
        : maps_(std::move(maps)), boxes_(std::move(boxes)) {
        if (maps_.empty()) throw InvalidArgument("prediction set needs at least one map");
        if (maps_.size() != boxes_.size())
            throw InvalidArgument("prediction set needs one box per map");
        for (const auto& m : maps_) require_same_size(m, maps_.front(), "prediction set");
    }

    /// For maps whose prompts are unknown (e.g. loaded from disk); each is
    /// paired with a full-frame box.
    static PredictionSet from_maps(std::vector<ProbabilityMap> maps) {
        if (maps.empty()) throw InvalidArgument("prediction set needs at least one map");
        std::vector<BoxPrompt> boxes(maps.size(),
                                     BoxPrompt::full(maps.front().width(), maps.front().height()));
        return PredictionSet(std::move(maps), std::move(boxes));
    }

    std::size_t m() const noexcept { return maps_.size(); }
    int width() const noexcept { return maps_.front().width(); }
    int height() const noexcept { return maps_.front().height(); }
    std::size_t pixels() const noexcept { return maps_.front().size(); }
    const std::vector<ProbabilityMap>& maps() const noexcept { return maps_; }
    const std::vector<BoxPrompt>& boxes() const noexcept { return boxes_; }

    /// Sample values at pixel j, in sample order.
    void gather(std::size_t j, std::vector<double>& out) const {
        out.resize(maps_.size());
        for (std::size_t i = 0; i < maps_.size(); ++i) out[i] = maps_[i][j];
    }

private:
    std::vector<ProbabilityMap> maps_;
    std::vector<BoxPrompt> boxes_;
};

/// Pairwise (cascade) summation; error grows with log n rather than n.
inline double pairwise_sum(std::span<const double> v) {
    if (v.size() <= 8) {
        double s = 0.0;
        for (double x : v) s += x;
        return s;
    }
    const std::size_t half = v.size() / 2;
    return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

inline double pairwise_mean(std::span<const double> v) {
    return pairwise_sum(v) / static_cast<double>(v.size());
}

/// Per-pixel mean of the M predictions.
inline ProbabilityMap fuse_mean(const PredictionSet& set) {
    Raster out(set.width(), set.height());
    std::vector<double> samples;
    for (std::size_t j = 0; j < set.pixels(); ++j) {
        set.gather(j, samples);
        out[j] = static_cast<float>(std::clamp(pairwise_mean(samples), 0.0, 1.0));
    }
    return ProbabilityMap(std::move(out));
}

inline constexpr float kDefaultThreshold = 0.5f;

/// Foreground where p >= threshold.
inline BinaryMask binarize(const ProbabilityMap& map, float threshold = kDefaultThreshold) {
    if (!(threshold > 0.0f && threshold < 1.0f))
        throw InvalidArgument("binarize threshold must lie in (0,1)");
    return BinaryMask::threshold(map.raster(), threshold);
}

} // namespace samu
