#pragma once

#include <cmath>
#include <numeric>
#include <string>
#include <string_view>
#include <vector>

#include "samu/fusion.hpp"

namespace samu {

enum class UncertaintyKind { PredictiveEntropy, ExpectedEntropy, Variance };

inline std::string_view to_string(UncertaintyKind k) {
    switch (k) {
        case UncertaintyKind::PredictiveEntropy: return "predictive";
        case UncertaintyKind::ExpectedEntropy: return "expected";
        case UncertaintyKind::Variance: return "variance";
    }
    return "?";
}

inline UncertaintyKind parse_uncertainty_kind(std::string_view s) {
    if (s == "predictive") return UncertaintyKind::PredictiveEntropy;
    if (s == "expected") return UncertaintyKind::ExpectedEntropy;
    if (s == "variance") return UncertaintyKind::Variance;
    throw InvalidArgument("unknown uncertainty kind '" + std::string(s) +
                          "' (expected predictive|expected|variance)");
}

/// Per-pixel uncertainty. Entropy kinds are in bits and lie in [0,1];
/// variance lies in [0,0.25].
struct UncertaintyMap {
    Raster values;
    UncertaintyKind kind;

    /// Spatial mean, the scalar summary reported alongside the map.
    double mean() const {
        const auto v = values.values();
        return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    }
};

/// Probabilities closer than this to 0 or 1 contribute zero entropy
/// (the 0·log 0 = 0 limit), which also keeps log2 away from 0.
inline constexpr double kEntropyEpsilon = 1e-12;

/// Binary entropy in bits.
inline double binary_entropy(double p) {
    auto term = [](double q) { return q <= kEntropyEpsilon ? 0.0 : -q * std::log2(q); };
    return term(p) + term(1.0 - p);
}

namespace detail {

template <typename PerPixel>
UncertaintyMap per_pixel(const PredictionSet& set, UncertaintyKind kind, PerPixel f) {
    Raster out(set.width(), set.height());
    std::vector<double> samples;
    for (std::size_t j = 0; j < set.pixels(); ++j) {
        set.gather(j, samples);
        out[j] = static_cast<float>(f(samples));
    }
    return {std::move(out), kind};
}

} // namespace detail

/// H(mean_i p_j^i): entropy of the fused prediction.
inline UncertaintyMap predictive_entropy(const PredictionSet& set) {
    return detail::per_pixel(set, UncertaintyKind::PredictiveEntropy, [](std::vector<double>& s) {
        return binary_entropy(pairwise_mean(s));
    });
}

/// mean_i H(p_j^i): average entropy of the individual predictions.
inline UncertaintyMap expected_entropy(const PredictionSet& set) {
    return detail::per_pixel(set, UncertaintyKind::ExpectedEntropy, [](std::vector<double>& s) {
        for (double& v : s) v = binary_entropy(v);
        return pairwise_mean(s);
    });
}

/// Population variance (1/M) sum_i (p_j^i - mean)^2.
inline UncertaintyMap variance_map(const PredictionSet& set) {
    return detail::per_pixel(set, UncertaintyKind::Variance, [](std::vector<double>& s) {
        const double mu = pairwise_mean(s);
        for (double& v : s) v = (v - mu) * (v - mu);
        return pairwise_mean(s);
    });
}

inline UncertaintyMap uncertainty(const PredictionSet& set, UncertaintyKind kind) {
    switch (kind) {
        case UncertaintyKind::PredictiveEntropy: return predictive_entropy(set);
        case UncertaintyKind::ExpectedEntropy: return expected_entropy(set);
        case UncertaintyKind::Variance: return variance_map(set);
    }
    throw InvalidArgument("unknown uncertainty kind");
}

} // namespace samu
