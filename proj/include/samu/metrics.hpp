#pragma once

// Segmentation quality metrics: Dice, expected calibration error,
// structure measure (Fan et al., ICCV 2017) and weighted F-measure
// (Margolin et al., CVPR 2014). All accumulators are double precision.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "samu/filters.hpp"
#include "samu/fusion.hpp"
#include "samu/imaging.hpp"

namespace samu {

struct MetricReport {
    double dice = 0.0;
    double ece = 0.0;
    double sm = 0.0;
    double wfm = 0.0;

    bool finite() const {
        return std::isfinite(dice) && std::isfinite(ece) && std::isfinite(sm) && std::isfinite(wfm);
    }
};

/// 2|P∩G| / (|P|+|G|); 1 when both masks are empty.
inline double dice(const BinaryMask& pred, const BinaryMask& gt) {
    require_same_size(pred, gt, "dice");
    std::uint64_t inter = 0, np = 0, ng = 0;
    for (std::size_t i = 0; i < gt.size(); ++i) {
        const bool p = pred[i], g = gt[i];
        np += p;
        ng += g;
        inter += p && g;
    }
    if (np + ng == 0) return 1.0;
    return 2.0 * static_cast<double>(inter) / static_cast<double>(np + ng);
}

/// Expected calibration error over confidence c = max(p, 1-p).
///
/// Bins split (0.5, 1] into n_bins equal half-open intervals (lo, hi];
/// c == 0.5 lands in the first bin. The predicted label is p >= 0.5.
inline double ece(const ProbabilityMap& prob, const BinaryMask& gt, int n_bins = 10) {
    require_same_size(prob, gt, "ece");
    if (n_bins < 1) throw InvalidArgument("ece needs at least one bin");
    std::vector<double> conf_sum(n_bins, 0.0), correct(n_bins, 0.0);
    std::vector<std::uint64_t> count(n_bins, 0);
    for (std::size_t i = 0; i < gt.size(); ++i) {
        const double p = prob[i];
        const double c = std::max(p, 1.0 - p);
        int b = static_cast<int>(std::ceil((c - 0.5) * 2.0 * n_bins)) - 1;
        b = std::clamp(b, 0, n_bins - 1);
        conf_sum[b] += c;
        correct[b] += ((p >= 0.5) == gt[i]) ? 1.0 : 0.0;
        ++count[b];
    }
    const double n = static_cast<double>(gt.size());
    double total = 0.0;
    for (int b = 0; b < n_bins; ++b) {
        if (count[b] == 0) continue;
        const double nb = static_cast<double>(count[b]);
        total += (nb / n) * std::abs(correct[b] / nb - conf_sum[b] / nb);
    }
    return total;
}

namespace detail {

inline constexpr double kEps = std::numeric_limits<double>::epsilon();

struct Moments {
    double mean = 0.0;
    double sample_std = 0.0;
    std::size_t n = 0;
};

inline Moments moments(const std::vector<double>& v) {
    Moments m;
    m.n = v.size();
    if (v.empty()) return m;
    double s = 0.0;
    for (double x : v) s += x;
    m.mean = s / static_cast<double>(v.size());
    if (v.size() > 1) {
        double ss = 0.0;
        for (double x : v) ss += (x - m.mean) * (x - m.mean);
        m.sample_std = std::sqrt(ss / static_cast<double>(v.size() - 1));
    }
    return m;
}

// Object-level similarity of a score distribution to an all-ones target.
inline double object_score(const std::vector<double>& values) {
    if (values.empty()) return 0.0;
    const Moments m = moments(values);
    return 2.0 * m.mean / (m.mean * m.mean + 1.0 + m.sample_std + kEps);
}

inline double s_object(const ProbabilityMap& prob, const BinaryMask& gt) {
    std::vector<double> fg, bg;
    for (std::size_t i = 0; i < gt.size(); ++i) {
        if (gt[i])
            fg.push_back(prob[i]);
        else
            bg.push_back(1.0 - prob[i]);
    }
    const double u = static_cast<double>(fg.size()) / static_cast<double>(gt.size());
    return u * object_score(fg) + (1.0 - u) * object_score(bg);
}

// SSIM-style similarity of one block; blocks are [x0,x1) x [y0,y1).
inline double block_ssim(const ProbabilityMap& prob, const BinaryMask& gt, int x0, int x1, int y0,
                         int y1) {
    const double n = static_cast<double>(x1 - x0) * (y1 - y0);
    double sx = 0.0, sy = 0.0;
    for (int y = y0; y < y1; ++y)
        for (int x = x0; x < x1; ++x) {
            sx += prob(x, y);
            sy += gt(x, y) ? 1.0 : 0.0;
        }
    const double mx = sx / n, my = sy / n;
    double vx = 0.0, vy = 0.0, cxy = 0.0;
    for (int y = y0; y < y1; ++y)
        for (int x = x0; x < x1; ++x) {
            const double dx = prob(x, y) - mx;
            const double dy = (gt(x, y) ? 1.0 : 0.0) - my;
            vx += dx * dx;
            vy += dy * dy;
            cxy += dx * dy;
        }
    vx /= (n - 1.0 + kEps);
    vy /= (n - 1.0 + kEps);
    cxy /= (n - 1.0 + kEps);
    const double alpha = 4.0 * mx * my * cxy;
    const double beta = (mx * mx + my * my) * (vx + vy);
    if (alpha != 0.0) return alpha / (beta + kEps);
    if (beta == 0.0) return 1.0;
    return 0.0;
}

inline double s_region(const ProbabilityMap& prob, const BinaryMask& gt) {
    const int w = gt.width(), h = gt.height();
    // Centroid in 1-based coordinates, rounded half away from zero; it is the
    // count of columns/rows in the left/top blocks.
    double total = 0.0, sx = 0.0, sy = 0.0;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (gt(x, y)) {
                total += 1.0;
                sx += x + 1;
                sy += y + 1;
            }
    const int cx = total == 0.0 ? static_cast<int>(std::round(w / 2.0))
                                : static_cast<int>(std::round(sx / total));
    const int cy = total == 0.0 ? static_cast<int>(std::round(h / 2.0))
                                : static_cast<int>(std::round(sy / total));
    const double area = static_cast<double>(w) * h;
    const double w1 = static_cast<double>(cx) * cy / area;
    const double w2 = static_cast<double>(w - cx) * cy / area;
    const double w3 = static_cast<double>(cx) * (h - cy) / area;
    const double w4 = 1.0 - w1 - w2 - w3;
    // Empty blocks carry zero weight and are skipped.
    auto q = [&](double wt, int x0, int x1, int y0, int y1) {
        return (x1 > x0 && y1 > y0) ? wt * block_ssim(prob, gt, x0, x1, y0, y1) : 0.0;
    };
    return q(w1, 0, cx, 0, cy) + q(w2, cx, w, 0, cy) + q(w3, 0, cx, cy, h) + q(w4, cx, w, cy, h);
}

/// fspecial('gaussian', 7, 5): unnormalized exp(-(x^2+y^2)/(2·25)), summed to 1.
inline std::array<double, 49> wfm_kernel() {
    std::array<double, 49> k{};
    double sum = 0.0;
    for (int y = -3; y <= 3; ++y)
        for (int x = -3; x <= 3; ++x) {
            const double v = std::exp(-(x * x + y * y) / (2.0 * 5.0 * 5.0));
            k[(y + 3) * 7 + (x + 3)] = v;
            sum += v;
        }
    for (double& v : k) v /= sum;
    return k;
}

} // namespace detail

/// Structure measure Sm = alpha·S_object + (1-alpha)·S_region.
/// Degenerate ground truth: all background gives 1 - mean(prob), all
/// foreground gives mean(prob).
inline double s_measure(const ProbabilityMap& prob, const BinaryMask& gt, double alpha = 0.5) {
    require_same_size(prob, gt, "s_measure");
    const double fg_ratio = static_cast<double>(gt.count()) / static_cast<double>(gt.size());
    if (fg_ratio == 0.0 || fg_ratio == 1.0) {
        double s = 0.0;
        for (float v : prob.values()) s += v;
        const double mean = s / static_cast<double>(prob.size());
        return fg_ratio == 0.0 ? 1.0 - mean : mean;
    }
    const double q = alpha * detail::s_object(prob, gt) + (1.0 - alpha) * detail::s_region(prob, gt);
    return std::clamp(q, 0.0, 1.0);
}

/// Weighted F-measure with dependency (7x7 Gaussian, sigma 5) and
/// distance-based importance weighting of background errors.
///
/// Background errors borrow the error of their nearest foreground pixel
/// (exact Euclidean, ties to the lowest row-major index) before smoothing.
/// An empty ground truth scores 1 for an all-zero prediction, else 0.
inline double weighted_fmeasure(const ProbabilityMap& prob, const BinaryMask& gt, double beta2 = 1.0) {
    require_same_size(prob, gt, "weighted_fmeasure");
    const int w = gt.width(), h = gt.height();
    const std::size_t n = gt.size();
    const std::size_t n_fg = gt.count();
    if (n_fg == 0) {
        const bool all_zero =
            std::all_of(prob.values().begin(), prob.values().end(), [](float v) { return v == 0.0f; });
        return all_zero ? 1.0 : 0.0;
    }

    std::vector<double> err(n);
    for (std::size_t i = 0; i < n; ++i) err[i] = std::abs(prob[i] - (gt[i] ? 1.0 : 0.0));

    const auto ft = feature_transform(w, h, [&](std::size_t i) { return gt[i]; });
    std::vector<double> propagated = err;
    for (std::size_t i = 0; i < n; ++i)
        if (!gt[i]) propagated[i] = err[static_cast<std::size_t>(ft.nearest[i])];

    const auto kernel = detail::wfm_kernel();
    const auto smoothed = correlate_zero_padded(propagated, w, h, kernel, 7);

    const double decay = std::log(0.5) / 5.0;
    double fg_err = 0.0, bg_err = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (gt[i]) {
            fg_err += std::min(err[i], smoothed[i]);
        } else {
            const double dist = std::sqrt(static_cast<double>(ft.sq_distance[i]));
            bg_err += err[i] * (2.0 - std::exp(decay * dist));
        }
    }
    const double tp = static_cast<double>(n_fg) - fg_err;
    const double recall = 1.0 - fg_err / static_cast<double>(n_fg);
    const double precision = (tp + bg_err) > 0.0 ? tp / (tp + bg_err) : 0.0;
    const double denom = beta2 * precision + recall;
    if (denom <= 0.0) return 0.0;
    return std::clamp((1.0 + beta2) * precision * recall / denom, 0.0, 1.0);
}

/// All four metrics for one evaluated probability map; Dice binarizes at
/// `threshold`.
inline MetricReport evaluate(const ProbabilityMap& prob, const BinaryMask& gt,
                             float threshold = kDefaultThreshold) {
    MetricReport r;
    r.dice = dice(binarize(prob, threshold), gt);
    r.ece = ece(prob, gt);
    r.sm = s_measure(prob, gt);
    r.wfm = weighted_fmeasure(prob, gt);
    return r;
}

} // namespace samu
