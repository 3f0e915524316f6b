#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "samu/imaging.hpp"

namespace samu {

/// Sampled 1-D Gaussian truncated at `truncate`·sigma and normalized to sum 1.
/// sigma == 0 yields the identity kernel {1}.
inline std::vector<double> gaussian_kernel_1d(double sigma, double truncate = 3.0) {
    if (!(sigma >= 0.0)) throw InvalidArgument("gaussian sigma must be >= 0");
    if (sigma == 0.0) return {1.0};
    const int radius = static_cast<int>(std::ceil(truncate * sigma));
    std::vector<double> k(2 * radius + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        k[i + radius] = std::exp(-0.5 * (i * i) / (sigma * sigma));
        sum += k[i + radius];
    }
    for (double& w : k) w /= sum;
    return k;
}

namespace detail {

// One separable pass. Taps that fall outside the raster are dropped and the
// remaining weights renormalized, so a flat field stays flat at the borders.
inline Raster convolve_axis(const Raster& in, std::span<const double> k, bool horizontal) {
    const int w = in.width(), h = in.height();
    const int radius = static_cast<int>(k.size() / 2);
    const int extent = horizontal ? w : h;
    Raster out(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const int pos = horizontal ? x : y;
            const int lo = std::max(-radius, -pos);
            const int hi = std::min(radius, extent - 1 - pos);
            double acc = 0.0, norm = 0.0;
            for (int t = lo; t <= hi; ++t) {
                const double wt = k[t + radius];
                acc += wt * (horizontal ? in(x + t, y) : in(x, y + t));
                norm += wt;
            }
            out(x, y) = static_cast<float>(acc / norm);
        }
    }
    return out;
}

} // namespace detail

/// Separable Gaussian blur, kernel truncated at 3 sigma and renormalized at
/// the borders.
inline Raster gaussian_blur(const Raster& in, double sigma) {
    if (sigma == 0.0) return in;
    const auto k = gaussian_kernel_1d(sigma);
    return detail::convolve_axis(detail::convolve_axis(in, k, true), k, false);
}

/// 2-D correlation with an odd square kernel and zero padding, same-size output.
inline std::vector<double> correlate_zero_padded(std::span<const double> in, int width, int height,
                                                 std::span<const double> kernel, int ksize) {
    const int r = ksize / 2;
    std::vector<double> out(in.size(), 0.0);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            double acc = 0.0;
            for (int dy = -r; dy <= r; ++dy) {
                const int yy = y + dy;
                if (yy < 0 || yy >= height) continue;
                for (int dx = -r; dx <= r; ++dx) {
                    const int xx = x + dx;
                    if (xx < 0 || xx >= width) continue;
                    acc += kernel[(dy + r) * ksize + (dx + r)] *
                           in[static_cast<std::size_t>(yy) * width + xx];
                }
            }
            out[static_cast<std::size_t>(y) * width + x] = acc;
        }
    }
    return out;
}

/// Exact Euclidean feature transform.
struct FeatureTransform {
    std::vector<std::int64_t> sq_distance;  ///< squared distance to the nearest feature
    std::vector<std::int64_t> nearest;      ///< row-major index of that feature, -1 if none
};

/// For every pixel, the nearest pixel for which `is_feature` holds.
///
/// Ties go to the feature with the smallest row-major index. Runs a column
/// pass (nearest feature in the same column, upper one on ties) then an
/// exhaustive row pass, O(w·w·h); fine for the image sizes used here.
template <typename Pred>
FeatureTransform feature_transform(int width, int height, Pred is_feature) {
    constexpr std::int64_t kNone = -1;
    const std::size_t n = static_cast<std::size_t>(width) * height;
    std::vector<std::int64_t> col_row(n, kNone);  // feature row within each column

    for (int x = 0; x < width; ++x) {
        // Downward sweep: nearest feature at or above.
        std::int64_t last = kNone;
        std::vector<std::int64_t> above(height, kNone), below(height, kNone);
        for (int y = 0; y < height; ++y) {
            if (is_feature(static_cast<std::size_t>(y) * width + x)) last = y;
            above[y] = last;
        }
        last = kNone;
        for (int y = height - 1; y >= 0; --y) {
            if (is_feature(static_cast<std::size_t>(y) * width + x)) last = y;
            below[y] = last;
        }
        for (int y = 0; y < height; ++y) {
            std::int64_t best = above[y];
            if (below[y] != kNone && (best == kNone || (below[y] - y) < (y - best))) best = below[y];
            col_row[static_cast<std::size_t>(y) * width + x] = best;
        }
    }

    FeatureTransform ft;
    ft.sq_distance.assign(n, std::numeric_limits<std::int64_t>::max());
    ft.nearest.assign(n, kNone);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            std::int64_t best_d = std::numeric_limits<std::int64_t>::max();
            std::int64_t best_idx = kNone;
            for (int xf = 0; xf < width; ++xf) {
                const std::int64_t yf = col_row[static_cast<std::size_t>(y) * width + xf];
                if (yf == kNone) continue;
                const std::int64_t dx = x - xf, dy = y - yf;
                const std::int64_t d = dx * dx + dy * dy;
                const std::int64_t idx = yf * width + xf;
                if (d < best_d || (d == best_d && idx < best_idx)) {
                    best_d = d;
                    best_idx = idx;
                }
            }
            const std::size_t i = static_cast<std::size_t>(y) * width + x;
            ft.sq_distance[i] = best_d;
            ft.nearest[i] = best_idx;
        }
    }
    return ft;
}

/// Euclidean distance from each pixel to the nearest pixel whose mask value
/// equals `target`; +inf when no such pixel exists.
inline std::vector<double> distance_to(const BinaryMask& mask, bool target) {
    const auto ft = feature_transform(mask.width(), mask.height(),
                                      [&](std::size_t i) { return mask[i] == target; });
    std::vector<double> d(ft.sq_distance.size());
    for (std::size_t i = 0; i < d.size(); ++i)
        d[i] = ft.nearest[i] < 0 ? std::numeric_limits<double>::infinity()
                                 : std::sqrt(static_cast<double>(ft.sq_distance[i]));
    return d;
}

} // namespace samu
