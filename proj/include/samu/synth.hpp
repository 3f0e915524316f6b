#pragma once

// Fundus-like synthetic data: a vignetted reddish retina with a few dark
// vessels, a bright optic-disc ellipse and a brighter cup. The mask is the
// disc (cup included).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "samu/image_io.hpp"
#include "samu/imaging.hpp"
#include "samu/random.hpp"

namespace samu {

struct SynthSample {
    std::string stem;
    Image image;
    BinaryMask mask;
};

struct SynthConfig {
    int size = 128;
    double grain = 0.03;  ///< std of per-pixel luminance grain
    int vessels = 4;
};

inline SynthSample make_synthetic(int index, std::uint64_t seed, const SynthConfig& cfg = {}) {
    if (cfg.size < 16) throw InvalidArgument("synthetic image size must be >= 16");
    const int n = cfg.size;
    Rng rng(derive_seed(seed, hash_string("synth"), static_cast<std::uint64_t>(index)));

    const double cx = rng.uniform(0.35, 0.65) * n, cy = rng.uniform(0.35, 0.65) * n;
    const double rx = rng.uniform(0.12, 0.20) * n, ry = rx * rng.uniform(0.85, 1.15);
    const double cup = rng.uniform(0.35, 0.5);
    const double tint = rng.uniform(0.9, 1.1);

    // Vessel centre lines, sampled every half pixel.
    struct Point { double x, y, r; };
    std::vector<Point> vessel;
    for (int v = 0; v < cfg.vessels; ++v) {
        const double theta = rng.uniform(0.0, 2.0 * M_PI);
        const double amp = rng.uniform(2.0, 6.0), period = rng.uniform(15.0, 35.0);
        const double width = rng.uniform(0.8, 1.6);
        const double dx = std::cos(theta), dy = std::sin(theta);
        for (double t = 0.0; t < 1.5 * n; t += 0.5)
            vessel.push_back({cx + t * dx - amp * std::sin(t / period) * dy,
                              cy + t * dy + amp * std::sin(t / period) * dx, width});
    }

    Raster vessel_map(n, n);
    for (const auto& p : vessel) {
        const int x0 = std::max(0, static_cast<int>(std::floor(p.x - p.r - 1)));
        const int x1 = std::min(n - 1, static_cast<int>(std::ceil(p.x + p.r + 1)));
        const int y0 = std::max(0, static_cast<int>(std::floor(p.y - p.r - 1)));
        const int y1 = std::min(n - 1, static_cast<int>(std::ceil(p.y + p.r + 1)));
        for (int y = y0; y <= y1; ++y)
            for (int x = x0; x <= x1; ++x) {
                const double d = std::hypot(x + 0.5 - p.x, y + 0.5 - p.y);
                const float a = static_cast<float>(std::clamp(p.r + 0.5 - d, 0.0, 1.0));
                vessel_map(x, y) = std::max(vessel_map(x, y), a);
            }
    }

    std::vector<float> rgb(static_cast<std::size_t>(n) * n * 3);
    Raster mask(n, n);
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) {
            const double px = x + 0.5, py = y + 0.5;
            const double vr = std::hypot(px - 0.5 * n, py - 0.5 * n) / (0.6 * n);
            const double vignette = std::clamp(1.0 - 0.6 * vr * vr, 0.15, 1.0);
            double r = 0.62 * tint * vignette, g = 0.26 * vignette, b = 0.12 * vignette;

            const double e = std::sqrt(((px - cx) / rx) * ((px - cx) / rx) + ((py - cy) / ry) * ((py - cy) / ry));
            // Soft one-pixel rim for the rendered disc; the mask stays crisp.
            const double disc = std::clamp((1.0 - e) * std::min(rx, ry) + 0.5, 0.0, 1.0);
            const double in_cup = std::clamp((cup - e) * std::min(rx, ry) + 0.5, 0.0, 1.0);
            r += disc * (0.95 - r);
            g += disc * (0.78 - g);
            b += disc * (0.50 - b);
            r += in_cup * (1.0 - r);
            g += in_cup * (0.93 - g);
            b += in_cup * (0.75 - b);
            if (e <= 1.0) mask(x, y) = 1.0f;

            const double shade = 1.0 - 0.45 * vessel_map(x, y);
            const double grain = cfg.grain * rng.normal();
            const std::size_t i = (static_cast<std::size_t>(y) * n + x) * 3;
            rgb[i + 0] = static_cast<float>(std::clamp(r * shade + grain, 0.0, 1.0));
            rgb[i + 1] = static_cast<float>(std::clamp(g * shade + grain, 0.0, 1.0));
            rgb[i + 2] = static_cast<float>(std::clamp(b * shade + grain, 0.0, 1.0));
        }

    char stem[32];
    std::snprintf(stem, sizeof stem, "synth_%03d", index);
    return {stem, quantize(Image(n, n, 3, std::move(rgb))), BinaryMask(std::move(mask))};
}

/// Writes `<stem>.png` and `<stem>_mask.pgm` for n samples into `dir`.
inline std::vector<std::string> write_synthetic_dataset(const std::filesystem::path& dir, int n,
                                                        std::uint64_t seed, const SynthConfig& cfg = {}) {
    if (n < 1) throw InvalidArgument("synthetic dataset needs n >= 1");
    std::filesystem::create_directories(dir);
    std::vector<std::string> stems;
    for (int i = 0; i < n; ++i) {
        const SynthSample s = make_synthetic(i, seed, cfg);
        save_image(s.image, dir / (s.stem + ".png"));
        save_mask(s.mask, dir / (s.stem + "_mask.pgm"));
        stems.push_back(s.stem);
    }
    return stems;
}

} // namespace samu
