#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "samu/imaging.hpp"
#include "samu/random.hpp"

namespace samu {

/// Axis-aligned box prompt, half-open: [x0,x1) x [y0,y1).
struct BoxPrompt {
    int x0 = 0;
    int y0 = 0;
    int x1 = 0;
    int y1 = 0;

    int width() const noexcept { return x1 - x0; }
    int height() const noexcept { return y1 - y0; }
    long area() const noexcept { return static_cast<long>(width()) * height(); }

    bool valid_for(int image_width, int image_height) const noexcept {
        return 0 <= x0 && x0 < x1 && x1 <= image_width && 0 <= y0 && y0 < y1 && y1 <= image_height;
    }

    static BoxPrompt full(int image_width, int image_height) {
        return {0, 0, image_width, image_height};
    }

    bool operator==(const BoxPrompt&) const = default;
};

inline double iou(const BoxPrompt& a, const BoxPrompt& b) {
    const long ix = std::max(0, std::min(a.x1, b.x1) - std::max(a.x0, b.x0));
    const long iy = std::max(0, std::min(a.y1, b.y1) - std::max(a.y0, b.y0));
    const double inter = static_cast<double>(ix * iy);
    const double uni = static_cast<double>(a.area() + b.area()) - inter;
    return uni > 0.0 ? inter / uni : 0.0;
}

struct PromptConfig {
    int m = 8;
    double jitter_ratio = 0.1;
    std::uint64_t seed = 0;

    void validate() const {
        if (m < 1) throw InvalidArgument("prompt count m must be >= 1");
        if (!(jitter_ratio >= 0.0)) throw InvalidArgument("jitter_ratio must be >= 0");
    }
};

inline constexpr int kMaxJitterRetries = 16;

/// Tightest box around the foreground of `gt`.
inline BoxPrompt gt_bounding_box(const BinaryMask& gt) {
    int x0 = gt.width(), y0 = gt.height(), x1 = -1, y1 = -1;
    for (int y = 0; y < gt.height(); ++y)
        for (int x = 0; x < gt.width(); ++x)
            if (gt(x, y)) {
                x0 = std::min(x0, x);
                y0 = std::min(y0, y);
                x1 = std::max(x1, x);
                y1 = std::max(y1, y);
            }
    if (x1 < 0) throw EmptyMask("ground-truth mask has no foreground pixel");
    return {x0, y0, x1 + 1, y1 + 1};
}

/// One jittered copy of `base`; each edge moves by u·side, u ~ U(-r, r),
/// then rounds to the pixel grid and clamps to the image. Degenerate draws
/// are redrawn up to kMaxJitterRetries times before falling back to `base`.
inline BoxPrompt jitter_box(const BoxPrompt& base, double jitter_ratio, int width, int height,
                            Rng& rng) {
    const double sx = base.width(), sy = base.height();
    for (int attempt = 0; attempt <= kMaxJitterRetries; ++attempt) {
        const double u0 = rng.uniform(-jitter_ratio, jitter_ratio);
        const double u1 = rng.uniform(-jitter_ratio, jitter_ratio);
        const double u2 = rng.uniform(-jitter_ratio, jitter_ratio);
        const double u3 = rng.uniform(-jitter_ratio, jitter_ratio);
        auto snap = [](double v) { return static_cast<int>(std::floor(v + 0.5)); };
        BoxPrompt b{snap(base.x0 + u0 * sx), snap(base.y0 + u1 * sy), snap(base.x1 + u2 * sx),
                    snap(base.y1 + u3 * sy)};
        b.x0 = std::clamp(b.x0, 0, width);
        b.x1 = std::clamp(b.x1, 0, width);
        b.y0 = std::clamp(b.y0, 0, height);
        b.y1 = std::clamp(b.y1, 0, height);
        if (b.valid_for(width, height)) return b;
    }
    return base;
}

/// M randomized prompts around `base`. Prompt i draws from its own stream
/// derived from (seed, i), so the list is reproducible and order-independent.
inline std::vector<BoxPrompt> jitter_boxes(const BoxPrompt& base, const PromptConfig& cfg, int width,
                                           int height) {
    cfg.validate();
    if (!base.valid_for(width, height))
        throw InvalidArgument("base box is not valid for the image size");
    std::vector<BoxPrompt> out;
    out.reserve(cfg.m);
    for (int i = 0; i < cfg.m; ++i) {
        if (cfg.jitter_ratio == 0.0) {
            out.push_back(base);
            continue;
        }
        Rng rng(derive_seed(cfg.seed, hash_string("box-prompt"), static_cast<std::uint64_t>(i)));
        out.push_back(jitter_box(base, cfg.jitter_ratio, width, height, rng));
    }
    return out;
}

} // namespace samu
