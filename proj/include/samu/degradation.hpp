#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>

#include "samu/filters.hpp"
#include "samu/imaging.hpp"
#include "samu/random.hpp"

namespace samu {

/// Three degradation toggles, written most-significant first as
/// (illumination, blur, noise), e.g. "101" = uneven illumination + noise.
struct DegradationCode {
    bool illumination = false;
    bool blur = false;
    bool noise = false;

    static DegradationCode parse(std::string_view code) {
        if (code.size() != 3) throw InvalidArgument("degradation code must have 3 characters");
        for (char c : code)
            if (c != '0' && c != '1') throw InvalidArgument("degradation code characters must be 0/1");
        return {code[0] == '1', code[1] == '1', code[2] == '1'};
    }

    std::string str() const {
        return {illumination ? '1' : '0', blur ? '1' : '0', noise ? '1' : '0'};
    }

    bool is_identity() const noexcept { return !illumination && !blur && !noise; }
    bool operator==(const DegradationCode&) const = default;
};

struct DegradationParams {
    double sigma_noise = 0.05;
    double blur_radius = 0.01;     ///< blur std as a fraction of min(width, height)
    double illum_strength = 0.6;   ///< multiplicative level at the spot periphery
    std::optional<std::pair<double, double>> illum_center;  ///< normalized; drawn from seed when unset
    std::uint64_t seed = 0;

    void validate() const {
        if (!(sigma_noise >= 0.0)) throw InvalidArgument("sigma_noise must be >= 0");
        if (!(blur_radius >= 0.0)) throw InvalidArgument("blur_radius must be >= 0");
        if (!(illum_strength > 0.0 && illum_strength <= 1.0))
            throw InvalidArgument("illum_strength must be in (0,1]");
        if (illum_center) {
            const auto [cx, cy] = *illum_center;
            if (!(cx >= 0.0 && cx <= 1.0 && cy >= 0.0 && cy <= 1.0))
                throw InvalidArgument("illum_center must lie in [0,1]^2");
        }
    }
};

/// clamp(img + N(0, sigma^2)) independently per pixel and channel.
inline Image add_gaussian_noise(const Image& img, double sigma, std::uint64_t seed) {
    if (!(sigma >= 0.0)) throw InvalidArgument("noise sigma must be >= 0");
    if (sigma == 0.0) return img;
    Rng rng(derive_seed(seed, hash_string("gaussian-noise")));
    std::vector<float> out(img.values().begin(), img.values().end());
    for (float& v : out)
        v = static_cast<float>(std::clamp(static_cast<double>(v) + sigma * rng.normal(), 0.0, 1.0));
    return Image(img.width(), img.height(), img.channels(), std::move(out));
}

/// Radial dimming mask: strength + (1 - strength)·exp(-d^2 / (2·(0.5·min(w,h))^2)).
inline Raster illumination_mask(int width, int height, double strength, double cx, double cy) {
    const double spread = 0.5 * std::min(width, height);
    const double px = cx * width, py = cy * height;
    Raster m(width, height);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) {
            const double dx = x + 0.5 - px, dy = y + 0.5 - py;
            const double d2 = dx * dx + dy * dy;
            m(x, y) = static_cast<float>(strength +
                                         (1.0 - strength) * std::exp(-d2 / (2.0 * spread * spread)));
        }
    return m;
}

/// Applies the enabled factors in the order illumination, blur, noise,
/// clamping to [0,1] after each stage. "000" returns the input unchanged.
inline Image degrade(const Image& img, const DegradationCode& code, const DegradationParams& params) {
    params.validate();
    if (code.is_identity()) return img;
    const int w = img.width(), h = img.height(), ch = img.channels();
    Image current = img;

    if (code.illumination) {
        auto [cx, cy] = params.illum_center.value_or(std::pair<double, double>{0.0, 0.0});
        if (!params.illum_center) {
            Rng rng(derive_seed(params.seed, hash_string("illumination-center")));
            cx = rng.uniform(0.0, 1.0);
            cy = rng.uniform(0.0, 1.0);
        }
        const Raster mask = illumination_mask(w, h, params.illum_strength, cx, cy);
        std::vector<float> out(current.values().begin(), current.values().end());
        for (std::size_t i = 0; i < mask.size(); ++i)
            for (int c = 0; c < ch; ++c)
                out[i * ch + c] = std::clamp(out[i * ch + c] * mask[i], 0.0f, 1.0f);
        current = Image(w, h, ch, std::move(out));
    }

    if (code.blur) {
        const double sigma = params.blur_radius * std::min(w, h);
        std::vector<float> out(current.size());
        for (int c = 0; c < ch; ++c) {
            const Raster blurred = gaussian_blur(current.channel(c), sigma);
            for (std::size_t i = 0; i < blurred.size(); ++i)
                out[i * ch + c] = std::clamp(blurred[i], 0.0f, 1.0f);
        }
        current = Image(w, h, ch, std::move(out));
    }

    if (code.noise) current = add_gaussian_noise(current, params.sigma_noise, params.seed);
    return current;
}

} // namespace samu
