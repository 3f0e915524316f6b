#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "samu/error.hpp"

namespace samu {

/// Single-channel row-major float grid with a top-left origin.
///
/// Values are unrestricted apart from being finite. ProbabilityMap and
/// BinaryMask narrow the range.
class Raster {
public:
    Raster() = default;

    Raster(int width, int height, float fill = 0.0f)
        : width_(width), height_(height) {
        check_dims(width, height);
        data_.assign(static_cast<std::size_t>(width) * height, fill);
        if (!std::isfinite(fill)) throw InvalidArgument("raster fill value must be finite");
    }

    Raster(int width, int height, std::vector<float> data)
        : width_(width), height_(height), data_(std::move(data)) {
        check_dims(width, height);
        if (data_.size() != static_cast<std::size_t>(width) * height)
            throw DimensionMismatch("raster data length " + std::to_string(data_.size()) +
                                    " does not match " + std::to_string(width) + "x" +
                                    std::to_string(height));
        for (float v : data_)
            if (!std::isfinite(v)) throw InvalidArgument("raster values must be finite");
    }

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    float operator()(int x, int y) const { return data_[index(x, y)]; }
    float& operator()(int x, int y) { return data_[index(x, y)]; }
    float operator[](std::size_t i) const { return data_[i]; }
    float& operator[](std::size_t i) { return data_[i]; }

    std::span<const float> values() const noexcept { return data_; }
    std::span<float> values() noexcept { return data_; }
    const std::vector<float>& vector() const noexcept { return data_; }

    bool same_shape(const Raster& other) const noexcept {
        return width_ == other.width_ && height_ == other.height_;
    }

    bool operator==(const Raster&) const = default;

private:
    static void check_dims(int width, int height) {
        if (width <= 0 || height <= 0) throw InvalidArgument("raster dimensions must be positive");
    }
    std::size_t index(int x, int y) const noexcept {
        return static_cast<std::size_t>(y) * width_ + x;
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<float> data_;
};

/// A Raster whose values lie in [0,1]; one segmenter prediction.
class ProbabilityMap {
public:
    ProbabilityMap() = default;

    explicit ProbabilityMap(Raster raster) : raster_(std::move(raster)) {
        for (float v : raster_.values())
            if (!(v >= 0.0f && v <= 1.0f))
                throw InvalidArgument("probability map value outside [0,1]");
    }

    ProbabilityMap(int width, int height, float fill)
        : ProbabilityMap(Raster(width, height, fill)) {}

    int width() const noexcept { return raster_.width(); }
    int height() const noexcept { return raster_.height(); }
    std::size_t size() const noexcept { return raster_.size(); }
    float operator()(int x, int y) const { return raster_(x, y); }
    float operator[](std::size_t i) const { return raster_[i]; }
    std::span<const float> values() const noexcept { return raster_.values(); }
    const Raster& raster() const noexcept { return raster_; }

    bool operator==(const ProbabilityMap&) const = default;

private:
    Raster raster_;
};

/// A Raster holding exactly 0 or 1 per pixel.
class BinaryMask {
public:
    BinaryMask() = default;

    explicit BinaryMask(Raster raster) : raster_(std::move(raster)) {
        for (float v : raster_.values())
            if (v != 0.0f && v != 1.0f) throw InvalidArgument("binary mask value must be 0 or 1");
    }

    BinaryMask(int width, int height, bool fill = false)
        : raster_(width, height, fill ? 1.0f : 0.0f) {}

    /// Foreground where value >= threshold.
    static BinaryMask threshold(const Raster& r, float threshold) {
        Raster out(r.width(), r.height());
        for (std::size_t i = 0; i < r.size(); ++i) out[i] = r[i] >= threshold ? 1.0f : 0.0f;
        return BinaryMask(std::move(out));
    }

    int width() const noexcept { return raster_.width(); }
    int height() const noexcept { return raster_.height(); }
    std::size_t size() const noexcept { return raster_.size(); }
    bool operator()(int x, int y) const { return raster_(x, y) != 0.0f; }
    bool operator[](std::size_t i) const { return raster_[i] != 0.0f; }
    std::span<const float> values() const noexcept { return raster_.values(); }
    const Raster& raster() const noexcept { return raster_; }

    std::size_t count() const noexcept {
        return static_cast<std::size_t>(
            std::count(raster_.values().begin(), raster_.values().end(), 1.0f));
    }

    bool operator==(const BinaryMask&) const = default;

private:
    Raster raster_;
};

/// Float image with 1 or 3 interleaved channels, values in [0,1].
class Image {
public:
    Image() = default;

    Image(int width, int height, int channels, std::vector<float> data)
        : width_(width), height_(height), channels_(channels), data_(std::move(data)) {
        if (width <= 0 || height <= 0) throw InvalidArgument("image dimensions must be positive");
        if (channels != 1 && channels != 3) throw InvalidArgument("image must have 1 or 3 channels");
        if (data_.size() != static_cast<std::size_t>(width) * height * channels)
            throw DimensionMismatch("image data length does not match width*height*channels");
        for (float v : data_)
            if (!(v >= 0.0f && v <= 1.0f)) throw InvalidArgument("image value outside [0,1]");
    }

    Image(int width, int height, int channels, float fill)
        : Image(width, height, channels,
                std::vector<float>(static_cast<std::size_t>(std::max(width, 0)) *
                                       std::max(height, 0) * std::max(channels, 0),
                                   fill)) {}

    /// Wraps a single-channel raster, clamping into [0,1].
    static Image from_raster(const Raster& r) {
        std::vector<float> data(r.values().begin(), r.values().end());
        for (float& v : data) v = std::clamp(v, 0.0f, 1.0f);
        return Image(r.width(), r.height(), 1, std::move(data));
    }

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    int channels() const noexcept { return channels_; }
    std::size_t size() const noexcept { return data_.size(); }

    float operator()(int x, int y, int c = 0) const {
        return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
    }
    std::span<const float> values() const noexcept { return data_; }

    /// One channel as a Raster.
    Raster channel(int c) const {
        Raster out(width_, height_);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = data_[i * channels_ + c];
        return out;
    }

    bool same_shape(const Image& other) const noexcept {
        return width_ == other.width_ && height_ == other.height_ && channels_ == other.channels_;
    }

    bool operator==(const Image&) const = default;

private:
    int width_ = 0;
    int height_ = 0;
    int channels_ = 0;
    std::vector<float> data_;
};

/// Throws DimensionMismatch unless both operands share width and height.
template <typename A, typename B>
void require_same_size(const A& a, const B& b, const char* what) {
    if (a.width() != b.width() || a.height() != b.height())
        throw DimensionMismatch(std::string(what) + ": " + std::to_string(a.width()) + "x" +
                                std::to_string(a.height()) + " vs " + std::to_string(b.width()) +
                                "x" + std::to_string(b.height()));
}

// ITU-R BT.601 luma weights.
inline constexpr float kLumaR = 0.299f;
inline constexpr float kLumaG = 0.587f;
inline constexpr float kLumaB = 0.114f;

inline Image to_gray(const Image& img) {
    if (img.channels() == 1) return img;
    std::vector<float> out(static_cast<std::size_t>(img.width()) * img.height());
    auto px = img.values();
    for (std::size_t i = 0; i < out.size(); ++i) {
        const float g = kLumaR * px[3 * i] + kLumaG * px[3 * i + 1] + kLumaB * px[3 * i + 2];
        out[i] = std::clamp(g, 0.0f, 1.0f);
    }
    return Image(img.width(), img.height(), 1, std::move(out));
}

/// 8-bit code for a [0,1] intensity, rounding half up.
inline unsigned char quantize_u8(float v) {
    const double scaled = std::clamp(static_cast<double>(v), 0.0, 1.0) * 255.0;
    return static_cast<unsigned char>(std::floor(scaled + 0.5));
}

inline float dequantize_u8(unsigned char b) { return static_cast<float>(b) / 255.0f; }

/// Snaps every value onto the 8-bit lattice (what a PNG round trip yields).
inline Image quantize(const Image& img) {
    std::vector<float> out(img.values().begin(), img.values().end());
    for (float& v : out) v = dequantize_u8(quantize_u8(v));
    return Image(img.width(), img.height(), img.channels(), std::move(out));
}

} // namespace samu
