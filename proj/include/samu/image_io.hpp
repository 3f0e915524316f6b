#pragma once

// Image, mask and float-raster file formats.
//
//   PNG   8-bit gray or RGB (alpha is composited away on load)
//   PGM   binary P5, maxval <= 255
//   PMAP  "PMAP" | u32le width | u32le height | width*height f32le, row-major

#include <png.h>

#include <array>
#include <bit>
#include <cctype>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "samu/imaging.hpp"

namespace samu {

namespace detail {

inline std::vector<unsigned char> read_file_bytes(const std::filesystem::path& path) {
    std::error_code ec;
    if (!std::filesystem::is_regular_file(path, ec))
        throw MissingFile("no such file: " + path.string());
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoFailure("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file_bytes(const std::filesystem::path& path, const void* data, std::size_t n) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoFailure("cannot open " + path.string() + " for writing");
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
    if (!out) throw IoFailure("short write to " + path.string());
}

inline bool has_png_signature(const std::vector<unsigned char>& bytes) {
    static constexpr std::array<unsigned char, 8> sig{0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
    return bytes.size() >= sig.size() && std::equal(sig.begin(), sig.end(), bytes.begin());
}

inline Image decode_png(const std::vector<unsigned char>& bytes, const std::string& name) {
    png_image png{};
    png.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_memory(&png, bytes.data(), bytes.size()))
        throw CorruptHeader(name + ": " + png.message);
    if (png.format & PNG_FORMAT_FLAG_LINEAR) {
        png_image_free(&png);
        throw UnsupportedFormat(name + ": 16-bit PNG is not supported");
    }
    const bool color = (png.format & PNG_FORMAT_FLAG_COLOR) != 0;
    png.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
    const int channels = color ? 3 : 1;
    std::vector<unsigned char> buf(PNG_IMAGE_SIZE(png));
    if (!png_image_finish_read(&png, nullptr, buf.data(), 0, nullptr)) {
        png_image_free(&png);
        throw CorruptHeader(name + ": " + png.message);
    }
    std::vector<float> data(buf.size());
    for (std::size_t i = 0; i < buf.size(); ++i) data[i] = dequantize_u8(buf[i]);
    return Image(static_cast<int>(png.width), static_cast<int>(png.height), channels,
                 std::move(data));
}

// Netpbm header token; skips whitespace and '#' comments.
inline bool next_pgm_token(const std::vector<unsigned char>& b, std::size_t& pos, long& out) {
    while (pos < b.size()) {
        if (b[pos] == '#') {
            while (pos < b.size() && b[pos] != '\n') ++pos;
        } else if (std::isspace(b[pos])) {
            ++pos;
        } else {
            break;
        }
    }
    if (pos >= b.size() || !std::isdigit(b[pos])) return false;
    out = 0;
    while (pos < b.size() && std::isdigit(b[pos])) {
        out = out * 10 + (b[pos] - '0');
        if (out > (1L << 30)) return false;
        ++pos;
    }
    return true;
}

inline Image decode_pgm(const std::vector<unsigned char>& b, const std::string& name) {
    std::size_t pos = 2;
    long w = 0, h = 0, maxval = 0;
    if (!next_pgm_token(b, pos, w) || !next_pgm_token(b, pos, h) || !next_pgm_token(b, pos, maxval))
        throw CorruptHeader(name + ": malformed PGM header");
    if (w <= 0 || h <= 0) throw CorruptHeader(name + ": PGM dimensions must be positive");
    if (maxval <= 0 || maxval > 255)
        throw UnsupportedFormat(name + ": only 8-bit PGM (maxval <= 255) is supported");
    if (pos >= b.size() || !std::isspace(b[pos])) throw CorruptHeader(name + ": malformed PGM header");
    ++pos;  // single whitespace before the raster
    const std::size_t n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
    if (b.size() - pos < n)
        throw CorruptHeader(name + ": PGM payload truncated (" + std::to_string(b.size() - pos) +
                            " of " + std::to_string(n) + " bytes)");
    std::vector<float> data(n);
    for (std::size_t i = 0; i < n; ++i) {
        const unsigned char v = b[pos + i];
        if (v > maxval) throw CorruptHeader(name + ": PGM sample exceeds maxval");
        data[i] = maxval == 255 ? dequantize_u8(v)
                                : static_cast<float>(static_cast<double>(v) / maxval);
    }
    return Image(static_cast<int>(w), static_cast<int>(h), 1, std::move(data));
}

inline std::uint32_t read_u32le(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

inline void put_u32le(std::vector<unsigned char>& out, std::uint32_t v) {
    for (int k = 0; k < 4; ++k) out.push_back(static_cast<unsigned char>(v >> (8 * k)));
}

inline bool has_extension(const std::filesystem::path& p, const char* ext) {
    std::string e = p.extension().string();
    for (char& c : e) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return e == ext;
}

} // namespace detail

/// Loads an 8-bit PNG (gray or RGB) or binary PGM, mapping bytes to v/255.
inline Image load_image(const std::filesystem::path& path) {
    const auto bytes = detail::read_file_bytes(path);
    if (detail::has_png_signature(bytes)) return detail::decode_png(bytes, path.string());
    if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '5')
        return detail::decode_pgm(bytes, path.string());
    throw UnsupportedFormat(path.string() + ": not an 8-bit PNG or binary PGM");
}

/// Writes a binary PGM; the image must be single-channel.
inline void save_pgm(const Image& img, const std::filesystem::path& path) {
    if (img.channels() != 1) throw InvalidArgument("PGM output requires a single-channel image");
    std::string header = "P5\n" + std::to_string(img.width()) + " " +
                         std::to_string(img.height()) + "\n255\n";
    std::vector<unsigned char> bytes(header.begin(), header.end());
    bytes.reserve(bytes.size() + img.size());
    for (float v : img.values()) bytes.push_back(quantize_u8(v));
    detail::write_file_bytes(path, bytes.data(), bytes.size());
}

/// Writes an 8-bit PNG with round-half-up quantization. A `.pgm` extension
/// selects binary PGM instead.
inline void save_image(const Image& img, const std::filesystem::path& path) {
    if (detail::has_extension(path, ".pgm")) return save_pgm(img, path);
    std::vector<unsigned char> buf(img.size());
    for (std::size_t i = 0; i < buf.size(); ++i) buf[i] = quantize_u8(img.values()[i]);
    png_image png{};
    png.version = PNG_IMAGE_VERSION;
    png.width = static_cast<png_uint_32>(img.width());
    png.height = static_cast<png_uint_32>(img.height());
    png.format = img.channels() == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
    png_alloc_size_t size = 0;
    if (!png_image_write_get_memory_size(png, size, 0, buf.data(), 0, nullptr))
        throw IoFailure("PNG encode failed: " + std::string(png.message));
    std::vector<unsigned char> encoded(size);
    if (!png_image_write_to_memory(&png, encoded.data(), &size, 0, buf.data(), 0, nullptr))
        throw IoFailure("PNG encode failed: " + std::string(png.message));
    detail::write_file_bytes(path, encoded.data(), size);
}

/// Loads a ground-truth mask: gray intensity thresholded at 0.5.
inline BinaryMask load_mask(const std::filesystem::path& path) {
    const Image gray = to_gray(load_image(path));
    return BinaryMask::threshold(gray.channel(0), 0.5f);
}

inline void save_mask(const BinaryMask& mask, const std::filesystem::path& path) {
    save_image(Image::from_raster(mask.raster()), path);
}

inline void save_raster_f32(const Raster& r, const std::filesystem::path& path) {
    std::vector<unsigned char> bytes{'P', 'M', 'A', 'P'};
    bytes.reserve(12 + 4 * r.size());
    detail::put_u32le(bytes, static_cast<std::uint32_t>(r.width()));
    detail::put_u32le(bytes, static_cast<std::uint32_t>(r.height()));
    for (float v : r.values()) detail::put_u32le(bytes, std::bit_cast<std::uint32_t>(v));
    detail::write_file_bytes(path, bytes.data(), bytes.size());
}

inline Raster load_raster_f32(const std::filesystem::path& path) {
    std::vector<unsigned char> bytes;
    try {
        bytes = detail::read_file_bytes(path);
    } catch (const MissingFile& e) {
        throw IoFailure(e.what());
    }
    if (bytes.size() < 4 || std::memcmp(bytes.data(), "PMAP", 4) != 0)
        throw BadMagic(path.string() + ": missing PMAP magic");
    if (bytes.size() < 12) throw DimensionMismatch(path.string() + ": truncated PMAP header");
    const std::uint32_t w = detail::read_u32le(bytes.data() + 4);
    const std::uint32_t h = detail::read_u32le(bytes.data() + 8);
    const std::uint64_t expected = static_cast<std::uint64_t>(w) * h;
    const std::uint64_t present = (bytes.size() - 12) / 4;
    if (w == 0 || h == 0 || w > (1u << 30) || h > (1u << 30) || (bytes.size() - 12) % 4 != 0 ||
        present != expected)
        throw DimensionMismatch(path.string() + ": header says " + std::to_string(w) + "x" +
                                std::to_string(h) + " but " + std::to_string(present) +
                                " floats present");
    std::vector<float> data(expected);
    for (std::size_t i = 0; i < data.size(); ++i)
        data[i] = std::bit_cast<float>(detail::read_u32le(bytes.data() + 12 + 4 * i));
    return Raster(static_cast<int>(w), static_cast<int>(h), std::move(data));
}

inline ProbabilityMap load_probability_map(const std::filesystem::path& path) {
    return ProbabilityMap(load_raster_f32(path));
}

} // namespace samu
