#pragma once

#include <png.h>

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <vector>

#include "sixway/core/color.hpp"
#include "sixway/core/image.hpp"
#include "sixway/io/binary.hpp"

namespace sixway::io {

/// 8-bit interleaved pixels as stored in a PNG file.
struct Image8 {
    int width = 0;
    int height = 0;
    int channels = 0; // 1, 3 or 4
    std::vector<std::uint8_t> pixels;

    bool operator==(const Image8&) const = default;
};

/// Quantizes a float image. Colour channels are sRGB-encoded when `encode_srgb`
/// is set; a fourth (alpha) channel is always stored linearly.
inline Image8 to_image8(const Image& img, bool encode_srgb) {
    require(img.channels() == 1 || img.channels() == 3 || img.channels() == 4, ErrorCode::invalid_argument,
            "PNG export needs 1, 3 or 4 channels");
    Image8 out{img.width(), img.height(), img.channels(), {}};
    out.pixels.resize(img.plane_size() * img.channels());
    std::size_t i = 0;
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x)
            for (int c = 0; c < img.channels(); ++c) {
                double v = img.at(c, y, x);
                if (encode_srgb && c < 3) v = linear_to_srgb(std::max(v, 0.0));
                out.pixels[i++] = quantize_unorm8(v);
            }
    return out;
}

inline std::vector<std::uint8_t> encode_png(const Image8& img) {
    png_image image;
    std::memset(&image, 0, sizeof(image));
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(img.width);
    image.height = static_cast<png_uint_32>(img.height);
    image.format = img.channels == 1 ? PNG_FORMAT_GRAY : (img.channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_RGBA);
    png_alloc_size_t size = 0;
    require(png_image_write_get_memory_size(image, size, 0, img.pixels.data(), 0, nullptr) != 0,
            ErrorCode::io_failure, "png size query failed");
    std::vector<std::uint8_t> bytes(size);
    require(png_image_write_to_memory(&image, bytes.data(), &size, 0, img.pixels.data(), 0, nullptr) != 0,
            ErrorCode::io_failure, std::string("png encode failed: ") + image.message);
    bytes.resize(size);
    return bytes;
}

inline Image8 decode_png(const std::vector<std::uint8_t>& bytes) {
    png_image image;
    std::memset(&image, 0, sizeof(image));
    image.version = PNG_IMAGE_VERSION;
    require(png_image_begin_read_from_memory(&image, bytes.data(), bytes.size()) != 0, ErrorCode::bad_magic,
            std::string("png decode failed: ") + image.message);
    Image8 out;
    out.width = static_cast<int>(image.width);
    out.height = static_cast<int>(image.height);
    const bool alpha = (image.format & PNG_FORMAT_FLAG_ALPHA) != 0;
    const bool color = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
    out.channels = color ? (alpha ? 4 : 3) : 1;
    image.format = color ? (alpha ? PNG_FORMAT_RGBA : PNG_FORMAT_RGB) : PNG_FORMAT_GRAY;
    out.pixels.resize(PNG_IMAGE_SIZE(image));
    const int ok = png_image_finish_read(&image, nullptr, out.pixels.data(), 0, nullptr);
    require(ok != 0, ErrorCode::truncated, std::string("png decode failed: ") + image.message);
    return out;
}

inline void write_png(const std::filesystem::path& path, const Image& img, bool encode_srgb = true) {
    write_file(path, encode_png(to_image8(img, encode_srgb)));
}

} // namespace sixway::io
