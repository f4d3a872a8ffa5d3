#pragma once

#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <sstream>
#include <string>

#include "sixway/core/image.hpp"
#include "sixway/io/binary.hpp"

namespace sixway::io {

// Portable float map. Written little-endian (scale -1.0), rows bottom-to-top
// as the format requires. Only 1- and 3-channel images are representable.

inline std::vector<std::uint8_t> encode_pfm(const Image& img) {
    require(img.channels() == 1 || img.channels() == 3, ErrorCode::invalid_argument,
            "PFM holds 1 or 3 channels, got " + std::to_string(img.channels()));
    std::string header = std::string(img.channels() == 3 ? "PF" : "Pf") + "\n" +
                         std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n-1.0\n";
    ByteWriter w;
    w.put_string(header);
    for (int y = img.height() - 1; y >= 0; --y)
        for (int x = 0; x < img.width(); ++x)
            for (int c = 0; c < img.channels(); ++c) w.put<float>(img.at(c, y, x));
    return std::move(w.bytes());
}

inline void write_pfm(const std::filesystem::path& path, const Image& img) {
    write_file(path, encode_pfm(img));
}

inline Image decode_pfm(const std::vector<std::uint8_t>& bytes) {
    // Header: three whitespace-separated tokens terminated by a single whitespace byte.
    std::size_t pos = 0;
    auto token = [&]() {
        while (pos < bytes.size() && std::isspace(bytes[pos])) ++pos;
        std::string t;
        while (pos < bytes.size() && !std::isspace(bytes[pos])) t.push_back(static_cast<char>(bytes[pos++]));
        return t;
    };
    const std::string magic = token();
    require(magic == "PF" || magic == "Pf", ErrorCode::bad_magic, "not a PFM file");
    const int channels = magic == "PF" ? 3 : 1;
    int width = 0, height = 0;
    double scale = 0;
    try {
        width = std::stoi(token());
        height = std::stoi(token());
        scale = std::stod(token());
    } catch (const std::exception&) {
        fail(ErrorCode::truncated, "malformed PFM header");
    }
    require(width > 0 && height > 0, ErrorCode::invalid_argument, "PFM dimensions must be positive");
    require(scale < 0, ErrorCode::unsupported_version, "big-endian PFM is not supported");
    ++pos; // single whitespace after the scale
    const std::size_t need = static_cast<std::size_t>(width) * height * channels * sizeof(float);
    require(pos <= bytes.size() && bytes.size() - pos >= need, ErrorCode::truncated, "PFM payload too short");
    Image img(width, height, channels);
    const auto* src = bytes.data() + pos;
    for (int y = height - 1; y >= 0; --y)
        for (int x = 0; x < width; ++x)
            for (int c = 0; c < channels; ++c) {
                float v;
                std::memcpy(&v, src, sizeof(float));
                src += sizeof(float);
                img.at(c, y, x) = v;
            }
    return img;
}

inline Image read_pfm(const std::filesystem::path& path) { return decode_pfm(read_file(path)); }

} // namespace sixway::io
