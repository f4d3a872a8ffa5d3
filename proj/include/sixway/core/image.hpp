#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "sixway/core/error.hpp"

namespace sixway {

/// Planar multi-channel float image: channel c, row y, column x lives at
/// data[(c * height + y) * width + x]. Row 0 is the top of the picture.
class Image {
public:
    Image() = default;
    Image(int width, int height, int channels, float fill = 0.0f)
        : width_(width), height_(height), channels_(channels) {
        require(width >= 0 && height >= 0 && channels >= 0, ErrorCode::invalid_argument,
                "image dimensions must be non-negative");
        data_.assign(static_cast<std::size_t>(width) * height * channels, fill);
    }

    int width() const { return width_; }
    int height() const { return height_; }
    int channels() const { return channels_; }
    std::size_t plane_size() const { return static_cast<std::size_t>(width_) * height_; }
    bool same_shape(const Image& o) const {
        return width_ == o.width_ && height_ == o.height_ && channels_ == o.channels_;
    }

    float& at(int c, int y, int x) { return data_[(static_cast<std::size_t>(c) * height_ + y) * width_ + x]; }
    float at(int c, int y, int x) const { return data_[(static_cast<std::size_t>(c) * height_ + y) * width_ + x]; }

    std::span<float> plane(int c) { return {data_.data() + c * plane_size(), plane_size()}; }
    std::span<const float> plane(int c) const { return {data_.data() + c * plane_size(), plane_size()}; }

    std::vector<float>& data() { return data_; }
    const std::vector<float>& data() const { return data_; }

    bool operator==(const Image&) const = default;

private:
    int width_ = 0;
    int height_ = 0;
    int channels_ = 0;
    std::vector<float> data_;
};

inline void require_same_size(const Image& a, const Image& b, const std::string& what) {
    require(a.width() == b.width() && a.height() == b.height(), ErrorCode::dimension_mismatch,
            what + ": " + std::to_string(a.width()) + "x" + std::to_string(a.height()) + " vs " +
                std::to_string(b.width()) + "x" + std::to_string(b.height()));
}

} // namespace sixway
