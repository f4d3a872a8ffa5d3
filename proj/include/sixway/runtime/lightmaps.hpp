#pragma once

#include <array>
#include <cmath>
#include <string>
#include <string_view>

#include "sixway/core/color.hpp"
#include "sixway/core/image.hpp"

namespace sixway {

/// Channel order of a six-way lightmap set. Scattering channel XPos holds the
/// response to a light whose propagation direction is +X, and so on.
enum class Channel : int { XPos = 0, XNeg, YPos, YNeg, ZPos, ZNeg, Transparency, Emissive };

inline constexpr int kLightmapChannels = 8;
inline constexpr int kScatterChannels = 6;
inline constexpr std::array<std::string_view, kLightmapChannels> kChannelNames = {"Lx+", "Lx-", "Ly+", "Ly-",
                                                                                "Lz+", "Lz-", "T",   "E"};

/// Scattering channel for axis `axis` (0,1,2) and sign.
constexpr Channel scatter_channel(int axis, bool positive) {
    return static_cast<Channel>(2 * axis + (positive ? 0 : 1));
}

/// Colour space of the six scattering channels; transparency and emissive are
/// always stored linearly.
enum class ColorSpace { linear, srgb };

/// Eight-channel screen-space map: six directional scattering responses,
/// transparency and an emissive scalar.
class SixWayLightmaps {
public:
    SixWayLightmaps() = default;
    SixWayLightmaps(int width, int height, ColorSpace space = ColorSpace::linear)
        : image_(width, height, kLightmapChannels), space_(space) {}
    SixWayLightmaps(Image image, ColorSpace space) : image_(std::move(image)), space_(space) {
        require(image_.channels() == kLightmapChannels, ErrorCode::invalid_argument,
                "lightmaps need 8 channels, got " + std::to_string(image_.channels()));
    }

    int width() const { return image_.width(); }
    int height() const { return image_.height(); }
    ColorSpace space() const { return space_; }
    void set_space(ColorSpace s) { space_ = s; }

    float& at(Channel c, int y, int x) { return image_.at(static_cast<int>(c), y, x); }
    float at(Channel c, int y, int x) const { return image_.at(static_cast<int>(c), y, x); }
    std::span<float> plane(Channel c) { return image_.plane(static_cast<int>(c)); }
    std::span<const float> plane(Channel c) const { return image_.plane(static_cast<int>(c)); }

    Image& image() { return image_; }
    const Image& image() const { return image_; }

    bool operator==(const SixWayLightmaps&) const = default;

private:
    Image image_;
    ColorSpace space_ = ColorSpace::linear;
};

/// Converts the scattering channels to linear light (no-op when already linear).
inline SixWayLightmaps to_linear(SixWayLightmaps maps) {
    if (maps.space() == ColorSpace::linear) return maps;
    for (int c = 0; c < kScatterChannels; ++c)
        for (float& v : maps.plane(static_cast<Channel>(c))) v = static_cast<float>(srgb_to_linear(v));
    maps.set_space(ColorSpace::linear);
    return maps;
}

inline SixWayLightmaps to_srgb(SixWayLightmaps maps) {
    if (maps.space() == ColorSpace::srgb) return maps;
    for (int c = 0; c < kScatterChannels; ++c)
        for (float& v : maps.plane(static_cast<Channel>(c)))
            v = static_cast<float>(linear_to_srgb(std::max(0.0f, v)));
    maps.set_space(ColorSpace::srgb);
    return maps;
}

} // namespace sixway
