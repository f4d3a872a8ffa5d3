#pragma once

#include <cmath>
#include <cstdio>
#include <functional>
#include <optional>
#include <variant>
#include <vector>

#include "sixway/bake/baker.hpp"
#include "sixway/core/image.hpp"
#include "sixway/core/vec3.hpp"
#include "sixway/runtime/lightmaps.hpp"

namespace sixway {

/// Receives non-fatal diagnostics; defaults to standard error.
inline std::function<void(const std::string&)>& warning_sink() {
    static std::function<void(const std::string&)> sink = [](const std::string& msg) {
        std::fprintf(stderr, "warning: %s\n", msg.c_str());
    };
    return sink;
}

/// Distant light. `direction` is the propagation direction (from the light
/// toward the scene), stored unit length.
struct DirectionalLight {
    Vec3 direction{0, 0, -1};
    Rgb radiance{1, 1, 1};
};

/// Unit-length version of `dir`: tiny deviations (<= 1e-3) are renormalised
/// with a warning, larger ones are rejected.
inline Vec3 checked_unit(const Vec3& dir) {
    const double len = length(dir);
    const double dev = std::abs(len - 1.0);
    if (dev <= 1e-6) return dir;
    require(dev <= 1e-3 && len > 0, ErrorCode::invalid_argument,
            "light direction is not unit length (|w| = " + std::to_string(len) + ")");
    warning_sink()("light direction renormalised from |w| = " + std::to_string(len));
    return dir / len;
}

inline DirectionalLight make_light(const Vec3& dir, const Rgb& radiance) {
    require(radiance.x >= 0 && radiance.y >= 0 && radiance.z >= 0, ErrorCode::invalid_argument,
            "light radiance must be >= 0");
    return {checked_unit(dir), radiance};
}

/// Scattering response to one unit light: sum over axes of |w_p| * L_p^{sign(w_p)}.
/// Zero components contribute nothing, so axis directions return the stored
/// channel bit for bit. Weights are not renormalised.
inline Image interpolate_scattering(const SixWayLightmaps& maps, const Vec3& light_dir) {
    require(maps.space() == ColorSpace::linear, ErrorCode::invalid_argument,
            "interpolate_scattering expects linear lightmaps");
    const Vec3 w = checked_unit(light_dir);
    Image out(maps.width(), maps.height(), 1);
    auto dst = out.plane(0);
    bool first = true;
    for (int axis = 0; axis < 3; ++axis) {
        const double c = w[axis];
        if (c == 0.0) continue;
        const auto weight = static_cast<float>(std::abs(c));
        const auto src = maps.plane(scatter_channel(axis, c > 0));
        if (first) {
            for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = weight == 1.0f ? src[i] : weight * src[i];
            first = false;
        } else {
            for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += weight * src[i];
        }
    }
    return out;
}

/// Constant colour or per-pixel RGB image behind the smoke.
using Background = std::variant<Rgb, Image>;

/// out = sum_l radiance_l * S(w_l) * visibility_l + lut(E) + T * background,
/// all in linear light. `visibility` has one channel (shared by every light)
/// or one channel per light; absent means fully lit.
inline Image composite(const SixWayLightmaps& maps_in, const std::vector<DirectionalLight>& lights,
                       const Background& background, const EmissiveLUT* lut = nullptr,
                       const Image* visibility = nullptr) {
    const SixWayLightmaps maps = to_linear(maps_in);
    const int w = maps.width(), h = maps.height();
    if (const auto* img = std::get_if<Image>(&background)) {
        require(img->width() == w && img->height() == h && img->channels() == 3, ErrorCode::dimension_mismatch,
                "background must be a 3-channel image matching the lightmaps");
    }
    if (visibility) {
        require(visibility->width() == w && visibility->height() == h, ErrorCode::dimension_mismatch,
                "visibility map size differs from the lightmaps");
        require(visibility->channels() == 1 || visibility->channels() == static_cast<int>(lights.size()),
                ErrorCode::dimension_mismatch, "visibility needs one channel or one per light");
    }
    if (lut) lut->validate();

    Image out(w, h, 3);
    std::vector<Image> responses;
    responses.reserve(lights.size());
    for (const auto& l : lights) responses.push_back(interpolate_scattering(maps, l.direction));

    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            Rgb c{0, 0, 0};
            for (std::size_t li = 0; li < lights.size(); ++li) {
                double s = responses[li].at(0, y, x);
                if (visibility) s *= visibility->at(visibility->channels() == 1 ? 0 : static_cast<int>(li), y, x);
                c += lights[li].radiance * s;
            }
            if (lut) c += lut->lookup(maps.at(Channel::Emissive, y, x));
            const double t = maps.at(Channel::Transparency, y, x);
            if (const auto* col = std::get_if<Rgb>(&background)) {
                c += *col * t;
            } else {
                const Image& bg = std::get<Image>(background);
                c += Rgb(bg.at(0, y, x), bg.at(1, y, x), bg.at(2, y, x)) * t;
            }
            for (int k = 0; k < 3; ++k) out.at(k, y, x) = static_cast<float>(c[k]);
        }
    return out;
}

/// Linear RGB -> sRGB-encoded values clamped to [0, 1].
inline Image encode_srgb(const Image& linear) {
    Image out = linear;
    for (float& v : out.data()) v = static_cast<float>(std::clamp(linear_to_srgb(std::max(0.0f, v)), 0.0, 1.0));
    return out;
}

} // namespace sixway
