#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "sixway/guiding/guiding_map.hpp"
#include "sixway/io/pfm.hpp"
#include "sixway/runtime/lightmaps.hpp"

namespace sixway::io {

// Lightmaps are stored as one grayscale PFM of size W x 8H with the channels
// stacked top to bottom in canonical order. A JSON sidecar (`<file>.json`)
// records the channel names and the colour space of the scattering channels.
// Guiding maps are a 3-channel PFM with a sidecar holding the depth scale.

inline std::filesystem::path sidecar_path(const std::filesystem::path& p) {
    return std::filesystem::path(p.string() + ".json");
}

inline Image stack_channels(const Image& img) {
    Image out(img.width(), img.height() * img.channels(), 1);
    for (int c = 0; c < img.channels(); ++c)
        std::copy(img.plane(c).begin(), img.plane(c).end(), out.data().begin() + c * img.plane_size());
    return out;
}

inline Image unstack_channels(const Image& stacked, int channels) {
    require(stacked.channels() == 1 && stacked.height() % channels == 0, ErrorCode::shape_mismatch,
            "stacked map height must be a multiple of " + std::to_string(channels));
    Image out(stacked.width(), stacked.height() / channels, channels);
    std::copy(stacked.data().begin(), stacked.data().end(), out.data().begin());
    return out;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    write_file(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

inline nlohmann::json read_json(const std::filesystem::path& path) {
    const auto bytes = read_file(path);
    try {
        return nlohmann::json::parse(bytes.begin(), bytes.end());
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::invalid_argument, path.string() + ": " + e.what());
    }
}

inline void write_lightmaps(const std::filesystem::path& path, const SixWayLightmaps& maps) {
    write_pfm(path, stack_channels(maps.image()));
    nlohmann::json side;
    side["layout"] = "stacked";
    side["width"] = maps.width();
    side["height"] = maps.height();
    side["channels"] = nlohmann::json::array();
    for (auto n : kChannelNames) side["channels"].push_back(std::string(n));
    side["color_space"] = maps.space() == ColorSpace::srgb ? "srgb" : "linear";
    write_text(sidecar_path(path), side.dump(2) + "\n");
}

/// Reads a stacked lightmap PFM; without a sidecar the scattering channels are
/// taken to be linear.
inline SixWayLightmaps read_lightmaps(const std::filesystem::path& path) {
    Image img = unstack_channels(read_pfm(path), kLightmapChannels);
    ColorSpace space = ColorSpace::linear;
    if (std::filesystem::exists(sidecar_path(path))) {
        const auto side = read_json(sidecar_path(path));
        if (side.value("color_space", "linear") == "srgb") space = ColorSpace::srgb;
    }
    return SixWayLightmaps(std::move(img), space);
}

inline void write_guiding(const std::filesystem::path& path, const GuidingMap& map) {
    write_pfm(path, map.channels);
    nlohmann::json side;
    side["channels"] = {"radiance", "transparency", "depth"};
    side["depth_scale"] = map.depth_scale;
    write_text(sidecar_path(path), side.dump(2) + "\n");
}

inline GuidingMap read_guiding(const std::filesystem::path& path) {
    GuidingMap map{read_pfm(path), 1.0};
    require(map.channels.channels() == 3, ErrorCode::shape_mismatch, "guiding map PFM must have 3 channels");
    if (std::filesystem::exists(sidecar_path(path))) map.depth_scale = read_json(sidecar_path(path)).value("depth_scale", 1.0);
    require(map.depth_scale > 0, ErrorCode::invalid_argument, "guiding depth scale must be positive");
    return map;
}

} // namespace sixway::io
