#pragma once

#include <array>
#include <cmath>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "sixway/runtime/lightmaps.hpp"

namespace sixway {

/// Two RGBA textures in the engine layout:
/// first  = (right Lx+, top Ly+, back Lz-, transparency)
/// second = (left Lx-, bottom Ly-, front Lz+, emissive)
struct PackedTextures {
    Image first;
    Image second;
    bool operator==(const PackedTextures&) const = default;
};

inline constexpr std::array<Channel, 4> kFirstTextureLayout = {Channel::XPos, Channel::YPos, Channel::ZNeg,
                                                               Channel::Transparency};
inline constexpr std::array<Channel, 4> kSecondTextureLayout = {Channel::XNeg, Channel::YNeg, Channel::ZPos,
                                                                Channel::Emissive};

inline PackedTextures pack_textures(const SixWayLightmaps& maps) {
    PackedTextures p{Image(maps.width(), maps.height(), 4), Image(maps.width(), maps.height(), 4)};
    for (int k = 0; k < 4; ++k) {
        auto a = maps.plane(kFirstTextureLayout[k]);
        auto b = maps.plane(kSecondTextureLayout[k]);
        std::copy(a.begin(), a.end(), p.first.plane(k).begin());
        std::copy(b.begin(), b.end(), p.second.plane(k).begin());
    }
    return p;
}

inline SixWayLightmaps unpack_textures(const PackedTextures& p, ColorSpace space) {
    require(p.first.channels() == 4 && p.second.channels() == 4 && p.first.width() == p.second.width() &&
                p.first.height() == p.second.height(),
            ErrorCode::dimension_mismatch, "packed textures must be two equally sized RGBA images");
    SixWayLightmaps maps(p.first.width(), p.first.height(), space);
    for (int k = 0; k < 4; ++k) {
        auto a = p.first.plane(k);
        auto b = p.second.plane(k);
        std::copy(a.begin(), a.end(), maps.plane(kFirstTextureLayout[k]).begin());
        std::copy(b.begin(), b.end(), maps.plane(kSecondTextureLayout[k]).begin());
    }
    return maps;
}

/// K frames laid out row-major on a ceil(sqrt K)-column grid; unused cells are zero.
struct FlipbookAtlas {
    int frames = 0;
    int columns = 0;
    int rows = 0;
    int frame_w = 0;
    int frame_h = 0;
    PackedTextures textures;
};

inline std::pair<int, int> flipbook_grid(int frames) {
    const int columns = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(frames))));
    return {columns, (frames + columns - 1) / columns};
}

inline FlipbookAtlas pack_flipbook(const std::vector<PackedTextures>& frames) {
    require(!frames.empty(), ErrorCode::invalid_argument, "flipbook needs at least one frame");
    const int fw = frames[0].first.width(), fh = frames[0].first.height();
    for (const auto& f : frames)
        require(f.first.width() == fw && f.first.height() == fh && f.second.width() == fw &&
                    f.second.height() == fh && f.first.channels() == 4 && f.second.channels() == 4,
                ErrorCode::dimension_mismatch, "flipbook frames must share dimensions");
    FlipbookAtlas atlas;
    atlas.frames = static_cast<int>(frames.size());
    std::tie(atlas.columns, atlas.rows) = flipbook_grid(atlas.frames);
    atlas.frame_w = fw;
    atlas.frame_h = fh;
    atlas.textures = {Image(atlas.columns * fw, atlas.rows * fh, 4), Image(atlas.columns * fw, atlas.rows * fh, 4)};
    for (int k = 0; k < atlas.frames; ++k) {
        const int ox = (k % atlas.columns) * fw, oy = (k / atlas.columns) * fh;
        for (int c = 0; c < 4; ++c)
            for (int y = 0; y < fh; ++y)
                for (int x = 0; x < fw; ++x) {
                    atlas.textures.first.at(c, oy + y, ox + x) = frames[k].first.at(c, y, x);
                    atlas.textures.second.at(c, oy + y, ox + x) = frames[k].second.at(c, y, x);
                }
    }
    return atlas;
}

inline PackedTextures sample_flipbook(const FlipbookAtlas& atlas, int k) {
    require(k >= 0 && k < atlas.frames, ErrorCode::out_of_range,
            "flipbook frame " + std::to_string(k) + " of " + std::to_string(atlas.frames));
    PackedTextures p{Image(atlas.frame_w, atlas.frame_h, 4), Image(atlas.frame_w, atlas.frame_h, 4)};
    const int ox = (k % atlas.columns) * atlas.frame_w, oy = (k / atlas.columns) * atlas.frame_h;
    for (int c = 0; c < 4; ++c)
        for (int y = 0; y < atlas.frame_h; ++y)
            for (int x = 0; x < atlas.frame_w; ++x) {
                p.first.at(c, y, x) = atlas.textures.first.at(c, oy + y, ox + x);
                p.second.at(c, y, x) = atlas.textures.second.at(c, oy + y, ox + x);
            }
    return p;
}

inline nlohmann::json atlas_metadata(const FlipbookAtlas& a) {
    return {{"K", a.frames}, {"columns", a.columns}, {"rows", a.rows}, {"frame_w", a.frame_w}, {"frame_h", a.frame_h}};
}

} // namespace sixway
