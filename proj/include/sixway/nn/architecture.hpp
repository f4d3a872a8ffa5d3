#pragma once

#include <algorithm>
#include <array>
#include <utility>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sixway/core/error.hpp"
#include "sixway/runtime/lightmaps.hpp"

namespace sixway::nn {

/// U-Net generator layout. Widths double per level from `base_width`, capped
/// at `max_width`; level `encoder_levels` is the bottleneck.
struct NetArchitecture {
    int input_channels = 3;
    int output_channels = 8;
    int encoder_levels = 4;
    int base_width = 32;
    int max_width = 256;
    int blocks_per_level = 2;
    int adapter_blocks = 2;
    float norm_eps = 1e-6f;

    /// Output groups in adapter order; each adapter emits two channels.
    static constexpr std::array<std::array<Channel, 2>, 4> kGroups = {{
        {Channel::ZPos, Channel::ZNeg},               // front & back
        {Channel::XPos, Channel::XNeg},               // left & right
        {Channel::YPos, Channel::YNeg},               // up & down
        {Channel::Transparency, Channel::Emissive},   // alpha & emissive
    }};

    int width(int level) const { return std::min(base_width << level, max_width); }

    void validate() const {
        require(input_channels == 3 && output_channels == 8, ErrorCode::invalid_argument,
                "generator maps 3 guiding channels to 8 lightmap channels");
        require(encoder_levels >= 0 && encoder_levels <= 8, ErrorCode::invalid_argument, "encoder levels in [0, 8]");
        require(base_width >= 1 && max_width >= base_width, ErrorCode::invalid_argument, "bad widths");
        require(blocks_per_level >= 0 && adapter_blocks >= 0, ErrorCode::invalid_argument, "bad block counts");
        require(norm_eps > 0, ErrorCode::invalid_argument, "norm eps must be positive");
    }

    bool operator==(const NetArchitecture&) const = default;
};

inline nlohmann::json to_json(const NetArchitecture& a) {
    nlohmann::json groups = nlohmann::json::array();
    for (const auto& g : NetArchitecture::kGroups)
        groups.push_back({std::string(kChannelNames[static_cast<int>(g[0])]),
                          std::string(kChannelNames[static_cast<int>(g[1])])});
    return {{"input_channels", a.input_channels},
            {"output_channels", a.output_channels},
            {"encoder_levels", a.encoder_levels},
            {"base_width", a.base_width},
            {"max_width", a.max_width},
            {"blocks_per_level", a.blocks_per_level},
            {"adapter_blocks", a.adapter_blocks},
            {"norm_eps", a.norm_eps},
            {"groups", groups},
            {"input_normalization", "radiance, transparency, depth / depth_scale"},
            {"output_space", "srgb scattering, linear transparency/emissive"}};
}

inline NetArchitecture architecture_from_json(const nlohmann::json& j) {
    NetArchitecture a;
    try {
        a.input_channels = j.at("input_channels").get<int>();
        a.output_channels = j.at("output_channels").get<int>();
        a.encoder_levels = j.at("encoder_levels").get<int>();
        a.base_width = j.at("base_width").get<int>();
        a.max_width = j.at("max_width").get<int>();
        a.blocks_per_level = j.at("blocks_per_level").get<int>();
        a.adapter_blocks = j.at("adapter_blocks").get<int>();
        a.norm_eps = j.value("norm_eps", 1e-6f);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::invalid_argument, std::string("architecture descriptor: ") + e.what());
    }
    a.validate();
    return a;
}

struct RecordSpec {
    std::string name;
    std::vector<std::uint32_t> shape;
};

namespace detail {

inline void add_conv(std::vector<RecordSpec>& out, const std::string& name, std::uint32_t oc, std::uint32_t ic,
                     std::uint32_t k) {
    out.push_back({name + ".weight", {oc, ic, k, k}});
    out.push_back({name + ".bias", {oc}});
}

inline void add_nafblock(std::vector<RecordSpec>& out, const std::string& p, std::uint32_t c) {
    out.push_back({p + ".norm1.weight", {c}});
    out.push_back({p + ".norm1.bias", {c}});
    add_conv(out, p + ".conv1", 2 * c, c, 1);
    add_conv(out, p + ".conv2", 2 * c, 1, 3); // depthwise
    add_conv(out, p + ".sca", c, c, 1);
    add_conv(out, p + ".conv3", c, c, 1);
    out.push_back({p + ".beta", {c}});
    out.push_back({p + ".norm2.weight", {c}});
    out.push_back({p + ".norm2.bias", {c}});
    add_conv(out, p + ".conv4", 2 * c, c, 1);
    add_conv(out, p + ".conv5", c, c, 1);
    out.push_back({p + ".gamma", {c}});
}

} // namespace detail

/// Every weight record the architecture consumes, in canonical file order.
inline std::vector<RecordSpec> required_records(const NetArchitecture& a) {
    a.validate();
    std::vector<RecordSpec> r;
    const int levels = a.encoder_levels;
    auto w = [&](int level) { return static_cast<std::uint32_t>(a.width(level)); };
    detail::add_conv(r, "stem", w(0), 3, 3);
    for (int i = 0; i < levels; ++i) {
        for (int j = 0; j < a.blocks_per_level; ++j)
            detail::add_nafblock(r, "enc" + std::to_string(i) + ".block" + std::to_string(j), w(i));
        detail::add_conv(r, "down" + std::to_string(i), w(i + 1), w(i), 2);
    }
    for (int j = 0; j < a.blocks_per_level; ++j) detail::add_nafblock(r, "mid.block" + std::to_string(j), w(levels));
    for (int i = levels - 1; i >= 0; --i) {
        detail::add_conv(r, "up" + std::to_string(i), w(i), w(i + 1), 3);
        detail::add_conv(r, "fuse" + std::to_string(i), w(i), 2 * w(i), 1);
        for (int j = 0; j < a.blocks_per_level; ++j)
            detail::add_nafblock(r, "dec" + std::to_string(i) + ".block" + std::to_string(j), w(i));
    }
    for (int g = 0; g < 4; ++g) {
        for (int j = 0; j < a.adapter_blocks; ++j)
            detail::add_nafblock(r, "adapter" + std::to_string(g) + ".block" + std::to_string(j), w(0));
        detail::add_conv(r, "adapter" + std::to_string(g) + ".proj", 2, w(0), 1);
    }
    return r;
}

/// Range of output columns (or rows) that can change when input column
/// `pos` changes, following the convolutional path level by level. Channel
/// attention pools globally and is ignored, so the range is exact only when
/// attention kernels are zero.
inline std::pair<int, int> affected_span(const NetArchitecture& a, int pos) {
    int lo = pos - 1, hi = pos + 1; // stem 3x3
    std::vector<std::pair<int, int>> skips;
    for (int i = 0; i < a.encoder_levels; ++i) {
        lo -= a.blocks_per_level;
        hi += a.blocks_per_level;
        skips.emplace_back(lo, hi);
        lo = lo >= 0 ? lo / 2 : -((1 - lo) / 2); // floor division
        hi = hi >= 0 ? hi / 2 : -((1 - hi) / 2);
    }
    lo -= a.blocks_per_level;
    hi += a.blocks_per_level;
    for (int i = a.encoder_levels - 1; i >= 0; --i) {
        lo = 2 * lo - 1; // nearest upsample, then 3x3
        hi = 2 * hi + 2;
        lo = std::min(lo, skips[i].first);
        hi = std::max(hi, skips[i].second);
        lo -= a.blocks_per_level;
        hi += a.blocks_per_level;
    }
    return {lo - a.adapter_blocks, hi + a.adapter_blocks};
}

} // namespace sixway::nn
