#pragma once

#include <string>

#include "sixway/guiding/guiding_map.hpp"
#include "sixway/nn/ops.hpp"
#include "sixway/nn/weights.hpp"
#include "sixway/runtime/lightmaps.hpp"

namespace sixway::nn {

struct ForwardOptions {
    unsigned threads = default_thread_count();
    bool check_finite = true;
};

namespace detail {

inline void check_activation(const Tensor& t, const std::string& layer, const ForwardOptions& opt) {
    if (opt.check_finite && !all_finite(t.data))
        fail(ErrorCode::non_finite, "activation after layer '" + layer + "'");
}

inline Tensor conv(const WeightStore& w, const std::string& name, const Tensor& x, ConvSpec spec,
                   const ForwardOptions& opt) {
    Tensor y = conv2d(x, w.kernel(name + ".weight"), w.values(name + ".bias"), spec, opt.threads);
    check_activation(y, name, opt);
    return y;
}

} // namespace detail

/// NAFBlock: LN -> 1x1 expand -> 3x3 depthwise -> gate -> channel attention ->
/// 1x1 -> residual (beta), then LN -> 1x1 expand -> gate -> 1x1 -> residual (gamma).
inline Tensor nafblock_forward(const WeightStore& w, const std::string& prefix, const Tensor& input,
                               float eps, const ForwardOptions& opt = {}) {
    const auto& norm_w = w.get(prefix + ".norm1.weight");
    require(static_cast<int>(norm_w.values.size()) == input.c, ErrorCode::shape_mismatch,
            "block '" + prefix + "' width " + std::to_string(norm_w.values.size()) + " vs input " +
                input.shape_string());
    Tensor x = layer_norm_channels(input, w.values(prefix + ".norm1.weight"), w.values(prefix + ".norm1.bias"), eps);
    x = detail::conv(w, prefix + ".conv1", x, {}, opt);
    x = detail::conv(w, prefix + ".conv2", x, {1, Padding::same, x.c}, opt);
    x = simple_gate(x);
    scale_channels(x, detail::conv(w, prefix + ".sca", global_average_pool(x), {}, opt));
    x = detail::conv(w, prefix + ".conv3", x, {}, opt);
    const Tensor y = residual_add(input, x, w.values(prefix + ".beta"));

    x = layer_norm_channels(y, w.values(prefix + ".norm2.weight"), w.values(prefix + ".norm2.bias"), eps);
    x = detail::conv(w, prefix + ".conv4", x, {}, opt);
    x = simple_gate(x);
    x = detail::conv(w, prefix + ".conv5", x, {}, opt);
    Tensor out = residual_add(y, x, w.values(prefix + ".gamma"));
    detail::check_activation(out, prefix, opt);
    return out;
}

/// Packs a guiding map into the network's input tensor: radiance and
/// transparency unchanged, depth divided by the depth scale.
inline Tensor guiding_to_tensor(const GuidingMap& g) {
    require(g.depth_scale > 0, ErrorCode::invalid_argument, "guiding depth scale must be positive");
    Tensor t(1, 3, g.height(), g.width());
    const auto& img = g.channels;
    for (int y = 0; y < g.height(); ++y)
        for (int x = 0; x < g.width(); ++x) {
            t.at(0, 0, y, x) = img.at(GuidingMap::kRadiance, y, x);
            t.at(0, 1, y, x) = img.at(GuidingMap::kTransparency, y, x);
            t.at(0, 2, y, x) = static_cast<float>(img.at(GuidingMap::kDepth, y, x) / g.depth_scale);
        }
    return t;
}

/// Raw generator: [1,3,H,W] -> [1,8,H,W] in canonical channel order, after the
/// logistic. Inputs whose sides are not multiples of 2^levels are reflect
/// padded on the bottom/right and the output cropped back.
inline Tensor forward_tensor(const WeightStore& w, const Tensor& input, const ForwardOptions& opt = {}) {
    const NetArchitecture& a = w.architecture();
    require(input.n == 1 && input.c == a.input_channels, ErrorCode::shape_mismatch,
            "generator input must be [1,3,H,W], got " + input.shape_string());
    detail::check_activation(input, "input", opt);
    const int mult = 1 << a.encoder_levels;
    const int ph = (mult - input.h % mult) % mult, pw = (mult - input.w % mult) % mult;
    Tensor x = (ph || pw) ? reflect_pad_bottom_right(input, ph, pw) : input;

    x = detail::conv(w, "stem", x, {}, opt);
    std::vector<Tensor> skips;
    for (int i = 0; i < a.encoder_levels; ++i) {
        const std::string lvl = std::to_string(i);
        for (int j = 0; j < a.blocks_per_level; ++j)
            x = nafblock_forward(w, "enc" + lvl + ".block" + std::to_string(j), x, a.norm_eps, opt);
        skips.push_back(x);
        x = detail::conv(w, "down" + lvl, x, {2, Padding::valid, 1}, opt);
    }
    for (int j = 0; j < a.blocks_per_level; ++j)
        x = nafblock_forward(w, "mid.block" + std::to_string(j), x, a.norm_eps, opt);
    for (int i = a.encoder_levels - 1; i >= 0; --i) {
        const std::string lvl = std::to_string(i);
        x = detail::conv(w, "up" + lvl, upsample_nearest2(x), {}, opt);
        require(x.h == skips[i].h && x.w == skips[i].w, ErrorCode::shape_mismatch,
                "decoder level " + lvl + " " + x.shape_string() + " vs skip " + skips[i].shape_string());
        x = detail::conv(w, "fuse" + lvl, concat_channels(x, skips[i]), {}, opt);
        for (int j = 0; j < a.blocks_per_level; ++j)
            x = nafblock_forward(w, "dec" + lvl + ".block" + std::to_string(j), x, a.norm_eps, opt);
    }

    Tensor out(1, kLightmapChannels, x.h, x.w);
    for (int g = 0; g < 4; ++g) {
        const std::string name = "adapter" + std::to_string(g);
        Tensor y = x;
        for (int j = 0; j < a.adapter_blocks; ++j)
            y = nafblock_forward(w, name + ".block" + std::to_string(j), y, a.norm_eps, opt);
        y = detail::conv(w, name + ".proj", y, {}, opt);
        sigmoid_inplace(y);
        for (int k = 0; k < 2; ++k) {
            const int dst = static_cast<int>(NetArchitecture::kGroups[g][k]);
            std::copy(y.plane(0, k), y.plane(0, k) + y.plane_size(), out.plane(0, dst));
        }
    }
    return (ph || pw) ? crop(out, input.h, input.w) : out;
}

/// Guiding map -> six-way lightmaps (scattering channels sRGB-encoded).
inline SixWayLightmaps forward(const WeightStore& w, const GuidingMap& guiding, const ForwardOptions& opt = {}) {
    const Tensor out = forward_tensor(w, guiding_to_tensor(guiding), opt);
    Image img(out.w, out.h, kLightmapChannels);
    std::copy(out.data.begin(), out.data.end(), img.data().begin());
    return SixWayLightmaps(std::move(img), ColorSpace::srgb);
}

} // namespace sixway::nn
