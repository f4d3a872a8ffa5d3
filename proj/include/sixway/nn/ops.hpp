#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>

#include "sixway/core/parallel.hpp"
#include "sixway/nn/tensor.hpp"

namespace sixway::nn {

enum class Padding { same, valid };

struct ConvSpec {
    int stride = 1;
    Padding padding = Padding::same;
    int groups = 1;
};

inline int conv_output_size(int in, int k, int stride, Padding pad) {
    return pad == Padding::valid ? (in - k) / stride + 1 : (in + stride - 1) / stride;
}

/// Cross-correlation. `kernel` is [out, in / groups, kh, kw]; `bias` has one
/// entry per output channel or is empty. "same" pads like TensorFlow (extra
/// row/column at the bottom/right); for odd kernels at stride 1 that is the
/// symmetric (k-1)/2. Parallel over output channels; each output value is
/// accumulated in a fixed order, so the result does not depend on threading.
inline Tensor conv2d(const Tensor& input, const Tensor& kernel, std::span<const float> bias, ConvSpec spec = {},
                     unsigned threads = default_thread_count()) {
    const int groups = spec.groups;
    require(groups >= 1 && spec.stride >= 1, ErrorCode::invalid_argument, "conv2d needs groups >= 1, stride >= 1");
    require(kernel.n > 0 && input.c % groups == 0 && kernel.n % groups == 0 && kernel.c * groups == input.c,
            ErrorCode::shape_mismatch,
            "conv2d kernel " + kernel.shape_string() + " incompatible with input " + input.shape_string() +
                " (groups " + std::to_string(groups) + ")");
    require(bias.empty() || static_cast<int>(bias.size()) == kernel.n, ErrorCode::shape_mismatch,
            "conv2d bias length " + std::to_string(bias.size()) + " vs " + std::to_string(kernel.n) + " outputs");
    const int kh = kernel.h, kw = kernel.w, s = spec.stride;
    require(spec.padding == Padding::same || (input.h >= kh && input.w >= kw), ErrorCode::shape_mismatch,
            "conv2d valid padding needs input at least kernel-sized");
    const int oh = conv_output_size(input.h, kh, s, spec.padding);
    const int ow = conv_output_size(input.w, kw, s, spec.padding);
    int pad_top = 0, pad_left = 0;
    if (spec.padding == Padding::same) {
        pad_top = std::max((oh - 1) * s + kh - input.h, 0) / 2;
        pad_left = std::max((ow - 1) * s + kw - input.w, 0) / 2;
    }
    Tensor out(input.n, kernel.n, oh, ow);
    const int in_per_group = input.c / groups, out_per_group = kernel.n / groups;

    parallel_for(static_cast<std::size_t>(input.n) * kernel.n, [&](std::size_t job) {
        const int b = static_cast<int>(job / kernel.n);
        const int oc = static_cast<int>(job % kernel.n);
        float* dst = out.plane(b, oc);
        std::fill(dst, dst + out.plane_size(), bias.empty() ? 0.0f : bias[oc]);
        const int g = oc / out_per_group;
        for (int icg = 0; icg < in_per_group; ++icg) {
            const float* src = input.plane(b, g * in_per_group + icg);
            const float* wk = kernel.plane(oc, icg);
            for (int ky = 0; ky < kh; ++ky)
                for (int kx = 0; kx < kw; ++kx) {
                    const float wv = wk[ky * kw + kx];
                    if (wv == 0.0f) continue;
                    // valid output columns: 0 <= ox*s + kx - pad_left < input.w
                    const int off = kx - pad_left;
                    const int ox0 = std::max(0, (-off + s - 1) / s);
                    const int ox1 = std::min(ow, (input.w - off + s - 1) / s);
                    for (int oy = 0; oy < oh; ++oy) {
                        const int iy = oy * s + ky - pad_top;
                        if (iy < 0 || iy >= input.h) continue;
                        const float* srow = src + static_cast<std::size_t>(iy) * input.w;
                        float* drow = dst + static_cast<std::size_t>(oy) * ow;
                        if (s == 1) {
                            for (int ox = ox0; ox < ox1; ++ox) drow[ox] += wv * srow[ox + off];
                        } else {
                            for (int ox = ox0; ox < ox1; ++ox) drow[ox] += wv * srow[ox * s + off];
                        }
                    }
                }
        }
    }, threads);
    return out;
}

inline Tensor conv2d(const Tensor& input, const Tensor& kernel, const Tensor& bias, ConvSpec spec = {},
                     unsigned threads = default_thread_count()) {
    return conv2d(input, kernel, std::span<const float>(bias.data), spec, threads);
}

/// Per-pixel normalisation across channels with per-channel affine.
inline Tensor layer_norm_channels(const Tensor& x, std::span<const float> weight, std::span<const float> bias,
                                  float eps) {
    require(static_cast<int>(weight.size()) == x.c && static_cast<int>(bias.size()) == x.c,
            ErrorCode::shape_mismatch, "layer norm affine length must equal channel count");
    Tensor out(x.n, x.c, x.h, x.w);
    const std::size_t hw = x.plane_size();
    std::vector<float> mean(hw), var(hw);
    for (int b = 0; b < x.n; ++b) {
        std::fill(mean.begin(), mean.end(), 0.0f);
        std::fill(var.begin(), var.end(), 0.0f);
        for (int c = 0; c < x.c; ++c) {
            const float* p = x.plane(b, c);
            for (std::size_t i = 0; i < hw; ++i) mean[i] += p[i];
        }
        for (std::size_t i = 0; i < hw; ++i) mean[i] /= static_cast<float>(x.c);
        for (int c = 0; c < x.c; ++c) {
            const float* p = x.plane(b, c);
            for (std::size_t i = 0; i < hw; ++i) {
                const float d = p[i] - mean[i];
                var[i] += d * d;
            }
        }
        for (std::size_t i = 0; i < hw; ++i) var[i] = 1.0f / std::sqrt(var[i] / static_cast<float>(x.c) + eps);
        for (int c = 0; c < x.c; ++c) {
            const float* p = x.plane(b, c);
            float* q = out.plane(b, c);
            for (std::size_t i = 0; i < hw; ++i) q[i] = (p[i] - mean[i]) * var[i] * weight[c] + bias[c];
        }
    }
    return out;
}

/// Splits channels in half and multiplies the halves elementwise.
inline Tensor simple_gate(const Tensor& x) {
    require(x.c % 2 == 0, ErrorCode::shape_mismatch, "simple gate needs an even channel count");
    const int half = x.c / 2;
    Tensor out(x.n, half, x.h, x.w);
    for (int b = 0; b < x.n; ++b)
        for (int c = 0; c < half; ++c) {
            const float* a = x.plane(b, c);
            const float* g = x.plane(b, c + half);
            float* q = out.plane(b, c);
            for (std::size_t i = 0; i < x.plane_size(); ++i) q[i] = a[i] * g[i];
        }
    return out;
}

/// Mean of each channel plane, as an [n, c, 1, 1] tensor.
inline Tensor global_average_pool(const Tensor& x) {
    Tensor out(x.n, x.c, 1, 1);
    for (int b = 0; b < x.n; ++b)
        for (int c = 0; c < x.c; ++c) {
            const float* p = x.plane(b, c);
            double sum = 0.0;
            for (std::size_t i = 0; i < x.plane_size(); ++i) sum += p[i];
            out.at(b, c, 0, 0) = static_cast<float>(sum / static_cast<double>(x.plane_size()));
        }
    return out;
}

/// x[b, c] *= scale[b, c, 0, 0]
inline void scale_channels(Tensor& x, const Tensor& scale) {
    require(scale.n == x.n && scale.c == x.c && scale.h == 1 && scale.w == 1, ErrorCode::shape_mismatch,
            "channel scale shape " + scale.shape_string() + " vs " + x.shape_string());
    for (int b = 0; b < x.n; ++b)
        for (int c = 0; c < x.c; ++c) {
            const float s = scale.at(b, c, 0, 0);
            float* p = x.plane(b, c);
            for (std::size_t i = 0; i < x.plane_size(); ++i) p[i] *= s;
        }
}

/// base + delta * per-channel factor
inline Tensor residual_add(const Tensor& base, const Tensor& delta, std::span<const float> factor) {
    require(base.same_shape(delta) && static_cast<int>(factor.size()) == base.c, ErrorCode::shape_mismatch,
            "residual shapes " + base.shape_string() + " vs " + delta.shape_string());
    Tensor out = base;
    for (int b = 0; b < base.n; ++b)
        for (int c = 0; c < base.c; ++c) {
            float* q = out.plane(b, c);
            const float* d = delta.plane(b, c);
            for (std::size_t i = 0; i < base.plane_size(); ++i) q[i] += d[i] * factor[c];
        }
    return out;
}

inline Tensor upsample_nearest2(const Tensor& x) {
    Tensor out(x.n, x.c, x.h * 2, x.w * 2);
    for (int b = 0; b < x.n; ++b)
        for (int c = 0; c < x.c; ++c)
            for (int y = 0; y < out.h; ++y)
                for (int xx = 0; xx < out.w; ++xx) out.at(b, c, y, xx) = x.at(b, c, y / 2, xx / 2);
    return out;
}

inline Tensor concat_channels(const Tensor& a, const Tensor& b) {
    require(a.n == b.n && a.h == b.h && a.w == b.w, ErrorCode::shape_mismatch,
            "concat spatial dims differ: " + a.shape_string() + " vs " + b.shape_string());
    Tensor out(a.n, a.c + b.c, a.h, a.w);
    for (int n = 0; n < a.n; ++n) {
        std::copy(a.plane(n, 0), a.plane(n, 0) + a.c * a.plane_size(), out.plane(n, 0));
        std::copy(b.plane(n, 0), b.plane(n, 0) + b.c * b.plane_size(), out.plane(n, a.c));
    }
    return out;
}

/// Logistic, clamped to the open unit interval (float rounding would
/// otherwise reach 0 or 1 for large logits).
inline void sigmoid_inplace(Tensor& x) {
    constexpr float lo = std::numeric_limits<float>::min();
    constexpr float hi = 1.0f - std::numeric_limits<float>::epsilon() / 2;
    for (float& v : x.data) v = std::clamp(1.0f / (1.0f + std::exp(-v)), lo, hi);
}

/// Reflect padding (edge sample not repeated) on the bottom and right only.
inline Tensor reflect_pad_bottom_right(const Tensor& x, int pad_h, int pad_w) {
    require(pad_h < x.h && pad_w < x.w, ErrorCode::shape_mismatch, "reflect pad larger than the input");
    Tensor out(x.n, x.c, x.h + pad_h, x.w + pad_w);
    auto reflect = [](int i, int n) { return i < n ? i : 2 * (n - 1) - i; };
    for (int b = 0; b < x.n; ++b)
        for (int c = 0; c < x.c; ++c)
            for (int y = 0; y < out.h; ++y)
                for (int xx = 0; xx < out.w; ++xx) out.at(b, c, y, xx) = x.at(b, c, reflect(y, x.h), reflect(xx, x.w));
    return out;
}

inline Tensor crop(const Tensor& x, int h, int w) {
    Tensor out(x.n, x.c, h, w);
    for (int b = 0; b < x.n; ++b)
        for (int c = 0; c < x.c; ++c)
            for (int y = 0; y < h; ++y)
                std::copy(x.plane(b, c) + static_cast<std::size_t>(y) * x.w,
                          x.plane(b, c) + static_cast<std::size_t>(y) * x.w + w,
                          out.plane(b, c) + static_cast<std::size_t>(y) * w);
    return out;
}

} // namespace sixway::nn
