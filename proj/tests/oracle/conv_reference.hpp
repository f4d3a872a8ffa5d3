#pragma once

// Naive cross-correlation over an explicitly zero-padded copy of the input,
// accumulated in double.

#include <vector>

#include "sixway/nn/tensor.hpp"

namespace sixway::oracle {

struct ConvCase {
    int stride = 1;
    bool same = true;
    int groups = 1;
};

inline nn::Tensor naive_conv(const nn::Tensor& in, const nn::Tensor& k, const std::vector<float>& bias, ConvCase cc) {
    int oh, ow, pt = 0, pl = 0;
    if (cc.same) {
        oh = (in.h + cc.stride - 1) / cc.stride;
        ow = (in.w + cc.stride - 1) / cc.stride;
        const int th = std::max(0, (oh - 1) * cc.stride + k.h - in.h);
        const int tw = std::max(0, (ow - 1) * cc.stride + k.w - in.w);
        pt = th / 2;
        pl = tw / 2;
    } else {
        oh = (in.h - k.h) / cc.stride + 1;
        ow = (in.w - k.w) / cc.stride + 1;
    }
    const int ph = in.h + 2 * k.h, pw = in.w + 2 * k.w; // generous zero border
    std::vector<double> padded(static_cast<std::size_t>(in.c) * ph * pw, 0.0);
    for (int c = 0; c < in.c; ++c)
        for (int y = 0; y < in.h; ++y)
            for (int x = 0; x < in.w; ++x)
                padded[(static_cast<std::size_t>(c) * ph + y + pt) * pw + x + pl] = in.at(0, c, y, x);
    nn::Tensor out(1, k.n, oh, ow);
    const int icg = in.c / cc.groups, ocg = k.n / cc.groups;
    for (int o = 0; o < k.n; ++o)
        for (int y = 0; y < oh; ++y)
            for (int x = 0; x < ow; ++x) {
                double acc = bias.empty() ? 0.0 : bias[o];
                for (int i = 0; i < icg; ++i)
                    for (int ky = 0; ky < k.h; ++ky)
                        for (int kx = 0; kx < k.w; ++kx) {
                            const int c = (o / ocg) * icg + i;
                            acc += static_cast<double>(k.at(o, i, ky, kx)) *
                                   padded[(static_cast<std::size_t>(c) * ph + y * cc.stride + ky) * pw +
                                          x * cc.stride + kx];
                        }
                out.at(0, o, y, x) = static_cast<float>(acc);
            }
    return out;
}

} // namespace sixway::oracle
