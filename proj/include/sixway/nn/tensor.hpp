#pragma once

#include <array>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "sixway/core/error.hpp"

namespace sixway::nn {

/// Dense NCHW float tensor.
struct Tensor {
    int n = 0, c = 0, h = 0, w = 0;
    std::vector<float> data;

    Tensor() = default;
    Tensor(int n_, int c_, int h_, int w_, float fill = 0.0f) : n(n_), c(c_), h(h_), w(w_) {
        require(n_ >= 0 && c_ >= 0 && h_ >= 0 && w_ >= 0, ErrorCode::invalid_argument, "negative tensor dim");
        data.assign(static_cast<std::size_t>(n_) * c_ * h_ * w_, fill);
    }

    std::size_t plane_size() const { return static_cast<std::size_t>(h) * w; }
    std::size_t size() const { return data.size(); }

    float* plane(int b, int ch) { return data.data() + (static_cast<std::size_t>(b) * c + ch) * plane_size(); }
    const float* plane(int b, int ch) const {
        return data.data() + (static_cast<std::size_t>(b) * c + ch) * plane_size();
    }
    float& at(int b, int ch, int y, int x) { return plane(b, ch)[static_cast<std::size_t>(y) * w + x]; }
    float at(int b, int ch, int y, int x) const { return plane(b, ch)[static_cast<std::size_t>(y) * w + x]; }

    std::string shape_string() const {
        return "[" + std::to_string(n) + "," + std::to_string(c) + "," + std::to_string(h) + "," +
               std::to_string(w) + "]";
    }
    bool same_shape(const Tensor& o) const { return n == o.n && c == o.c && h == o.h && w == o.w; }
    bool operator==(const Tensor&) const = default;
};

inline bool all_finite(std::span<const float> v) {
    for (float x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

} // namespace sixway::nn
