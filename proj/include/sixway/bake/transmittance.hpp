#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "sixway/core/error.hpp"
#include "sixway/volume/medium.hpp"

namespace sixway {

/// exp(-integral of sigma_t) along the segment a -> b by fixed-step midpoint
/// quadrature. Steps are laid out from `a`, so splitting a segment at a
/// multiple of `step` reproduces the same sample points. Returns exactly 1
/// when the segment misses the grid.
inline double transmittance(const DensityGrid& grid, const MediumParams& medium, const Vec3& a, const Vec3& b,
                            double step) {
    require(step > 0, ErrorCode::invalid_argument, "transmittance step must be positive");
    const double len = length(b - a);
    if (len == 0.0) return 1.0;
    const Ray ray{a, (b - a) / len};
    const Interval hit = intersect(ray, grid.bounds(), 0.0, len);
    if (hit.empty()) return 1.0;
    const auto steps = static_cast<long>(std::ceil(len / step));
    const long first = std::max(0L, static_cast<long>(std::floor(hit.t0 / step)));
    const long last = std::min(steps - 1, static_cast<long>(std::ceil(hit.t1 / step)));
    double tau = 0.0;
    for (long k = first; k <= last; ++k) {
        const double s0 = k * step;
        const double s1 = std::min((k + 1) * step, len);
        if (s1 <= s0) continue;
        tau += sample_density(grid, ray.at(0.5 * (s0 + s1))) * (s1 - s0);
    }
    return std::exp(-medium.sigma_t_scale() * tau);
}

/// Closed-form optical depth to the grid boundary along the six axis
/// directions. Along a line of voxel centres the trilinear field is piecewise
/// linear, and off such lines it is a bilinear blend of the four neighbouring
/// lines, so per-line prefix integrals give the exact column integral.
class AxisOpticalDepth {
public:
    explicit AxisOpticalDepth(const DensityGrid& grid) : grid_(&grid) {
        const auto& d = grid.dims();
        for (int axis = 0; axis < 3; ++axis) {
            auto& prefix = prefix_[axis];
            auto& total = total_[axis];
            const int n = d[axis];
            const int pa = (axis + 1) % 3, pb = (axis + 2) % 3;
            prefix.assign(grid.values().size(), 0.0);
            total.assign(static_cast<std::size_t>(d[pa]) * d[pb], 0.0);
            for (int b = 0; b < d[pb]; ++b)
                for (int a = 0; a < d[pa]; ++a) {
                    double acc = 0.0;
                    double prev = 0.0;
                    for (int i = 0; i < n; ++i) {
                        const double v = value(axis, i, pa, a, pb, b);
                        acc = (i == 0) ? 0.5 * v : acc + 0.5 * (prev + v);
                        prefix[line_index(axis, i, a, b)] = acc;
                        prev = v;
                    }
                    total[static_cast<std::size_t>(b) * d[pa] + a] = acc + 0.5 * prev;
                }
        }
    }

    /// Integral of density (world units) from p to the box boundary, walking
    /// along `toward_positive ? +axis : -axis`.
    double depth(const Vec3& p, int axis, bool toward_positive) const {
        const DensityGrid& g = *grid_;
        const auto& d = g.dims();
        const int pa = (axis + 1) % 3, pb = (axis + 2) % 3;
        const Aabb box = g.bounds();
        if (p[pa] < box.lo[pa] || p[pa] > box.hi[pa] || p[pb] < box.lo[pb] || p[pb] > box.hi[pb]) return 0.0;
        const double inv = 1.0 / g.voxel_width();
        auto coord = [&](int ax) { return (p[ax] - g.origin()[ax]) * inv - 0.5; };
        int a0, a1, b0, b1;
        double fa, fb;
        detail::lattice_coord(coord(pa), d[pa], a0, a1, fa);
        detail::lattice_coord(coord(pb), d[pb], b0, b1, fb);
        const int n = d[axis];
        const double u = std::clamp(coord(axis), -0.5, n - 0.5);
        auto column = [&](int a, int b) {
            const double before = cumulative(axis, n, u, a, b);
            return toward_positive ? total_[axis][static_cast<std::size_t>(b) * d[pa] + a] - before : before;
        };
        const double c00 = column(a0, b0), c10 = column(a1, b0), c01 = column(a0, b1), c11 = column(a1, b1);
        const double lattice = (c00 * (1 - fa) + c10 * fa) * (1 - fb) + (c01 * (1 - fa) + c11 * fa) * fb;
        return lattice * g.voxel_width();
    }

private:
    std::size_t line_index(int axis, int i, int a, int b) const {
        const auto& d = grid_->dims();
        const int pa = (axis + 1) % 3;
        return (static_cast<std::size_t>(b) * d[pa] + a) * d[axis] + i;
    }

    double value(int axis, int i, int pa, int a, int pb, int b) const {
        int idx[3];
        idx[axis] = i;
        idx[pa] = a;
        idx[pb] = b;
        return grid_->voxel(idx[0], idx[1], idx[2]);
    }

    // Integral of the line profile from the box face (u = -0.5) to u, in lattice units.
    double cumulative(int axis, int n, double u, int a, int b) const {
        const int pa = (axis + 1) % 3, pb = (axis + 2) % 3;
        const auto& prefix = prefix_[axis];
        if (u <= 0.0) return (u + 0.5) * value(axis, 0, pa, a, pb, b);
        if (u >= n - 1) {
            return prefix[line_index(axis, n - 1, a, b)] + (u - (n - 1)) * value(axis, n - 1, pa, a, pb, b);
        }
        const int i = static_cast<int>(std::floor(u));
        const double t = u - i;
        const double v0 = value(axis, i, pa, a, pb, b);
        const double v1 = value(axis, i + 1, pa, a, pb, b);
        return prefix[line_index(axis, i, a, b)] + v0 * t + 0.5 * (v1 - v0) * t * t;
    }

    const DensityGrid* grid_;
    std::array<std::vector<double>, 3> prefix_;
    std::array<std::vector<double>, 3> total_;
};

} // namespace sixway
