#pragma once

#include <cmath>
#include <numbers>

#include "sixway/core/error.hpp"
#include "sixway/volume/density_grid.hpp"

namespace sixway {

/// Global coefficient scales applied to the stored density:
/// sigma_s(x) = sigma_s_scale * d(x), sigma_a(x) = sigma_a_scale * d(x).
struct MediumParams {
    double sigma_s_scale = 1.0;
    double sigma_a_scale = 0.0;

    double sigma_t_scale() const { return sigma_s_scale + sigma_a_scale; }

    void validate() const {
        require(sigma_s_scale >= 0 && sigma_a_scale >= 0 && std::isfinite(sigma_s_scale) &&
                    std::isfinite(sigma_a_scale),
                ErrorCode::invalid_argument, "medium scales must be finite and >= 0");
    }
};

inline double sigma_s(const DensityGrid& grid, const MediumParams& m, const Vec3& p) {
    return m.sigma_s_scale * sample_density(grid, p);
}
inline double sigma_a(const DensityGrid& grid, const MediumParams& m, const Vec3& p) {
    return m.sigma_a_scale * sample_density(grid, p);
}
inline double sigma_t(const DensityGrid& grid, const MediumParams& m, const Vec3& p) {
    return m.sigma_t_scale() * sample_density(grid, p);
}

/// Henyey-Greenstein phase function.
struct PhaseFunction {
    double g = 0.0;

    void validate() const {
        require(g > -1.0 && g < 1.0, ErrorCode::invalid_argument, "HG anisotropy must lie in (-1, 1)");
    }
};

/// cos_theta is the cosine of the scattering angle between the incoming and
/// outgoing propagation directions (1 = forward scattering).
inline double hg_phase(const PhaseFunction& phase, double cos_theta) {
    const double g = phase.g;
    const double denom = 1.0 + g * g - 2.0 * g * std::clamp(cos_theta, -1.0, 1.0);
    return (1.0 - g * g) / (4.0 * std::numbers::pi * denom * std::sqrt(denom));
}

/// Phase value for light arriving from `to_light` and leaving along `-view_dir`
/// toward a viewer whose ray travels along `view_dir`.
inline double phase_toward_viewer(const PhaseFunction& phase, const Vec3& view_dir, const Vec3& to_light) {
    // incoming propagation = -to_light, outgoing = -view_dir
    return hg_phase(phase, dot(to_light, view_dir));
}

} // namespace sixway
