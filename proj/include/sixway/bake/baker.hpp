#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "sixway/bake/transmittance.hpp"
#include "sixway/core/parallel.hpp"
#include "sixway/core/rng.hpp"
#include "sixway/runtime/lightmaps.hpp"
#include "sixway/volume/camera.hpp"

namespace sixway {

/// How the baker evaluates transmittance from a scattering point to an axis light.
enum class LightTransmittanceMode {
    exact_axis, // closed-form column integral of the trilinear field
    march,      // midpoint quadrature at `light_step`
};

struct BakeConfig {
    int spp = 32;
    std::optional<double> primary_step; // default: half the voxel width
    std::optional<double> light_step;   // march mode only; default: half the voxel width
    LightTransmittanceMode light_mode = LightTransmittanceMode::exact_axis;
    std::uint64_t rng_seed = 1;
    /// Which of the six axis lights to bake, indexed by Channel; skipped channels stay 0.
    std::array<bool, kScatterChannels> lights = {true, true, true, true, true, true};

    void validate() const {
        require(spp >= 1, ErrorCode::invalid_argument, "spp must be >= 1");
        require(!primary_step || *primary_step > 0, ErrorCode::invalid_argument, "primary step must be positive");
        require(!light_step || *light_step > 0, ErrorCode::invalid_argument, "light step must be positive");
    }
};

/// Propagation direction of the axis light baked into a scattering channel.
inline Vec3 axis_light_direction(Channel c) {
    const int idx = static_cast<int>(c);
    Vec3 d;
    d[idx / 2] = (idx % 2 == 0) ? 1.0 : -1.0;
    return d;
}

/// Per-pixel standard error of the channel means (six scattering channels plus transparency).
struct BakeResult {
    SixWayLightmaps maps;
    Image std_error; // 7 channels
};

namespace detail {

inline double segment_weight(double optical) {
    // (1 - e^{-x}) / x, the exact in-segment attenuation for constant extinction
    return optical > 1e-12 ? -std::expm1(-optical) / optical : 1.0 - 0.5 * optical;
}

} // namespace detail

/// Single-scattering Monte Carlo bake of the six axis-light responses and the
/// view transparency. Each sample jitters its pixel position within a stratum
/// and offsets the fixed-step march; all randomness is keyed by
/// (seed, pixel, sample) so output is independent of the worker count.
inline BakeResult bake_sixway_with_stats(const DensityGrid& grid, const MediumParams& medium,
                                         const PhaseFunction& phase, const Camera& camera, const BakeConfig& config) {
    config.validate();
    medium.validate();
    phase.validate();
    camera.validate();
    require(camera.width >= 16 && camera.height >= 16, ErrorCode::invalid_argument,
            "bake resolution must be at least 16x16");

    const double step = config.primary_step.value_or(0.5 * grid.voxel_width());
    const double light_step = config.light_step.value_or(0.5 * grid.voxel_width());
    const Aabb box = grid.bounds();
    std::optional<AxisOpticalDepth> axis_depth;
    if (config.light_mode == LightTransmittanceMode::exact_axis) axis_depth.emplace(grid);

    std::vector<int> active;
    for (int c = 0; c < kScatterChannels; ++c)
        if (config.lights[c]) active.push_back(c);

    const int strata_x = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(config.spp))));
    const int strata_y = (config.spp + strata_x - 1) / strata_x;

    BakeResult result{SixWayLightmaps(camera.width, camera.height, ColorSpace::linear),
                      Image(camera.width, camera.height, kScatterChannels + 1)};

    auto light_transmittance = [&](const Vec3& y, int channel) {
        const Vec3 to_light = -axis_light_direction(static_cast<Channel>(channel));
        if (axis_depth) {
            const int axis = channel / 2;
            return std::exp(-medium.sigma_t_scale() * axis_depth->depth(y, axis, to_light[axis] > 0));
        }
        const Interval exit = intersect(Ray{y, to_light}, box);
        if (exit.empty()) return 1.0;
        return transmittance(grid, medium, y, y + to_light * exit.t1, light_step);
    };

    parallel_for(static_cast<std::size_t>(camera.height), [&](std::size_t row) {
        const int py = static_cast<int>(row);
        std::array<double, kScatterChannels + 1> sum{}, sum_sq{}, sample{};
        std::array<double, kScatterChannels> phase_weight{};
        for (int px = 0; px < camera.width; ++px) {
            sum.fill(0.0);
            sum_sq.fill(0.0);
            for (int s = 0; s < config.spp; ++s) {
                CounterRng rng = CounterRng::keyed(config.rng_seed, px, py, s);
                const double sx = ((s % strata_x) + rng.uniform()) / strata_x;
                const double sy = ((s / strata_x) + rng.uniform()) / strata_y;
                const double offset = rng.uniform();
                const Ray ray = camera.ray(px, py, sx, sy);
                sample.fill(0.0);
                double trans = 1.0;
                const Interval span = intersect(ray, box, camera.near, camera.far);
                if (!span.empty()) {
                    for (int c : active)
                        phase_weight[c] =
                            phase_toward_viewer(phase, ray.dir, -axis_light_direction(static_cast<Channel>(c)));
                    for (double t = span.t0; t < span.t1; t += step) {
                        const double seg = std::min(step, span.t1 - t);
                        const Vec3 y = ray.at(t + offset * seg);
                        const double d = sample_density(grid, y);
                        if (d <= 0.0) continue;
                        const double optical = medium.sigma_t_scale() * d * seg;
                        const double w = trans * medium.sigma_s_scale * d * seg * detail::segment_weight(optical);
                        if (w > 0.0)
                            for (int c : active) sample[c] += w * phase_weight[c] * light_transmittance(y, c);
                        trans *= std::exp(-optical);
                    }
                }
                sample[kScatterChannels] = trans;
                for (int c = 0; c <= kScatterChannels; ++c) {
                    sum[c] += sample[c];
                    sum_sq[c] += sample[c] * sample[c];
                }
            }
            const double n = config.spp;
            for (int c = 0; c <= kScatterChannels; ++c) {
                const double mean = sum[c] / n;
                const double var = n > 1 ? std::max(0.0, (sum_sq[c] - n * mean * mean) / (n - 1)) : 0.0;
                result.maps.image().at(c, py, px) = static_cast<float>(mean);
                result.std_error.at(c, py, px) = static_cast<float>(std::sqrt(var / n));
            }
        }
    });
    return result;
}

inline SixWayLightmaps bake_sixway(const DensityGrid& grid, const MediumParams& medium, const PhaseFunction& phase,
                                   const Camera& camera, const BakeConfig& config) {
    return bake_sixway_with_stats(grid, medium, phase, camera, config).maps;
}

/// Piecewise-linear 1D colour table for emission plus the remap applied to the
/// line-integrated emission before it is stored.
struct EmissiveLUT {
    std::vector<double> positions; // ascending, in [0, 1]
    std::vector<Rgb> colors;       // linear RGB, >= 0
    double remap_scale = 1.0;
    double remap_offset = 0.0;

    void validate() const {
        require(positions.size() >= 2 && positions.size() == colors.size(), ErrorCode::invalid_argument,
                "emissive LUT needs >= 2 entries with one colour each");
        for (std::size_t i = 1; i < positions.size(); ++i)
            require(positions[i] > positions[i - 1], ErrorCode::invalid_argument,
                    "emissive LUT positions must increase");
        for (const Rgb& c : colors)
            require(c.x >= 0 && c.y >= 0 && c.z >= 0, ErrorCode::invalid_argument, "emissive LUT colours must be >= 0");
    }

    double remap(double emission) const { return std::clamp(remap_scale * emission + remap_offset, 0.0, 1.0); }

    Rgb lookup(double v) const {
        if (v <= positions.front()) return colors.front();
        if (v >= positions.back()) return colors.back();
        const auto it = std::upper_bound(positions.begin(), positions.end(), v);
        const std::size_t i = static_cast<std::size_t>(it - positions.begin()) - 1;
        const double t = (v - positions[i]) / (positions[i + 1] - positions[i]);
        return colors[i] * (1.0 - t) + colors[i + 1] * t;
    }
};

/// Black through red and orange to pale yellow.
inline EmissiveLUT default_fire_lut() {
    return {{0.0, 0.3, 0.6, 0.85, 1.0},
            {{0, 0, 0}, {0.6, 0.05, 0.0}, {1.6, 0.45, 0.05}, {2.4, 1.3, 0.3}, {3.0, 2.6, 1.6}},
            1.0,
            0.0};
}

/// Raw line integral of T * sigma_a along one ray, fixed-step with exact
/// in-segment attenuation.
inline double integrate_emission(const DensityGrid& grid, const MediumParams& medium, const Ray& ray,
                                 const Interval& span, double step) {
    double trans = 1.0, e = 0.0;
    if (span.empty() || medium.sigma_a_scale == 0.0) return 0.0;
    for (double t = span.t0; t < span.t1; t += step) {
        const double seg = std::min(step, span.t1 - t);
        const double d = sample_density(grid, ray.at(t + 0.5 * seg));
        if (d <= 0.0) continue;
        const double optical = medium.sigma_t_scale() * d * seg;
        e += trans * medium.sigma_a_scale * d * seg * detail::segment_weight(optical);
        trans *= std::exp(-optical);
    }
    return e;
}

/// Emissive scalar map: clamp(remap(integral of T * sigma_a), 0, 1) per pixel
/// centre. Colour is applied later through the LUT.
inline Image bake_emissive(const DensityGrid& grid, const MediumParams& medium, const Camera& camera,
                           const EmissiveLUT& lut, double step) {
    lut.validate();
    medium.validate();
    camera.validate();
    require(step > 0, ErrorCode::invalid_argument, "emissive step must be positive");
    Image out(camera.width, camera.height, 1);
    const Aabb box = grid.bounds();
    parallel_for(static_cast<std::size_t>(camera.height), [&](std::size_t row) {
        const int py = static_cast<int>(row);
        for (int px = 0; px < camera.width; ++px) {
            const Ray ray = camera.ray(px, py);
            const double e = integrate_emission(grid, medium, ray, intersect(ray, box, camera.near, camera.far), step);
            out.at(0, py, px) = static_cast<float>(medium.sigma_a_scale == 0.0 ? 0.0 : lut.remap(e));
        }
    });
    return out;
}

} // namespace sixway
