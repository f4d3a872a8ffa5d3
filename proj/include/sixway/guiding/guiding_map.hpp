#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>

#include "sixway/core/image.hpp"
#include "sixway/core/parallel.hpp"
#include "sixway/core/rng.hpp"
#include "sixway/volume/camera.hpp"
#include "sixway/volume/medium.hpp"

namespace sixway {

struct GuidingConfig {
    double step_multiplier = 10.0; // h = step_multiplier * voxel width
    int max_steps = 64;            // N
    double tau = 0.01;             // depth threshold on raw density
    std::uint64_t jitter_seed = 7;
    double w_front = 1.0;
    double w_top = 0.5;
    double w_bottom = 0.5;
    std::optional<double> light_step; // default: h

    void validate() const {
        require(step_multiplier > 0, ErrorCode::invalid_argument, "guiding step multiplier must be positive");
        require(max_steps >= 1, ErrorCode::invalid_argument, "guiding max steps must be >= 1");
        require(tau >= 0, ErrorCode::invalid_argument, "guiding tau must be >= 0");
        require(w_front >= 0 && w_top >= 0 && w_bottom >= 0, ErrorCode::invalid_argument,
                "guiding light weights must be >= 0");
        require(!light_step || *light_step > 0, ErrorCode::invalid_argument, "guiding light step must be positive");
    }
};

/// Screen-space network input: coarse in-scattered radiance, transparency and
/// first-hit depth (world distance from the camera ray origin; 0 = no hit).
struct GuidingMap {
    Image channels;          // 3 planes: radiance, transparency, depth
    double depth_scale = 1;  // camera far distance, used to normalise depth

    static constexpr int kRadiance = 0;
    static constexpr int kTransparency = 1;
    static constexpr int kDepth = 2;

    int width() const { return channels.width(); }
    int height() const { return channels.height(); }
    float radiance(int y, int x) const { return channels.at(kRadiance, y, x); }
    float transparency(int y, int x) const { return channels.at(kTransparency, y, x); }
    float depth(int y, int x) const { return channels.at(kDepth, y, x); }
};

/// Directions toward the three guiding lights. `omega` points from the scene
/// toward the camera; the side pair is +/- omega x z, falling back to the
/// x axis when omega is parallel to z.
struct GuidingLightFrame {
    Vec3 front, top, bottom;

    static GuidingLightFrame from_view(const Vec3& view_dir) {
        const Vec3 omega = -normalize(view_dir);
        Vec3 side = cross(omega, Vec3(0, 0, 1));
        if (length(side) < 1e-6) side = cross(omega, Vec3(1, 0, 0));
        side = normalize(side);
        return {omega, side, -side};
    }
};

/// Transmittance from p to the grid boundary along `dir` with coarse steps.
/// Sample j sits at (j + jitter) of its step; the final partial step is
/// shortened to end at the boundary.
inline double coarse_light_transmittance(const DensityGrid& grid, const MediumParams& medium, const Vec3& p,
                                         const Vec3& dir, double step, double jitter = 0.5) {
    require(step > 0, ErrorCode::invalid_argument, "coarse light step must be positive");
    const Interval span = intersect(Ray{p, dir}, grid.bounds());
    if (span.empty()) return 1.0;
    double tau = 0.0;
    for (double s = span.t0; s < span.t1; s += step) {
        const double seg = std::min(step, span.t1 - s);
        tau += sample_density(grid, p + dir * (s + jitter * seg)) * seg;
    }
    return std::exp(-medium.sigma_t_scale() * tau);
}

namespace detail {

struct GuidingSample {
    double radiance = 0, transparency = 1, depth = 0, absorbed = 0;
};

// Coarse march for a single ray; `absorbed` returns the sum of A_n for checks.
inline GuidingSample march_guiding_ray(const DensityGrid& grid, const MediumParams& medium,
                                       const PhaseFunction& phase, const Ray& ray, const Interval& span,
                                       const GuidingLightFrame& lights, const GuidingConfig& cfg, double h,
                                       double light_step, double jitter) {
    GuidingSample out;
    if (span.empty()) return out;
    const std::array<Vec3, 3> dirs = {lights.front, lights.top, lights.bottom};
    const std::array<double, 3> weights = {cfg.w_front, cfg.w_top, cfg.w_bottom};
    std::array<double, 3> phase_w{};
    for (int i = 0; i < 3; ++i) phase_w[i] = weights[i] * phase_toward_viewer(phase, ray.dir, dirs[i]);

    double trans = 1.0;
    for (int n = 1; n <= cfg.max_steps; ++n) {
        const double t = span.t0 + jitter * h + (n - 1) * h;
        if (t >= span.t1) break; // beyond the box every remaining sample is vacuum
        const Vec3 x = ray.at(t);
        const double density = sample_density(grid, x);
        if (out.depth == 0.0 && density > cfg.tau) out.depth = t;
        const double sigma = medium.sigma_s_scale * density;
        if (sigma <= 0.0) continue;
        const double atten = std::exp(-sigma * h);
        const double a = trans * (1.0 - atten);
        double light = 0.0;
        for (int i = 0; i < 3; ++i)
            if (phase_w[i] > 0.0)
                light += phase_w[i] * coarse_light_transmittance(grid, medium, x, dirs[i], light_step, jitter);
        out.radiance += a * light;
        out.absorbed += a;
        trans *= atten;
    }
    out.transparency = trans;
    return out;
}

} // namespace detail

/// Large-step ray march producing (radiance, transparency, depth) per pixel
/// centre. Each ray starts at its entry into the grid box plus a per-pixel
/// jitter in [0, h); per step the absorbed fraction A_n = T_{n-1}(1 - e^{-sigma h})
/// weights the lights' coarse transmittance and phase.
inline GuidingMap generate_guiding(const DensityGrid& grid, const MediumParams& medium, const PhaseFunction& phase,
                                   const Camera& camera, const GuidingConfig& config, Image* absorbed_sum = nullptr) {
    config.validate();
    medium.validate();
    phase.validate();
    camera.validate();
    const double h = config.step_multiplier * grid.voxel_width();
    const double light_step = config.light_step.value_or(h);
    const GuidingLightFrame lights = GuidingLightFrame::from_view(camera.view_dir);
    const Aabb box = grid.bounds();

    GuidingMap map{Image(camera.width, camera.height, 3), camera.far};
    if (absorbed_sum) *absorbed_sum = Image(camera.width, camera.height, 1);
    parallel_for(static_cast<std::size_t>(camera.height), [&](std::size_t row) {
        const int py = static_cast<int>(row);
        for (int px = 0; px < camera.width; ++px) {
            CounterRng rng = CounterRng::keyed(config.jitter_seed, px, py);
            const double jitter = rng.uniform();
            const Ray ray = camera.ray(px, py);
            const Interval span = intersect(ray, box, camera.near, camera.far);
            const auto s = detail::march_guiding_ray(grid, medium, phase, ray, span, lights, config, h, light_step,
                                                     jitter);
            map.channels.at(GuidingMap::kRadiance, py, px) = static_cast<float>(s.radiance);
            map.channels.at(GuidingMap::kTransparency, py, px) = static_cast<float>(s.transparency);
            map.channels.at(GuidingMap::kDepth, py, px) = static_cast<float>(s.depth);
            if (absorbed_sum) absorbed_sum->at(0, py, px) = static_cast<float>(s.absorbed);
        }
    });
    return map;
}

} // namespace sixway
