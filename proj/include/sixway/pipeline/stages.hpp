#pragma once

#include <chrono>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sixway/bake/baker.hpp"
#include "sixway/guiding/guiding_map.hpp"
#include "sixway/nn/network.hpp"
#include "sixway/pipeline/config.hpp"
#include "sixway/runtime/relight.hpp"
#include "sixway/runtime/shadow.hpp"

namespace sixway::pipeline {

/// Failure inside a named pipeline stage.
class StageError : public std::runtime_error {
public:
    StageError(std::string stage, const std::string& what)
        : std::runtime_error("stage " + stage + ": " + what), stage_(std::move(stage)) {}
    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

/// Runs `fn`, converting any exception into a StageError tagged `stage`.
template <typename Fn>
auto run_stage(const std::string& stage, Fn&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(stage, e.what());
    }
}

/// Milliseconds elapsed while running `fn`, appended to `timings`.
template <typename Timings, typename Fn>
auto timed(Timings& timings, const std::string& stage, Fn&& fn) {
    const auto start = std::chrono::steady_clock::now();
    auto finish = [&] {
        timings.push_back({stage, std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count()});
    };
    if constexpr (std::is_void_v<decltype(fn())>) {
        run_stage(stage, fn);
        finish();
    } else {
        auto out = run_stage(stage, fn);
        finish();
        return out;
    }
}

/// Grid with every density multiplied by `scale` (the same grid when scale is 1).
inline DensityGrid scaled_grid(const DensityGrid& grid, double scale) {
    if (scale == 1.0) return grid;
    std::vector<float> v = grid.values();
    for (float& x : v) x = static_cast<float>(x * scale);
    return DensityGrid(grid.dims(), grid.voxel_width(), grid.origin(), std::move(v));
}

/// Reference bake; the emissive channel is filled when the config enables the
/// emission table and the medium absorbs.
inline SixWayLightmaps bake_reference(const DensityGrid& grid, const PipelineConfig& cfg, const Camera& camera,
                                      std::optional<std::uint64_t> seed = std::nullopt) {
    BakeConfig bc = cfg.bake;
    if (seed) bc.rng_seed = *seed;
    SixWayLightmaps maps = bake_sixway(grid, cfg.medium, cfg.phase, camera, bc);
    if (cfg.emissive_lut && cfg.medium.sigma_a_scale > 0) {
        const Image e = bake_emissive(grid, cfg.medium, camera, default_fire_lut(),
                                      bc.primary_step.value_or(0.5 * grid.voxel_width()));
        std::copy(e.plane(0).begin(), e.plane(0).end(), maps.plane(Channel::Emissive).begin());
    }
    return maps;
}

/// Per-light binary visibility of the smoke shell against the configured
/// occluders; one channel per light. Empty when there are no occluders.
inline std::optional<Image> occluder_visibility(const PipelineConfig& cfg, const std::vector<DirectionalLight>& lights,
                                                const Aabb& bounds, const GuidingMap& guiding, const Camera& camera) {
    if (cfg.occluders.empty() || lights.empty()) return std::nullopt;
    std::vector<Occluder> occ(cfg.occluders.begin(), cfg.occluders.end());
    Image vis(camera.width, camera.height, static_cast<int>(lights.size()));
    for (std::size_t i = 0; i < lights.size(); ++i) {
        const ShadowContext ctx =
            render_shadow_map(light_projection_for(bounds, lights[i].direction), occ, cfg.shadow_resolution);
        const Image v = shadow_visibility(ctx, guiding.channels, camera);
        std::copy(v.plane(0).begin(), v.plane(0).end(), vis.plane(static_cast<int>(i)).begin());
    }
    return vis;
}

/// Final linear RGB image from lightmaps and the configured background,
/// emissive table and visibility.
inline Image composite_frame(const SixWayLightmaps& maps, const std::vector<DirectionalLight>& lights,
                             const PipelineConfig& cfg, const Image* visibility) {
    const EmissiveLUT lut = default_fire_lut();
    return composite(maps, lights, Background(cfg.background), cfg.emissive_lut ? &lut : nullptr, visibility);
}

} // namespace sixway::pipeline
