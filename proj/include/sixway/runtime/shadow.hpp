#pragma once

#include <cmath>
#include <limits>
#include <variant>
#include <vector>

#include "sixway/core/image.hpp"
#include "sixway/core/parallel.hpp"
#include "sixway/volume/camera.hpp"

namespace sixway {

/// Orthographic view-projection for a directional light. Clip x/y span
/// [-1, 1] over a square of side 2 * half_extent centred on `center`; clip
/// depth runs 0..1 over [-depth_range, +depth_range] along the light.
struct LightProjection {
    Vec3 direction{0, 0, -1}; // propagation
    Vec3 center{};
    double half_extent = 1.0;
    double depth_range = 1.0;

    Vec3 right() const {
        const Vec3 ref = std::abs(direction.z) > 0.9 ? Vec3(1, 0, 0) : Vec3(0, 0, 1);
        return normalize(cross(direction, ref));
    }
    Vec3 up() const { return cross(right(), direction); }
    Vec3 eye() const { return center - direction * depth_range; }

    struct Clip {
        double x, y, depth;
    };
    Clip project(const Vec3& p) const {
        const Vec3 d = p - center;
        return {dot(d, right()) / half_extent, dot(d, up()) / half_extent,
                dot(p - eye(), direction) / (2.0 * depth_range)};
    }
};

/// Parallelogram corner + s * edge_u + t * edge_v, s, t in [0, 1].
struct QuadOccluder {
    Vec3 corner, edge_u, edge_v;
};
using Occluder = std::variant<QuadOccluder, Aabb>;

/// Nearest positive hit distance along the ray, or +inf.
inline double hit_distance(const Ray& ray, const Occluder& occ) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    if (const auto* q = std::get_if<QuadOccluder>(&occ)) {
        const Vec3 n = cross(q->edge_u, q->edge_v);
        const double denom = dot(n, ray.dir);
        if (std::abs(denom) < 1e-12) return inf;
        const double t = dot(q->corner - ray.origin, n) / denom;
        if (t <= 0) return inf;
        const Vec3 rel = ray.at(t) - q->corner;
        // solve rel = s u + t v in the plane
        const double uu = dot(q->edge_u, q->edge_u), uv = dot(q->edge_u, q->edge_v), vv = dot(q->edge_v, q->edge_v);
        const double ru = dot(rel, q->edge_u), rv = dot(rel, q->edge_v);
        const double det = uu * vv - uv * uv;
        const double s = (ru * vv - rv * uv) / det, w = (rv * uu - ru * uv) / det;
        return (s >= 0 && s <= 1 && w >= 0 && w <= 1) ? t : inf;
    }
    const Interval hit = intersect(ray, std::get<Aabb>(occ), 1e-9);
    return hit.t0 > 0 ? hit.t0 : inf; // a miss comes back as {0, 0}
}

struct ShadowContext {
    LightProjection projection;
    Image depth;        // 1 channel, light clip depth in [0, 1]; 1 = nothing
    double bias = 2e-3; // in clip depth units
};

/// Depth map of the occluders seen from the light, one ray per texel centre.
inline ShadowContext render_shadow_map(const LightProjection& proj, const std::vector<Occluder>& occluders,
                                       int resolution, double bias = 2e-3) {
    require(resolution >= 1 && bias > 0, ErrorCode::invalid_argument, "shadow map needs resolution >= 1, bias > 0");
    ShadowContext ctx{proj, Image(resolution, resolution, 1, 1.0f), bias};
    const Vec3 r = proj.right(), u = proj.up(), eye = proj.eye();
    parallel_for(static_cast<std::size_t>(resolution), [&](std::size_t row) {
        const int ty = static_cast<int>(row);
        for (int tx = 0; tx < resolution; ++tx) {
            const double cx = ((tx + 0.5) / resolution * 2.0 - 1.0) * proj.half_extent;
            const double cy = (1.0 - (ty + 0.5) / resolution * 2.0) * proj.half_extent;
            const Ray ray{eye + r * cx + u * cy, proj.direction};
            double best = std::numeric_limits<double>::infinity();
            for (const auto& o : occluders) best = std::min(best, hit_distance(ray, o));
            if (std::isfinite(best)) ctx.depth.at(0, ty, tx) = static_cast<float>(std::clamp(best / (2.0 * proj.depth_range), 0.0, 1.0));
        }
    });
    return ctx;
}

/// World position of the smoke shell seen through pixel (px, py) at depth d.
inline Vec3 shell_point(const Camera& camera, int px, int py, double depth) {
    return camera.ray(px, py).at(depth);
}

/// Binary visibility per pixel: the smoke shell point is shadowed when the
/// occluder depth plus bias lies in front of it. Pixels with no smoke
/// (depth 0) or whose shell falls outside the light frustum stay lit.
inline Image shadow_visibility(const ShadowContext& shadow, const Image& smoke_depth, const Camera& camera) {
    require(smoke_depth.width() == camera.width && smoke_depth.height() == camera.height,
            ErrorCode::dimension_mismatch, "depth map size differs from the camera resolution");
    require(shadow.bias > 0 && shadow.depth.channels() == 1, ErrorCode::invalid_argument, "bad shadow context");
    const int channel = smoke_depth.channels() == 3 ? 2 : 0; // accepts a full guiding image
    Image vis(camera.width, camera.height, 1, 1.0f);
    const int res_w = shadow.depth.width(), res_h = shadow.depth.height();
    for (int py = 0; py < camera.height; ++py)
        for (int px = 0; px < camera.width; ++px) {
            const double d = smoke_depth.at(channel, py, px);
            if (d <= 0.0) continue;
            const auto clip = shadow.projection.project(shell_point(camera, px, py, d));
            if (std::abs(clip.x) > 1.0 || std::abs(clip.y) > 1.0 || clip.depth < 0.0 || clip.depth > 1.0) continue;
            const int tx = std::min(res_w - 1, static_cast<int>((clip.x + 1.0) * 0.5 * res_w));
            const int ty = std::min(res_h - 1, static_cast<int>((1.0 - clip.y) * 0.5 * res_h));
            if (shadow.depth.at(0, ty, tx) + shadow.bias < clip.depth) vis.at(0, py, px) = 0.0f;
        }
    return vis;
}

} // namespace sixway
