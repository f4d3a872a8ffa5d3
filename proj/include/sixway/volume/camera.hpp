#pragma once

#include <cmath>
#include <numbers>

#include "sixway/core/error.hpp"
#include "sixway/core/vec3.hpp"

namespace sixway {

enum class Projection { perspective, orthographic };

/// Pinhole or parallel camera. `view_dir` is the direction the camera looks
/// (rays travel along it); world up is +Z by convention.
struct Camera {
    Projection mode = Projection::perspective;
    Vec3 position{0, -3, 0};
    Vec3 view_dir{0, 1, 0};
    Vec3 up{0, 0, 1};
    double vertical_fov_deg = 45.0;
    double ortho_height = 2.0;
    double near = 0.01;
    double far = 10.0;
    int width = 128;
    int height = 128;

    void validate() const {
        require(std::abs(length(view_dir) - 1.0) < 1e-6 && std::abs(length(up) - 1.0) < 1e-6,
                ErrorCode::invalid_argument, "camera view_dir and up must be unit vectors");
        require(length(cross(view_dir, up)) > 1e-6, ErrorCode::invalid_argument,
                "camera view_dir and up must not be parallel");
        require(near >= 0 && near < far, ErrorCode::invalid_argument, "camera needs 0 <= near < far");
        require(width >= 1 && height >= 1, ErrorCode::invalid_argument, "camera resolution must be positive");
        require(mode == Projection::orthographic || (vertical_fov_deg > 0 && vertical_fov_deg < 180),
                ErrorCode::invalid_argument, "vertical fov must lie in (0, 180)");
        require(mode == Projection::perspective || ortho_height > 0, ErrorCode::invalid_argument,
                "ortho height must be positive");
    }

    Vec3 right() const { return normalize(cross(view_dir, up)); }
    Vec3 true_up() const { return cross(right(), view_dir); }

    /// Ray through image position (px + sx, py + sy) where (px, py) is the pixel
    /// and (sx, sy) in [0,1)^2 the sub-pixel offset; row 0 is the top row.
    /// Ray parameter t is world distance from the ray origin.
    Ray ray(int px, int py, double sx = 0.5, double sy = 0.5) const {
        const double ndc_x = (px + sx) / width * 2.0 - 1.0;
        const double ndc_y = 1.0 - (py + sy) / height * 2.0;
        const double aspect = static_cast<double>(width) / height;
        const Vec3 r = right(), u = true_up();
        if (mode == Projection::perspective) {
            const double t = std::tan(vertical_fov_deg * std::numbers::pi / 360.0);
            return {position, normalize(view_dir + r * (ndc_x * t * aspect) + u * (ndc_y * t))};
        }
        const double half_h = 0.5 * ortho_height;
        return {position + r * (ndc_x * half_h * aspect) + u * (ndc_y * half_h), view_dir};
    }
};

/// Camera at `distance` from `target`, looking at it, placed by yaw around +Z
/// and pitch above the XY plane (degrees). Yaw 0 looks along +Y.
inline Camera orbit_camera(const Vec3& target, double yaw_deg, double pitch_deg, double distance, Camera base) {
    const double yaw = yaw_deg * std::numbers::pi / 180.0;
    const double pitch = pitch_deg * std::numbers::pi / 180.0;
    const Vec3 forward = normalize(Vec3(std::sin(yaw) * std::cos(pitch), std::cos(yaw) * std::cos(pitch),
                                        -std::sin(pitch)));
    base.view_dir = forward;
    base.position = target - forward * distance;
    base.up = {0, 0, 1};
    return base;
}

} // namespace sixway
