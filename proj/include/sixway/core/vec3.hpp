#pragma once

#include <cmath>
#include <algorithm>

namespace sixway {

struct Vec3 {
    double x = 0, y = 0, z = 0;

    constexpr Vec3() = default;
    constexpr Vec3(double x_, double y_, double z_) : x(x_), y(y_), z(z_) {}

    constexpr double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
    constexpr double& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }

    constexpr Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    constexpr Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    constexpr Vec3 operator-() const { return {-x, -y, -z}; }
    constexpr Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    constexpr Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
    constexpr Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
    constexpr Vec3& operator-=(const Vec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }
    constexpr Vec3& operator*=(double s) { x *= s; y *= s; z *= s; return *this; }
    constexpr bool operator==(const Vec3&) const = default;
};

constexpr Vec3 operator*(double s, const Vec3& v) { return v * s; }

constexpr double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }

constexpr Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

inline double length(const Vec3& v) { return std::sqrt(dot(v, v)); }

inline Vec3 normalize(const Vec3& v) {
    const double len = length(v);
    return len > 0 ? v / len : v;
}

constexpr Vec3 hadamard(const Vec3& a, const Vec3& b) { return {a.x * b.x, a.y * b.y, a.z * b.z}; }

/// RGB triple in linear light unless stated otherwise.
using Rgb = Vec3;

struct Ray {
    Vec3 origin;
    Vec3 dir; // unit length
    Vec3 at(double t) const { return origin + dir * t; }
};

struct Aabb {
    Vec3 lo, hi;

    bool contains(const Vec3& p) const {
        return p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y && p.z >= lo.z && p.z <= hi.z;
    }
    Vec3 center() const { return (lo + hi) * 0.5; }
    Vec3 extent() const { return hi - lo; }
};

struct Interval {
    double t0 = 0, t1 = 0;
    bool empty() const { return !(t1 > t0); }
    double length() const { return empty() ? 0.0 : t1 - t0; }
};

/// Slab test. Returns the parametric overlap of the ray with the box,
/// clipped to [tmin, tmax]; empty when they do not overlap.
inline Interval intersect(const Ray& ray, const Aabb& box, double tmin = 0.0,
                          double tmax = INFINITY) {
    double t0 = tmin, t1 = tmax;
    for (int a = 0; a < 3; ++a) {
        const double o = ray.origin[a], d = ray.dir[a];
        if (d == 0.0) {
            if (o < box.lo[a] || o > box.hi[a]) return {0.0, 0.0};
            continue;
        }
        const double inv = 1.0 / d;
        double ta = (box.lo[a] - o) * inv;
        double tb = (box.hi[a] - o) * inv;
        if (ta > tb) std::swap(ta, tb);
        t0 = std::max(t0, ta);
        t1 = std::min(t1, tb);
        if (t1 < t0) return {0.0, 0.0};
    }
    return {t0, t1};
}

} // namespace sixway
