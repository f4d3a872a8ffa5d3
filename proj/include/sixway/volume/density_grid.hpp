#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "sixway/core/error.hpp"
#include "sixway/core/vec3.hpp"
#include "sixway/io/binary.hpp"

namespace sixway {

struct GridDims {
    int nx = 1, ny = 1, nz = 1;

    std::size_t count() const { return static_cast<std::size_t>(nx) * ny * nz; }
    int operator[](int a) const { return a == 0 ? nx : (a == 1 ? ny : nz); }
    int min_extent() const { return std::min({nx, ny, nz}); }
    bool operator==(const GridDims&) const = default;
};

/// Scalar density field on a regular voxel lattice. Voxel (i, j, k) covers
/// [origin + (i, j, k) * voxel_width, origin + (i+1, j+1, k+1) * voxel_width]
/// and its value sits at the voxel centre. Values are stored x-fastest.
class DensityGrid {
public:
    DensityGrid(GridDims dims, double voxel_width, Vec3 origin, std::vector<float> values)
        : dims_(dims),
          voxel_width_(static_cast<float>(voxel_width)),
          origin_(static_cast<float>(origin.x), static_cast<float>(origin.y), static_cast<float>(origin.z)),
          values_(std::move(values)) {
        // Placement is held at f32 precision so it survives the file format unchanged.
        require(dims.nx >= 1 && dims.ny >= 1 && dims.nz >= 1, ErrorCode::invalid_argument,
                "grid dims must be >= 1");
        require(voxel_width > 0 && std::isfinite(voxel_width), ErrorCode::invalid_argument,
                "voxel width must be positive");
        require(values_.size() == dims.count(), ErrorCode::dimension_mismatch,
                "grid holds " + std::to_string(values_.size()) + " values, dims need " +
                    std::to_string(dims.count()));
        for (float v : values_) {
            require(std::isfinite(v), ErrorCode::non_finite, "grid contains a non-finite value");
            require(v >= 0.0f, ErrorCode::invalid_argument, "grid density must be non-negative");
        }
        max_value_ = 0.0f;
        for (float v : values_) max_value_ = std::max(max_value_, v);
    }

    /// Zero-filled grid.
    DensityGrid(GridDims dims, double voxel_width, Vec3 origin = {})
        : DensityGrid(dims, voxel_width, origin, std::vector<float>(dims.count(), 0.0f)) {}

    const GridDims& dims() const { return dims_; }
    double voxel_width() const { return voxel_width_; }
    const Vec3& origin() const { return origin_; }
    const std::vector<float>& values() const { return values_; }
    float max_value() const { return max_value_; }

    Aabb bounds() const {
        return {origin_, origin_ + Vec3(dims_.nx, dims_.ny, dims_.nz) * voxel_width_};
    }

    std::size_t index(int i, int j, int k) const {
        return (static_cast<std::size_t>(k) * dims_.ny + j) * dims_.nx + i;
    }
    float voxel(int i, int j, int k) const { return values_[index(i, j, k)]; }
    Vec3 voxel_center(int i, int j, int k) const {
        return origin_ + Vec3(i + 0.5, j + 0.5, k + 0.5) * voxel_width_;
    }

    bool operator==(const DensityGrid& o) const {
        return dims_ == o.dims_ && voxel_width_ == o.voxel_width_ && origin_ == o.origin_ && values_ == o.values_;
    }

private:
    GridDims dims_;
    double voxel_width_;
    Vec3 origin_;
    std::vector<float> values_;
    float max_value_ = 0.0f;
};

namespace detail {

// Lattice coordinate along one axis: returns the lower index and the blend
// weight toward the upper one, clamping to the edge voxels inside the box.
inline void lattice_coord(double u, int n, int& i0, int& i1, double& f) {
    u = std::clamp(u, 0.0, static_cast<double>(n - 1));
    const double fl = std::floor(u);
    i0 = static_cast<int>(fl);
    i1 = std::min(i0 + 1, n - 1);
    f = u - fl;
}

} // namespace detail

/// Trilinear reconstruction between voxel centres. Half-voxel shells at the
/// box faces hold the edge value; anything outside the bounding box is vacuum.
inline double sample_density(const DensityGrid& grid, const Vec3& p) {
    const Aabb box = grid.bounds();
    if (!box.contains(p)) return 0.0;
    const Vec3 u = (p - grid.origin()) / grid.voxel_width() - Vec3(0.5, 0.5, 0.5);
    int x0, x1, y0, y1, z0, z1;
    double fx, fy, fz;
    const auto& d = grid.dims();
    detail::lattice_coord(u.x, d.nx, x0, x1, fx);
    detail::lattice_coord(u.y, d.ny, y0, y1, fy);
    detail::lattice_coord(u.z, d.nz, z0, z1, fz);
    auto lerp = [](double a, double b, double t) { return a * (1.0 - t) + b * t; };
    const double c00 = lerp(grid.voxel(x0, y0, z0), grid.voxel(x1, y0, z0), fx);
    const double c10 = lerp(grid.voxel(x0, y1, z0), grid.voxel(x1, y1, z0), fx);
    const double c01 = lerp(grid.voxel(x0, y0, z1), grid.voxel(x1, y0, z1), fx);
    const double c11 = lerp(grid.voxel(x0, y1, z1), grid.voxel(x1, y1, z1), fx);
    return lerp(lerp(c00, c10, fy), lerp(c01, c11, fy), fz);
}

// .dgrid: "DGRD", u32 version = 1, u32 nx ny nz, f32 voxel_width,
// 3 x f32 origin, then nx*ny*nz little-endian f32 values (x fastest).

inline constexpr std::array<char, 4> kGridMagic = {'D', 'G', 'R', 'D'};
inline constexpr std::uint32_t kGridVersion = 1;

inline std::vector<std::uint8_t> encode_grid(const DensityGrid& grid) {
    io::ByteWriter w;
    w.put_bytes(kGridMagic.data(), 4);
    w.put<std::uint32_t>(kGridVersion);
    w.put<std::uint32_t>(grid.dims().nx);
    w.put<std::uint32_t>(grid.dims().ny);
    w.put<std::uint32_t>(grid.dims().nz);
    w.put<float>(static_cast<float>(grid.voxel_width()));
    for (int a = 0; a < 3; ++a) w.put<float>(static_cast<float>(grid.origin()[a]));
    w.put_bytes(grid.values().data(), grid.values().size() * sizeof(float));
    return std::move(w.bytes());
}

inline DensityGrid decode_grid(const std::vector<std::uint8_t>& bytes) {
    io::ByteReader r(bytes);
    std::array<char, 4> magic{};
    require(bytes.size() >= 4, ErrorCode::bad_magic, "file shorter than the magic number");
    r.get_bytes(magic.data(), 4);
    require(magic == kGridMagic, ErrorCode::bad_magic, "expected \"DGRD\"");
    const auto version = r.get<std::uint32_t>();
    require(version == kGridVersion, ErrorCode::unsupported_version,
            "dgrid version " + std::to_string(version));
    GridDims dims;
    dims.nx = static_cast<int>(r.get<std::uint32_t>());
    dims.ny = static_cast<int>(r.get<std::uint32_t>());
    dims.nz = static_cast<int>(r.get<std::uint32_t>());
    require(dims.nx >= 1 && dims.ny >= 1 && dims.nz >= 1, ErrorCode::invalid_argument, "dgrid dims must be >= 1");
    const double width = r.get<float>();
    Vec3 origin;
    for (int a = 0; a < 3; ++a) origin[a] = r.get<float>();
    const std::size_t need = dims.count() * sizeof(float);
    require(r.remaining() >= need, ErrorCode::truncated,
            "payload has " + std::to_string(r.remaining()) + " bytes, need " + std::to_string(need));
    std::vector<float> values(dims.count());
    r.get_bytes(values.data(), need);
    for (float v : values) require(std::isfinite(v), ErrorCode::non_finite, "dgrid payload contains a non-finite value");
    return DensityGrid(dims, width, origin, std::move(values));
}

inline DensityGrid load_grid(const std::filesystem::path& path) { return decode_grid(io::read_file(path)); }

inline void save_grid(const DensityGrid& grid, const std::filesystem::path& path) {
    io::write_file(path, encode_grid(grid));
}

} // namespace sixway
