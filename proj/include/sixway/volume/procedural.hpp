#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sixway/core/error.hpp"
#include "sixway/core/rng.hpp"
#include "sixway/io/binary.hpp"
#include "sixway/volume/density_grid.hpp"

namespace sixway {

enum class ProceduralKind { sphere_puff, plume, noise_turbulence };

inline ProceduralKind parse_procedural_kind(const std::string& name) {
    if (name == "sphere_puff") return ProceduralKind::sphere_puff;
    if (name == "plume") return ProceduralKind::plume;
    if (name == "noise_turbulence") return ProceduralKind::noise_turbulence;
    fail(ErrorCode::unknown_kind, "procedural kind '" + name + "'");
}

inline std::string to_string(ProceduralKind kind) {
    switch (kind) {
    case ProceduralKind::sphere_puff: return "sphere_puff";
    case ProceduralKind::plume: return "plume";
    case ProceduralKind::noise_turbulence: return "noise_turbulence";
    }
    return "?";
}

namespace detail {

inline double lattice_value(std::uint64_t seed, std::int64_t x, std::int64_t y, std::int64_t z) {
    return to_unit(hash_combine(hash_combine(hash_combine(mix64(seed), static_cast<std::uint64_t>(x)),
                                             static_cast<std::uint64_t>(y)),
                                static_cast<std::uint64_t>(z)));
}

inline double quintic(double t) { return t * t * t * (t * (t * 6 - 15) + 10); }

/// Value noise in [0, 1] with C2 interpolation between hashed lattice values.
inline double value_noise(std::uint64_t seed, double x, double y, double z) {
    const double fx = std::floor(x), fy = std::floor(y), fz = std::floor(z);
    const auto ix = static_cast<std::int64_t>(fx), iy = static_cast<std::int64_t>(fy),
               iz = static_cast<std::int64_t>(fz);
    const double tx = quintic(x - fx), ty = quintic(y - fy), tz = quintic(z - fz);
    auto lerp = [](double a, double b, double t) { return a + (b - a) * t; };
    double c[2][2];
    for (int dz = 0; dz < 2; ++dz)
        for (int dy = 0; dy < 2; ++dy)
            c[dz][dy] = lerp(lattice_value(seed, ix, iy + dy, iz + dz), lattice_value(seed, ix + 1, iy + dy, iz + dz), tx);
    return lerp(lerp(c[0][0], c[0][1], ty), lerp(c[1][0], c[1][1], ty), tz);
}

/// Fractal sum of value noise, normalised to [0, 1].
inline double fbm(std::uint64_t seed, double x, double y, double z, int octaves = 4) {
    double sum = 0, amp = 1, norm = 0, freq = 1;
    for (int o = 0; o < octaves; ++o) {
        sum += amp * value_noise(seed + 0x9e37ULL * o, x * freq, y * freq, z * freq);
        norm += amp;
        amp *= 0.5;
        freq *= 2.0;
    }
    return sum / norm;
}

inline double smoothstep(double e0, double e1, double x) {
    const double t = std::clamp((x - e0) / (e1 - e0), 0.0, 1.0);
    return t * t * (3 - 2 * t);
}

} // namespace detail

/// World extent of the longest grid axis for generated sequences; grids are
/// centred on the world origin.
inline constexpr double kProceduralExtent = 4.0;

/// One frame of a generated sequence. Deterministic in (kind, seed, frame);
/// values lie in [0, 1]. `frame_count` only shapes the puff's growth schedule.
inline DensityGrid procedural_frame(ProceduralKind kind, std::uint64_t seed, GridDims dims, int frame,
                                    int frame_count) {
    require(dims.nx >= 8 && dims.ny >= 8 && dims.nz >= 8, ErrorCode::invalid_argument,
            "procedural grids need every dimension >= 8");
    require(frame >= 0 && frame_count >= 1, ErrorCode::invalid_argument, "bad frame index");
    const int longest = std::max({dims.nx, dims.ny, dims.nz});
    const double dx = kProceduralExtent / longest;
    const Vec3 origin = Vec3(dims.nx, dims.ny, dims.nz) * (-0.5 * dx);
    std::vector<float> values(dims.count());

    // Normalised coordinates: u in [0,1] along each axis, measured in units of the shortest extent for radii.
    const double min_extent = dims.min_extent() * dx;
    const Vec3 center = origin + Vec3(dims.nx, dims.ny, dims.nz) * (0.5 * dx);
    const double t = frame;

    for (int k = 0; k < dims.nz; ++k)
        for (int j = 0; j < dims.ny; ++j)
            for (int i = 0; i < dims.nx; ++i) {
                const Vec3 p = origin + Vec3(i + 0.5, j + 0.5, k + 0.5) * dx;
                const Vec3 q = (p - center) / min_extent; // roughly [-0.5, 0.5]
                double d = 0.0;
                switch (kind) {
                case ProceduralKind::sphere_puff: {
                    const double growth = frame_count > 1 ? static_cast<double>(frame) / (frame_count - 1) : 0.0;
                    const double radius = 0.4 * (0.8 + 0.2 * std::min(growth, 1.0));
                    const double r = length(q) / radius;
                    d = r < 1.0 ? (1.0 - r * r) * (1.0 - r * r) : 0.0;
                    break;
                }
                case ProceduralKind::plume: {
                    // Column rising along +Z from a seeded source near the bottom face.
                    CounterRng rng = CounterRng::keyed(seed, 0x706c756dULL);
                    const double sx = (rng.uniform() - 0.5) * 0.2, sy = (rng.uniform() - 0.5) * 0.2;
                    const double height = q.z + 0.5; // 0 at the bottom face
                    const double sway = 0.06 * std::sin(2.1 * height + 0.11 * t + 6.28 * rng.uniform());
                    const double rx = q.x - sx - sway, ry = q.y - sy;
                    const double radius = 0.08 + 0.22 * height;
                    const double radial = 1.0 - detail::smoothstep(0.6 * radius, radius, std::sqrt(rx * rx + ry * ry));
                    const double turb = detail::fbm(seed, 4.0 * q.x, 4.0 * q.y, 4.0 * q.z - 0.05 * t);
                    const double envelope = detail::smoothstep(0.0, 0.08, height) * (1.0 - detail::smoothstep(0.8, 1.0, height));
                    d = radial * envelope * (0.35 + 0.65 * turb);
                    break;
                }
                case ProceduralKind::noise_turbulence: {
                    const double n = detail::fbm(seed, 3.0 * q.x + 0.015 * t, 3.0 * q.y, 3.0 * q.z + 0.01 * t);
                    const double falloff = 1.0 - detail::smoothstep(0.3, 0.5, length(q));
                    d = detail::smoothstep(0.45, 0.75, n) * falloff;
                    break;
                }
                }
                values[(static_cast<std::size_t>(k) * dims.ny + j) * dims.nx + i] =
                    static_cast<float>(std::clamp(d, 0.0, 1.0));
            }
    return DensityGrid(dims, dx, origin, std::move(values));
}

struct SequenceFrame {
    int index = 0;
    std::filesystem::path path; // relative paths resolve against the manifest directory
};

/// Ordered density-grid files that share dims and voxel width.
struct SequenceManifest {
    std::vector<SequenceFrame> frames;
    GridDims dims;
    double voxel_width = 1.0;
    std::filesystem::path base_dir;

    std::filesystem::path resolve(const SequenceFrame& f) const {
        return f.path.is_absolute() ? f.path : base_dir / f.path;
    }

    void validate() const {
        require(!frames.empty(), ErrorCode::invalid_argument, "sequence has no frames");
        for (std::size_t i = 1; i < frames.size(); ++i)
            require(frames[i].index > frames[i - 1].index, ErrorCode::invalid_argument,
                    "sequence frame indices must be strictly increasing");
    }

    /// Loads frame `i` (position in the list) and checks it matches the shared layout.
    DensityGrid load_frame(std::size_t i) const {
        DensityGrid g = load_grid(resolve(frames.at(i)));
        require(g.dims() == dims && static_cast<float>(g.voxel_width()) == static_cast<float>(voxel_width),
                ErrorCode::dimension_mismatch, "frame " + std::to_string(frames[i].index) +
                                                   " does not share the sequence dims/voxel width");
        return g;
    }
};

inline std::string frame_file_name(int index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "frame_%05d.dgrid", index);
    return buf;
}

inline nlohmann::json to_json(const SequenceManifest& m) {
    nlohmann::json frames = nlohmann::json::array();
    for (const auto& f : m.frames) frames.push_back({{"index", f.index}, {"path", f.path.generic_string()}});
    return {{"frames", frames},
            {"dims", {m.dims.nx, m.dims.ny, m.dims.nz}},
            {"voxel_width", m.voxel_width}};
}

inline void save_sequence(const SequenceManifest& m, const std::filesystem::path& manifest_path) {
    const std::string text = to_json(m).dump(2) + "\n";
    io::write_file(manifest_path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

inline SequenceManifest load_sequence(const std::filesystem::path& manifest_path) {
    const auto bytes = io::read_file(manifest_path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(bytes.begin(), bytes.end());
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::invalid_argument, "sequence manifest " + manifest_path.string() + ": " + e.what());
    }
    SequenceManifest m;
    m.base_dir = manifest_path.parent_path();
    try {
        for (const auto& f : j.at("frames"))
            m.frames.push_back({f.at("index").get<int>(), std::filesystem::path(f.at("path").get<std::string>())});
        const auto& d = j.at("dims");
        m.dims = {d.at(0).get<int>(), d.at(1).get<int>(), d.at(2).get<int>()};
        m.voxel_width = j.at("voxel_width").get<double>();
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::invalid_argument, "sequence manifest " + manifest_path.string() + ": " + e.what());
    }
    m.validate();
    return m;
}

/// Writes `frame_count` frames plus `sequence.json` into `out_dir`.
inline SequenceManifest generate_procedural(ProceduralKind kind, std::uint64_t seed, GridDims dims, int frame_count,
                                            const std::filesystem::path& out_dir) {
    require(frame_count >= 1, ErrorCode::invalid_argument, "need at least one frame");
    SequenceManifest m;
    m.dims = dims;
    m.base_dir = out_dir;
    for (int f = 0; f < frame_count; ++f) {
        const DensityGrid g = procedural_frame(kind, seed, dims, f, frame_count);
        m.voxel_width = g.voxel_width();
        const std::string name = frame_file_name(f);
        save_grid(g, out_dir / name);
        m.frames.push_back({f, name});
    }
    save_sequence(m, out_dir / "sequence.json");
    return m;
}

} // namespace sixway
