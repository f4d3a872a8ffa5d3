#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "sixway/core/rng.hpp"
#include "sixway/volume/density_grid.hpp"

namespace sixway::test {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir() {
        static int counter = 0;
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() /
                ("sixway_test_" + std::to_string(rd()) + "_" + std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

inline DensityGrid random_grid(GridDims dims, double voxel_width, std::uint64_t seed, Vec3 origin = {},
                               double max_value = 1.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> u(0.0f, static_cast<float>(max_value));
    std::vector<float> v(dims.count());
    for (float& x : v) x = u(rng);
    return DensityGrid(dims, voxel_width, origin, std::move(v));
}

inline DensityGrid constant_grid(GridDims dims, double voxel_width, float value, Vec3 origin = {}) {
    return DensityGrid(dims, voxel_width, origin, std::vector<float>(dims.count(), value));
}

} // namespace sixway::test
