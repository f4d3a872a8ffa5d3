#pragma once

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sixway/bake/baker.hpp"
#include "sixway/guiding/guiding_map.hpp"
#include "sixway/io/map_files.hpp"
#include "sixway/volume/procedural.hpp"

namespace sixway {

/// One ground-truth tuple on disk: density grid, guiding map, baked lightmaps.
struct DatasetRecord {
    int frame = 0;
    int camera_id = 0;
    std::string guiding_path;   // relative to the dataset directory
    std::string lightmaps_path; // relative to the dataset directory
    std::string grid_path;      // as resolved from the sequence manifest
};

struct DatasetResult {
    std::vector<DatasetRecord> records;
    std::filesystem::path index_path;
    std::vector<std::filesystem::path> files; // every file written, index last
};

inline nlohmann::json to_json(const DatasetRecord& r) {
    return {{"frame", r.frame},
            {"camera_id", r.camera_id},
            {"guiding_path", r.guiding_path},
            {"lightmaps_path", r.lightmaps_path},
            {"grid_path", r.grid_path}};
}

inline nlohmann::json camera_json(const Camera& c) {
    return {{"projection", c.mode == Projection::perspective ? "perspective" : "orthographic"},
            {"position", {c.position.x, c.position.y, c.position.z}},
            {"view_dir", {c.view_dir.x, c.view_dir.y, c.view_dir.z}},
            {"up", {c.up.x, c.up.y, c.up.z}},
            {"fov", c.vertical_fov_deg},
            {"ortho_height", c.ortho_height},
            {"near", c.near},
            {"far", c.far},
            {"resolution", {c.width, c.height}}};
}

/// Bake seed for one (frame, camera) tuple so tuples have independent noise.
inline std::uint64_t tuple_seed(std::uint64_t base, int frame, int camera_id) {
    return hash_combine(hash_combine(base, static_cast<std::uint64_t>(frame)), static_cast<std::uint64_t>(camera_id));
}

/// For every frame and camera: guiding map and reference lightmaps as paired
/// PFMs, plus `index.json` listing the tuples. Failures name the tuple.
inline DatasetResult bake_tuple(const SequenceManifest& sequence, const MediumParams& medium,
                                const PhaseFunction& phase, const std::vector<Camera>& cameras,
                                const BakeConfig& bake_config, const GuidingConfig& guiding_config,
                                const std::filesystem::path& out_dir) {
    sequence.validate();
    require(!cameras.empty(), ErrorCode::invalid_argument, "dataset needs at least one camera");
    DatasetResult result;
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    require(!ec, ErrorCode::io_failure, "cannot create dataset directory " + out_dir.string() + ": " + ec.message());

    for (std::size_t fi = 0; fi < sequence.frames.size(); ++fi) {
        const int frame = sequence.frames[fi].index;
        const std::filesystem::path grid_path = sequence.resolve(sequence.frames[fi]);
        std::optional<DensityGrid> grid;
        try {
            grid.emplace(sequence.load_frame(fi));
        } catch (const Error& e) {
            throw Error(e.code(), "frame " + std::to_string(frame) + ": " + e.what());
        }
        for (std::size_t ci = 0; ci < cameras.size(); ++ci) {
            const int cam = static_cast<int>(ci);
            char stem[48];
            std::snprintf(stem, sizeof stem, "f%05d_c%02d", frame, cam);
            const std::string guiding_name = std::string(stem) + "_guiding.pfm";
            const std::string maps_name = std::string(stem) + "_lightmaps.pfm";
            try {
                const GuidingMap g = generate_guiding(*grid, medium, phase, cameras[ci], guiding_config);
                BakeConfig bc = bake_config;
                bc.rng_seed = tuple_seed(bake_config.rng_seed, frame, cam);
                const SixWayLightmaps maps = bake_sixway(*grid, medium, phase, cameras[ci], bc);
                io::write_guiding(out_dir / guiding_name, g);
                io::write_lightmaps(out_dir / maps_name, maps);
            } catch (const Error& e) {
                throw Error(e.code(), "frame " + std::to_string(frame) + " camera " + std::to_string(cam) + ": " + e.what());
            }
            for (const auto& name : {guiding_name, maps_name}) {
                result.files.push_back(out_dir / name);
                result.files.push_back(io::sidecar_path(out_dir / name));
            }
            result.records.push_back({frame, cam, guiding_name, maps_name, grid_path.generic_string()});
        }
    }

    nlohmann::json records = nlohmann::json::array();
    for (const auto& r : result.records) records.push_back(to_json(r));
    nlohmann::json cams = nlohmann::json::array();
    for (const auto& c : cameras) cams.push_back(camera_json(c));
    const nlohmann::json index = {{"version", 1},
                                  {"records", records},
                                  {"cameras", cams},
                                  {"bake_seed", bake_config.rng_seed},
                                  {"spp", bake_config.spp},
                                  {"guiding_jitter_seed", guiding_config.jitter_seed}};
    result.index_path = out_dir / "index.json";
    io::write_text(result.index_path, index.dump(2) + "\n");
    result.files.push_back(result.index_path);
    return result;
}

/// Reads the records back from `index.json`.
inline std::vector<DatasetRecord> load_dataset_index(const std::filesystem::path& index_path) {
    const auto j = io::read_json(index_path);
    std::vector<DatasetRecord> out;
    try {
        for (const auto& r : j.at("records"))
            out.push_back({r.at("frame").get<int>(), r.at("camera_id").get<int>(), r.at("guiding_path").get<std::string>(),
                           r.at("lightmaps_path").get<std::string>(), r.at("grid_path").get<std::string>()});
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::invalid_argument, "dataset index " + index_path.string() + ": " + e.what());
    }
    return out;
}

} // namespace sixway
