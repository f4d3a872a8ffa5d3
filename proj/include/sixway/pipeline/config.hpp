#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sixway/bake/baker.hpp"
#include "sixway/guiding/guiding_map.hpp"
#include "sixway/io/map_files.hpp"
#include "sixway/runtime/relight.hpp"
#include "sixway/runtime/shadow.hpp"
#include "sixway/volume/camera.hpp"
#include "sixway/volume/procedural.hpp"

namespace sixway::pipeline {

// Configuration schema shared by the command-line tool and the live server.
// Every field is optional in the JSON file; missing fields keep the defaults
// below. Unknown keys are rejected so typos surface early.
//
// {
//   "seed": 1,
//   "procedural": {"kind": "plume", "seed": 1, "dims": [64,64,64], "frames": 2},
//   "camera": {"projection": "perspective", "yaw": 0, "pitch": 0, "distance": 6,
//              "target": [0,0,0], "fov": 45, "ortho_height": 4.5, "near": 0.01,
//              "far": 20, "width": 128, "height": 128},
//   "ring": {"count": 9, "step_deg": 10, "start_deg": 0},
//   "medium": {"sigma_s": 2, "sigma_a": 0},
//   "phase_g": 0,
//   "guiding": {"step_multiplier": 10, "max_steps": 64, "tau": 0.01, "jitter_seed": 7,
//               "weights": [1, 0.5, 0.5]},
//   "bake": {"spp": 32, "primary_step": null, "light_mode": "exact_axis", "rng_seed": 1},
//   "lights": [{"direction": [0,0,-1], "radiance": [1,1,1]}],
//   "background": [0.05, 0.05, 0.05],
//   "emissive_lut": false,
//   "occluders": [{"corner": [..], "edge_u": [..], "edge_v": [..]}],
//   "shadow_resolution": 512,
//   "weights": "model.nsw"
// }

struct ProceduralSpec {
    ProceduralKind kind = ProceduralKind::plume;
    std::uint64_t seed = 1;
    GridDims dims{64, 64, 64};
    int frames = 2;
};

struct OrbitSpec {
    Projection projection = Projection::perspective;
    double yaw = 0, pitch = 0, distance = 6;
    Vec3 target{};
    double fov = 45, ortho_height = 4.5, near = 0.01, far = 20;
    int width = 128, height = 128;

    Camera camera() const { return camera_at(yaw, pitch, distance); }

    Camera camera_at(double yaw_deg, double pitch_deg, double dist) const {
        Camera base;
        base.mode = projection;
        base.vertical_fov_deg = fov;
        base.ortho_height = ortho_height;
        base.near = near;
        base.far = far;
        base.width = width;
        base.height = height;
        Camera c = orbit_camera(target, yaw_deg, pitch_deg, dist, base);
        c.validate();
        return c;
    }
};

/// Cameras on a horizontal ring around the target, `step_deg` apart.
struct RingSpec {
    int count = 9;
    double step_deg = 10;
    double start_deg = 0;
};

struct PipelineConfig {
    std::uint64_t seed = 1;
    ProceduralSpec procedural;
    OrbitSpec camera;
    RingSpec ring;
    MediumParams medium{2.0, 0.0};
    PhaseFunction phase;
    GuidingConfig guiding;
    BakeConfig bake;
    std::vector<DirectionalLight> lights{{Vec3(0, 0, -1), Rgb(1, 1, 1)}};
    Rgb background{0.05, 0.05, 0.05};
    bool emissive_lut = false;
    std::vector<QuadOccluder> occluders;
    int shadow_resolution = 512;
    std::string weights;

    std::vector<Camera> ring_cameras() const {
        require(ring.count >= 1, ErrorCode::invalid_argument, "camera ring needs at least one view");
        std::vector<Camera> out;
        for (int i = 0; i < ring.count; ++i)
            out.push_back(camera.camera_at(ring.start_deg + i * ring.step_deg, camera.pitch, camera.distance));
        return out;
    }

    void validate() const {
        medium.validate();
        phase.validate();
        guiding.validate();
        bake.validate();
        camera.camera().validate();
        for (const auto& l : lights) make_light(l.direction, l.radiance);
        require(shadow_resolution >= 1, ErrorCode::invalid_argument, "shadow resolution must be >= 1");
    }
};

namespace detail {

using nlohmann::json;

inline Vec3 vec3_from(const json& j, const std::string& key) {
    require(j.is_array() && j.size() == 3, ErrorCode::invalid_argument, "'" + key + "' must be a 3-element array");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

inline json vec3_json(const Vec3& v) { return json::array({v.x, v.y, v.z}); }

inline void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
    require(j.is_object(), ErrorCode::invalid_argument, "'" + where + "' must be an object");
    for (const auto& [key, _] : j.items()) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || key == a;
        require(ok, ErrorCode::invalid_argument, "unknown config key '" + where + "." + key + "'");
    }
}

template <typename T>
void read_opt(const json& j, const char* key, T& out) {
    if (j.contains(key) && !j.at(key).is_null()) out = j.at(key).get<T>();
}

} // namespace detail

inline nlohmann::json to_json(const PipelineConfig& c) {
    using nlohmann::json;
    using detail::vec3_json;
    json lights = json::array();
    for (const auto& l : c.lights) lights.push_back({{"direction", vec3_json(l.direction)}, {"radiance", vec3_json(l.radiance)}});
    json occ = json::array();
    for (const auto& q : c.occluders)
        occ.push_back({{"corner", vec3_json(q.corner)}, {"edge_u", vec3_json(q.edge_u)}, {"edge_v", vec3_json(q.edge_v)}});
    const auto& cam = c.camera;
    const auto& g = c.guiding;
    const auto& b = c.bake;
    json bake_lights = json::array();
    for (bool on : b.lights) bake_lights.push_back(on);
    return {
        {"seed", c.seed},
        {"procedural",
         {{"kind", to_string(c.procedural.kind)},
          {"seed", c.procedural.seed},
          {"dims", {c.procedural.dims.nx, c.procedural.dims.ny, c.procedural.dims.nz}},
          {"frames", c.procedural.frames}}},
        {"camera",
         {{"projection", cam.projection == Projection::perspective ? "perspective" : "orthographic"},
          {"yaw", cam.yaw},
          {"pitch", cam.pitch},
          {"distance", cam.distance},
          {"target", vec3_json(cam.target)},
          {"fov", cam.fov},
          {"ortho_height", cam.ortho_height},
          {"near", cam.near},
          {"far", cam.far},
          {"width", cam.width},
          {"height", cam.height}}},
        {"ring", {{"count", c.ring.count}, {"step_deg", c.ring.step_deg}, {"start_deg", c.ring.start_deg}}},
        {"medium", {{"sigma_s", c.medium.sigma_s_scale}, {"sigma_a", c.medium.sigma_a_scale}}},
        {"phase_g", c.phase.g},
        {"guiding",
         {{"step_multiplier", g.step_multiplier},
          {"max_steps", g.max_steps},
          {"tau", g.tau},
          {"jitter_seed", g.jitter_seed},
          {"weights", {g.w_front, g.w_top, g.w_bottom}},
          {"light_step", g.light_step ? json(*g.light_step) : json(nullptr)}}},
        {"bake",
         {{"spp", b.spp},
          {"primary_step", b.primary_step ? json(*b.primary_step) : json(nullptr)},
          {"light_step", b.light_step ? json(*b.light_step) : json(nullptr)},
          {"light_mode", b.light_mode == LightTransmittanceMode::exact_axis ? "exact_axis" : "march"},
          {"rng_seed", b.rng_seed},
          {"lights", bake_lights}}},
        {"lights", lights},
        {"background", vec3_json(c.background)},
        {"emissive_lut", c.emissive_lut},
        {"occluders", occ},
        {"shadow_resolution", c.shadow_resolution},
        {"weights", c.weights},
    };
}

/// Overlays the fields present in `j` onto `base`.
inline PipelineConfig config_from_json(const nlohmann::json& j, PipelineConfig c = {}) {
    using detail::check_keys;
    using detail::read_opt;
    using detail::vec3_from;
    try {
        check_keys(j,
                   {"seed", "procedural", "camera", "ring", "medium", "phase_g", "guiding", "bake", "lights",
                    "background", "emissive_lut", "occluders", "shadow_resolution", "weights"},
                   "config");
        read_opt(j, "seed", c.seed);
        if (j.contains("procedural")) {
            const auto& p = j["procedural"];
            check_keys(p, {"kind", "seed", "dims", "frames"}, "procedural");
            if (p.contains("kind")) c.procedural.kind = parse_procedural_kind(p["kind"].get<std::string>());
            read_opt(p, "seed", c.procedural.seed);
            read_opt(p, "frames", c.procedural.frames);
            if (p.contains("dims"))
                c.procedural.dims = {p["dims"].at(0).get<int>(), p["dims"].at(1).get<int>(), p["dims"].at(2).get<int>()};
        }
        if (j.contains("camera")) {
            const auto& k = j["camera"];
            check_keys(k,
                       {"projection", "yaw", "pitch", "distance", "target", "fov", "ortho_height", "near", "far", "width",
                        "height"},
                       "camera");
            if (k.contains("projection")) {
                const auto mode = k["projection"].get<std::string>();
                require(mode == "perspective" || mode == "orthographic", ErrorCode::invalid_argument,
                        "camera.projection must be perspective or orthographic");
                c.camera.projection = mode == "perspective" ? Projection::perspective : Projection::orthographic;
            }
            read_opt(k, "yaw", c.camera.yaw);
            read_opt(k, "pitch", c.camera.pitch);
            read_opt(k, "distance", c.camera.distance);
            if (k.contains("target")) c.camera.target = vec3_from(k["target"], "camera.target");
            read_opt(k, "fov", c.camera.fov);
            read_opt(k, "ortho_height", c.camera.ortho_height);
            read_opt(k, "near", c.camera.near);
            read_opt(k, "far", c.camera.far);
            read_opt(k, "width", c.camera.width);
            read_opt(k, "height", c.camera.height);
        }
        if (j.contains("ring")) {
            const auto& r = j["ring"];
            check_keys(r, {"count", "step_deg", "start_deg"}, "ring");
            read_opt(r, "count", c.ring.count);
            read_opt(r, "step_deg", c.ring.step_deg);
            read_opt(r, "start_deg", c.ring.start_deg);
        }
        if (j.contains("medium")) {
            const auto& m = j["medium"];
            check_keys(m, {"sigma_s", "sigma_a"}, "medium");
            read_opt(m, "sigma_s", c.medium.sigma_s_scale);
            read_opt(m, "sigma_a", c.medium.sigma_a_scale);
        }
        read_opt(j, "phase_g", c.phase.g);
        if (j.contains("guiding")) {
            const auto& g = j["guiding"];
            check_keys(g, {"step_multiplier", "max_steps", "tau", "jitter_seed", "weights", "light_step"}, "guiding");
            read_opt(g, "step_multiplier", c.guiding.step_multiplier);
            read_opt(g, "max_steps", c.guiding.max_steps);
            read_opt(g, "tau", c.guiding.tau);
            read_opt(g, "jitter_seed", c.guiding.jitter_seed);
            if (g.contains("weights")) {
                const Vec3 w = vec3_from(g["weights"], "guiding.weights");
                c.guiding.w_front = w.x;
                c.guiding.w_top = w.y;
                c.guiding.w_bottom = w.z;
            }
            if (g.contains("light_step"))
                c.guiding.light_step = g["light_step"].is_null() ? std::nullopt : std::optional(g["light_step"].get<double>());
        }
        if (j.contains("bake")) {
            const auto& b = j["bake"];
            check_keys(b, {"spp", "primary_step", "light_step", "light_mode", "rng_seed", "lights"}, "bake");
            read_opt(b, "spp", c.bake.spp);
            read_opt(b, "rng_seed", c.bake.rng_seed);
            if (b.contains("primary_step"))
                c.bake.primary_step = b["primary_step"].is_null() ? std::nullopt : std::optional(b["primary_step"].get<double>());
            if (b.contains("light_step"))
                c.bake.light_step = b["light_step"].is_null() ? std::nullopt : std::optional(b["light_step"].get<double>());
            if (b.contains("light_mode")) {
                const auto mode = b["light_mode"].get<std::string>();
                require(mode == "exact_axis" || mode == "march", ErrorCode::invalid_argument,
                        "bake.light_mode must be exact_axis or march");
                c.bake.light_mode = mode == "march" ? LightTransmittanceMode::march : LightTransmittanceMode::exact_axis;
            }
            if (b.contains("lights")) {
                require(b["lights"].size() == kScatterChannels, ErrorCode::invalid_argument, "bake.lights needs 6 flags");
                for (int i = 0; i < kScatterChannels; ++i) c.bake.lights[i] = b["lights"][i].get<bool>();
            }
        }
        if (j.contains("lights")) {
            c.lights.clear();
            for (const auto& l : j["lights"]) {
                check_keys(l, {"direction", "radiance"}, "lights[]");
                c.lights.push_back(make_light(vec3_from(l.at("direction"), "direction"),
                                              l.contains("radiance") ? vec3_from(l["radiance"], "radiance") : Rgb(1, 1, 1)));
            }
        }
        if (j.contains("background")) c.background = vec3_from(j["background"], "background");
        read_opt(j, "emissive_lut", c.emissive_lut);
        if (j.contains("occluders")) {
            c.occluders.clear();
            for (const auto& o : j["occluders"]) {
                check_keys(o, {"corner", "edge_u", "edge_v"}, "occluders[]");
                c.occluders.push_back({vec3_from(o.at("corner"), "corner"), vec3_from(o.at("edge_u"), "edge_u"),
                                       vec3_from(o.at("edge_v"), "edge_v")});
            }
        }
        read_opt(j, "shadow_resolution", c.shadow_resolution);
        read_opt(j, "weights", c.weights);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::invalid_argument, std::string("config: ") + e.what());
    }
    return c;
}

inline PipelineConfig load_config(const std::filesystem::path& path) {
    require(std::filesystem::exists(path), ErrorCode::io_failure, "config file " + path.string() + " does not exist");
    return config_from_json(io::read_json(path));
}

/// FNV-1a over the canonical (sorted-key, compact) JSON form.
inline std::uint64_t config_hash(const PipelineConfig& c) { return fnv1a64(to_json(c).dump()); }

inline std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

/// Shadow projection that covers the grid's bounding sphere for a light.
inline LightProjection light_projection_for(const Aabb& bounds, const Vec3& light_dir) {
    const Vec3 center = (bounds.lo + bounds.hi) * 0.5;
    const double radius = 0.5 * length(bounds.hi - bounds.lo);
    return {normalize(light_dir), center, radius * 1.05, radius * 1.05};
}

} // namespace sixway::pipeline
