// Command-line front end for the six-way lightmap pipeline.

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "sixway/bake/dataset.hpp"
#include "sixway/io/png.hpp"
#include "sixway/live/server.hpp"
#include "sixway/metrics/bench.hpp"
#include "sixway/metrics/metrics.hpp"
#include "sixway/pipeline/manifest.hpp"
#include "sixway/pipeline/stages.hpp"
#include "sixway/runtime/packing.hpp"

namespace fs = std::filesystem;
using namespace sixway;
using pipeline::PipelineConfig;
using pipeline::RunManifest;
using pipeline::StageError;

namespace {

std::vector<double> parse_numbers(const std::string& text, const std::string& what) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw CLI::ValidationError(what, "'" + text + "' is not a comma-separated list of numbers");
        }
    }
    return out;
}

/// Options shared by every subcommand that reads a config file.
struct Common {
    std::string config_path;
    std::string out;
    std::optional<std::uint64_t> seed;

    void add(CLI::App* app, bool out_required = true) {
        app->add_option("--config", config_path, "JSON pipeline config")->check(CLI::ExistingFile);
        auto* o = app->add_option("--out", out, "output directory");
        if (out_required) o->required();
        app->add_option("--seed", seed, "global seed recorded in the manifest");
    }

    PipelineConfig load() const {
        PipelineConfig c = config_path.empty() ? PipelineConfig{} : pipeline::load_config(config_path);
        if (seed) c.seed = *seed;
        return c;
    }
};

struct CameraFlags {
    std::optional<double> yaw, pitch, distance, fov, ortho_height, far;
    std::optional<int> size, width, height;
    bool ortho = false;

    void add(CLI::App* app) {
        app->add_option("--yaw", yaw, "orbit yaw in degrees");
        app->add_option("--pitch", pitch, "orbit pitch in degrees");
        app->add_option("--distance", distance, "orbit distance");
        app->add_option("--fov", fov, "vertical field of view in degrees");
        app->add_option("--far", far, "far clip distance (also the depth scale)");
        app->add_flag("--ortho", ortho, "orthographic projection");
        app->add_option("--ortho-height", ortho_height, "orthographic view height");
        app->add_option("--res", size, "square resolution")->check(CLI::PositiveNumber);
        app->add_option("--width", width, "image width")->check(CLI::PositiveNumber);
        app->add_option("--height", height, "image height")->check(CLI::PositiveNumber);
    }

    void apply(PipelineConfig& c) const {
        auto& k = c.camera;
        if (yaw) k.yaw = *yaw;
        if (pitch) k.pitch = *pitch;
        if (distance) k.distance = *distance;
        if (fov) k.fov = *fov;
        if (far) k.far = *far;
        if (ortho) k.projection = Projection::orthographic;
        if (ortho_height) k.ortho_height = *ortho_height;
        if (size) k.width = k.height = *size;
        if (width) k.width = *width;
        if (height) k.height = *height;
    }
};

struct GuidingFlags {
    std::optional<double> step_multiplier, tau;
    std::optional<int> max_steps;
    std::optional<std::uint64_t> jitter_seed;

    void add(CLI::App* app) {
        app->add_option("--step-multiplier", step_multiplier, "guiding step in voxel widths");
        app->add_option("--max-steps", max_steps, "guiding march steps");
        app->add_option("--tau", tau, "depth density threshold");
        app->add_option("--jitter-seed", jitter_seed, "guiding jitter seed");
    }
    void apply(PipelineConfig& c) const {
        if (step_multiplier) c.guiding.step_multiplier = *step_multiplier;
        if (max_steps) c.guiding.max_steps = *max_steps;
        if (tau) c.guiding.tau = *tau;
        if (jitter_seed) c.guiding.jitter_seed = *jitter_seed;
    }
};

struct BakeFlags {
    std::optional<int> spp;
    std::optional<std::uint64_t> bake_seed;

    void add(CLI::App* app) {
        app->add_option("--spp", spp, "samples per pixel")->check(CLI::PositiveNumber);
        app->add_option("--bake-seed", bake_seed, "bake RNG seed");
    }
    void apply(PipelineConfig& c) const {
        if (spp) c.bake.spp = *spp;
        if (bake_seed) c.bake.rng_seed = *bake_seed;
    }
};

struct MediumFlags {
    std::optional<double> sigma_s, sigma_a, g;
    void add(CLI::App* app) {
        app->add_option("--sigma-s", sigma_s, "scattering coefficient scale");
        app->add_option("--sigma-a", sigma_a, "absorption coefficient scale");
        app->add_option("--g", g, "Henyey-Greenstein anisotropy");
    }
    void apply(PipelineConfig& c) const {
        if (sigma_s) c.medium.sigma_s_scale = *sigma_s;
        if (sigma_a) c.medium.sigma_a_scale = *sigma_a;
        if (g) c.phase.g = *g;
    }
};

std::vector<DirectionalLight> parse_lights(const std::vector<std::string>& specs) {
    std::vector<DirectionalLight> out;
    for (const auto& s : specs) {
        const auto v = parse_numbers(s, "--light");
        if (v.size() != 3 && v.size() != 6)
            throw CLI::ValidationError("--light", "expects dx,dy,dz or dx,dy,dz,r,g,b");
        const Vec3 dir = normalize(Vec3(v[0], v[1], v[2]));
        out.push_back(make_light(dir, v.size() == 6 ? Rgb(v[3], v[4], v[5]) : Rgb(1, 1, 1)));
    }
    return out;
}

fs::path out_path(const Common& c, const std::string& name) { return fs::path(c.out) / name; }

/// Density frame from `--grid` or frame `index` of `--sequence`.
DensityGrid load_input_grid(const std::string& grid, const std::string& sequence, int index, RunManifest& m) {
    if (!grid.empty()) {
        m.set_input("grid", grid);
        return load_grid(grid);
    }
    if (sequence.empty()) throw StageError("load", "one of --grid or --sequence is required");
    const SequenceManifest seq = load_sequence(sequence);
    for (std::size_t i = 0; i < seq.frames.size(); ++i)
        if (seq.frames[i].index == index) {
            m.set_input("grid", seq.resolve(seq.frames[i]).generic_string());
            return seq.load_frame(i);
        }
    fail(ErrorCode::out_of_range, "sequence has no frame " + std::to_string(index));
}

/// Display-referred [0,1] image for metrics: PNG as stored, PFM as linear RGB.
Image load_display_image(const fs::path& p) {
    if (p.extension() == ".png") {
        const io::Image8 img = io::decode_png(io::read_file(p));
        Image out(img.width, img.height, img.channels);
        std::size_t i = 0;
        for (int y = 0; y < img.height; ++y)
            for (int x = 0; x < img.width; ++x)
                for (int c = 0; c < img.channels; ++c) out.at(c, y, x) = img.pixels[i++] / 255.0f;
        return out;
    }
    return encode_srgb(io::read_pfm(p));
}

void write_packed(const fs::path& stem, const PackedTextures& p, bool encode, std::vector<fs::path>& files) {
    const std::pair<const Image*, const char*> textures[] = {{&p.first, "_rgba1"}, {&p.second, "_rgba2"}};
    for (const auto& [img, suffix] : textures) {
        const fs::path pfm = stem.string() + suffix + ".pfm";
        const fs::path png = stem.string() + suffix + ".png";
        io::write_pfm(pfm, io::stack_channels(*img));
        io::write_png(png, *img, encode);
        files.push_back(pfm);
        files.push_back(png);
    }
}

std::atomic<bool> g_interrupted{false};

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Six-way lightmap pipeline: bake, guide, infer, composite, serve."};
    app.require_subcommand(1);
    std::optional<int> threads;
    app.add_option("--threads", threads, "worker threads (overrides SIXWAY_THREADS)")->check(CLI::PositiveNumber);

    Common common;
    CameraFlags cam;
    GuidingFlags guide_flags;
    BakeFlags bake_flags;
    MediumFlags medium_flags;
    std::function<void()> action;

    // gen
    auto* gen = app.add_subcommand("gen", "write a procedural density sequence");
    std::string kind;
    std::optional<std::uint64_t> gen_seed;
    std::vector<int> dims;
    std::optional<int> frames;
    common.add(gen);
    gen->add_option("--kind", kind, "sphere_puff | plume | noise_turbulence");
    gen->add_option("--gen-seed", gen_seed, "procedural seed");
    gen->add_option("--dims", dims, "grid dims nx ny nz")->expected(3);
    gen->add_option("--frames", frames, "frame count")->check(CLI::PositiveNumber);
    gen->callback([&] {
        action = [&] {
            PipelineConfig cfg = common.load();
            if (!kind.empty()) cfg.procedural.kind = parse_procedural_kind(kind);
            if (gen_seed) cfg.procedural.seed = *gen_seed;
            if (!dims.empty()) cfg.procedural.dims = {dims[0], dims[1], dims[2]};
            if (frames) cfg.procedural.frames = *frames;
            RunManifest m("gen", cfg, out_path(common, "manifest.json"));
            const auto seq = pipeline::run_stage("gen", [&] {
                return generate_procedural(cfg.procedural.kind, cfg.procedural.seed, cfg.procedural.dims,
                                           cfg.procedural.frames, common.out);
            });
            for (const auto& f : seq.frames) m.add_file(seq.resolve(f));
            m.add_file(out_path(common, "sequence.json"));
            m.write();
        };
    });

    // shared grid selection for bake / guide / bench
    std::string grid_path, sequence_path;
    int frame_index = 0;
    auto add_grid_input = [&](CLI::App* sub) {
        sub->add_option("--grid", grid_path, "density grid (.dgrid)")->check(CLI::ExistingFile);
        sub->add_option("--sequence", sequence_path, "sequence manifest (.json)")->check(CLI::ExistingFile);
        sub->add_option("--frame", frame_index, "frame index within --sequence");
    };

    // bake
    auto* bake = app.add_subcommand("bake", "reference six-way lightmaps");
    common.add(bake);
    cam.add(bake);
    bake_flags.add(bake);
    medium_flags.add(bake);
    add_grid_input(bake);
    bake->callback([&] {
        action = [&] {
            PipelineConfig cfg = common.load();
            cam.apply(cfg);
            bake_flags.apply(cfg);
            medium_flags.apply(cfg);
            RunManifest m("bake", cfg, out_path(common, "manifest.json"));
            const DensityGrid grid = pipeline::run_stage("load", [&] { return load_input_grid(grid_path, sequence_path, frame_index, m); });
            const auto maps = pipeline::run_stage("bake", [&] { cfg.validate(); return pipeline::bake_reference(grid, cfg, cfg.camera.camera()); });
            pipeline::run_stage("write", [&] { io::write_lightmaps(out_path(common, "lightmaps.pfm"), maps); });
            m.add_files({out_path(common, "lightmaps.pfm"), io::sidecar_path(out_path(common, "lightmaps.pfm"))});
            m.write();
        };
    });

    // guide
    auto* guide = app.add_subcommand("guide", "coarse guiding map");
    common.add(guide);
    cam.add(guide);
    guide_flags.add(guide);
    medium_flags.add(guide);
    add_grid_input(guide);
    guide->callback([&] {
        action = [&] {
            PipelineConfig cfg = common.load();
            cam.apply(cfg);
            guide_flags.apply(cfg);
            medium_flags.apply(cfg);
            RunManifest m("guide", cfg, out_path(common, "manifest.json"));
            const DensityGrid grid = pipeline::run_stage("load", [&] { return load_input_grid(grid_path, sequence_path, frame_index, m); });
            const auto g = pipeline::run_stage("guide", [&] {
                cfg.validate();
                return generate_guiding(grid, cfg.medium, cfg.phase, cfg.camera.camera(), cfg.guiding);
            });
            pipeline::run_stage("write", [&] { io::write_guiding(out_path(common, "guiding.pfm"), g); });
            m.add_files({out_path(common, "guiding.pfm"), io::sidecar_path(out_path(common, "guiding.pfm"))});
            m.write();
        };
    });

    // infer
    auto* infer = app.add_subcommand("infer", "network prediction of lightmaps from a guiding map");
    std::string guiding_path, weights_path;
    common.add(infer);
    infer->add_option("--guiding", guiding_path, "guiding map (.pfm)")->required()->check(CLI::ExistingFile);
    infer->add_option("--weights", weights_path, "network weights (.nsw)");
    infer->callback([&] {
        action = [&] {
            PipelineConfig cfg = common.load();
            if (!weights_path.empty()) cfg.weights = weights_path;
            if (cfg.weights.empty() || !fs::exists(cfg.weights))
                throw StageError("infer", "missing weights" + (cfg.weights.empty() ? std::string(" (pass --weights)")
                                                                                   : ": " + cfg.weights + " not found"));
            RunManifest m("infer", cfg, out_path(common, "manifest.json"));
            m.set_input("guiding", guiding_path);
            m.set_input("weights", cfg.weights);
            const auto weights = pipeline::run_stage("load", [&] { return nn::load_weights(cfg.weights); });
            const auto g = pipeline::run_stage("load", [&] { return io::read_guiding(guiding_path); });
            const auto maps = pipeline::run_stage("infer", [&] { return nn::forward(weights, g); });
            pipeline::run_stage("write", [&] { io::write_lightmaps(out_path(common, "lightmaps.pfm"), maps); });
            m.add_files({out_path(common, "lightmaps.pfm"), io::sidecar_path(out_path(common, "lightmaps.pfm"))});
            m.write();
        };
    });

    // composite
    auto* comp = app.add_subcommand("composite", "relight lightmaps into an RGB image");
    std::string lightmaps_path, background;
    std::vector<std::string> light_specs;
    common.add(comp);
    cam.add(comp);
    comp->add_option("--lightmaps", lightmaps_path, "lightmaps (.pfm)")->required()->check(CLI::ExistingFile);
    comp->add_option("--light", light_specs, "dx,dy,dz[,r,g,b] propagation direction and radiance (repeatable)");
    comp->add_option("--background", background, "r,g,b linear background");
    comp->add_option("--guiding", guiding_path, "guiding map, needed for occluder shadows")->check(CLI::ExistingFile);
    add_grid_input(comp);
    comp->callback([&] {
        action = [&] {
            PipelineConfig cfg = common.load();
            cam.apply(cfg);
            if (!light_specs.empty()) cfg.lights = parse_lights(light_specs);
            if (!background.empty()) {
                const auto v = parse_numbers(background, "--background");
                if (v.size() != 3) throw CLI::ValidationError("--background", "expects r,g,b");
                cfg.background = {v[0], v[1], v[2]};
            }
            RunManifest m("composite", cfg, out_path(common, "manifest.json"));
            m.set_input("lightmaps", lightmaps_path);
            const auto maps = pipeline::run_stage("load", [&] { return io::read_lightmaps(lightmaps_path); });
            std::optional<Image> vis;
            if (!cfg.occluders.empty()) {
                if (guiding_path.empty()) throw StageError("shadow", "occluders need --guiding and --grid/--sequence");
                const DensityGrid grid = pipeline::run_stage("load", [&] { return load_input_grid(grid_path, sequence_path, frame_index, m); });
                const auto g = pipeline::run_stage("load", [&] { return io::read_guiding(guiding_path); });
                vis = pipeline::run_stage("shadow", [&] {
                    return pipeline::occluder_visibility(cfg, cfg.lights, grid.bounds(), g, cfg.camera.camera());
                });
            }
            const Image rgb = pipeline::run_stage("composite", [&] {
                return pipeline::composite_frame(maps, cfg.lights, cfg, vis ? &*vis : nullptr);
            });
            pipeline::run_stage("write", [&] {
                io::write_pfm(out_path(common, "composite.pfm"), rgb);
                io::write_png(out_path(common, "composite.png"), rgb, true);
            });
            m.add_files({out_path(common, "composite.pfm"), out_path(common, "composite.png")});
            m.write();
        };
    });

    // dataset
    auto* dataset = app.add_subcommand("dataset", "ground-truth tuples over frames and a camera ring");
    std::optional<int> ring_count;
    std::optional<double> ring_step;
    common.add(dataset);
    cam.add(dataset);
    guide_flags.add(dataset);
    bake_flags.add(dataset);
    medium_flags.add(dataset);
    dataset->add_option("--sequence", sequence_path, "sequence manifest (.json)")->required()->check(CLI::ExistingFile);
    dataset->add_option("--cameras", ring_count, "views on the ring")->check(CLI::PositiveNumber);
    dataset->add_option("--ring-step", ring_step, "degrees between views");
    dataset->callback([&] {
        action = [&] {
            PipelineConfig cfg = common.load();
            cam.apply(cfg);
            guide_flags.apply(cfg);
            bake_flags.apply(cfg);
            medium_flags.apply(cfg);
            if (ring_count) cfg.ring.count = *ring_count;
            if (ring_step) cfg.ring.step_deg = *ring_step;
            RunManifest m("dataset", cfg, out_path(common, "manifest.json"));
            m.set_input("sequence", sequence_path);
            const auto seq = pipeline::run_stage("load", [&] { return load_sequence(sequence_path); });
            const auto result = pipeline::run_stage("dataset", [&] {
                cfg.validate();
                return bake_tuple(seq, cfg.medium, cfg.phase, cfg.ring_cameras(), cfg.bake, cfg.guiding, common.out);
            });
            m.add_files(result.files);
            m.write();
            std::cout << result.records.size() << " records written to " << result.index_path.string() << "\n";
        };
    });

    // metrics
    auto* metrics = app.add_subcommand("metrics", "MSE / PSNR between two image sets (sRGB, [0,1])");
    std::vector<std::string> set_a, set_b;
    common.add(metrics);
    metrics->add_option("--a", set_a, "first image set (.pfm linear RGB or .png)")->required()->check(CLI::ExistingFile);
    metrics->add_option("--b", set_b, "second image set, same order")->required()->check(CLI::ExistingFile);
    metrics->callback([&] {
        action = [&] {
            if (set_a.size() != set_b.size()) throw CLI::ValidationError("--b", "needs as many images as --a");
            PipelineConfig cfg = common.load();
            RunManifest m("metrics", cfg, out_path(common, "manifest.json"));
            MetricReport report;
            pipeline::run_stage("metrics", [&] {
                for (std::size_t i = 0; i < set_a.size(); ++i)
                    report.add(fs::path(set_a[i]).filename().string(), load_display_image(set_a[i]), load_display_image(set_b[i]));
            });
            pipeline::run_stage("write", [&] {
                io::write_text(out_path(common, "metrics.json"), report.to_json().dump(2) + "\n");
                io::write_text(out_path(common, "metrics.csv"), report.to_csv());
            });
            for (const auto& f : report.frames) std::printf("%s  PSNR %.2f dB  MSE %.7f\n", f.label.c_str(), f.psnr, f.mse);
            m.add_files({out_path(common, "metrics.json"), out_path(common, "metrics.csv")});
            m.write();
        };
    });

    // bench
    auto* benchc = app.add_subcommand("bench", "per-stage timings (median and p95)");
    int warmup = 2, iterations = 5;
    common.add(benchc);
    cam.add(benchc);
    guide_flags.add(benchc);
    bake_flags.add(benchc);
    add_grid_input(benchc);
    benchc->add_option("--weights", weights_path, "network weights; inference is skipped without them");
    benchc->add_option("--warmup", warmup, "untimed runs per stage (>= 2)");
    benchc->add_option("--iterations", iterations, "timed runs per stage (>= 5)");
    benchc->callback([&] {
        action = [&] {
            PipelineConfig cfg = common.load();
            cam.apply(cfg);
            guide_flags.apply(cfg);
            bake_flags.apply(cfg);
            if (!weights_path.empty()) cfg.weights = weights_path;
            RunManifest m("bench", cfg, out_path(common, "manifest.json"));
            const DensityGrid grid = pipeline::run_stage("load", [&] { return load_input_grid(grid_path, sequence_path, frame_index, m); });
            const Camera camera = cfg.camera.camera();
            std::optional<nn::WeightStore> weights;
            if (!cfg.weights.empty()) weights = pipeline::run_stage("load", [&] { return nn::load_weights(cfg.weights); });
            GuidingMap g = generate_guiding(grid, cfg.medium, cfg.phase, camera, cfg.guiding);
            SixWayLightmaps maps = pipeline::bake_reference(grid, cfg, camera);
            std::vector<BenchStage> stages;
            stages.push_back({"guiding", [&] { g = generate_guiding(grid, cfg.medium, cfg.phase, camera, cfg.guiding); }});
            if (weights) stages.push_back({"inference", [&] { maps = nn::forward(*weights, g); }});
            stages.push_back({"composite", [&] { (void)pipeline::composite_frame(maps, cfg.lights, cfg, nullptr); }});
            stages.push_back({"bake", [&] { (void)pipeline::bake_reference(grid, cfg, camera); }});
            const BenchReport report = pipeline::run_stage("bench", [&] {
                return sixway::bench(stages, {warmup, iterations, camera.width, camera.height,
                                              std::to_string(default_thread_count()) + " threads"});
            });
            auto j = report.to_json();
            j["bake_to_guiding_ratio"] = report.stage("bake").median_ms / report.stage("guiding").median_ms;
            j["spp"] = cfg.bake.spp;
            pipeline::run_stage("write", [&] { io::write_text(out_path(common, "bench.json"), j.dump(2) + "\n"); });
            for (const auto& s : report.stages)
                std::printf("%-10s median %9.3f ms  p95 %9.3f ms\n", s.name.c_str(), s.median_ms, s.p95_ms);
            m.add_file(out_path(common, "bench.json"));
            m.write();
        };
    });

    // pack-atlas
    auto* pack = app.add_subcommand("pack-atlas", "two-texture packing and flipbook atlas");
    std::vector<std::string> atlas_inputs;
    common.add(pack);
    pack->add_option("--lightmaps", atlas_inputs, "lightmap frames in order")->required()->check(CLI::ExistingFile);
    pack->callback([&] {
        action = [&] {
            PipelineConfig cfg = common.load();
            RunManifest m("pack-atlas", cfg, out_path(common, "manifest.json"));
            std::vector<PackedTextures> frames_packed;
            bool encode = true;
            pipeline::run_stage("load", [&] {
                for (const auto& p : atlas_inputs) {
                    const auto maps = io::read_lightmaps(p);
                    encode = maps.space() == ColorSpace::linear;
                    frames_packed.push_back(pack_textures(maps));
                    m.set_input("lightmaps_" + std::to_string(frames_packed.size() - 1), p);
                }
            });
            const auto atlas = pipeline::run_stage("pack", [&] { return pack_flipbook(frames_packed); });
            std::vector<fs::path> files;
            pipeline::run_stage("write", [&] {
                write_packed(out_path(common, "atlas"), atlas.textures, encode, files);
                auto meta = atlas_metadata(atlas);
                meta["layout"] = {{"rgba1", {"Lx+", "Ly+", "Lz-", "T"}}, {"rgba2", {"Lx-", "Ly-", "Lz+", "E"}}};
                meta["pfm_layout"] = "stacked";
                io::write_text(out_path(common, "atlas.json"), meta.dump(2) + "\n");
                files.push_back(out_path(common, "atlas.json"));
            });
            m.add_files(files);
            m.write();
        };
    });

    // init-weights
    auto* initw = app.add_subcommand("init-weights", "write an untrained weight file");
    std::string init_kind = "random";
    std::uint64_t init_seed = 1;
    nn::NetArchitecture arch;
    double gain = 1.0;
    common.add(initw);
    initw->add_option("--init", init_kind, "zero | identity | random")->check(CLI::IsMember({"zero", "identity", "random"}));
    initw->add_option("--init-seed", init_seed, "random init seed");
    initw->add_option("--levels", arch.encoder_levels, "encoder levels");
    initw->add_option("--base-width", arch.base_width, "first level width");
    initw->add_option("--max-width", arch.max_width, "width cap");
    initw->add_option("--blocks", arch.blocks_per_level, "NAFBlocks per level");
    initw->add_option("--adapter-blocks", arch.adapter_blocks, "NAFBlocks per channel adapter");
    initw->add_option("--gain", gain, "random init scale");
    initw->callback([&] {
        action = [&] {
            PipelineConfig cfg = common.load();
            RunManifest m("init-weights", cfg, out_path(common, "manifest.json"));
            m.set_seed("weights_init", init_seed);
            const auto store = pipeline::run_stage("init", [&] {
                arch.validate();
                const auto kind_enum = init_kind == "zero" ? nn::WeightInit::zero
                                       : init_kind == "identity" ? nn::WeightInit::identity_norm
                                                                 : nn::WeightInit::random;
                return nn::make_weights(arch, kind_enum, init_seed, gain);
            });
            pipeline::run_stage("write", [&] { nn::save_weights(store, out_path(common, "weights.nsw")); });
            m.add_file(out_path(common, "weights.nsw"));
            m.write();
        };
    });

    // serve
    auto* serve = app.add_subcommand("serve", "interactive HTTP + websocket session server");
    std::string scene_path, address = "127.0.0.1", static_dir, mode = "neural";
    int port = 8080, resolution = 256;
    double fps = 10;
    common.add(serve, false);
    serve->add_option("--scene", scene_path, "sequence manifest (.json) or grid (.dgrid)")->required()->check(CLI::ExistingFile);
    serve->add_option("--weights", weights_path, "network weights (.nsw)");
    serve->add_option("--port", port, "TCP port (0 picks one)")->check(CLI::Range(0, 65535));
    serve->add_option("--address", address, "listen address");
    serve->add_option("--static", static_dir, "viewer bundle directory")->check(CLI::ExistingDirectory);
    serve->add_option("--resolution", resolution, "render resolution")->check(CLI::PositiveNumber);
    serve->add_option("--mode", mode, "neural | baked")->check(CLI::IsMember({"neural", "baked"}));
    serve->add_option("--fps", fps, "playback rate")->check(CLI::PositiveNumber);
    serve->callback([&] {
        action = [&] {
            PipelineConfig cfg = common.load();
            if (!weights_path.empty()) cfg.weights = weights_path;
            auto scene = std::make_shared<live::Scene>();
            scene->config = cfg;
            scene->source = mode == "baked" ? live::LightmapSource::baked : live::LightmapSource::neural;
            pipeline::run_stage("load", [&] {
                scene->frames = live::load_scene_frames(scene_path);
                if (scene->source == live::LightmapSource::neural) {
                    if (cfg.weights.empty() || !fs::exists(cfg.weights))
                        throw StageError("load", "missing weights" + (cfg.weights.empty() ? std::string(" (pass --weights)")
                                                                                          : ": " + cfg.weights + " not found"));
                    scene->weights = nn::load_weights(cfg.weights);
                }
                scene->validate();
            });
            if (!common.out.empty()) {
                RunManifest m("serve", cfg, out_path(common, "manifest.json"));
                m.set_input("scene", scene_path);
                m.write();
            }
            live::ServerOptions opts;
            opts.address = address;
            opts.port = static_cast<unsigned short>(port);
            opts.static_dir = static_dir;
            opts.session.width = opts.session.height = resolution;
            opts.session.play_fps = fps;
            live::Server server(scene, opts);
            pipeline::run_stage("serve", [&] { server.start(); });
            std::cout << "listening on http://" << address << ":" << server.port() << "/" << std::endl;
            std::signal(SIGINT, [](int) { g_interrupted = true; });
            std::signal(SIGTERM, [](int) { g_interrupted = true; });
            while (!g_interrupted) std::this_thread::sleep_for(std::chrono::milliseconds(100));
            server.stop();
        };
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n\n" << app.help();
        return 2;
    }
    if (threads) setenv("SIXWAY_THREADS", std::to_string(*threads).c_str(), 1);

    const std::string command = app.get_subcommands().front()->get_name();
    try {
        action();
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const StageError& e) {
        std::cerr << "sixway " << command << ": " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "sixway " << command << ": stage " << command << ": " << e.what() << "\n";
        return 1;
    }
    return 0;
}
