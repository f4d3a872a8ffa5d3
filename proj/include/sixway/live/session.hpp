#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "sixway/io/png.hpp"
#include "sixway/live/protocol.hpp"
#include "sixway/nn/network.hpp"
#include "sixway/pipeline/config.hpp"
#include "sixway/pipeline/stages.hpp"
#include "sixway/volume/procedural.hpp"

namespace sixway::live {

/// Where a session's lightmaps come from: the network, or a reference bake
/// per frame (slow, used as ground truth).
enum class LightmapSource { neural, baked };

/// Immutable scene shared by every session: the density sequence, the
/// pipeline parameters and the weights.
struct Scene {
    std::vector<DensityGrid> frames;
    pipeline::PipelineConfig config;
    LightmapSource source = LightmapSource::neural;
    std::optional<nn::WeightStore> weights;

    int frame_count() const { return static_cast<int>(frames.size()); }

    void validate() const {
        require(!frames.empty(), ErrorCode::invalid_argument, "scene has no frames");
        require(source == LightmapSource::baked || weights.has_value(), ErrorCode::invalid_argument,
                "missing weights: a neural scene needs a weights file");
        config.validate();
    }
};

/// Loads a sequence manifest (`.json`) or a single grid (`.dgrid`).
inline std::vector<DensityGrid> load_scene_frames(const std::filesystem::path& path) {
    if (path.extension() == ".dgrid") return {load_grid(path)};
    const SequenceManifest m = load_sequence(path);
    std::vector<DensityGrid> out;
    for (std::size_t i = 0; i < m.frames.size(); ++i) out.push_back(m.load_frame(i));
    return out;
}

inline SessionState initial_state(const Scene& scene, int width, int height) {
    SessionState s;
    const auto& cam = scene.config.camera;
    s.yaw = cam.yaw;
    s.pitch = clamp_pitch(cam.pitch);
    s.distance = cam.distance;
    s.target = cam.target;
    s.lights = scene.config.lights;
    s.width = width;
    s.height = height;
    return s;
}

inline Camera session_camera(const SessionState& s, const Scene& scene) {
    pipeline::OrbitSpec spec = scene.config.camera;
    spec.target = s.target;
    spec.width = s.width;
    spec.height = s.height;
    return spec.camera_at(s.yaw, s.pitch, s.distance);
}

struct RenderedFrame {
    Image rgb; // linear
    std::vector<std::uint8_t> png;
    std::vector<StageTime> stages;
    double render_ms = 0;
};

/// guiding -> lightmaps -> shadow visibility -> composite -> PNG for one state.
/// Deterministic for a fixed state; stage failures carry the stage name.
inline RenderedFrame render_once(const SessionState& state, const Scene& scene) {
    using clock = std::chrono::steady_clock;
    const auto start = clock::now();
    RenderedFrame out;
    const auto& cfg = scene.config;
    require(state.frame >= 0 && state.frame < scene.frame_count(), ErrorCode::out_of_range, "frame out of range");

    const DensityGrid grid = pipeline::timed(out.stages, "density", [&] {
        return pipeline::scaled_grid(scene.frames[static_cast<std::size_t>(state.frame)], clamp_density_scale(state.density_scale));
    });
    const Camera camera = session_camera(state, scene);
    const GuidingMap guiding = pipeline::timed(out.stages, "guiding", [&] {
        return generate_guiding(grid, cfg.medium, cfg.phase, camera, cfg.guiding);
    });
    SixWayLightmaps maps;
    if (scene.source == LightmapSource::neural) {
        maps = pipeline::timed(out.stages, "inference", [&] {
            require(scene.weights.has_value(), ErrorCode::invalid_argument, "missing weights");
            return nn::forward(*scene.weights, guiding);
        });
    } else {
        maps = pipeline::timed(out.stages, "bake", [&] { return pipeline::bake_reference(grid, cfg, camera); });
    }
    const std::optional<Image> vis = pipeline::timed(out.stages, "shadow", [&] {
        return pipeline::occluder_visibility(cfg, state.lights, grid.bounds(), guiding, camera);
    });
    out.rgb = pipeline::timed(out.stages, "composite", [&] {
        return pipeline::composite_frame(maps, state.lights, cfg, vis ? &*vis : nullptr);
    });
    out.png = pipeline::timed(out.stages, "encode", [&] { return io::encode_png(io::to_image8(out.rgb, true)); });
    out.render_ms = std::chrono::duration<double, std::milli>(clock::now() - start).count();
    return out;
}

/// Pending control messages for one session. Producers append; the render
/// worker takes everything queued at once, so a burst of messages collapses
/// into a single render of the newest resulting state.
class Mailbox {
public:
    void push(Control c) {
        {
            std::lock_guard lock(mutex_);
            pending_.push_back(std::move(c));
        }
        cv_.notify_one();
    }

    void close() {
        {
            std::lock_guard lock(mutex_);
            closed_ = true;
        }
        cv_.notify_all();
    }

    /// Waits until messages arrive, the mailbox closes, or `deadline` passes.
    /// Returns nullopt once closed.
    std::optional<std::vector<Control>> take(std::optional<std::chrono::steady_clock::time_point> deadline) {
        std::unique_lock lock(mutex_);
        auto ready = [&] { return closed_ || !pending_.empty(); };
        if (deadline)
            cv_.wait_until(lock, *deadline, ready);
        else
            cv_.wait(lock, ready);
        if (closed_) return std::nullopt;
        std::vector<Control> out;
        out.swap(pending_);
        return out;
    }

private:
    std::mutex mutex_;
    std::condition_variable cv_;
    std::vector<Control> pending_;
    bool closed_ = false;
};

struct SessionOptions {
    double play_fps = 10.0;
    int width = 256;
    int height = 256;
};

/// One viewer's state and its render worker. Outgoing messages go through
/// `sink(payload, binary)`, called from the worker thread (frames, stats and
/// apply errors) or from the submitting thread (parse errors).
class Session {
public:
    using Sink = std::function<void(std::string payload, bool binary)>;

    Session(std::shared_ptr<const Scene> scene, Sink sink, SessionOptions options = {})
        : scene_(std::move(scene)), sink_(std::move(sink)), options_(options) {
        scene_->validate();
        require(options_.play_fps > 0, ErrorCode::invalid_argument, "play rate must be positive");
        state_ = initial_state(*scene_, options_.width, options_.height);
    }

    Session(const Session&) = delete;
    Session& operator=(const Session&) = delete;
    ~Session() { stop(); }

    /// Starts the worker, which immediately renders frame id 1.
    void start() {
        require(!worker_.joinable(), ErrorCode::invalid_argument, "session already started");
        worker_ = std::thread([this] { run(); });
    }

    void stop() {
        mailbox_.close();
        if (worker_.joinable() && worker_.get_id() != std::this_thread::get_id()) worker_.join();
    }

    /// Parses and queues a text message; malformed input is answered with an
    /// error message and the session state is untouched.
    void submit_text(std::string_view text) {
        try {
            mailbox_.push(parse_control(text));
        } catch (const std::exception& e) {
            sink_(error_message(e.what(), last_frame_id()), false);
        }
    }

    void submit(Control c) { mailbox_.push(std::move(c)); }

    std::uint64_t frames_rendered() const { return frames_rendered_.load(); }
    std::uint64_t last_frame_id() const { return last_frame_id_.load(); }

    SessionState state() const {
        std::lock_guard lock(state_mutex_);
        return state_;
    }

private:
    void run() {
        using clock = std::chrono::steady_clock;
        SessionState state = state_;
        std::uint64_t next_id = 0;
        auto render = [&](std::size_t applied) {
            state.frame_id = ++next_id;
            std::vector<std::pair<std::string, bool>> outgoing;
            try {
                RenderedFrame f = render_once(state, *scene_);
                const FrameHeader h{static_cast<std::uint32_t>(state.width), static_cast<std::uint32_t>(state.height),
                                    state.frame_id, static_cast<float>(f.render_ms),
                                    static_cast<std::uint32_t>(f.png.size())};
                outgoing.emplace_back(encode_frame(h, f.png), true);
                outgoing.emplace_back(stats_message(state.frame_id, f.render_ms, f.stages, applied), false);
            } catch (const pipeline::StageError& e) {
                outgoing.emplace_back(error_message(e.what(), state.frame_id, e.stage()), false);
            } catch (const std::exception& e) {
                outgoing.emplace_back(error_message(e.what(), state.frame_id, "render"), false);
            }
            // publish before sending so replies to these messages see the new frame id
            {
                std::lock_guard lock(state_mutex_);
                state_ = state;
            }
            last_frame_id_.store(state.frame_id);
            frames_rendered_.fetch_add(1);
            for (auto& [payload, binary] : outgoing) sink_(std::move(payload), binary);
        };

        render(0);
        const auto period = std::chrono::duration_cast<clock::duration>(std::chrono::duration<double>(1.0 / options_.play_fps));
        auto next_tick = clock::now() + period;
        for (;;) {
            auto batch = mailbox_.take(state.playing ? std::optional(next_tick) : std::nullopt);
            if (!batch) return;
            std::size_t applied = 0;
            for (const Control& c : *batch) {
                try {
                    apply_control(state, c, scene_->frame_count());
                    ++applied;
                } catch (const std::exception& e) {
                    sink_(error_message(e.what(), state.frame_id), false);
                }
            }
            if (applied > 0) {
                render(applied);
                next_tick = clock::now() + period;
            } else if (batch->empty() && state.playing && clock::now() >= next_tick) {
                state.frame = (state.frame + 1) % scene_->frame_count();
                render(0);
                next_tick = clock::now() + period;
            }
        }
    }

    std::shared_ptr<const Scene> scene_;
    Sink sink_;
    SessionOptions options_;
    Mailbox mailbox_;
    std::thread worker_;
    mutable std::mutex state_mutex_;
    SessionState state_;
    std::atomic<std::uint64_t> frames_rendered_{0};
    std::atomic<std::uint64_t> last_frame_id_{0};
};

} // namespace sixway::live
