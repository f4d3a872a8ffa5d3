#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "sixway/core/error.hpp"
#include "sixway/runtime/relight.hpp"

namespace sixway::live {

inline constexpr double kMaxPitch = 89.0;
inline constexpr double kMinDensityScale = 0.1;
inline constexpr double kMaxDensityScale = 4.0;
inline constexpr std::size_t kMaxLights = 8;

/// Everything one interactive view depends on.
struct SessionState {
    int frame = 0;
    double yaw = 0, pitch = 0, distance = 6;
    Vec3 target{};
    std::vector<DirectionalLight> lights{{Vec3(0, 0, -1), Rgb(1, 1, 1)}};
    double density_scale = 1.0;
    int width = 256, height = 256;
    bool playing = false;
    std::uint64_t frame_id = 0; // id of the last frame rendered for this state

    bool operator==(const SessionState& o) const {
        auto same_lights = [&] {
            if (lights.size() != o.lights.size()) return false;
            for (std::size_t i = 0; i < lights.size(); ++i)
                if (!(lights[i].direction == o.lights[i].direction) || !(lights[i].radiance == o.lights[i].radiance))
                    return false;
            return true;
        };
        return frame == o.frame && yaw == o.yaw && pitch == o.pitch && distance == o.distance &&
               target == o.target && same_lights() && density_scale == o.density_scale && width == o.width &&
               height == o.height && playing == o.playing;
    }
};

/// Open interval (-89, 89) degrees.
inline double clamp_pitch(double p) {
    const double lim = std::nextafter(kMaxPitch, 0.0);
    return std::clamp(p, -lim, lim);
}

inline double clamp_density_scale(double s) { return std::clamp(s, kMinDensityScale, kMaxDensityScale); }

// Control messages (client -> server), JSON objects tagged by "type".
struct SetCamera {
    double yaw = 0, pitch = 0, dist = 1;
};
struct SetLight {
    int index = 0;
    Vec3 dir;
    Rgb rgb;
};
struct AddLight {
    Vec3 dir{0, 0, -1};
    Rgb rgb{1, 1, 1};
};
struct RemoveLight {
    int index = 0;
};
struct SetFrame {
    int k = 0;
};
struct SetDensityScale {
    double s = 1;
};
struct SetPlay {
    bool playing = false;
};
using Control = std::variant<SetCamera, SetLight, AddLight, RemoveLight, SetFrame, SetDensityScale, SetPlay>;

namespace detail {

inline Vec3 vec3_field(const nlohmann::json& j, const char* key) {
    const auto& v = j.at(key);
    require(v.is_array() && v.size() == 3, ErrorCode::invalid_argument, std::string("'") + key + "' must be [x, y, z]");
    return {v[0].get<double>(), v[1].get<double>(), v[2].get<double>()};
}

inline double finite_field(const nlohmann::json& j, const char* key) {
    const double v = j.at(key).get<double>();
    require(std::isfinite(v), ErrorCode::invalid_argument, std::string("'") + key + "' must be finite");
    return v;
}

inline Vec3 unit_dir(const Vec3& d) {
    const double len = length(d);
    require(std::isfinite(len) && len > 1e-9, ErrorCode::invalid_argument, "light direction must be non-zero");
    return d / len;
}

inline Rgb colour(const Vec3& c) {
    require(c.x >= 0 && c.y >= 0 && c.z >= 0 && std::isfinite(c.x + c.y + c.z), ErrorCode::invalid_argument,
            "light colour must be finite and >= 0");
    return c;
}

} // namespace detail

/// Parses one control message; any malformed input throws invalid_argument.
inline Control parse_control(std::string_view text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::invalid_argument, std::string("malformed JSON: ") + e.what());
    }
    require(j.is_object() && j.contains("type") && j["type"].is_string(), ErrorCode::invalid_argument,
            "control message needs a string 'type'");
    const std::string type = j["type"];
    try {
        if (type == "set_camera")
            return SetCamera{detail::finite_field(j, "yaw"), detail::finite_field(j, "pitch"), detail::finite_field(j, "dist")};
        if (type == "set_light")
            return SetLight{j.at("index").get<int>(), detail::unit_dir(detail::vec3_field(j, "dir")),
                            detail::colour(detail::vec3_field(j, "rgb"))};
        if (type == "add_light") {
            AddLight a;
            if (j.contains("dir")) a.dir = detail::unit_dir(detail::vec3_field(j, "dir"));
            if (j.contains("rgb")) a.rgb = detail::colour(detail::vec3_field(j, "rgb"));
            return a;
        }
        if (type == "remove_light") return RemoveLight{j.at("index").get<int>()};
        if (type == "set_frame") return SetFrame{j.at("k").get<int>()};
        if (type == "set_density_scale") return SetDensityScale{detail::finite_field(j, "s")};
        if (type == "set_play") return SetPlay{j.at("playing").get<bool>()};
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::invalid_argument, type + ": " + e.what());
    }
    fail(ErrorCode::invalid_argument, "unknown control type '" + type + "'");
}

inline nlohmann::json to_json(const Control& c) {
    auto v3 = [](const Vec3& v) { return nlohmann::json::array({v.x, v.y, v.z}); };
    return std::visit(
        [&](const auto& m) -> nlohmann::json {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, SetCamera>)
                return {{"type", "set_camera"}, {"yaw", m.yaw}, {"pitch", m.pitch}, {"dist", m.dist}};
            else if constexpr (std::is_same_v<T, SetLight>)
                return {{"type", "set_light"}, {"index", m.index}, {"dir", v3(m.dir)}, {"rgb", v3(m.rgb)}};
            else if constexpr (std::is_same_v<T, AddLight>)
                return {{"type", "add_light"}, {"dir", v3(m.dir)}, {"rgb", v3(m.rgb)}};
            else if constexpr (std::is_same_v<T, RemoveLight>)
                return {{"type", "remove_light"}, {"index", m.index}};
            else if constexpr (std::is_same_v<T, SetFrame>)
                return {{"type", "set_frame"}, {"k", m.k}};
            else if constexpr (std::is_same_v<T, SetDensityScale>)
                return {{"type", "set_density_scale"}, {"s", m.s}};
            else
                return {{"type", "set_play"}, {"playing", m.playing}};
        },
        c);
}

/// Applies a control to the state. Out-of-range requests (light index, frame,
/// non-positive distance) throw and leave the state untouched; pitch and
/// density scale are clamped.
inline void apply_control(SessionState& s, const Control& c, int frame_count) {
    std::visit(
        [&](const auto& m) {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, SetCamera>) {
                require(m.dist > 0, ErrorCode::out_of_range, "camera distance must be > 0");
                s.yaw = m.yaw;
                s.pitch = clamp_pitch(m.pitch);
                s.distance = m.dist;
            } else if constexpr (std::is_same_v<T, SetLight>) {
                require(m.index >= 0 && m.index < static_cast<int>(s.lights.size()), ErrorCode::out_of_range,
                        "no light " + std::to_string(m.index));
                s.lights[static_cast<std::size_t>(m.index)] = {m.dir, m.rgb};
            } else if constexpr (std::is_same_v<T, AddLight>) {
                require(s.lights.size() < kMaxLights, ErrorCode::out_of_range, "light limit reached");
                s.lights.push_back({m.dir, m.rgb});
            } else if constexpr (std::is_same_v<T, RemoveLight>) {
                require(m.index >= 0 && m.index < static_cast<int>(s.lights.size()), ErrorCode::out_of_range,
                        "no light " + std::to_string(m.index));
                s.lights.erase(s.lights.begin() + m.index);
            } else if constexpr (std::is_same_v<T, SetFrame>) {
                require(m.k >= 0 && m.k < frame_count, ErrorCode::out_of_range,
                        "frame " + std::to_string(m.k) + " outside [0, " + std::to_string(frame_count) + ")");
                s.frame = m.k;
            } else if constexpr (std::is_same_v<T, SetDensityScale>) {
                s.density_scale = clamp_density_scale(m.s);
            } else {
                s.playing = m.playing;
            }
        },
        c);
}

/// Binary frame header, little-endian, 24 bytes, followed by the PNG payload.
struct FrameHeader {
    std::uint32_t width = 0;
    std::uint32_t height = 0;
    std::uint64_t frame_id = 0;
    float render_ms = 0;
    std::uint32_t payload_len = 0;

    bool operator==(const FrameHeader&) const = default;
};
inline constexpr std::size_t kFrameHeaderSize = 24;

namespace detail {
template <typename T>
void put_le(std::string& out, T v) {
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    out.append(reinterpret_cast<const char*>(b), sizeof(T)); // host is little-endian (checked in io/binary)
}
template <typename T>
T get_le(std::string_view in, std::size_t off) {
    T v;
    std::memcpy(&v, in.data() + off, sizeof(T));
    return v;
}
} // namespace detail

inline std::string encode_frame(const FrameHeader& h, const std::vector<std::uint8_t>& png) {
    require(h.payload_len == png.size(), ErrorCode::invalid_argument, "payload_len does not match the payload");
    std::string out;
    out.reserve(kFrameHeaderSize + png.size());
    detail::put_le(out, h.width);
    detail::put_le(out, h.height);
    detail::put_le(out, h.frame_id);
    detail::put_le(out, h.render_ms);
    detail::put_le(out, h.payload_len);
    out.append(reinterpret_cast<const char*>(png.data()), png.size());
    return out;
}

struct DecodedFrame {
    FrameHeader header;
    std::vector<std::uint8_t> payload;
};

inline DecodedFrame decode_frame(std::string_view bytes) {
    require(bytes.size() >= kFrameHeaderSize, ErrorCode::truncated, "frame shorter than its 24-byte header");
    DecodedFrame f;
    f.header.width = detail::get_le<std::uint32_t>(bytes, 0);
    f.header.height = detail::get_le<std::uint32_t>(bytes, 4);
    f.header.frame_id = detail::get_le<std::uint64_t>(bytes, 8);
    f.header.render_ms = detail::get_le<float>(bytes, 16);
    f.header.payload_len = detail::get_le<std::uint32_t>(bytes, 20);
    require(bytes.size() - kFrameHeaderSize == f.header.payload_len, ErrorCode::truncated,
            "frame payload_len " + std::to_string(f.header.payload_len) + " but " +
                std::to_string(bytes.size() - kFrameHeaderSize) + " bytes follow");
    f.payload.assign(bytes.begin() + kFrameHeaderSize, bytes.end());
    return f;
}

struct StageTime {
    std::string name;
    double ms = 0;
};

/// Stats message sent after every frame.
inline std::string stats_message(std::uint64_t frame_id, double render_ms, const std::vector<StageTime>& stages,
                                 std::size_t applied) {
    nlohmann::json st = nlohmann::json::object();
    for (const auto& s : stages) st[s.name] = s.ms;
    return nlohmann::json{{"type", "stats"}, {"frame_id", frame_id}, {"render_ms", render_ms}, {"stages", st}, {"applied", applied}}
        .dump();
}

inline std::string error_message(const std::string& message, std::uint64_t frame_id, const std::string& stage = {}) {
    nlohmann::json j{{"type", "error"}, {"message", message}, {"frame_id", frame_id}};
    if (!stage.empty()) j["stage"] = stage;
    return j.dump();
}

inline nlohmann::json state_json(const SessionState& s) {
    nlohmann::json lights = nlohmann::json::array();
    for (const auto& l : s.lights)
        lights.push_back({{"dir", {l.direction.x, l.direction.y, l.direction.z}}, {"rgb", {l.radiance.x, l.radiance.y, l.radiance.z}}});
    return {{"type", "state"},   {"frame", s.frame},   {"yaw", s.yaw},
            {"pitch", s.pitch},  {"dist", s.distance}, {"lights", lights},
            {"density_scale", s.density_scale},        {"width", s.width},
            {"height", s.height}, {"playing", s.playing}, {"frame_id", s.frame_id}};
}

} // namespace sixway::live
