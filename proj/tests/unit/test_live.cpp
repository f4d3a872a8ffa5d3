#include <chrono>
#include <condition_variable>
#include <filesystem>
#include <mutex>
#include <thread>

#include <boost/asio/connect.hpp>
#include <gtest/gtest.h>

#include "cli_runner.hpp"
#include "sixway/io/png.hpp"
#include "sixway/live/server.hpp"
#include "test_support.hpp"

using namespace sixway;
using namespace sixway::live;
namespace fs = std::filesystem;
using namespace std::chrono_literals;

namespace {

/// Thread-safe collector standing in for a websocket.
struct Capture {
    std::mutex mutex;
    std::condition_variable cv;
    std::vector<std::pair<std::string, bool>> messages;

    Session::Sink sink() {
        return [this](std::string payload, bool binary) {
            {
                std::lock_guard lock(mutex);
                messages.emplace_back(std::move(payload), binary);
            }
            cv.notify_all();
        };
    }

    template <typename Pred>
    bool wait_for(Pred pred, std::chrono::milliseconds timeout = 20s) {
        std::unique_lock lock(mutex);
        return cv.wait_for(lock, timeout, [&] { return pred(messages); });
    }

    std::vector<nlohmann::json> texts() {
        std::lock_guard lock(mutex);
        std::vector<nlohmann::json> out;
        for (const auto& [p, bin] : messages)
            if (!bin) out.push_back(nlohmann::json::parse(p));
        return out;
    }

    std::vector<DecodedFrame> frames() {
        std::lock_guard lock(mutex);
        std::vector<DecodedFrame> out;
        for (const auto& [p, bin] : messages)
            if (bin) out.push_back(decode_frame(p));
        return out;
    }
};

std::size_t count_of(const std::vector<std::pair<std::string, bool>>& m, const std::string& type) {
    std::size_t n = 0;
    for (const auto& [p, bin] : m)
        if (!bin && nlohmann::json::parse(p)["type"] == type) ++n;
    return n;
}

std::shared_ptr<Scene> baked_scene(int frames = 2, int res = 32) {
    auto scene = std::make_shared<Scene>();
    for (int f = 0; f < frames; ++f) scene->frames.push_back(procedural_frame(ProceduralKind::sphere_puff, 5, {16, 16, 16}, f, frames));
    scene->source = LightmapSource::baked;
    scene->config.camera.width = scene->config.camera.height = res;
    scene->config.bake.spp = 2;
    return scene;
}

SessionOptions small(int res = 32) {
    SessionOptions o;
    o.width = o.height = res;
    return o;
}

} // namespace

TEST(Protocol, FrameHeaderGoldenBytes) {
    const FrameHeader h{640, 480, 0x0102030405060708ull, 1.5f, 3};
    const std::string bytes = encode_frame(h, {0xAA, 0xBB, 0xCC});
    const std::vector<unsigned char> golden = {0x80, 0x02, 0x00, 0x00, 0xE0, 0x01, 0x00, 0x00, 0x08, 0x07, 0x06,
                                               0x05, 0x04, 0x03, 0x02, 0x01, 0x00, 0x00, 0xC0, 0x3F, 0x03, 0x00,
                                               0x00, 0x00, 0xAA, 0xBB, 0xCC};
    ASSERT_EQ(bytes.size(), golden.size());
    for (std::size_t i = 0; i < golden.size(); ++i) EXPECT_EQ(static_cast<unsigned char>(bytes[i]), golden[i]) << i;
    const DecodedFrame d = decode_frame(bytes);
    EXPECT_EQ(d.header, h);
    EXPECT_EQ(d.payload, (std::vector<std::uint8_t>{0xAA, 0xBB, 0xCC}));
}

TEST(Protocol, TruncatedFramesAreRejected) {
    const std::string bytes = encode_frame({1, 1, 1, 0, 4}, {1, 2, 3, 4});
    EXPECT_THROW(decode_frame(std::string_view(bytes).substr(0, 10)), Error);
    EXPECT_THROW(decode_frame(std::string_view(bytes).substr(0, bytes.size() - 1)), Error);
    EXPECT_THROW(encode_frame({1, 1, 1, 0, 5}, {1, 2, 3, 4}), Error);
}

TEST(Protocol, FixturesRoundTrip) {
    int n = 0;
    for (const auto& e : fs::directory_iterator(SIXWAY_FIXTURE_DIR "/protocol")) {
        const auto original = nlohmann::json::parse(test::slurp(e.path()));
        const Control c = parse_control(original.dump());
        EXPECT_EQ(to_json(c), original) << e.path();
        EXPECT_EQ(to_json(parse_control(to_json(c).dump())), original) << e.path();
        ++n;
    }
    EXPECT_EQ(n, 7);
}

TEST(Protocol, MalformedMessagesAreRejected) {
    for (const char* bad : {"", "{", "[]", R"({"yaw": 1})", R"({"type": 3})", R"({"type": "fly"})",
                            R"({"type": "set_camera", "yaw": 1, "pitch": 0})", R"({"type": "set_camera", "yaw": "a", "pitch": 0, "dist": 1})",
                            R"({"type": "set_light", "index": 0, "dir": [0, 0, 0], "rgb": [1, 1, 1]})",
                            R"({"type": "set_light", "index": 0, "dir": [1, 0], "rgb": [1, 1, 1]})",
                            R"({"type": "set_light", "index": 0, "dir": [1, 0, 0], "rgb": [-1, 1, 1]})",
                            R"({"type": "set_frame"})", R"({"type": "set_play", "playing": "yes"})"}) {
        try {
            parse_control(bad);
            ADD_FAILURE() << "accepted: " << bad;
        } catch (const Error& e) {
            EXPECT_EQ(e.code(), ErrorCode::invalid_argument) << bad;
        }
    }
}

TEST(Protocol, LightDirectionsAreNormalised) {
    const auto c = std::get<SetLight>(parse_control(R"({"type":"set_light","index":0,"dir":[0,3,4],"rgb":[1,1,1]})"));
    EXPECT_NEAR(length(c.dir), 1.0, 1e-15);
    EXPECT_DOUBLE_EQ(c.dir.z, 0.8);
}

TEST(Protocol, ClampsAndRangeChecks) {
    SessionState s;
    apply_control(s, SetCamera{10, 90, 3}, 2);
    EXPECT_LT(s.pitch, 89.0);
    EXPECT_GT(s.pitch, 88.999);
    apply_control(s, SetCamera{10, -1000, 3}, 2);
    EXPECT_GT(s.pitch, -89.0);
    apply_control(s, SetDensityScale{0}, 2);
    EXPECT_DOUBLE_EQ(s.density_scale, 0.1);
    apply_control(s, SetDensityScale{100}, 2);
    EXPECT_DOUBLE_EQ(s.density_scale, 4.0);

    const SessionState before = s;
    EXPECT_THROW(apply_control(s, SetCamera{0, 0, 0}, 2), Error);
    EXPECT_THROW(apply_control(s, SetFrame{2}, 2), Error);
    EXPECT_THROW(apply_control(s, SetFrame{-1}, 2), Error);
    EXPECT_THROW(apply_control(s, SetLight{1, {1, 0, 0}, {1, 1, 1}}, 2), Error);
    EXPECT_THROW(apply_control(s, RemoveLight{3}, 2), Error);
    EXPECT_EQ(s, before);

    for (int i = 1; i < 8; ++i) apply_control(s, AddLight{}, 2);
    EXPECT_EQ(s.lights.size(), 8u);
    EXPECT_THROW(apply_control(s, AddLight{}, 2), Error);
    apply_control(s, RemoveLight{0}, 2);
    EXPECT_EQ(s.lights.size(), 7u);
}

TEST(Render, DeterministicWithStageTimings) {
    const auto scene = baked_scene();
    const SessionState s = initial_state(*scene, 32, 32);
    const RenderedFrame a = render_once(s, *scene);
    const RenderedFrame b = render_once(s, *scene);
    EXPECT_EQ(a.png, b.png);
    EXPECT_EQ(a.rgb.data(), b.rgb.data());
    double sum = 0;
    std::vector<std::string> names;
    for (const auto& st : a.stages) {
        names.push_back(st.name);
        sum += st.ms;
    }
    EXPECT_EQ(names, (std::vector<std::string>{"density", "guiding", "bake", "shadow", "composite", "encode"}));
    EXPECT_LE(sum, a.render_ms);
    EXPECT_EQ(io::decode_png(a.png).width, 32);
}

TEST(Render, NeuralSceneWithoutWeightsIsRejected) {
    auto scene = baked_scene();
    scene->source = LightmapSource::neural;
    Capture cap;
    EXPECT_THROW(Session(scene, cap.sink(), small()), Error);
}

TEST(Session, FirstFrameHasIdOneWithStats) {
    Capture cap;
    Session s(baked_scene(), cap.sink(), small());
    s.start();
    ASSERT_TRUE(cap.wait_for([](const auto& m) { return count_of(m, "stats") >= 1; }));
    const auto frames = cap.frames();
    ASSERT_EQ(frames.size(), 1u);
    EXPECT_EQ(frames[0].header.frame_id, 1u);
    EXPECT_EQ(frames[0].header.width, 32u);
    const auto stats = cap.texts().at(0);
    EXPECT_EQ(stats["frame_id"], 1);
    EXPECT_EQ(stats["applied"], 0);
    EXPECT_TRUE(stats["stages"].contains("bake"));
}

TEST(Session, BurstOfControlsIsCoalesced) {
    Capture cap;
    Session s(baked_scene(2, 48), cap.sink(), small(48));
    s.start();
    for (int i = 0; i < 100; ++i) s.submit_text(R"({"type":"set_camera","yaw":)" + std::to_string(i) + R"(,"pitch":10,"dist":5})");
    ASSERT_TRUE(cap.wait_for([](const auto& m) {
        std::size_t applied = 0;
        for (const auto& [p, bin] : m)
            if (!bin) applied += nlohmann::json::parse(p).value("applied", std::size_t{0});
        return applied == 100;
    }));
    std::this_thread::sleep_for(50ms);
    s.stop();
    const auto frames = cap.frames();
    EXPECT_LT(frames.size(), 100u);
    for (std::size_t i = 1; i < frames.size(); ++i) EXPECT_GT(frames[i].header.frame_id, frames[i - 1].header.frame_id);
    const SessionState st = s.state();
    EXPECT_EQ(st.yaw, 99.0);
    EXPECT_EQ(st.pitch, 10.0);
    EXPECT_EQ(st.distance, 5.0);
    EXPECT_EQ(st.frame_id, frames.back().header.frame_id);

    // the last frame shows exactly the last requested state
    const auto scene = baked_scene(2, 48);
    SessionState expect = initial_state(*scene, 48, 48);
    expect.yaw = 99;
    expect.pitch = 10;
    expect.distance = 5;
    EXPECT_EQ(frames.back().payload, render_once(expect, *scene).png);
}

TEST(Session, BadInputReportsErrorAndKeepsState) {
    Capture cap;
    Session s(baked_scene(), cap.sink(), small());
    s.start();
    ASSERT_TRUE(cap.wait_for([](const auto& m) { return count_of(m, "stats") >= 1; }));
    const SessionState before = s.state();
    s.submit_text("{not json");
    s.submit_text(R"({"type":"set_frame","k":7})");
    ASSERT_TRUE(cap.wait_for([](const auto& m) { return count_of(m, "error") >= 2; }));
    std::this_thread::sleep_for(50ms);
    EXPECT_EQ(s.state(), before);
    EXPECT_EQ(s.frames_rendered(), 1u);
    for (const auto& j : cap.texts())
        if (j["type"] == "error") EXPECT_EQ(j["frame_id"], 1);

    // the session keeps serving afterwards
    s.submit_text(R"({"type":"set_frame","k":1})");
    ASSERT_TRUE(cap.wait_for([](const auto& m) { return count_of(m, "stats") >= 2; }));
    EXPECT_EQ(s.state().frame, 1);
}

TEST(Session, PlaybackAdvancesFrames) {
    Capture cap;
    SessionOptions o = small(16);
    o.play_fps = 50;
    Session s(baked_scene(3, 16), cap.sink(), o);
    s.start();
    s.submit_text(R"({"type":"set_play","playing":true})");
    ASSERT_TRUE(cap.wait_for([](const auto& m) { return count_of(m, "stats") >= 5; }));
    s.submit_text(R"({"type":"set_play","playing":false})");
    std::this_thread::sleep_for(100ms);
    const auto n = s.frames_rendered();
    std::this_thread::sleep_for(200ms);
    EXPECT_EQ(s.frames_rendered(), n);
    EXPECT_FALSE(s.state().playing);
}

namespace {

struct HttpReply {
    unsigned status = 0;
    std::string content_type, body;
};

HttpReply http_get(unsigned short port, const std::string& target) {
    net::io_context ioc;
    beast::tcp_stream stream(ioc);
    stream.connect(tcp::endpoint(net::ip::make_address("127.0.0.1"), port));
    http::request<http::empty_body> req{http::verb::get, target, 11};
    req.set(http::field::host, "127.0.0.1");
    http::write(stream, req);
    beast::flat_buffer buf;
    http::response<http::string_body> res;
    http::read(stream, buf, res);
    beast::error_code ec;
    stream.socket().shutdown(tcp::socket::shutdown_both, ec);
    return {res.result_int(), std::string(res[http::field::content_type]), res.body()};
}

ServerOptions local_options(int res) {
    ServerOptions o;
    o.port = 0;
    o.session = small(res);
    return o;
}

} // namespace

TEST(Server, BuiltInIndexAndNotFound) {
    Server server(baked_scene(), local_options(16));
    server.start();
    ASSERT_NE(server.port(), 0);
    const auto index = http_get(server.port(), "/");
    EXPECT_EQ(index.status, 200u);
    EXPECT_EQ(index.content_type, "text/html");
    EXPECT_NE(index.body.find("WebSocket"), std::string::npos);
    EXPECT_EQ(http_get(server.port(), "/nope.js").status, 404u);
    server.stop();
}

TEST(Server, ServesStaticBundle) {
    test::TempDir dir;
    io::write_text(dir.path() / "index.html", "<p>viewer</p>");
    io::write_text(dir.path() / "app.js", "console.log(1)");
    auto opts = local_options(16);
    opts.static_dir = dir.path();
    Server server(baked_scene(), opts);
    server.start();
    EXPECT_EQ(http_get(server.port(), "/").body, "<p>viewer</p>");
    const auto js = http_get(server.port(), "/app.js?v=2");
    EXPECT_EQ(js.status, 200u);
    EXPECT_EQ(js.content_type, "text/javascript");
    EXPECT_EQ(js.body, "console.log(1)");
    EXPECT_EQ(http_get(server.port(), "/missing.css").status, 404u);
    EXPECT_EQ(http_get(server.port(), "/../secret").status, 400u);
}

TEST(Server, BusyPortIsAnError) {
    Server a(baked_scene(), local_options(16));
    a.start();
    auto opts = local_options(16);
    opts.port = a.port();
    Server b(baked_scene(), opts);
    try {
        b.start();
        FAIL() << "second bind succeeded";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::io_failure);
        EXPECT_NE(std::string(e.what()).find(std::to_string(a.port())), std::string::npos);
    }
}

// Scripted websocket session in baked mode; the last frame must equal the
// command-line bake + composite of the same state pixel for pixel.
TEST(Server, ScriptedSessionMatchesCommandLine) {
    test::TempDir dir;
    const auto gen = dir.path() / "gen";
    const auto r = test::run_cli({"gen", "--kind", "sphere_puff", "--dims", "16", "16", "16", "--frames", "2", "--out", gen.string()}, dir.path());
    ASSERT_EQ(r.exit_code, 0) << r.err;

    pipeline::PipelineConfig cfg;
    cfg.camera.width = cfg.camera.height = 32;
    cfg.bake.spp = 2;
    auto scene = std::make_shared<Scene>();
    scene->frames = load_scene_frames(gen / "sequence.json");
    scene->config = cfg;
    scene->source = LightmapSource::baked;
    Server server(scene, local_options(32));
    server.start();

    net::io_context ioc;
    websocket::stream<beast::tcp_stream> ws(ioc);
    beast::get_lowest_layer(ws).connect(tcp::endpoint(net::ip::make_address("127.0.0.1"), server.port()));
    ws.handshake("127.0.0.1", "/ws");

    // reads until one rendered frame and its stats have arrived
    auto next_frame = [&] {
        std::string frame;
        for (;;) {
            beast::flat_buffer buf;
            ws.read(buf);
            const std::string msg = beast::buffers_to_string(buf.data());
            if (ws.got_binary()) {
                frame = msg;
                continue;
            }
            const auto j = nlohmann::json::parse(msg);
            EXPECT_NE(j["type"], "error") << msg;
            if (j["type"] == "stats") {
                EXPECT_FALSE(frame.empty());
                return decode_frame(frame);
            }
        }
    };
    EXPECT_EQ(next_frame().header.frame_id, 1u);
    ws.text(true);
    ws.write(net::buffer(std::string(R"({"type":"set_light","index":0,"dir":[1,0,0],"rgb":[1,1,1]})")));
    EXPECT_EQ(next_frame().header.frame_id, 2u);
    ws.write(net::buffer(std::string(R"({"type":"set_camera","yaw":30,"pitch":15,"dist":5})")));
    next_frame();
    ws.write(net::buffer(std::string(R"({"type":"set_frame","k":1})")));
    const DecodedFrame last = next_frame();
    EXPECT_EQ(last.header.frame_id, 4u);
    ws.close(websocket::close_code::normal);
    server.stop();

    const auto bake = dir.path() / "bake", comp = dir.path() / "comp";
    auto b = test::run_cli({"bake", "--sequence", (gen / "sequence.json").string(), "--frame", "1", "--res", "32", "--spp", "2",
                            "--yaw", "30", "--pitch", "15", "--distance", "5", "--out", bake.string()},
                           dir.path());
    ASSERT_EQ(b.exit_code, 0) << b.err;
    b = test::run_cli({"composite", "--lightmaps", (bake / "lightmaps.pfm").string(), "--light", "1,0,0,1,1,1", "--out", comp.string()},
                      dir.path());
    ASSERT_EQ(b.exit_code, 0) << b.err;

    const io::Image8 served = io::decode_png(last.payload);
    const io::Image8 offline = io::decode_png(io::read_file(comp / "composite.png"));
    EXPECT_EQ(served.width, offline.width);
    EXPECT_EQ(served.height, offline.height);
    EXPECT_EQ(served.channels, offline.channels);
    EXPECT_EQ(served.pixels, offline.pixels);
}
