#pragma once

#include <deque>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/post.hpp>
#include <boost/asio/strand.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include "sixway/live/session.hpp"

namespace sixway::live {

namespace net = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = net::ip::tcp;

struct ServerOptions {
    std::string address = "127.0.0.1";
    unsigned short port = 8080; // 0 picks a free port
    std::filesystem::path static_dir; // viewer bundle; empty serves the built-in page
    int io_threads = 2;
    SessionOptions session;
};

/// Minimal page used when no viewer bundle is configured: connects to the
/// socket and paints incoming frames.
inline constexpr const char* kBuiltinIndex = R"(<!doctype html>
<html><head><meta charset="utf-8"><title>sixway live</title></head>
<body style="background:#222;color:#ddd;font-family:sans-serif">
<canvas id="view"></canvas><pre id="hud"></pre>
<script>
const ws = new WebSocket(`ws://${location.host}/ws`);
ws.binaryType = "arraybuffer";
const canvas = document.getElementById("view"), hud = document.getElementById("hud");
let newest = 0;
ws.onmessage = async (ev) => {
  if (typeof ev.data === "string") { hud.textContent = ev.data; return; }
  const v = new DataView(ev.data);
  const w = v.getUint32(0, true), h = v.getUint32(4, true), id = Number(v.getBigUint64(8, true));
  const len = v.getUint32(20, true);
  if (len !== ev.data.byteLength - 24 || id < newest) return;
  newest = id;
  const bmp = await createImageBitmap(new Blob([ev.data.slice(24)], {type: "image/png"}));
  canvas.width = w; canvas.height = h;
  canvas.getContext("2d").drawImage(bmp, 0, 0);
};
</script></body></html>
)";

inline std::string mime_type(const std::filesystem::path& p) {
    const std::string ext = p.extension().string();
    if (ext == ".html" || ext == ".htm") return "text/html";
    if (ext == ".js" || ext == ".mjs") return "text/javascript";
    if (ext == ".css") return "text/css";
    if (ext == ".json") return "application/json";
    if (ext == ".png") return "image/png";
    if (ext == ".svg") return "image/svg+xml";
    if (ext == ".wasm") return "application/wasm";
    return "application/octet-stream";
}

namespace detail {

class WsConnection;

/// Live websocket connections, so the server can stop their workers before
/// the I/O context goes away.
struct Registry {
    std::mutex mutex;
    std::vector<std::weak_ptr<WsConnection>> connections;
};

struct ServerContext {
    std::shared_ptr<const Scene> scene;
    ServerOptions options;
    std::shared_ptr<Registry> registry = std::make_shared<Registry>();
};

class WsConnection : public std::enable_shared_from_this<WsConnection> {
public:
    WsConnection(tcp::socket&& socket, std::shared_ptr<const ServerContext> ctx)
        : ws_(std::move(socket)), ctx_(std::move(ctx)) {}

    ~WsConnection() { stop_worker(); }

    void run(http::request<http::string_body> req) {
        ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
        ws_.async_accept(req, beast::bind_front_handler(&WsConnection::on_accept, shared_from_this()));
    }

    void stop_worker() {
        std::unique_ptr<Session> s;
        {
            std::lock_guard lock(session_mutex_);
            s = std::move(session_);
        }
        if (s) s->stop();
    }

private:
    void on_accept(beast::error_code ec) {
        if (ec) return;
        {
            std::lock_guard lock(ctx_->registry->mutex);
            auto& list = ctx_->registry->connections;
            std::erase_if(list, [](const auto& w) { return w.expired(); });
            list.push_back(weak_from_this());
        }
        std::weak_ptr<WsConnection> weak = weak_from_this();
        auto exec = ws_.get_executor();
        auto sink = [weak, exec](std::string payload, bool binary) {
            net::post(exec, [weak, payload = std::move(payload), binary]() mutable {
                if (auto self = weak.lock()) self->enqueue(std::move(payload), binary);
            });
        };
        try {
            auto session = std::make_unique<Session>(ctx_->scene, sink, ctx_->options.session);
            session->start();
            std::lock_guard lock(session_mutex_);
            session_ = std::move(session);
        } catch (const std::exception& e) {
            enqueue(error_message(e.what(), 0, "session"), false);
            return;
        }
        do_read();
    }

    void do_read() {
        ws_.async_read(buffer_, beast::bind_front_handler(&WsConnection::on_read, shared_from_this()));
    }

    void on_read(beast::error_code ec, std::size_t) {
        if (ec) {
            stop_worker();
            return;
        }
        const std::string text = beast::buffers_to_string(buffer_.data());
        buffer_.consume(buffer_.size());
        if (ws_.got_binary()) {
            enqueue(error_message("control messages must be text JSON", 0), false);
        } else {
            std::lock_guard lock(session_mutex_);
            if (session_) session_->submit_text(text);
        }
        do_read();
    }

    void enqueue(std::string payload, bool binary) {
        outbox_.emplace_back(std::move(payload), binary);
        if (outbox_.size() == 1) do_write();
    }

    void do_write() {
        ws_.binary(outbox_.front().second);
        ws_.async_write(net::buffer(outbox_.front().first),
                        beast::bind_front_handler(&WsConnection::on_write, shared_from_this()));
    }

    void on_write(beast::error_code ec, std::size_t) {
        if (ec) {
            stop_worker();
            return;
        }
        outbox_.pop_front();
        if (!outbox_.empty()) do_write();
    }

    websocket::stream<beast::tcp_stream> ws_;
    std::shared_ptr<const ServerContext> ctx_;
    beast::flat_buffer buffer_;
    std::deque<std::pair<std::string, bool>> outbox_;
    std::mutex session_mutex_;
    std::unique_ptr<Session> session_;
};

class HttpConnection : public std::enable_shared_from_this<HttpConnection> {
public:
    HttpConnection(tcp::socket&& socket, std::shared_ptr<const ServerContext> ctx)
        : stream_(std::move(socket)), ctx_(std::move(ctx)) {}

    void run() { do_read(); }

private:
    void do_read() {
        req_ = {};
        stream_.expires_after(std::chrono::seconds(30));
        http::async_read(stream_, buffer_, req_, beast::bind_front_handler(&HttpConnection::on_read, shared_from_this()));
    }

    void on_read(beast::error_code ec, std::size_t) {
        if (ec) return;
        if (websocket::is_upgrade(req_)) {
            stream_.expires_never();
            std::make_shared<WsConnection>(stream_.release_socket(), ctx_)->run(std::move(req_));
            return;
        }
        auto res = std::make_shared<http::response<http::string_body>>(respond());
        res->prepare_payload();
        http::async_write(stream_, *res, [self = shared_from_this(), res](beast::error_code wec, std::size_t) {
            if (!wec && res->keep_alive()) self->do_read();
        });
    }

    http::response<http::string_body> respond() const {
        auto make = [&](http::status status, std::string body, const std::string& type) {
            http::response<http::string_body> r{status, req_.version()};
            r.set(http::field::content_type, type);
            r.keep_alive(req_.keep_alive());
            r.body() = std::move(body);
            return r;
        };
        if (req_.method() != http::verb::get && req_.method() != http::verb::head)
            return make(http::status::method_not_allowed, "method not allowed\n", "text/plain");
        std::string target(req_.target());
        if (const auto q = target.find('?'); q != std::string::npos) target.resize(q);
        if (target.empty() || target[0] != '/' || target.find("..") != std::string::npos)
            return make(http::status::bad_request, "bad path\n", "text/plain");
        if (target.back() == '/') target += "index.html";
        const auto& dir = ctx_->options.static_dir;
        if (dir.empty()) {
            if (target == "/index.html") return make(http::status::ok, kBuiltinIndex, "text/html");
            return make(http::status::not_found, "not found\n", "text/plain");
        }
        const std::filesystem::path file = dir / target.substr(1);
        std::ifstream in(file, std::ios::binary);
        if (!in || std::filesystem::is_directory(file)) return make(http::status::not_found, "not found\n", "text/plain");
        std::string body((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        return make(http::status::ok, std::move(body), mime_type(file));
    }

    beast::tcp_stream stream_;
    std::shared_ptr<const ServerContext> ctx_;
    beast::flat_buffer buffer_;
    http::request<http::string_body> req_;
};

} // namespace detail

/// HTTP static files plus the frame-streaming websocket (any path upgrades).
class Server {
public:
    Server(std::shared_ptr<const Scene> scene, ServerOptions options)
        : ctx_(std::make_shared<detail::ServerContext>(detail::ServerContext{std::move(scene), std::move(options)})),
          acceptor_(net::make_strand(ioc_)) {
        ctx_->scene->validate();
        require(ctx_->options.io_threads >= 1, ErrorCode::invalid_argument, "server needs at least one I/O thread");
    }

    Server(const Server&) = delete;
    Server& operator=(const Server&) = delete;
    ~Server() { stop(); }

    /// Binds and starts serving. A busy port is an io_failure.
    void start() {
        beast::error_code ec;
        const auto addr = net::ip::make_address(ctx_->options.address, ec);
        require(!ec, ErrorCode::invalid_argument, "bad listen address '" + ctx_->options.address + "'");
        const tcp::endpoint ep{addr, ctx_->options.port};
        acceptor_.open(ep.protocol(), ec);
        if (!ec) acceptor_.bind(ep, ec);
        if (!ec) acceptor_.listen(net::socket_base::max_listen_connections, ec);
        if (ec) {
            acceptor_.close();
            fail(ErrorCode::io_failure, "cannot listen on " + ctx_->options.address + ":" +
                                            std::to_string(ctx_->options.port) + " (" + ec.message() + ")");
        }
        port_ = acceptor_.local_endpoint().port();
        do_accept();
        for (int i = 0; i < ctx_->options.io_threads; ++i) threads_.emplace_back([this] { ioc_.run(); });
    }

    unsigned short port() const { return port_; }

    void stop() {
        if (stopped_) return;
        stopped_ = true;
        net::post(acceptor_.get_executor(), [this] {
            beast::error_code ec;
            acceptor_.close(ec);
        });
        std::vector<std::shared_ptr<detail::WsConnection>> live;
        {
            std::lock_guard lock(ctx_->registry->mutex);
            for (auto& w : ctx_->registry->connections)
                if (auto c = w.lock()) live.push_back(std::move(c));
        }
        for (auto& c : live) c->stop_worker();
        live.clear();
        ioc_.stop();
        for (auto& t : threads_)
            if (t.joinable()) t.join();
    }

    /// Blocks until the I/O threads exit.
    void wait() {
        for (auto& t : threads_)
            if (t.joinable()) t.join();
    }

private:
    void do_accept() {
        acceptor_.async_accept(net::make_strand(ioc_), [this](beast::error_code ec, tcp::socket socket) {
            if (ec) return; // acceptor closed
            std::make_shared<detail::HttpConnection>(std::move(socket), ctx_)->run();
            do_accept();
        });
    }

    std::shared_ptr<detail::ServerContext> ctx_;
    net::io_context ioc_;
    tcp::acceptor acceptor_;
    std::vector<std::thread> threads_;
    unsigned short port_ = 0;
    bool stopped_ = false;
};

} // namespace sixway::live
