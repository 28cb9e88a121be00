// Licensed under the Apache License 2.0 (see LICENSE file).

#include "honion/collector.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <chrono>
#include <cstring>
#include <fstream>
#include <mutex>
#include <set>
#include <thread>

#include "json.hpp"

#include "honion/error.hpp"

namespace honion {

using nlohmann::json;

namespace {

// Responses are fixed byte strings: every well-formed request gets exactly the
// same answer, so nothing about the backend can be inferred from it.
constexpr char kOkResponse[] =
    "HTTP/1.1 200 OK\r\nContent-Length: 0\r\nConnection: close\r\n\r\n";
constexpr char kBadResponse[] =
    "HTTP/1.1 400 Bad Request\r\nContent-Length: 0\r\nConnection: close\r\n\r\n";

constexpr auto kIdleTimeout = std::chrono::seconds(10);

double now_unix_ms() {
    const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                        std::chrono::system_clock::now().time_since_epoch())
                        .count();
    return static_cast<double>(ms) / 1000.0;
}

std::string json_line(const json& j) {
    // Raw request bytes may not be valid UTF-8; replace rather than throw.
    return j.dump(-1, ' ', false, json::error_handler_t::replace) + "\n";
}

} // namespace

void CollectorConfig::validate() const {
    if (log_path.empty()) {
        raise(ErrorCode::Config, "log_path must be set");
    }
    std::set<std::uint16_t> ports;
    for (const ListenerSpec& l : listeners) {
        if (l.port == 0) {
            raise(ErrorCode::Config, "listener port must be nonzero");
        }
        if (!ports.insert(l.port).second) {
            raise(ErrorCode::Config, "duplicate listener port " + std::to_string(l.port));
        }
    }
}

struct Collector::Impl {
    CollectorConfig cfg;

    struct Listener {
        int fd = -1;
        std::size_t spec = 0; // index into cfg.listeners
    };
    struct Conn {
        int fd = -1;
        std::size_t spec = 0;
        std::string buffer;
        bool truncated = false;
        std::string out;
        std::size_t out_sent = 0;
        bool responding = false;
        std::chrono::steady_clock::time_point last_activity;
    };

    std::vector<Listener> listeners;
    std::vector<std::uint16_t> bound;
    std::vector<std::string> bind_errors;
    std::ofstream log;
    std::thread worker;
    std::atomic<bool> stop_flag{false};
    std::atomic<bool> running{false};
    mutable std::mutex fatal_mutex;
    std::string fatal;

    explicit Impl(CollectorConfig c) : cfg(std::move(c)) {}

    void set_fatal(const std::string& msg) {
        std::lock_guard<std::mutex> lock(fatal_mutex);
        if (fatal.empty()) fatal = msg;
    }

    void open_listeners() {
        for (std::size_t i = 0; i < cfg.listeners.size(); ++i) {
            const auto port = cfg.listeners[i].port;
            const int fd = ::socket(AF_INET, SOCK_STREAM | SOCK_NONBLOCK | SOCK_CLOEXEC, 0);
            if (fd < 0) {
                bind_errors.push_back("port " + std::to_string(port) + ": socket: " +
                                      std::strerror(errno));
                continue;
            }
            const int one = 1;
            ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
            sockaddr_in addr{};
            addr.sin_family = AF_INET;
            addr.sin_port = htons(port);
            addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK); // loopback only, never a public IP
            if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) < 0 ||
                ::listen(fd, 128) < 0) {
                bind_errors.push_back("port " + std::to_string(port) + ": " + std::strerror(errno));
                ::close(fd);
                continue;
            }
            listeners.push_back({fd, i});
            bound.push_back(port);
        }
    }

    void log_and_respond(Conn& conn) {
        const std::string& onion = cfg.listeners[conn.spec].onion_address;
        const double ts = now_unix_ms();

        std::string_view data(conn.buffer);
        const auto line_end = data.find("\r\n");
        std::string_view request_line =
            line_end == std::string_view::npos ? data : data.substr(0, line_end);

        // METHOD SP TARGET SP HTTP/x.y
        std::string method, target, version;
        {
            const auto sp1 = request_line.find(' ');
            const auto sp2 = sp1 == std::string_view::npos ? std::string_view::npos
                                                           : request_line.find(' ', sp1 + 1);
            if (sp2 != std::string_view::npos) {
                method = std::string(request_line.substr(0, sp1));
                target = std::string(request_line.substr(sp1 + 1, sp2 - sp1 - 1));
                version = std::string(request_line.substr(sp2 + 1));
            }
        }
        const bool well_formed = !method.empty() && !target.empty() &&
                                 version.rfind("HTTP/", 0) == 0 &&
                                 line_end != std::string_view::npos;

        json entry;
        if (well_formed) {
            std::string headers(data.substr(line_end + 2));
            entry = {{"onion_address", onion},
                     {"timestamp", ts},
                     {"request_path", target},
                     {"requester_tag", ""},
                     {"is_favicon", target == "/favicon.ico"},
                     {"request_line", std::string(request_line)},
                     {"headers", std::move(headers)},
                     {"truncated", conn.truncated}};
        } else {
            entry = {{"onion_address", onion},
                     {"timestamp", ts},
                     {"malformed", true},
                     {"raw", conn.buffer},
                     {"truncated", conn.truncated}};
        }

        // The visit is on disk before the peer hears back.
        log << json_line(entry);
        log.flush();
        if (!log) {
            set_fatal("log write failed: " + cfg.log_path);
            stop_flag = true;
            return;
        }

        conn.out = well_formed ? kOkResponse : kBadResponse;
        conn.out_sent = 0;
        conn.responding = true;
    }

    void run() {
        std::vector<Conn> conns;
        while (!stop_flag) {
            std::vector<pollfd> fds;
            fds.reserve(listeners.size() + conns.size());
            for (const Listener& l : listeners) {
                fds.push_back({l.fd, POLLIN, 0});
            }
            for (const Conn& c : conns) {
                fds.push_back({c.fd, static_cast<short>(c.responding ? POLLOUT : POLLIN), 0});
            }
            const int rc = ::poll(fds.data(), fds.size(), 200);
            if (rc < 0 && errno != EINTR) {
                set_fatal(std::string("poll: ") + std::strerror(errno));
                break;
            }
            const auto now = std::chrono::steady_clock::now();

            for (std::size_t i = 0; i < listeners.size(); ++i) {
                if (!(fds[i].revents & POLLIN)) continue;
                while (true) {
                    const int cfd = ::accept4(listeners[i].fd, nullptr, nullptr,
                                              SOCK_NONBLOCK | SOCK_CLOEXEC);
                    if (cfd < 0) break;
                    Conn c;
                    c.fd = cfd;
                    c.spec = listeners[i].spec;
                    c.last_activity = now;
                    conns.push_back(std::move(c));
                }
            }

            for (std::size_t k = 0; k < conns.size(); ++k) {
                Conn& c = conns[k];
                const pollfd& p = fds[listeners.size() + k];
                bool done = false;

                if (!c.responding && (p.revents & (POLLIN | POLLHUP | POLLERR))) {
                    char chunk[4096];
                    bool request_complete = false;
                    while (true) {
                        const ssize_t n = ::recv(c.fd, chunk, sizeof(chunk), 0);
                        if (n > 0) {
                            c.last_activity = now;
                            const std::size_t room =
                                cfg.max_request_bytes > c.buffer.size()
                                    ? cfg.max_request_bytes - c.buffer.size()
                                    : 0;
                            if (static_cast<std::size_t>(n) > room) {
                                c.buffer.append(chunk, room);
                                c.truncated = true;
                                request_complete = true;
                                break;
                            }
                            c.buffer.append(chunk, static_cast<std::size_t>(n));
                            if (c.buffer.find("\r\n\r\n") != std::string::npos) {
                                request_complete = true;
                                break;
                            }
                        } else if (n == 0) {
                            // Peer closed; whatever arrived is the request.
                            request_complete = !c.buffer.empty();
                            done = c.buffer.empty();
                            break;
                        } else {
                            if (errno == EAGAIN || errno == EWOULDBLOCK) break;
                            done = true;
                            break;
                        }
                    }
                    if (request_complete && !done) {
                        log_and_respond(c);
                    }
                } else if (c.responding && (p.revents & (POLLOUT | POLLHUP | POLLERR))) {
                    const ssize_t n = ::send(c.fd, c.out.data() + c.out_sent,
                                             c.out.size() - c.out_sent, MSG_NOSIGNAL);
                    if (n > 0) {
                        c.out_sent += static_cast<std::size_t>(n);
                        if (c.out_sent == c.out.size()) done = true;
                    } else if (n < 0 && errno != EAGAIN && errno != EWOULDBLOCK) {
                        done = true;
                    }
                }

                if (!done && !c.responding && now - c.last_activity > kIdleTimeout) {
                    if (!c.buffer.empty()) {
                        log_and_respond(c); // stalled mid-request; log what we have
                    } else {
                        done = true;
                    }
                }
                if (done) {
                    ::close(c.fd);
                    conns.erase(conns.begin() + static_cast<std::ptrdiff_t>(k));
                    --k;
                }
            }
        }
        for (Conn& c : conns) {
            ::close(c.fd);
        }
        log.flush();
        running = false;
    }
};

Collector::Collector(CollectorConfig cfg) : impl_(std::make_unique<Impl>(std::move(cfg))) {
    impl_->cfg.validate();
}

Collector::~Collector() {
    try {
        stop();
    } catch (...) {
    }
}

void Collector::start() {
    if (impl_->running) {
        raise(ErrorCode::InvalidArgument, "collector already running");
    }
    impl_->open_listeners();
    if (impl_->listeners.empty()) {
        std::string detail;
        for (const auto& e : impl_->bind_errors) {
            detail += (detail.empty() ? "" : "; ") + e;
        }
        raise(ErrorCode::Bind, "no listener could bind: " + detail);
    }
    impl_->log.open(impl_->cfg.log_path, std::ios::binary | std::ios::app);
    if (!impl_->log) {
        for (const auto& l : impl_->listeners) ::close(l.fd);
        impl_->listeners.clear();
        raise(ErrorCode::LogWrite, "cannot open log for append: " + impl_->cfg.log_path);
    }
    impl_->stop_flag = false;
    impl_->running = true;
    impl_->worker = std::thread([this] { impl_->run(); });
}

void Collector::stop() {
    impl_->stop_flag = true;
    if (impl_->worker.joinable()) {
        impl_->worker.join();
    }
    for (const auto& l : impl_->listeners) {
        ::close(l.fd);
    }
    impl_->listeners.clear();
    if (impl_->log.is_open()) {
        impl_->log.flush();
        impl_->log.close();
    }
    impl_->running = false;
    const std::string err = fatal_error();
    if (!err.empty()) {
        raise(ErrorCode::LogWrite, err);
    }
}

bool Collector::running() const { return impl_->running; }

std::vector<std::uint16_t> Collector::bound_ports() const { return impl_->bound; }

std::vector<std::string> Collector::bind_errors() const { return impl_->bind_errors; }

std::string Collector::fatal_error() const {
    std::lock_guard<std::mutex> lock(impl_->fatal_mutex);
    return impl_->fatal;
}

std::vector<VisitRecord> parse_collector_log(const std::string& path, bool skip_bad_lines,
                                             LogParseStats* stats) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        raise(ErrorCode::Io, "cannot open: " + path);
    }
    std::vector<VisitRecord> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        if (stats) ++stats->total_lines;

        const auto fail = [&](const std::string& msg) {
            if (!skip_bad_lines) {
                raise(ErrorCode::Parse, path + ": line " + std::to_string(lineno) + ": " + msg);
            }
            if (stats) stats->errors.emplace_back(lineno, msg);
        };

        json j = json::parse(line, nullptr, false);
        if (j.is_discarded()) {
            fail("invalid JSON");
            continue;
        }
        try {
            VisitRecord v;
            v.onion_address = j.at("onion_address").get<std::string>();
            v.timestamp = j.at("timestamp").get<double>();
            if (j.value("malformed", false)) {
                // A garbage request is still a visit; there is just no path.
                v.request_path.clear();
                v.is_favicon = false;
            } else {
                v.request_path = j.at("request_path").get<std::string>();
                v.is_favicon = j.value("is_favicon", v.request_path == "/favicon.ico");
            }
            v.requester_tag = j.value("requester_tag", std::string{});
            out.push_back(std::move(v));
        } catch (const json::exception& e) {
            fail(e.what());
        }
    }
    return out;
}

} // namespace honion
