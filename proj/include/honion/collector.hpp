// Licensed under the Apache License 2.0 (see LICENSE file).

#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "honion/sim.hpp"

namespace honion {

struct ListenerSpec {
    std::uint16_t port = 0;
    std::string onion_address;
};

struct CollectorConfig {
    std::vector<ListenerSpec> listeners;
    std::string log_path;
    std::size_t max_request_bytes = 8192;

    void validate() const; // unique ports, nonempty log path
};

// The honeypot back end: one process multiplexing any number of loopback
// listeners over a single poll loop. Every request gets the same empty 200
// response; the log line is written before the response goes out.
class Collector {
public:
    explicit Collector(CollectorConfig cfg);
    ~Collector();

    Collector(const Collector&) = delete;
    Collector& operator=(const Collector&) = delete;

    /// Binds the listeners and spawns the service thread. Listeners that fail
    /// to bind are reported via bind_errors() and skipped; if none bind at
    /// all this throws ErrorCode::Bind.
    void start();

    /// Flushes the log, closes every socket, joins the thread.
    void stop();

    bool running() const;
    std::vector<std::uint16_t> bound_ports() const;
    std::vector<std::string> bind_errors() const;

    /// Nonempty after a fatal log-write failure stopped the loop.
    std::string fatal_error() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

struct LogParseStats {
    std::size_t total_lines = 0;
    std::vector<std::pair<std::size_t, std::string>> errors; // (1-based line, message)
};

/// Reads a collector (or simulator) visit log. In strict mode a bad line
/// throws ErrorCode::Parse with its line number; in skip mode bad lines are
/// reported through stats and the rest parse normally.
std::vector<VisitRecord> parse_collector_log(const std::string& path, bool skip_bad_lines = false,
                                             LogParseStats* stats = nullptr);

} // namespace honion
