// Licensed under the Apache License 2.0 (see LICENSE file).

#include "honion.h"

#include <cstring>
#include <filesystem>
#include <memory>
#include <string>

#include "honion/collector.hpp"
#include "honion/detect.hpp"
#include "honion/error.hpp"
#include "honion/graph.hpp"
#include "honion/json_io.hpp"
#include "honion/planner.hpp"
#include "honion/report.hpp"
#include "honion/ring.hpp"
#include "honion/sim.hpp"

namespace {

thread_local std::string g_last_error;

honion_status map_code(honion::ErrorCode code) {
    using honion::ErrorCode;
    switch (code) {
    case ErrorCode::InvalidArgument: return HONION_ERR_INVALID_ARG;
    case ErrorCode::Domain: return HONION_ERR_DOMAIN;
    case ErrorCode::ConsensusTooSmall: return HONION_ERR_CONSENSUS_TOO_SMALL;
    case ErrorCode::Config: return HONION_ERR_CONFIG;
    case ErrorCode::OrphanVisit: return HONION_ERR_ORPHAN_VISIT;
    case ErrorCode::UncoverableVertex: return HONION_ERR_UNCOVERABLE;
    case ErrorCode::ComponentTooLarge: return HONION_ERR_COMPONENT_TOO_LARGE;
    case ErrorCode::Parse: return HONION_ERR_PARSE;
    case ErrorCode::Io: return HONION_ERR_IO;
    case ErrorCode::Bind: return HONION_ERR_BIND;
    case ErrorCode::LogWrite: return HONION_ERR_LOG_WRITE;
    }
    return HONION_ERR_INTERNAL;
}

template <typename Fn>
honion_status guarded(Fn&& fn) {
    try {
        fn();
        g_last_error.clear();
        return HONION_OK;
    } catch (const honion::Error& e) {
        g_last_error = e.what();
        return map_code(e.code());
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return HONION_ERR_INTERNAL;
    } catch (...) {
        g_last_error = "unknown error";
        return HONION_ERR_INTERNAL;
    }
}

honion_status fail_invalid(const char* msg) {
    g_last_error = msg;
    return HONION_ERR_INVALID_ARG;
}

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(::malloc(s.size() + 1));
    if (out) {
        std::memcpy(out, s.c_str(), s.size() + 1);
    }
    return out;
}

honion::SolverOptions solver_options(size_t component_cap, int fallback_to_greedy) {
    honion::SolverOptions opts;
    opts.max_component_hsdirs = component_cap;
    opts.fallback_to_greedy = fallback_to_greedy != 0;
    return opts;
}

} // namespace

struct honion_graph {
    honion::AttributionGraph g;
};

struct honion_detection {
    honion::AttributionGraph graph; // labels for the accessors
    honion::DetectionResult result;
};

struct honion_collector {
    std::unique_ptr<honion::Collector> collector;
};

extern "C" {

const char* honion_status_name(honion_status status) {
    switch (status) {
    case HONION_OK: return "ok";
    case HONION_ERR_INVALID_ARG: return "invalid_argument";
    case HONION_ERR_DOMAIN: return "domain_error";
    case HONION_ERR_CONSENSUS_TOO_SMALL: return "consensus_too_small";
    case HONION_ERR_CONFIG: return "config_error";
    case HONION_ERR_ORPHAN_VISIT: return "orphan_visit";
    case HONION_ERR_UNCOVERABLE: return "uncoverable_vertex";
    case HONION_ERR_COMPONENT_TOO_LARGE: return "component_too_large";
    case HONION_ERR_PARSE: return "parse_error";
    case HONION_ERR_IO: return "io_error";
    case HONION_ERR_BIND: return "bind_error";
    case HONION_ERR_LOG_WRITE: return "log_write_error";
    case HONION_ERR_INTERNAL: return "internal_error";
    }
    return "unknown";
}

const char* honion_last_error(void) { return g_last_error.c_str(); }

void honion_string_free(char* s) { ::free(s); }

honion_status honion_coverage_probability(int64_t n_hsdirs, int64_t honions, double* out) {
    if (!out) return fail_invalid("out must not be null");
    return guarded([&] { *out = honion::coverage_probability(n_hsdirs, honions); });
}

honion_status honion_required_honions(int64_t n_hsdirs, double target_fraction, int64_t* out) {
    if (!out) return fail_invalid("out must not be null");
    return guarded([&] { *out = honion::required_honions(n_hsdirs, target_fraction); });
}

honion_status honion_plan_json(int64_t n_hsdirs, double target_fraction, char** out_json) {
    if (!out_json) return fail_invalid("out_json must not be null");
    return guarded([&] {
        *out_json = dup_string(honion::plan_to_json(honion::plan_coverage(n_hsdirs, target_fraction)));
    });
}

honion_status honion_time_period(int64_t current_time, uint8_t permanent_id_byte, int64_t* out) {
    if (!out) return fail_invalid("out must not be null");
    return guarded([&] { *out = honion::compute_time_period(current_time, permanent_id_byte); });
}

honion_status honion_descriptor_id_hex(const uint8_t identifier[10], int64_t time_period,
                                       const uint8_t* cookie16, int replica, char out_hex[41]) {
    if (!identifier || !out_hex) return fail_invalid("identifier and out_hex must not be null");
    return guarded([&] {
        std::array<std::uint8_t, 10> ident;
        std::memcpy(ident.data(), identifier, ident.size());
        std::optional<std::array<std::uint8_t, 16>> cookie;
        if (cookie16) {
            cookie.emplace();
            std::memcpy(cookie->data(), cookie16, cookie->size());
        }
        const auto id = honion::compute_descriptor_id(ident, time_period, cookie, replica);
        const std::string hex = id.value.hex();
        std::memcpy(out_hex, hex.c_str(), hex.size() + 1);
    });
}

honion_status honion_simulate_file(const char* config_path, const char* out_dir) {
    if (!config_path || !out_dir) return fail_invalid("config_path and out_dir must not be null");
    return guarded([&] {
        const auto cfg = honion::load_simulation_config(config_path);
        honion::write_simulation_output(honion::run_simulation(cfg), out_dir);
    });
}

honion_status honion_graph_build(const char* placements_path, const char* visits_path,
                                 honion_graph** out) {
    if (!placements_path || !visits_path || !out) return fail_invalid("null argument");
    return guarded([&] {
        auto g = std::make_unique<honion_graph>();
        g->g = honion::build_graph(honion::load_placements(placements_path),
                                   honion::load_visits(visits_path));
        *out = g.release();
    });
}

honion_status honion_graph_load(const char* graph_json_path, honion_graph** out) {
    if (!graph_json_path || !out) return fail_invalid("null argument");
    return guarded([&] {
        auto g = std::make_unique<honion_graph>();
        g->g = honion::load_graph(graph_json_path);
        *out = g.release();
    });
}

honion_status honion_graph_save(const honion_graph* g, const char* json_path) {
    if (!g || !json_path) return fail_invalid("null argument");
    return guarded([&] { honion::save_graph(g->g, json_path); });
}

honion_status honion_graph_save_edgelist(const honion_graph* g, const char* tsv_path) {
    if (!g || !tsv_path) return fail_invalid("null argument");
    return guarded([&] { honion::save_graph_edgelist(g->g, tsv_path); });
}

size_t honion_graph_hsdir_count(const honion_graph* g) { return g ? g->g.hsdirs.size() : 0; }

size_t honion_graph_instance_count(const honion_graph* g) { return g ? g->g.instances.size() : 0; }

size_t honion_graph_edge_count(const honion_graph* g) { return g ? g->g.edge_count() : 0; }

void honion_graph_free(honion_graph* g) { delete g; }

honion_status honion_detect(const honion_graph* g, honion_method method, size_t component_cap,
                            int fallback_to_greedy, honion_detection** out) {
    if (!g || !out) return fail_invalid("null argument");
    return guarded([&] {
        auto d = std::make_unique<honion_detection>();
        d->graph = g->g;
        d->result = method == HONION_METHOD_GREEDY
                        ? honion::greedy_min_cover(g->g)
                        : honion::exact_min_cover(g->g, solver_options(component_cap,
                                                                       fallback_to_greedy));
        *out = d.release();
    });
}

size_t honion_detection_size(const honion_detection* d) {
    return d ? d->result.explaining_set.size() : 0;
}

int64_t honion_detection_lower_bound(const honion_detection* d) {
    return d ? d->result.lower_bound : 0;
}

int honion_detection_proven_minimal(const honion_detection* d) {
    return d && d->result.proven_minimal ? 1 : 0;
}

honion_status honion_detection_relay_label(const honion_detection* d, size_t index, char** out) {
    if (!d || !out) return fail_invalid("null argument");
    if (index >= d->result.explaining_set.size()) return fail_invalid("index out of range");
    return guarded(
        [&] { *out = dup_string(d->graph.hsdirs[d->result.explaining_set[index]].label); });
}

void honion_detection_free(honion_detection* d) { delete d; }

honion_status honion_detect_report(const char* graph_path, const char* method,
                                   size_t component_cap, int fallback_to_greedy, int with_timings,
                                   const char* out_path) {
    if (!graph_path || !method || !out_path) return fail_invalid("null argument");
    return guarded([&] {
        const std::string m = method;
        if (m != "greedy" && m != "exact" && m != "both") {
            honion::raise(honion::ErrorCode::InvalidArgument,
                          "method must be greedy, exact or both");
        }
        const auto g = honion::load_graph(graph_path);
        std::optional<honion::DetectionResult> greedy, exact;
        if (m == "greedy" || m == "both") {
            greedy = honion::greedy_min_cover(g);
        }
        if (m == "exact" || m == "both") {
            exact = honion::exact_min_cover(g, solver_options(component_cap, fallback_to_greedy));
        }
        honion::write_text_file(out_path,
                                honion::detection_report_json(g, greedy ? &*greedy : nullptr,
                                                              exact ? &*exact : nullptr,
                                                              with_timings != 0) +
                                    "\n");
    });
}

honion_status honion_report_run(const char* in_dir, const char* format, const char* out_dir) {
    if (!in_dir || !format || !out_dir) return fail_invalid("null argument");
    return guarded([&] {
        const std::string fmt = format;
        if (fmt != "json" && fmt != "csv") {
            honion::raise(honion::ErrorCode::InvalidArgument, "format must be json or csv");
        }
        namespace fs = std::filesystem;
        const auto in = [&](const char* name) { return (fs::path(in_dir) / name).string(); };

        const auto visits = honion::load_visits(in(honion::kVisitsFile));
        const auto placements = honion::load_placements(in(honion::kPlacementsFile));
        const auto graph = honion::load_graph(in(honion::kGraphFile));

        // Prefer the exact result when the detect step produced both.
        const auto detect_json = honion::read_text_file(in(honion::kDetectFile));
        const auto result = honion::detection_result_from_report(detect_json, graph);

        honion::ReportBundle bundle;
        bundle.visits = visits;
        bundle.placements = placements;
        bundle.profiles = honion::profile_snoopers(graph, result, placements, visits);
        bundle.classifications = honion::classify_requests(visits);
        if (fs::exists(in(honion::kConsensusFile))) {
            bundle.relay_tags = honion::load_relay_tags(in(honion::kConsensusFile));
        }
        honion::emit_report(bundle, fmt == "json" ? honion::ReportFormat::Json
                                                  : honion::ReportFormat::Csv,
                            out_dir);
    });
}

honion_status honion_collector_start(const char* config_path, honion_collector** out) {
    if (!config_path || !out) return fail_invalid("null argument");
    return guarded([&] {
        auto c = std::make_unique<honion_collector>();
        c->collector =
            std::make_unique<honion::Collector>(honion::load_collector_config(config_path));
        c->collector->start();
        *out = c.release();
    });
}

honion_status honion_collector_stop(honion_collector* c) {
    if (!c || !c->collector) return fail_invalid("null collector");
    return guarded([&] { c->collector->stop(); });
}

size_t honion_collector_bound_count(const honion_collector* c) {
    return c && c->collector ? c->collector->bound_ports().size() : 0;
}

void honion_collector_free(honion_collector* c) { delete c; }

} // extern "C"
