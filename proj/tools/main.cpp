// Licensed under the Apache License 2.0 (see LICENSE file).

// Command line front end. Everything goes through the C API in honion.h, the
// same surface other language bindings would use.

#include <csignal>
#include <cstdint>
#include <cstdio>
#include <string>

#include "CLI11.hpp"

#include "honion.h"

namespace {

int check(honion_status status) {
    if (status == HONION_OK) {
        return 0;
    }
    std::fprintf(stderr, "error (%s): %s\n", honion_status_name(status), honion_last_error());
    return 1;
}

int run_plan(std::int64_t hsdirs, double coverage) {
    char* json = nullptr;
    if (int rc = check(honion_plan_json(hsdirs, coverage, &json))) {
        return rc;
    }
    std::printf("%s\n", json);
    honion_string_free(json);
    return 0;
}

int run_detect(const std::string& graph, const std::string& method, std::size_t cap,
               bool no_fallback, bool timings, const std::string& out) {
    return check(honion_detect_report(graph.c_str(), method.c_str(), cap, no_fallback ? 0 : 1,
                                      timings ? 1 : 0, out.c_str()));
}

int run_build_graph(const std::string& placements, const std::string& visits,
                    const std::string& out, const std::string& edgelist) {
    honion_graph* g = nullptr;
    if (int rc = check(honion_graph_build(placements.c_str(), visits.c_str(), &g))) {
        return rc;
    }
    int rc = check(honion_graph_save(g, out.c_str()));
    if (rc == 0 && !edgelist.empty()) {
        rc = check(honion_graph_save_edgelist(g, edgelist.c_str()));
    }
    if (rc == 0) {
        std::fprintf(stderr, "graph: %zu instances, %zu relays, %zu edges\n",
                     honion_graph_instance_count(g), honion_graph_hsdir_count(g),
                     honion_graph_edge_count(g));
    }
    honion_graph_free(g);
    return rc;
}

int run_collect(const std::string& config) {
    sigset_t set;
    sigemptyset(&set);
    sigaddset(&set, SIGINT);
    sigaddset(&set, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &set, nullptr);

    honion_collector* collector = nullptr;
    if (int rc = check(honion_collector_start(config.c_str(), &collector))) {
        return rc;
    }
    std::fprintf(stderr, "collector: %zu listener(s) bound, waiting for SIGINT/SIGTERM\n",
                 honion_collector_bound_count(collector));

    int sig = 0;
    sigwait(&set, &sig);
    std::fprintf(stderr, "collector: signal %d, shutting down\n", sig);

    const int rc = check(honion_collector_stop(collector));
    honion_collector_free(collector);
    return rc;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"honey-onion planning, simulation and attribution toolkit"};
    app.require_subcommand(1);

    // plan
    std::int64_t hsdirs = 0;
    double coverage = 0;
    auto* plan = app.add_subcommand("plan", "batch size needed to cover a fraction of the ring");
    plan->add_option("--hsdirs", hsdirs, "number of directory relays")->required();
    plan->add_option("--coverage", coverage, "target coverage fraction in (0,1)")->required();

    // simulate
    std::string sim_config, sim_out;
    auto* simulate = app.add_subcommand("simulate", "run a seeded deployment simulation");
    simulate->add_option("--config", sim_config, "simulation config JSON")->required();
    simulate->add_option("--out", sim_out, "output directory")->required();

    // build-graph
    std::string placements, visits, graph_out, edgelist;
    auto* build = app.add_subcommand("build-graph", "build the attribution graph from logs");
    build->add_option("--placements", placements, "placements JSONL")->required();
    build->add_option("--visits", visits, "visit log JSONL")->required();
    build->add_option("--out", graph_out, "graph JSON output")->required();
    build->add_option("--edgelist", edgelist, "optional TSV edge list output");

    // detect
    std::string det_graph, det_method = "both", det_out;
    std::size_t det_cap = 40;
    bool det_no_fallback = false, det_timings = false;
    auto* detect = app.add_subcommand("detect", "compute minimal explaining sets");
    detect->add_option("--graph", det_graph, "graph JSON")->required();
    detect->add_option("--method", det_method, "greedy, exact or both")
        ->check(CLI::IsMember({"greedy", "exact", "both"}));
    detect->add_option("--out", det_out, "report JSON output")->required();
    detect->add_option("--component-cap", det_cap,
                       "relay cap per component for the exact search (0 = unlimited)");
    detect->add_flag("--no-fallback", det_no_fallback,
                     "fail instead of falling back to greedy on oversized components");
    detect->add_flag("--timings", det_timings, "include runtimes in the report");

    // report
    std::string rep_in, rep_format = "csv", rep_out;
    auto* report = app.add_subcommand("report", "post-detection analytics tables");
    report->add_option("--in", rep_in, "directory with simulation/collector outputs")->required();
    report->add_option("--format", rep_format, "csv or json")
        ->check(CLI::IsMember({"csv", "json"}));
    report->add_option("--out", rep_out, "output directory (default: <in>/report)");

    // collect
    std::string col_config;
    auto* collect = app.add_subcommand("collect", "run the honeypot request logger");
    collect->add_option("--config", col_config, "collector config JSON")->required();

    CLI11_PARSE(app, argc, argv);

    if (plan->parsed()) {
        return run_plan(hsdirs, coverage);
    }
    if (simulate->parsed()) {
        return check(honion_simulate_file(sim_config.c_str(), sim_out.c_str()));
    }
    if (build->parsed()) {
        return run_build_graph(placements, visits, graph_out, edgelist);
    }
    if (detect->parsed()) {
        return run_detect(det_graph, det_method, det_cap, det_no_fallback, det_timings, det_out);
    }
    if (report->parsed()) {
        if (rep_out.empty()) {
            rep_out = rep_in + "/report";
        }
        return check(honion_report_run(rep_in.c_str(), rep_format.c_str(), rep_out.c_str()));
    }
    if (collect->parsed()) {
        return run_collect(col_config);
    }
    return 1;
}
