/* Licensed under the Apache License 2.0 (see LICENSE file). */

/*
 * C interface to libhonion: decoy hidden-service planning, directory-ring
 * simulation, honeypot request logging, and snooper attribution.
 *
 * Every function returns HONION_OK on success; on failure the returned code
 * classifies the error and honion_last_error() carries the detail for the
 * calling thread. Objects returned through out-parameters are owned by the
 * caller and released with the matching _free function.
 */

#ifndef HONION_H
#define HONION_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum honion_status {
    HONION_OK = 0,
    HONION_ERR_INVALID_ARG = 1,
    HONION_ERR_DOMAIN = 2,
    HONION_ERR_CONSENSUS_TOO_SMALL = 3,
    HONION_ERR_CONFIG = 4,
    HONION_ERR_ORPHAN_VISIT = 5,
    HONION_ERR_UNCOVERABLE = 6,
    HONION_ERR_COMPONENT_TOO_LARGE = 7,
    HONION_ERR_PARSE = 8,
    HONION_ERR_IO = 9,
    HONION_ERR_BIND = 10,
    HONION_ERR_LOG_WRITE = 11,
    HONION_ERR_INTERNAL = 12
} honion_status;

const char* honion_status_name(honion_status status);

/* Detail message for the most recent failing call on this thread. */
const char* honion_last_error(void);

/* Frees strings returned through char** out-parameters. */
void honion_string_free(char* s);

/* ---- planning ---------------------------------------------------------- */

honion_status honion_coverage_probability(int64_t n_hsdirs, int64_t honions, double* out);
honion_status honion_required_honions(int64_t n_hsdirs, double target_fraction, int64_t* out);

/* {"n_hsdirs":..,"target_fraction":..,"honions_required":..,"predicted_coverage":..} */
honion_status honion_plan_json(int64_t n_hsdirs, double target_fraction, char** out_json);

/* ---- descriptor mechanics ---------------------------------------------- */

honion_status honion_time_period(int64_t current_time, uint8_t permanent_id_byte, int64_t* out);

/* 40 lowercase hex chars plus NUL into out_hex. cookie16 may be NULL. */
honion_status honion_descriptor_id_hex(const uint8_t identifier[10], int64_t time_period,
                                       const uint8_t* cookie16, int replica, char out_hex[41]);

/* ---- simulation --------------------------------------------------------- */

/* Runs the config at config_path; writes consensus.jsonl, honions.jsonl,
 * placements.jsonl, visits.jsonl and ground_truth.json under out_dir. */
honion_status honion_simulate_file(const char* config_path, const char* out_dir);

/* ---- attribution graph -------------------------------------------------- */

typedef struct honion_graph honion_graph;

honion_status honion_graph_build(const char* placements_path, const char* visits_path,
                                 honion_graph** out);
honion_status honion_graph_load(const char* graph_json_path, honion_graph** out);
honion_status honion_graph_save(const honion_graph* g, const char* json_path);
honion_status honion_graph_save_edgelist(const honion_graph* g, const char* tsv_path);
size_t honion_graph_hsdir_count(const honion_graph* g);
size_t honion_graph_instance_count(const honion_graph* g);
size_t honion_graph_edge_count(const honion_graph* g);
void honion_graph_free(honion_graph* g);

/* ---- detection ---------------------------------------------------------- */

typedef struct honion_detection honion_detection;

typedef enum honion_method {
    HONION_METHOD_GREEDY = 0,
    HONION_METHOD_EXACT = 1
} honion_method;

/* component_cap: relay-vertex cap per component for the exact search
 * (0 = unlimited); components over the cap fall back to the greedy cover
 * unless fallback_to_greedy is 0, in which case the call fails. */
honion_status honion_detect(const honion_graph* g, honion_method method, size_t component_cap,
                            int fallback_to_greedy, honion_detection** out);

size_t honion_detection_size(const honion_detection* d);
int64_t honion_detection_lower_bound(const honion_detection* d);
int honion_detection_proven_minimal(const honion_detection* d);
honion_status honion_detection_relay_label(const honion_detection* d, size_t index, char** out);
void honion_detection_free(honion_detection* d);

/* Full report for "greedy", "exact" or "both" straight to a JSON file. */
honion_status honion_detect_report(const char* graph_path, const char* method,
                                   size_t component_cap, int fallback_to_greedy,
                                   int with_timings, const char* out_path);

/* ---- reporting ---------------------------------------------------------- */

/* in_dir must hold the simulation outputs plus graph.json and detect.json.
 * format is "json" or "csv". */
honion_status honion_report_run(const char* in_dir, const char* format, const char* out_dir);

/* ---- honeypot collector -------------------------------------------------- */

typedef struct honion_collector honion_collector;

/* Binds the configured loopback listeners and serves until stopped. */
honion_status honion_collector_start(const char* config_path, honion_collector** out);
honion_status honion_collector_stop(honion_collector* c);
size_t honion_collector_bound_count(const honion_collector* c);
void honion_collector_free(honion_collector* c);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* HONION_H */
