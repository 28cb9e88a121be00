// Licensed under the Apache License 2.0 (see LICENSE file).

#pragma once

#include <string>
#include <vector>

#include "honion/collector.hpp"
#include "honion/detect.hpp"
#include "honion/graph.hpp"
#include "honion/planner.hpp"
#include "honion/report.hpp"
#include "honion/ring.hpp"
#include "honion/sim.hpp"

namespace honion {

// File names produced by a simulation run and consumed downstream.
inline constexpr const char* kConsensusFile = "consensus.jsonl";
inline constexpr const char* kHonionsFile = "honions.jsonl";
inline constexpr const char* kPlacementsFile = "placements.jsonl";
inline constexpr const char* kVisitsFile = "visits.jsonl";
inline constexpr const char* kGroundTruthFile = "ground_truth.json";
inline constexpr const char* kGraphFile = "graph.json";
inline constexpr const char* kDetectFile = "detect.json";

ConsensusSnapshot load_consensus(const std::string& path); // sorted on load
void save_consensus(const ConsensusSnapshot& c, const std::string& path);

SimulationConfig load_simulation_config(const std::string& path);
SimulationConfig parse_simulation_config(const std::string& json_text);

CollectorConfig load_collector_config(const std::string& path);

std::vector<VisitRecord> load_visits(const std::string& path);
std::vector<PlacementRecord> load_placements(const std::string& path);

/// Writes consensus/honions/placements/visits logs plus the ground-truth
/// sidecar into dir. requester_tag is blanked in the visit log; the tags live
/// only in the sidecar.
void write_simulation_output(const SimulationOutput& out, const std::string& dir);

GroundTruth load_ground_truth(const std::string& path);

void save_graph(const AttributionGraph& g, const std::string& path);
AttributionGraph load_graph(const std::string& path);
void save_graph_edgelist(const AttributionGraph& g, const std::string& path); // instance<TAB>label

std::string plan_to_json(const CoveragePlan& plan);

/// Detection report for one or both methods. Runtimes are included only when
/// with_timings is set, keeping default outputs run-to-run identical.
std::string detection_report_json(const AttributionGraph& g,
                                  const DetectionResult* greedy,
                                  const DetectionResult* exact,
                                  bool with_timings);

/// Rebuilds the chosen explaining set from a detection report, matching the
/// listed relays back into g. Prefers the exact result when both are present.
DetectionResult detection_result_from_report(const std::string& report_json,
                                             const AttributionGraph& g);

/// Relay label -> tags, from every snapshot in a consensus JSONL file.
std::map<std::string, std::vector<std::string>> load_relay_tags(const std::string& consensus_jsonl);

void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

} // namespace honion
