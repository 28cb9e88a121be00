// Licensed under the Apache License 2.0 (see LICENSE file).

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "honion/graph.hpp"

namespace honion {

enum class CoverMethod { Greedy, Exact };

struct SolverOptions {
    // Components with more relay vertices than this fall back to the greedy
    // cover (with a warning) instead of the exact search. 0 = no cap.
    std::size_t max_component_hsdirs = 40;
    bool fallback_to_greedy = true;
};

struct DetectionResult {
    CoverMethod method = CoverMethod::Greedy;
    std::vector<std::uint32_t> explaining_set;     // relay indices into the graph
    std::vector<std::int64_t> per_relay_explained; // instance count, aligned with explaining_set
    std::int64_t lower_bound = 0;                  // proven minimum cover size (exact only)
    bool proven_minimal = false;
    double runtime_seconds = 0;
    std::vector<std::string> warnings;
};

/// Repeatedly takes the relay explaining the most still-unexplained instances
/// (ties to the lowest fingerprint). Cover size is within a factor
/// ln|instances|+1 of the minimum.
DetectionResult greedy_min_cover(const AttributionGraph& g);

/// Provably minimum explaining set, found per connected component by
/// branch-and-bound seeded with the greedy cover. Deterministic.
DetectionResult exact_min_cover(const AttributionGraph& g, const SolverOptions& opts = {});

struct SuspectRank {
    std::uint32_t relay = 0; // index into g.hsdirs
    std::int64_t explained_instances = 0;
    std::int64_t explained_visits = 0;
    bool high_confidence = false; // explains >= 2 instances
};

/// Members of the explaining set, most-explaining first. Ties break by raw
/// visit count, then by fingerprint.
std::vector<SuspectRank> rank_suspects(const AttributionGraph& g, const DetectionResult& r);

} // namespace honion
