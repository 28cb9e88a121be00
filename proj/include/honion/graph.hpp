// Licensed under the Apache License 2.0 (see LICENSE file).

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "honion/ring.hpp"
#include "honion/sim.hpp"

namespace honion {

/// A honion pinned to one placement epoch. Splitting per epoch keeps relays
/// that first hosted the address *after* a visit from being blamed for it.
struct HonionInstance {
    std::string id; // "<onion_address>@<epoch>"
    std::string onion_address;
    std::int64_t first_day = 0; // epoch range during which this placement held
    std::int64_t last_day = 0;
    std::vector<std::size_t> visit_ids; // indices into the visit list
};

struct GraphRelay {
    Fingerprint fingerprint;
    std::string label;
};

/// Bipartite graph between visited honion instances and the relays that could
/// explain each visit (hosts of any epoch up to the visit's epoch).
struct AttributionGraph {
    std::vector<GraphRelay> hsdirs;       // sorted by fingerprint
    std::vector<HonionInstance> instances;
    std::vector<std::vector<std::uint32_t>> edges; // edges[i] = relay indices, sorted

    std::size_t edge_count() const;

    /// Structural checks: index ranges, sorted unique adjacency, and that
    /// every instance has at least one candidate host.
    void check_valid() const;
};

/// Groups visits by (honion, placement epoch) and connects each instance to
/// every relay that hosted the honion during any epoch <= the visit epoch.
/// A visit matching no placement is an OrphanVisit error.
AttributionGraph build_graph(const std::vector<PlacementRecord>& placements,
                             const std::vector<VisitRecord>& visits);

/// Maximal connected subgraphs. Relays with no reachable instance are dropped;
/// solving components independently is equivalent to solving the whole graph.
std::vector<AttributionGraph> connected_components(const AttributionGraph& g);

} // namespace honion
