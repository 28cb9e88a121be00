// Licensed under the Apache License 2.0 (see LICENSE file).

#include "honion/graph.hpp"

#include <algorithm>
#include <map>
#include <queue>
#include <set>
#include <unordered_map>

#include "honion/error.hpp"

namespace honion {

std::size_t AttributionGraph::edge_count() const {
    std::size_t n = 0;
    for (const auto& adj : edges) {
        n += adj.size();
    }
    return n;
}

void AttributionGraph::check_valid() const {
    if (edges.size() != instances.size()) {
        raise(ErrorCode::InvalidArgument, "adjacency size does not match instance count");
    }
    for (std::size_t i = 0; i < edges.size(); ++i) {
        const auto& adj = edges[i];
        if (adj.empty()) {
            raise(ErrorCode::UncoverableVertex,
                  "honion instance has no candidate host: " + instances[i].id);
        }
        for (std::size_t k = 0; k < adj.size(); ++k) {
            if (adj[k] >= hsdirs.size()) {
                raise(ErrorCode::InvalidArgument, "edge references unknown relay index");
            }
            if (k > 0 && adj[k] <= adj[k - 1]) {
                raise(ErrorCode::InvalidArgument, "adjacency must be sorted and duplicate-free");
            }
        }
    }
}

AttributionGraph build_graph(const std::vector<PlacementRecord>& placements,
                             const std::vector<VisitRecord>& visits) {
    // Placements per honion, ordered by epoch.
    std::unordered_map<std::string, std::vector<const PlacementRecord*>> by_onion;
    for (const PlacementRecord& p : placements) {
        by_onion[p.onion_address].push_back(&p);
    }
    for (auto& [onion, list] : by_onion) {
        std::sort(list.begin(), list.end(), [](const PlacementRecord* a, const PlacementRecord* b) {
            return a->epoch < b->epoch;
        });
    }

    // Visits grouped by (honion, epoch of the covering placement). The
    // covering placement is the latest one not after the visit's day.
    struct Group {
        std::vector<std::size_t> visit_ids;
        std::size_t placement_slot = 0; // index into the per-onion list
    };
    std::map<std::pair<std::string, std::int64_t>, Group> groups;
    for (std::size_t v = 0; v < visits.size(); ++v) {
        const VisitRecord& visit = visits[v];
        const auto it = by_onion.find(visit.onion_address);
        if (it == by_onion.end()) {
            raise(ErrorCode::OrphanVisit,
                  "visit to " + visit.onion_address + " matches no placement");
        }
        const auto& list = it->second;
        const std::int64_t day = visit.day();
        std::size_t slot = list.size();
        for (std::size_t k = 0; k < list.size(); ++k) {
            if (list[k]->epoch <= day) {
                slot = k;
            } else {
                break;
            }
        }
        if (slot == list.size()) {
            raise(ErrorCode::OrphanVisit, "visit to " + visit.onion_address + " at day " +
                                              std::to_string(day) + " precedes every placement");
        }
        Group& g = groups[{visit.onion_address, list[slot]->epoch}];
        g.visit_ids.push_back(v);
        g.placement_slot = slot;
    }

    // Relay vertices: every host that can explain some visit, ordered by
    // fingerprint so indices are stable across rebuilds.
    std::set<std::pair<Fingerprint, std::string>> relay_keys;
    for (const auto& [key, group] : groups) {
        const auto& list = by_onion.at(key.first);
        for (std::size_t k = 0; k <= group.placement_slot; ++k) {
            for (const PlacementHost& h : list[k]->hsdirs) {
                relay_keys.insert({h.fingerprint, h.label});
            }
        }
    }

    AttributionGraph g;
    std::map<std::pair<Fingerprint, std::string>, std::uint32_t> relay_index;
    for (const auto& key : relay_keys) {
        relay_index[key] = static_cast<std::uint32_t>(g.hsdirs.size());
        g.hsdirs.push_back({key.first, key.second});
    }

    for (const auto& [key, group] : groups) {
        const auto& [onion, epoch] = key;
        const auto& list = by_onion.at(onion);

        HonionInstance inst;
        inst.id = onion + "@" + std::to_string(epoch);
        inst.onion_address = onion;
        inst.first_day = epoch;
        // The placement holds until the honion moves again.
        inst.last_day = group.placement_slot + 1 < list.size()
                            ? list[group.placement_slot + 1]->epoch - 1
                            : epoch;
        inst.visit_ids = group.visit_ids;

        // Knowledge accumulates: anyone who hosted the address during this or
        // any earlier epoch can explain the visit.
        std::set<std::uint32_t> adj;
        for (std::size_t k = 0; k <= group.placement_slot; ++k) {
            for (const PlacementHost& h : list[k]->hsdirs) {
                adj.insert(relay_index.at({h.fingerprint, h.label}));
            }
        }
        g.instances.push_back(std::move(inst));
        g.edges.emplace_back(adj.begin(), adj.end());
    }

    g.check_valid();
    return g;
}

std::vector<AttributionGraph> connected_components(const AttributionGraph& g) {
    const std::size_t n_inst = g.instances.size();

    // Relay -> instances adjacency for the traversal.
    std::vector<std::vector<std::uint32_t>> relay_adj(g.hsdirs.size());
    for (std::size_t i = 0; i < n_inst; ++i) {
        for (std::uint32_t r : g.edges[i]) {
            relay_adj[r].push_back(static_cast<std::uint32_t>(i));
        }
    }

    std::vector<int> inst_comp(n_inst, -1);
    std::vector<int> relay_comp(g.hsdirs.size(), -1);
    int n_comp = 0;
    for (std::size_t start = 0; start < n_inst; ++start) {
        if (inst_comp[start] != -1) continue;
        const int comp = n_comp++;
        std::queue<std::uint32_t> frontier;
        frontier.push(static_cast<std::uint32_t>(start));
        inst_comp[start] = comp;
        while (!frontier.empty()) {
            const std::uint32_t i = frontier.front();
            frontier.pop();
            for (std::uint32_t r : g.edges[i]) {
                if (relay_comp[r] != -1) continue;
                relay_comp[r] = comp;
                for (std::uint32_t j : relay_adj[r]) {
                    if (inst_comp[j] == -1) {
                        inst_comp[j] = comp;
                        frontier.push(j);
                    }
                }
            }
        }
    }

    // Relays never reached from an instance have no visits to explain.
    std::vector<AttributionGraph> parts(static_cast<std::size_t>(n_comp));
    std::vector<std::uint32_t> relay_remap(g.hsdirs.size(), 0);
    for (std::size_t r = 0; r < g.hsdirs.size(); ++r) {
        if (relay_comp[r] == -1) continue;
        auto& part = parts[static_cast<std::size_t>(relay_comp[r])];
        relay_remap[r] = static_cast<std::uint32_t>(part.hsdirs.size());
        part.hsdirs.push_back(g.hsdirs[r]);
    }
    for (std::size_t i = 0; i < n_inst; ++i) {
        auto& part = parts[static_cast<std::size_t>(inst_comp[i])];
        part.instances.push_back(g.instances[i]);
        std::vector<std::uint32_t> adj;
        adj.reserve(g.edges[i].size());
        for (std::uint32_t r : g.edges[i]) {
            adj.push_back(relay_remap[r]);
        }
        std::sort(adj.begin(), adj.end());
        part.edges.push_back(std::move(adj));
    }
    return parts;
}

} // namespace honion
