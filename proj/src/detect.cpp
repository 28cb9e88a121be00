// Licensed under the Apache License 2.0 (see LICENSE file).

#include "honion/detect.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <map>
#include <queue>
#include <utility>

#include "honion/error.hpp"

namespace honion {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::vector<std::vector<std::uint32_t>> relay_adjacency(const AttributionGraph& g) {
    std::vector<std::vector<std::uint32_t>> adj(g.hsdirs.size());
    for (std::size_t i = 0; i < g.edges.size(); ++i) {
        for (std::uint32_t r : g.edges[i]) {
            adj[r].push_back(static_cast<std::uint32_t>(i));
        }
    }
    return adj;
}

// Lowest fingerprint wins ties so both solvers are pure functions of the graph.
bool fingerprint_less(const AttributionGraph& g, std::uint32_t a, std::uint32_t b) {
    if (g.hsdirs[a].fingerprint != g.hsdirs[b].fingerprint) {
        return g.hsdirs[a].fingerprint < g.hsdirs[b].fingerprint;
    }
    return a < b;
}

std::vector<std::uint32_t> greedy_cover_set(const AttributionGraph& g) {
    const auto relay_adj = relay_adjacency(g);
    std::vector<bool> covered(g.instances.size(), false);
    std::size_t remaining = g.instances.size();

    // Lazy-deletion max-heap: entries go stale as instances get covered, so
    // each pop re-counts and reinserts when the stored degree is outdated.
    // Degrees only shrink, which keeps the O(|E| log |V|) bound.
    struct Entry {
        std::int64_t count;
        std::uint32_t relay;
    };
    const auto worse = [&](const Entry& a, const Entry& b) {
        if (a.count != b.count) return a.count < b.count;
        return fingerprint_less(g, b.relay, a.relay);
    };
    std::priority_queue<Entry, std::vector<Entry>, decltype(worse)> heap(worse);
    for (std::uint32_t r = 0; r < relay_adj.size(); ++r) {
        heap.push({static_cast<std::int64_t>(relay_adj[r].size()), r});
    }

    std::vector<std::uint32_t> picks;
    while (remaining > 0) {
        if (heap.empty()) {
            raise(ErrorCode::UncoverableVertex, "honion instance with no remaining candidate host");
        }
        const Entry top = heap.top();
        heap.pop();
        std::int64_t current = 0;
        for (std::uint32_t i : relay_adj[top.relay]) {
            if (!covered[i]) ++current;
        }
        if (current != top.count) {
            if (current > 0) heap.push({current, top.relay});
            continue;
        }
        if (current == 0) {
            raise(ErrorCode::UncoverableVertex, "honion instance with no remaining candidate host");
        }
        picks.push_back(top.relay);
        for (std::uint32_t i : relay_adj[top.relay]) {
            if (!covered[i]) {
                covered[i] = true;
                --remaining;
            }
        }
    }
    return picks;
}

// Branch-and-bound over one connected component. Branches on the most
// constrained uncovered instance: some candidate of that instance must be in
// any cover, so trying each candidate (and forbidding the ones already tried)
// enumerates every minimal cover exactly once.
class ComponentSolver {
public:
    explicit ComponentSolver(const AttributionGraph& comp) : comp_(comp) {
        n_inst_ = comp.instances.size();
        n_relays_ = comp.hsdirs.size();
        words_ = (n_inst_ + 63) / 64;
        relay_mask_.assign(n_relays_, std::vector<std::uint64_t>(words_, 0));
        inst_cand_.assign(n_inst_, {});
        for (std::size_t i = 0; i < n_inst_; ++i) {
            for (std::uint32_t r : comp.edges[i]) {
                relay_mask_[r][i / 64] |= 1ull << (i % 64);
                inst_cand_[i].push_back(r);
            }
        }
        alive_.assign(n_relays_, true);
        // Static probe order for the packing bound: tightly constrained
        // instances first packs more disjoint instances.
        probe_order_.resize(n_inst_);
        for (std::size_t i = 0; i < n_inst_; ++i) probe_order_[i] = static_cast<std::uint32_t>(i);
        std::sort(probe_order_.begin(), probe_order_.end(), [&](std::uint32_t a, std::uint32_t b) {
            if (inst_cand_[a].size() != inst_cand_[b].size())
                return inst_cand_[a].size() < inst_cand_[b].size();
            return a < b;
        });
    }

    std::vector<std::uint32_t> solve() {
        reduce();
        best_ = greedy_cover_set(comp_);
        for (std::uint32_t r : forced_) {
            include(r);
        }
        search();
        std::sort(best_.begin(), best_.end());
        best_.erase(std::unique(best_.begin(), best_.end()), best_.end());
        return best_;
    }

private:
    void include(std::uint32_t r) {
        chosen_.push_back(r);
        for (std::size_t w = 0; w < words_; ++w) covered_[w] |= relay_mask_[r][w];
    }

    bool is_covered(std::size_t i) const { return (covered_[i / 64] >> (i % 64)) & 1; }

    std::size_t uncovered_count() const {
        std::size_t c = 0;
        for (std::size_t w = 0; w < words_; ++w) c += static_cast<std::size_t>(std::popcount(covered_[w]));
        return n_inst_ - c;
    }

    bool subset(const std::vector<std::uint64_t>& a, const std::vector<std::uint64_t>& b) const {
        for (std::size_t w = 0; w < words_; ++w) {
            if (a[w] & ~b[w]) return false;
        }
        return true;
    }

    // Root-level simplification: drop relays whose coverage is contained in
    // another's, then commit relays that are an instance's only candidate.
    void reduce() {
        covered_.assign(words_, 0);
        for (std::uint32_t r = 0; r < n_relays_; ++r) {
            for (std::uint32_t s = 0; s < n_relays_; ++s) {
                if (r == s || !alive_[r] || !alive_[s]) continue;
                if (!subset(relay_mask_[r], relay_mask_[s])) continue;
                if (relay_mask_[r] != relay_mask_[s] || fingerprint_less(comp_, s, r)) {
                    alive_[r] = false;
                    break;
                }
            }
        }
        bool changed = true;
        while (changed) {
            changed = false;
            for (std::size_t i = 0; i < n_inst_; ++i) {
                if (is_covered(i)) continue;
                std::uint32_t only = 0;
                int alive_cands = 0;
                for (std::uint32_t r : inst_cand_[i]) {
                    if (alive_[r]) {
                        only = r;
                        if (++alive_cands > 1) break;
                    }
                }
                if (alive_cands == 1) {
                    forced_.push_back(only);
                    for (std::size_t w = 0; w < words_; ++w) covered_[w] |= relay_mask_[only][w];
                    changed = true;
                }
            }
        }
        covered_.assign(words_, 0); // solve() replays the forced picks
    }

    // Admissible lower bound: a maximal set of uncovered instances sharing no
    // live candidate relay; each needs its own relay in any cover.
    std::size_t packing_bound() const {
        std::vector<std::uint64_t> blocked = covered_;
        std::size_t bound = 0;
        for (std::uint32_t i : probe_order_) {
            if ((blocked[i / 64] >> (i % 64)) & 1) continue;
            ++bound;
            for (std::uint32_t r : inst_cand_[i]) {
                if (!alive_[r]) continue;
                for (std::size_t w = 0; w < words_; ++w) blocked[w] |= relay_mask_[r][w];
            }
        }
        return bound;
    }

    void search() {
        if (chosen_.size() + 1 > best_.size()) {
            return; // even one more pick cannot beat the incumbent
        }
        std::size_t uncovered = uncovered_count();
        if (uncovered == 0) {
            best_ = chosen_;
            return;
        }
        if (chosen_.size() + packing_bound() >= best_.size()) {
            return;
        }

        // Most constrained uncovered instance.
        std::size_t pick = n_inst_;
        std::size_t pick_cands = SIZE_MAX;
        for (std::size_t i = 0; i < n_inst_; ++i) {
            if (is_covered(i)) continue;
            std::size_t cands = 0;
            for (std::uint32_t r : inst_cand_[i]) {
                if (alive_[r]) ++cands;
            }
            if (cands < pick_cands) {
                pick_cands = cands;
                pick = i;
                if (cands <= 1) break;
            }
        }
        if (pick_cands == 0) {
            return; // dead branch: this instance lost every candidate
        }

        std::vector<std::uint32_t> cands;
        for (std::uint32_t r : inst_cand_[pick]) {
            if (alive_[r]) cands.push_back(r);
        }
        std::sort(cands.begin(), cands.end(), [&](std::uint32_t a, std::uint32_t b) {
            std::size_t ca = 0, cb = 0;
            for (std::size_t w = 0; w < words_; ++w) {
                ca += static_cast<std::size_t>(std::popcount(relay_mask_[a][w] & ~covered_[w]));
                cb += static_cast<std::size_t>(std::popcount(relay_mask_[b][w] & ~covered_[w]));
            }
            if (ca != cb) return ca > cb;
            return fingerprint_less(comp_, a, b);
        });

        const std::vector<std::uint64_t> saved_covered = covered_;
        std::vector<std::uint32_t> disabled;
        for (std::uint32_t r : cands) {
            include(r);
            search();
            chosen_.pop_back();
            covered_ = saved_covered;
            // Covers containing r are fully explored; exclude it below.
            alive_[r] = false;
            disabled.push_back(r);
        }
        for (std::uint32_t r : disabled) {
            alive_[r] = true;
        }
    }

    const AttributionGraph& comp_;
    std::size_t n_inst_ = 0, n_relays_ = 0, words_ = 0;
    std::vector<std::vector<std::uint64_t>> relay_mask_;
    std::vector<std::vector<std::uint32_t>> inst_cand_;
    std::vector<std::uint32_t> probe_order_;
    std::vector<bool> alive_;
    std::vector<std::uint64_t> covered_;
    std::vector<std::uint32_t> forced_;
    std::vector<std::uint32_t> chosen_;
    std::vector<std::uint32_t> best_;
};

// Disjoint-instances bound usable without running the exact search: no two
// selected instances share a candidate relay, so any cover needs one relay
// per selected instance.
std::size_t packing_floor(const AttributionGraph& comp) {
    const std::size_t n = comp.instances.size();
    std::vector<std::uint32_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = static_cast<std::uint32_t>(i);
    std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
        if (comp.edges[a].size() != comp.edges[b].size())
            return comp.edges[a].size() < comp.edges[b].size();
        return a < b;
    });
    const auto relay_adj = relay_adjacency(comp);
    std::vector<bool> blocked(n, false);
    std::size_t bound = 0;
    for (std::uint32_t i : order) {
        if (blocked[i]) continue;
        ++bound;
        for (std::uint32_t r : comp.edges[i]) {
            for (std::uint32_t j : relay_adj[r]) {
                blocked[j] = true;
            }
        }
    }
    return bound;
}

std::vector<std::int64_t> explained_counts(const AttributionGraph& g,
                                           const std::vector<std::uint32_t>& set) {
    std::vector<std::int64_t> degree(g.hsdirs.size(), 0);
    for (const auto& adj : g.edges) {
        for (std::uint32_t r : adj) {
            ++degree[r];
        }
    }
    std::vector<std::int64_t> out;
    out.reserve(set.size());
    for (std::uint32_t r : set) {
        out.push_back(degree[r]);
    }
    return out;
}

} // namespace

DetectionResult greedy_min_cover(const AttributionGraph& g) {
    const auto start = Clock::now();
    g.check_valid();
    DetectionResult res;
    res.method = CoverMethod::Greedy;
    res.explaining_set = greedy_cover_set(g);
    res.per_relay_explained = explained_counts(g, res.explaining_set);
    res.runtime_seconds = seconds_since(start);
    return res;
}

DetectionResult exact_min_cover(const AttributionGraph& g, const SolverOptions& opts) {
    const auto start = Clock::now();
    g.check_valid();

    std::map<std::pair<std::string, std::string>, std::uint32_t> global_index;
    for (std::uint32_t r = 0; r < g.hsdirs.size(); ++r) {
        global_index[{g.hsdirs[r].fingerprint.hex(), g.hsdirs[r].label}] = r;
    }

    DetectionResult res;
    res.method = CoverMethod::Exact;
    res.proven_minimal = true;

    for (const AttributionGraph& comp : connected_components(g)) {
        std::vector<std::uint32_t> local;
        if (opts.max_component_hsdirs > 0 && comp.hsdirs.size() > opts.max_component_hsdirs) {
            if (!opts.fallback_to_greedy) {
                raise(ErrorCode::ComponentTooLarge,
                      "component with " + std::to_string(comp.hsdirs.size()) +
                          " relays exceeds the exact-search cap of " +
                          std::to_string(opts.max_component_hsdirs));
            }
            local = greedy_cover_set(comp);
            res.proven_minimal = false;
            res.warnings.push_back("component with " + std::to_string(comp.hsdirs.size()) +
                                   " relays exceeds the cap (" +
                                   std::to_string(opts.max_component_hsdirs) +
                                   "); using the greedy cover for it");
            // Still a sound lower bound for the component: pairwise disjoint
            // instances each demand their own relay.
            res.lower_bound += static_cast<std::int64_t>(packing_floor(comp));
        } else {
            local = ComponentSolver(comp).solve();
            res.lower_bound += static_cast<std::int64_t>(local.size());
        }
        for (std::uint32_t r : local) {
            res.explaining_set.push_back(
                global_index.at({comp.hsdirs[r].fingerprint.hex(), comp.hsdirs[r].label}));
        }
    }
    std::sort(res.explaining_set.begin(), res.explaining_set.end());
    res.per_relay_explained = explained_counts(g, res.explaining_set);
    res.runtime_seconds = seconds_since(start);
    return res;
}

std::vector<SuspectRank> rank_suspects(const AttributionGraph& g, const DetectionResult& r) {
    std::vector<std::int64_t> inst_count(g.hsdirs.size(), 0);
    std::vector<std::int64_t> visit_count(g.hsdirs.size(), 0);
    for (std::size_t i = 0; i < g.edges.size(); ++i) {
        for (std::uint32_t relay : g.edges[i]) {
            ++inst_count[relay];
            visit_count[relay] += static_cast<std::int64_t>(g.instances[i].visit_ids.size());
        }
    }
    std::vector<SuspectRank> ranks;
    ranks.reserve(r.explaining_set.size());
    for (std::uint32_t relay : r.explaining_set) {
        SuspectRank s;
        s.relay = relay;
        s.explained_instances = inst_count[relay];
        s.explained_visits = visit_count[relay];
        s.high_confidence = s.explained_instances >= 2;
        ranks.push_back(s);
    }
    std::sort(ranks.begin(), ranks.end(), [&](const SuspectRank& a, const SuspectRank& b) {
        if (a.explained_instances != b.explained_instances)
            return a.explained_instances > b.explained_instances;
        if (a.explained_visits != b.explained_visits) return a.explained_visits > b.explained_visits;
        return fingerprint_less(g, a.relay, b.relay);
    });
    return ranks;
}

} // namespace honion
