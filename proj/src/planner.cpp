// Licensed under the Apache License 2.0 (see LICENSE file).

#include "honion/planner.hpp"

#include <cmath>
#include <set>

#include "honion/error.hpp"

namespace honion {

double coverage_probability(std::int64_t n_hsdirs, std::int64_t m) {
    if (n_hsdirs < 4) {
        raise(ErrorCode::Domain, "need at least 4 relays so that 3/N < 1");
    }
    if (m < 0) {
        raise(ErrorCode::Domain, "honion count must be non-negative");
    }
    const double p = 3.0 / static_cast<double>(n_hsdirs);
    return 1.0 - std::pow(1.0 - p, 2.0 * static_cast<double>(m));
}

std::int64_t required_honions(std::int64_t n_hsdirs, double f) {
    if (n_hsdirs < 4) {
        raise(ErrorCode::Domain, "need at least 4 relays so that 3/N < 1");
    }
    if (!(f > 0.0 && f < 1.0)) {
        raise(ErrorCode::Domain, "target fraction must lie strictly between 0 and 1");
    }
    // Inverse of the coverage formula, rounded to the nearest whole batch.
    const double exact = std::log1p(-f) / (2.0 * std::log1p(-3.0 / static_cast<double>(n_hsdirs)));
    const auto m = static_cast<std::int64_t>(std::llround(exact));
    return m < 1 ? 1 : m;
}

CoveragePlan plan_coverage(std::int64_t n_hsdirs, double f) {
    CoveragePlan plan;
    plan.n_hsdirs = n_hsdirs;
    plan.target_fraction = f;
    plan.honions_required = required_honions(n_hsdirs, f);
    plan.predicted_coverage = coverage_probability(n_hsdirs, plan.honions_required);
    return plan;
}

double measure_coverage(const std::vector<PlacementRecord>& placements,
                        const ConsensusSnapshot& c) {
    if (c.relays.empty()) {
        return 0.0;
    }
    std::set<Fingerprint> known;
    for (const HsDirRelay& r : c.relays) {
        known.insert(r.fingerprint);
    }
    std::set<Fingerprint> covered;
    for (const PlacementRecord& p : placements) {
        for (const PlacementHost& h : p.hsdirs) {
            if (known.count(h.fingerprint)) {
                covered.insert(h.fingerprint);
            }
        }
    }
    return static_cast<double>(covered.size()) / static_cast<double>(c.relays.size());
}

} // namespace honion
