// Licensed under the Apache License 2.0 (see LICENSE file).

#pragma once

#include <cstdint>
#include <vector>

#include "honion/ring.hpp"

namespace honion {

struct CoveragePlan {
    std::int64_t n_hsdirs = 0;
    double target_fraction = 0;
    std::int64_t honions_required = 0;
    double predicted_coverage = 0;
};

/// Probability that a fixed relay hosts at least one of m honions:
/// 1 - (1 - 3/N)^(2m). Each honion contributes two descriptors, each stored on
/// three consecutive relays. Requires N >= 4.
double coverage_probability(std::int64_t n_hsdirs, std::int64_t m);

/// Batch size whose predicted coverage is closest to f: the closed form
/// ln(1-f) / (2 ln(1-3/N)) rounded to the nearest integer, at least 1.
std::int64_t required_honions(std::int64_t n_hsdirs, double f);

CoveragePlan plan_coverage(std::int64_t n_hsdirs, double f);

/// Fraction of relays in c hosting at least one placement.
double measure_coverage(const std::vector<PlacementRecord>& placements,
                        const ConsensusSnapshot& c);

} // namespace honion
