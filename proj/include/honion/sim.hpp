// Licensed under the Apache License 2.0 (see LICENSE file).

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "honion/ring.hpp"
#include "honion/rng.hpp"

namespace honion {

enum class SnooperKind {
    PersistentImmediate,          // probes everything it learns within the day
    PersistentDelayed,            // probes everything, a fixed number of days later
    RandomizedDeterministicDelay, // probes with probability p, d days later
    Probabilistic,                // delay drawn per address from a distribution
};

struct SnooperModel {
    SnooperKind kind = SnooperKind::PersistentImmediate;
    int delay_days = 0;           // PersistentDelayed / RandomizedDeterministicDelay
    double visit_probability = 1; // RandomizedDeterministicDelay
    // Probabilistic: (delay, probability) pairs; leftover mass means "never".
    std::vector<std::pair<int, double>> delay_distribution;
    bool repeat_daily = false;    // keep probing every day once the delay elapsed
    std::optional<int> activation_day; // accepted in configs, reserved for later use

    void validate() const; // throws ErrorCode::Config
};

enum class RingTopology {
    Random, // fingerprints drawn uniformly at random, like real relay keys
    Grid,   // fingerprints evenly spaced, realizing the equal-arc coverage model
};

struct SimulationConfig {
    std::uint64_t seed = 0;
    std::int64_t n_hsdirs = 0;
    int n_days = 0;
    int honions_daily = 0;
    int honions_weekly = 0;
    int honions_monthly = 0;
    std::map<std::string, SnooperModel> snoopers; // keyed by relay label
    double relay_churn = 0;                       // per-day replacement fraction, [0,1)
    RingTopology topology = RingTopology::Random;

    void validate() const; // dimensions and churn range; labels checked at run time
};

struct VisitRecord {
    std::string onion_address;
    double timestamp = 0; // seconds since origin, millisecond resolution
    std::string request_path;
    std::string requester_tag; // ground truth; blank in detector-facing logs
    bool is_favicon = false;

    std::int64_t day() const { return static_cast<std::int64_t>(timestamp) / kSecondsPerDay; }
};

struct GroundTruthVisit {
    std::string snooper;
    std::string onion_address;
    std::int64_t day = 0;
};

struct GroundTruth {
    std::vector<std::string> snoopers;
    std::vector<GroundTruthVisit> visits; // one entry per emitted VisitRecord, same order
};

struct SimulationOutput {
    std::vector<ConsensusSnapshot> consensus; // one per day
    std::vector<HonionSpec> honions;
    std::vector<PlacementRecord> placements;
    std::vector<VisitRecord> visits; // requester_tag filled in; redacted when written
    GroundTruth truth;
};

/// One address a snooper knows, and when it learned it. planned_delay is
/// sampled once at learn time for Probabilistic snoopers (nullopt = never).
struct LearnedHonion {
    std::string onion_address;
    std::int64_t learned_day = 0;
    std::optional<int> planned_delay;
};

ConsensusSnapshot generate_consensus(std::int64_t n_hsdirs, RingTopology topology, Rng& rng,
                                     std::int64_t epoch = 0);

/// Replaces floor(fraction * N) uniformly chosen relays with fresh ones
/// (new fingerprints, new labels). Epoch advances by one.
ConsensusSnapshot apply_churn(const ConsensusSnapshot& c, double fraction, Rng& rng);

/// Samples the visit delay a Probabilistic snooper commits to when it learns
/// an address. Other kinds return nullopt.
std::optional<int> plan_visit_delay(const SnooperModel& model, Rng& rng);

/// Which of the learned addresses the snooper probes today.
std::vector<std::string> snooper_decide(const SnooperModel& model,
                                        const std::vector<LearnedHonion>& learned,
                                        std::int64_t today, Rng& rng);

SimulationOutput run_simulation(const SimulationConfig& cfg);

} // namespace honion
