// Licensed under the Apache License 2.0 (see LICENSE file).

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "honion/fingerprint.hpp"

namespace honion {

enum class Schedule { Daily, Weekly, Monthly };

constexpr std::int64_t kSecondsPerDay = 86400;

std::int64_t schedule_lifetime(Schedule s);
std::string to_string(Schedule s);
Schedule schedule_from_string(std::string_view s);

struct HsDirRelay {
    Fingerprint fingerprint;
    std::string label;
    std::vector<std::string> tags; // opaque metadata (e.g. "exit", "cloud"), carried to reports
};

/// One day's directory ring: relays sorted strictly ascending by fingerprint.
struct ConsensusSnapshot {
    std::int64_t epoch = 0; // day index since simulation origin
    std::vector<HsDirRelay> relays;

    /// Sorts by fingerprint and rejects duplicates.
    void normalize();
};

/// A decoy hidden service. The address is derived, never stored.
struct HonionSpec {
    std::array<std::uint8_t, 10> identifier{}; // 80-bit service identifier
    std::uint8_t permanent_id_byte = 0;
    std::optional<std::array<std::uint8_t, 16>> descriptor_cookie;
    Schedule schedule = Schedule::Daily;
    std::int64_t created_at = 0; // seconds
    std::int64_t lifetime = kSecondsPerDay;

    /// base-32 of the identifier: the 16-character .onion hostname.
    std::string onion_address() const;

    bool alive_at(std::int64_t t) const {
        return t >= created_at && t < created_at + lifetime;
    }
};

struct DescriptorId {
    Fingerprint value;
    int replica = 0; // 0 or 1
    std::int64_t time_period = 0;
};

struct PlacementHost {
    Fingerprint fingerprint;
    std::string label;

    auto operator<=>(const PlacementHost&) const = default;
};

/// Which relays host a honion's two descriptors during one time period.
struct PlacementRecord {
    std::string onion_address;
    Schedule schedule = Schedule::Daily;
    std::int64_t epoch = 0;
    std::vector<PlacementHost> hsdirs; // union of both replicas, deduplicated, sorted
    std::int64_t valid_from = 0;
    std::int64_t valid_until = 0;
};

/// floor((current_time + floor(permanent_id_byte * 86400 / 256)) / 86400).
/// The inner product is divided last, in integers.
std::int64_t compute_time_period(std::int64_t current_time, std::uint8_t permanent_id_byte);

/// value = SHA1(identifier || SHA1(time_period_be32 || cookie16? || replica_byte)).
DescriptorId compute_descriptor_id(const std::array<std::uint8_t, 10>& identifier,
                                   std::int64_t time_period,
                                   const std::optional<std::array<std::uint8_t, 16>>& cookie,
                                   int replica);

/// The three consecutive relays starting at the first fingerprint >= d.value,
/// wrapping to the ring start when d exceeds every fingerprint. A descriptor
/// equal to a fingerprint lands on that relay.
std::array<HsDirRelay, 3> place_descriptor(const DescriptorId& d, const ConsensusSnapshot& c);

/// Union of both replica placements at time t. 3 <= |hsdirs| <= 6.
PlacementRecord responsible_hsdirs(const HonionSpec& h, const ConsensusSnapshot& c, std::int64_t t);

} // namespace honion
