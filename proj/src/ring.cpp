// Licensed under the Apache License 2.0 (see LICENSE file).

#include "honion/ring.hpp"

#include <algorithm>
#include <cstring>

#include <openssl/evp.h>

#include "honion/error.hpp"

namespace honion {

namespace {

std::array<std::uint8_t, 20> sha1(const std::uint8_t* data, std::size_t len) {
    std::array<std::uint8_t, 20> out{};
    unsigned int out_len = 0;
    if (EVP_Digest(data, len, out.data(), &out_len, EVP_sha1(), nullptr) != 1 || out_len != 20) {
        raise(ErrorCode::InvalidArgument, "SHA-1 digest failed");
    }
    return out;
}

} // namespace

std::int64_t schedule_lifetime(Schedule s) {
    switch (s) {
    case Schedule::Daily: return kSecondsPerDay;
    case Schedule::Weekly: return 7 * kSecondsPerDay;
    case Schedule::Monthly: return 30 * kSecondsPerDay;
    }
    raise(ErrorCode::InvalidArgument, "unknown schedule");
}

std::string to_string(Schedule s) {
    switch (s) {
    case Schedule::Daily: return "daily";
    case Schedule::Weekly: return "weekly";
    case Schedule::Monthly: return "monthly";
    }
    raise(ErrorCode::InvalidArgument, "unknown schedule");
}

Schedule schedule_from_string(std::string_view s) {
    if (s == "daily") return Schedule::Daily;
    if (s == "weekly") return Schedule::Weekly;
    if (s == "monthly") return Schedule::Monthly;
    raise(ErrorCode::Parse, "unknown schedule: " + std::string(s));
}

void ConsensusSnapshot::normalize() {
    std::sort(relays.begin(), relays.end(),
              [](const HsDirRelay& a, const HsDirRelay& b) { return a.fingerprint < b.fingerprint; });
    for (std::size_t i = 1; i < relays.size(); ++i) {
        if (relays[i].fingerprint == relays[i - 1].fingerprint) {
            raise(ErrorCode::Parse,
                  "duplicate relay fingerprint " + relays[i].fingerprint.hex());
        }
    }
}

std::string HonionSpec::onion_address() const {
    return base32_lower(identifier.data(), identifier.size());
}

std::int64_t compute_time_period(std::int64_t current_time, std::uint8_t permanent_id_byte) {
    if (current_time < 0) {
        raise(ErrorCode::InvalidArgument, "current_time must be non-negative");
    }
    // The product is divided last so the offset itself is floored.
    const std::int64_t offset =
        static_cast<std::int64_t>(permanent_id_byte) * kSecondsPerDay / 256;
    return (current_time + offset) / kSecondsPerDay;
}

DescriptorId compute_descriptor_id(const std::array<std::uint8_t, 10>& identifier,
                                   std::int64_t time_period,
                                   const std::optional<std::array<std::uint8_t, 16>>& cookie,
                                   int replica) {
    if (replica != 0 && replica != 1) {
        raise(ErrorCode::InvalidArgument, "replica must be 0 or 1");
    }
    // secret-id-part = SHA1(time_period_be32 || cookie16? || replica_byte)
    std::uint8_t inner[4 + 16 + 1];
    std::size_t n = 0;
    const auto tp = static_cast<std::uint32_t>(time_period);
    inner[n++] = static_cast<std::uint8_t>(tp >> 24);
    inner[n++] = static_cast<std::uint8_t>(tp >> 16);
    inner[n++] = static_cast<std::uint8_t>(tp >> 8);
    inner[n++] = static_cast<std::uint8_t>(tp);
    if (cookie) {
        std::memcpy(inner + n, cookie->data(), cookie->size());
        n += cookie->size();
    }
    inner[n++] = static_cast<std::uint8_t>(replica);
    const auto secret = sha1(inner, n);

    // descriptor-id = SHA1(identifier || secret-id-part)
    std::uint8_t outer[10 + 20];
    std::memcpy(outer, identifier.data(), identifier.size());
    std::memcpy(outer + 10, secret.data(), secret.size());

    DescriptorId id;
    id.value.bytes = sha1(outer, sizeof(outer));
    id.replica = replica;
    id.time_period = time_period;
    return id;
}

std::array<HsDirRelay, 3> place_descriptor(const DescriptorId& d, const ConsensusSnapshot& c) {
    const std::size_t n = c.relays.size();
    if (n < 3) {
        raise(ErrorCode::ConsensusTooSmall,
              "placement needs at least 3 relays, consensus has " + std::to_string(n));
    }
    // First relay whose fingerprint >= the descriptor id; equal fingerprints
    // take the descriptor. Past the end wraps to the ring start.
    const auto it = std::lower_bound(
        c.relays.begin(), c.relays.end(), d.value,
        [](const HsDirRelay& r, const Fingerprint& v) { return r.fingerprint < v; });
    const std::size_t k = it == c.relays.end() ? 0 : static_cast<std::size_t>(it - c.relays.begin());
    return {c.relays[k], c.relays[(k + 1) % n], c.relays[(k + 2) % n]};
}

PlacementRecord responsible_hsdirs(const HonionSpec& h, const ConsensusSnapshot& c, std::int64_t t) {
    const std::int64_t tp = compute_time_period(t, h.permanent_id_byte);
    const std::int64_t offset =
        static_cast<std::int64_t>(h.permanent_id_byte) * kSecondsPerDay / 256;

    PlacementRecord rec;
    rec.onion_address = h.onion_address();
    rec.schedule = h.schedule;
    rec.epoch = c.epoch;
    rec.valid_from = tp * kSecondsPerDay - offset;
    rec.valid_until = rec.valid_from + kSecondsPerDay;

    for (int replica = 0; replica < 2; ++replica) {
        const DescriptorId id = compute_descriptor_id(h.identifier, tp, h.descriptor_cookie, replica);
        for (const HsDirRelay& relay : place_descriptor(id, c)) {
            rec.hsdirs.push_back({relay.fingerprint, relay.label});
        }
    }
    std::sort(rec.hsdirs.begin(), rec.hsdirs.end());
    rec.hsdirs.erase(std::unique(rec.hsdirs.begin(), rec.hsdirs.end()), rec.hsdirs.end());
    return rec;
}

} // namespace honion
