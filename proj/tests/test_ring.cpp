// Licensed under the Apache License 2.0 (see LICENSE file).

#include <set>

#include "doctest.h"

#include "honion/error.hpp"
#include "honion/ring.hpp"
#include "honion/rng.hpp"

using namespace honion;

namespace {

ConsensusSnapshot small_ring(std::initializer_list<std::uint64_t> values) {
    ConsensusSnapshot c;
    std::uint64_t i = 0;
    for (std::uint64_t v : values) {
        c.relays.push_back({Fingerprint::from_uint(v), "relay-" + std::to_string(i++), {}});
    }
    c.normalize();
    return c;
}

DescriptorId descriptor_at(std::uint64_t v) {
    DescriptorId d;
    d.value = Fingerprint::from_uint(v);
    return d;
}

} // namespace

TEST_CASE("fingerprint text form round-trips") {
    Rng rng(7);
    for (int i = 0; i < 200; ++i) {
        Fingerprint fp;
        rng.fill(fp.bytes.data(), fp.bytes.size());
        CHECK(Fingerprint::parse(fp.hex()) == fp);
    }
    CHECK(Fingerprint::parse("00112233445566778899AABBCCDDEEFF00112233").hex() ==
          "00112233445566778899aabbccddeeff00112233");
    CHECK_THROWS_AS(Fingerprint::parse("zz"), Error);
    CHECK_THROWS_AS(Fingerprint::parse(std::string(40, 'g')), Error);
}

TEST_CASE("fingerprint order is numeric") {
    CHECK(Fingerprint::from_uint(10) < Fingerprint::from_uint(20));
    CHECK(Fingerprint::from_uint(0xffffffffull) < Fingerprint::from_top64(1));
}

TEST_CASE("time period arithmetic") {
    CHECK(compute_time_period(86400, 0) == 1);
    CHECK(compute_time_period(0, 0) == 0);
    // offset = floor(255*86400/256) = 86062; floor((86000+86062)/86400) = 1
    CHECK(compute_time_period(86000, 255) == 1);
    CHECK(compute_time_period(86399, 0) == 0);
    CHECK_THROWS_AS(compute_time_period(-1, 0), Error);
}

TEST_CASE("descriptor id derivation") {
    const std::array<std::uint8_t, 10> ident = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};

    SUBCASE("deterministic") {
        const auto a = compute_descriptor_id(ident, 17532, std::nullopt, 0);
        const auto b = compute_descriptor_id(ident, 17532, std::nullopt, 0);
        CHECK(a.value == b.value);
    }

    SUBCASE("replicas differ") {
        const auto a = compute_descriptor_id(ident, 17532, std::nullopt, 0);
        const auto b = compute_descriptor_id(ident, 17532, std::nullopt, 1);
        CHECK(a.value != b.value);
    }

    SUBCASE("known-answer vectors, frozen from a reference SHA-1 tool") {
        CHECK(compute_descriptor_id(ident, 17532, std::nullopt, 0).value.hex() ==
              "722b5f74443823f506dce74e038352bc3680e6ce");
        CHECK(compute_descriptor_id(ident, 17532, std::nullopt, 1).value.hex() ==
              "4aa87abdb3578f5afbcf1441e41e1e06b3a2b4c6");
        std::array<std::uint8_t, 16> cookie;
        for (std::size_t i = 0; i < cookie.size(); ++i) {
            cookie[i] = static_cast<std::uint8_t>(0xaa + 0x11 * (i % 4));
        }
        CHECK(compute_descriptor_id(ident, 17532, cookie, 0).value.hex() ==
              "126050d18a4cfd8246cb6486c4315ee5b6f69463");
        CHECK(compute_descriptor_id(ident, 17532, cookie, 1).value.hex() ==
              "9ad08ef1fe885303b2a63f7d8b706428c2149229");
    }

    SUBCASE("replica range is checked") {
        CHECK_THROWS_AS(compute_descriptor_id(ident, 0, std::nullopt, 2), Error);
    }
}

TEST_CASE("onion address is the base-32 identifier") {
    HonionSpec h;
    h.identifier = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
    CHECK(h.onion_address() == "aaaqeayeaudaocaj");
    CHECK(h.onion_address().size() == 16);
}

TEST_CASE("descriptor placement on the ring") {
    const auto c = small_ring({10, 20, 30, 40, 50});

    SUBCASE("first fingerprint at or above the id") {
        const auto relays = place_descriptor(descriptor_at(25), c);
        CHECK(relays[0].fingerprint == Fingerprint::from_uint(30));
        CHECK(relays[1].fingerprint == Fingerprint::from_uint(40));
        CHECK(relays[2].fingerprint == Fingerprint::from_uint(50));
    }

    SUBCASE("wraparound past the highest fingerprint") {
        const auto relays = place_descriptor(descriptor_at(55), c);
        CHECK(relays[0].fingerprint == Fingerprint::from_uint(10));
        CHECK(relays[1].fingerprint == Fingerprint::from_uint(20));
        CHECK(relays[2].fingerprint == Fingerprint::from_uint(30));
    }

    SUBCASE("equal fingerprint takes the descriptor") {
        const auto tiny = small_ring({10, 20, 30});
        const auto relays = place_descriptor(descriptor_at(10), tiny);
        CHECK(relays[0].fingerprint == Fingerprint::from_uint(10));
        CHECK(relays[1].fingerprint == Fingerprint::from_uint(20));
        CHECK(relays[2].fingerprint == Fingerprint::from_uint(30));
    }

    SUBCASE("too-small consensus is rejected") {
        const auto tiny = small_ring({10, 20});
        CHECK_THROWS_AS(place_descriptor(descriptor_at(5), tiny), Error);
    }
}

TEST_CASE("placement window is contiguous on the ring") {
    Rng rng(99);
    ConsensusSnapshot c;
    for (int i = 0; i < 40; ++i) {
        HsDirRelay r;
        rng.fill(r.fingerprint.bytes.data(), r.fingerprint.bytes.size());
        r.label = "r" + std::to_string(i);
        c.relays.push_back(std::move(r));
    }
    c.normalize();

    for (int trial = 0; trial < 200; ++trial) {
        DescriptorId d;
        rng.fill(d.value.bytes.data(), d.value.bytes.size());
        const auto relays = place_descriptor(d, c);
        // locate the first relay, then expect the next two ring positions
        std::size_t k = c.relays.size();
        for (std::size_t i = 0; i < c.relays.size(); ++i) {
            if (c.relays[i].fingerprint == relays[0].fingerprint) {
                k = i;
                break;
            }
        }
        REQUIRE(k < c.relays.size());
        CHECK(relays[1].fingerprint == c.relays[(k + 1) % c.relays.size()].fingerprint);
        CHECK(relays[2].fingerprint == c.relays[(k + 2) % c.relays.size()].fingerprint);
    }
}

TEST_CASE("responsible relays for both replicas") {
    HonionSpec h;
    h.identifier = {9, 8, 7, 6, 5, 4, 3, 2, 1, 0};
    h.permanent_id_byte = h.identifier[0];

    SUBCASE("a four-relay ring forces the windows to overlap") {
        const auto c = small_ring({100, 200, 300, 400});
        const auto rec = responsible_hsdirs(h, c, 0);
        CHECK(rec.hsdirs.size() >= 3);
        CHECK(rec.hsdirs.size() < 6); // two 3-windows in a 4-ring must share relays
        std::set<std::string> labels;
        for (const auto& host : rec.hsdirs) {
            labels.insert(host.label);
        }
        CHECK(labels.size() == rec.hsdirs.size());
    }

    SUBCASE("placement records carry the time-period window") {
        const auto c = small_ring({100, 200, 300, 400, 500, 600, 700, 800});
        const std::int64_t t = 5 * kSecondsPerDay + 1234;
        const auto rec = responsible_hsdirs(h, c, t);
        CHECK(rec.valid_from <= t);
        CHECK(t < rec.valid_until);
        CHECK(rec.valid_until - rec.valid_from == kSecondsPerDay);
    }

    SUBCASE("same time period, same placement; new day moves it") {
        Rng rng(5);
        ConsensusSnapshot c;
        for (int i = 0; i < 64; ++i) {
            HsDirRelay r;
            rng.fill(r.fingerprint.bytes.data(), r.fingerprint.bytes.size());
            r.label = "r" + std::to_string(i);
            c.relays.push_back(std::move(r));
        }
        c.normalize();

        h.permanent_id_byte = 0;
        const auto a = responsible_hsdirs(h, c, 1000);
        const auto b = responsible_hsdirs(h, c, 80000); // same day
        CHECK(a.hsdirs == b.hsdirs);

        bool moved = false;
        for (int day = 1; day <= 4 && !moved; ++day) {
            HonionSpec again = h;
            const auto next = responsible_hsdirs(again, c, day * kSecondsPerDay + 1000);
            moved = next.hsdirs != a.hsdirs;
        }
        CHECK(moved);
    }
}

TEST_CASE("hosting frequency approaches 6/N on a random ring") {
    // 10,000 honions over 300 relays; the mean per-honion host count divided
    // by N estimates the chance a given relay hosts a given honion.
    Rng rng('f');
    ConsensusSnapshot c;
    for (int i = 0; i < 300; ++i) {
        HsDirRelay r;
        rng.fill(r.fingerprint.bytes.data(), r.fingerprint.bytes.size());
        r.label = "r" + std::to_string(i);
        c.relays.push_back(std::move(r));
    }
    c.normalize();

    std::int64_t host_slots = 0;
    const int honions = 10000;
    for (int i = 0; i < honions; ++i) {
        HonionSpec h;
        rng.fill(h.identifier.data(), h.identifier.size());
        h.permanent_id_byte = h.identifier[0];
        host_slots += static_cast<std::int64_t>(responsible_hsdirs(h, c, 0).hsdirs.size());
    }
    const double per_relay = static_cast<double>(host_slots) / honions / 300.0;
    const double expected = 6.0 / 300.0;
    CHECK(per_relay > expected * 0.8);
    CHECK(per_relay < expected * 1.2);
}
