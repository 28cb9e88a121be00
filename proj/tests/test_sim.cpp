// Licensed under the Apache License 2.0 (see LICENSE file).

#include <map>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "doctest.h"

#include "honion/error.hpp"
#include "honion/sim.hpp"

using namespace honion;

namespace {

SimulationConfig base_config() {
    SimulationConfig cfg;
    cfg.seed = 42;
    cfg.n_hsdirs = 120;
    cfg.n_days = 5;
    cfg.honions_daily = 60;
    return cfg;
}

} // namespace

TEST_CASE("snooper decisions") {
    Rng rng(1);
    std::vector<LearnedHonion> learned = {
        {"h1", 2, std::nullopt},
        {"h2", 5, std::nullopt},
        {"h3", 3, std::nullopt},
    };

    SUBCASE("immediate visits what it learned today") {
        SnooperModel m;
        m.kind = SnooperKind::PersistentImmediate;
        CHECK(snooper_decide(m, learned, 5, rng) == std::vector<std::string>{"h2"});
        CHECK(snooper_decide(m, {{"h1", 5, {}}, {"h2", 5, {}}}, 5, rng) ==
              std::vector<std::string>{"h1", "h2"});
    }

    SUBCASE("delayed shifts by the configured offset") {
        SnooperModel m;
        m.kind = SnooperKind::PersistentDelayed;
        m.delay_days = 3;
        CHECK(snooper_decide(m, learned, 5, rng) == std::vector<std::string>{"h1"});
        CHECK(snooper_decide(m, {{"h1", 3, {}}}, 5, rng).empty());
    }

    SUBCASE("repeat flag keeps probing after the delay") {
        SnooperModel m;
        m.kind = SnooperKind::PersistentDelayed;
        m.delay_days = 1;
        m.repeat_daily = true;
        CHECK(snooper_decide(m, learned, 6, rng) == std::vector<std::string>{"h1", "h2", "h3"});
    }

    SUBCASE("randomized delay hits the configured frequency") {
        SnooperModel m;
        m.kind = SnooperKind::RandomizedDeterministicDelay;
        m.delay_days = 2;
        m.visit_probability = 0.5;
        int hits = 0;
        const int trials = 10000;
        for (int i = 0; i < trials; ++i) {
            hits += snooper_decide(m, {{"h1", 3, {}}}, 5, rng).size();
        }
        CHECK(static_cast<double>(hits) / trials == doctest::Approx(0.5).epsilon(0.04));
        // wrong day: never
        CHECK(snooper_decide(m, {{"h1", 3, {}}}, 6, rng).empty());
    }

    SUBCASE("probabilistic honours the delay planned at learn time") {
        SnooperModel m;
        m.kind = SnooperKind::Probabilistic;
        m.delay_distribution = {{0, 0.2}, {4, 0.5}};
        CHECK(snooper_decide(m, {{"h1", 3, 4}}, 7, rng) == std::vector<std::string>{"h1"});
        CHECK(snooper_decide(m, {{"h1", 3, 4}}, 6, rng).empty());
        CHECK(snooper_decide(m, {{"h1", 3, std::nullopt}}, 7, rng).empty());
    }
}

TEST_CASE("immediate equals delayed-by-zero with certainty") {
    SnooperModel immediate;
    immediate.kind = SnooperKind::PersistentImmediate;
    SnooperModel delayed0;
    delayed0.kind = SnooperKind::PersistentDelayed;
    delayed0.delay_days = 0;
    SnooperModel random1;
    random1.kind = SnooperKind::RandomizedDeterministicDelay;
    random1.delay_days = 0;
    random1.visit_probability = 1.0;

    Rng gen(321);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<LearnedHonion> learned;
        const int n = 1 + static_cast<int>(gen.below(8));
        for (int i = 0; i < n; ++i) {
            learned.push_back({"h" + std::to_string(gen.below(5)),
                               static_cast<std::int64_t>(gen.below(10)), std::nullopt});
        }
        const auto today = static_cast<std::int64_t>(gen.below(10));
        Rng r1(1), r2(1), r3(1);
        const auto a = snooper_decide(immediate, learned, today, r1);
        const auto b = snooper_decide(delayed0, learned, today, r2);
        const auto c = snooper_decide(random1, learned, today, r3);
        CHECK(a == b);
        CHECK(a == c);
    }
}

TEST_CASE("planned delays follow the distribution") {
    SnooperModel m;
    m.kind = SnooperKind::Probabilistic;
    m.delay_distribution = {{0, 0.25}, {3, 0.25}}; // residual half never visits
    Rng rng(77);
    std::map<int, int> counts;
    int never = 0;
    const int trials = 20000;
    for (int i = 0; i < trials; ++i) {
        const auto d = plan_visit_delay(m, rng);
        if (d) {
            ++counts[*d];
        } else {
            ++never;
        }
    }
    CHECK(static_cast<double>(counts[0]) / trials == doctest::Approx(0.25).epsilon(0.08));
    CHECK(static_cast<double>(counts[3]) / trials == doctest::Approx(0.25).epsilon(0.08));
    CHECK(static_cast<double>(never) / trials == doctest::Approx(0.5).epsilon(0.06));
}

TEST_CASE("churn replaces the requested fraction") {
    Rng rng(9);
    const ConsensusSnapshot c = generate_consensus(100, RingTopology::Random, rng);

    SUBCASE("zero fraction is the identity, epoch aside") {
        const ConsensusSnapshot next = apply_churn(c, 0.0, rng);
        CHECK(next.epoch == c.epoch + 1);
        REQUIRE(next.relays.size() == c.relays.size());
        for (std::size_t i = 0; i < c.relays.size(); ++i) {
            CHECK(next.relays[i].fingerprint == c.relays[i].fingerprint);
        }
    }

    SUBCASE("half the ring is replaced") {
        const ConsensusSnapshot next = apply_churn(c, 0.5, rng);
        CHECK(next.relays.size() == 100);
        std::set<std::string> before;
        for (const HsDirRelay& r : c.relays) before.insert(r.label);
        int fresh = 0;
        for (const HsDirRelay& r : next.relays) {
            if (!before.count(r.label)) ++fresh;
        }
        CHECK(fresh == 50);
        // still sorted
        for (std::size_t i = 1; i < next.relays.size(); ++i) {
            CHECK(next.relays[i - 1].fingerprint < next.relays[i].fingerprint);
        }
    }
}

TEST_CASE("simulation config validation") {
    SimulationConfig cfg = base_config();
    CHECK_NOTHROW(cfg.validate());

    SUBCASE("dimensions") {
        cfg.n_days = 0;
        CHECK_THROWS_AS(run_simulation(cfg), Error);
    }
    SUBCASE("churn range") {
        cfg.relay_churn = 1.0;
        CHECK_THROWS_AS(run_simulation(cfg), Error);
    }
    SUBCASE("unknown snooper label") {
        cfg.snoopers["no-such-relay"] = {};
        CHECK_THROWS_AS(run_simulation(cfg), Error);
    }
    SUBCASE("bad distribution") {
        SnooperModel m;
        m.kind = SnooperKind::Probabilistic;
        m.delay_distribution = {{1, 0.9}, {2, 0.9}};
        cfg.snoopers["relay-00001"] = m;
        CHECK_THROWS_AS(run_simulation(cfg), Error);
    }
}

TEST_CASE("no snoopers means no visits") {
    const SimulationOutput out = run_simulation(base_config());
    CHECK(out.visits.empty());
    CHECK(out.truth.visits.empty());
    CHECK(out.consensus.size() == 5);
    CHECK(!out.placements.empty());
}

TEST_CASE("an immediate snooper produces attributed visits") {
    SimulationConfig cfg = base_config();
    cfg.snoopers["relay-00007"] = {}; // PersistentImmediate defaults
    const SimulationOutput out = run_simulation(cfg);
    REQUIRE(!out.visits.empty());
    for (const VisitRecord& v : out.visits) {
        CHECK(v.requester_tag == "relay-00007");
        CHECK(v.request_path == "/");
    }
    CHECK(out.truth.snoopers == std::vector<std::string>{"relay-00007"});
    CHECK(out.truth.visits.size() == out.visits.size());
}

TEST_CASE("delay interacts with honion lifetime") {
    SimulationConfig cfg = base_config();
    cfg.n_days = 14;
    cfg.honions_daily = 40;
    SnooperModel delayed;
    delayed.kind = SnooperKind::PersistentDelayed;
    delayed.delay_days = 10;
    cfg.snoopers["relay-00003"] = delayed;

    SUBCASE("daily honions expire before the delay elapses") {
        const SimulationOutput out = run_simulation(cfg);
        CHECK(out.visits.empty());
    }

    SUBCASE("monthly honions are still alive ten days later") {
        cfg.honions_daily = 0;
        cfg.honions_monthly = 40;
        const SimulationOutput out = run_simulation(cfg);
        REQUIRE(!out.visits.empty());
        // first hosted day per honion for the snooper
        std::unordered_map<std::string, std::int64_t> first_hosted;
        for (const PlacementRecord& p : out.placements) {
            for (const PlacementHost& h : p.hsdirs) {
                if (h.label != "relay-00003") continue;
                const auto it = first_hosted.find(p.onion_address);
                if (it == first_hosted.end() || p.epoch < it->second) {
                    first_hosted[p.onion_address] = p.epoch;
                }
            }
        }
        for (const VisitRecord& v : out.visits) {
            CHECK(v.day() - first_hosted.at(v.onion_address) == 10);
        }
    }
}

TEST_CASE("simulation runs are reproducible") {
    SimulationConfig cfg = base_config();
    cfg.relay_churn = 0.1;
    SnooperModel rnd;
    rnd.kind = SnooperKind::RandomizedDeterministicDelay;
    rnd.delay_days = 1;
    rnd.visit_probability = 0.6;
    cfg.snoopers["relay-00002"] = rnd;
    cfg.snoopers["relay-00011"] = {};

    const SimulationOutput a = run_simulation(cfg);
    const SimulationOutput b = run_simulation(cfg);
    REQUIRE(a.visits.size() == b.visits.size());
    for (std::size_t i = 0; i < a.visits.size(); ++i) {
        CHECK(a.visits[i].onion_address == b.visits[i].onion_address);
        CHECK(a.visits[i].timestamp == b.visits[i].timestamp);
        CHECK(a.visits[i].requester_tag == b.visits[i].requester_tag);
    }
    REQUIRE(a.placements.size() == b.placements.size());
    for (std::size_t i = 0; i < a.placements.size(); ++i) {
        CHECK(a.placements[i].onion_address == b.placements[i].onion_address);
        CHECK(a.placements[i].hsdirs == b.placements[i].hsdirs);
    }
}

TEST_CASE("visits are sound against placements and lifetimes") {
    SimulationConfig cfg = base_config();
    cfg.n_days = 21;
    cfg.honions_weekly = 30;
    cfg.relay_churn = 0.15;
    SnooperModel delayed;
    delayed.kind = SnooperKind::PersistentDelayed;
    delayed.delay_days = 2;
    cfg.snoopers["relay-00005"] = delayed;
    cfg.snoopers["relay-00017"] = {};

    const SimulationOutput out = run_simulation(cfg);

    // who hosted what, and when first
    std::map<std::pair<std::string, std::string>, std::int64_t> first_hosted;
    for (const PlacementRecord& p : out.placements) {
        for (const PlacementHost& h : p.hsdirs) {
            const auto key = std::make_pair(h.label, p.onion_address);
            const auto it = first_hosted.find(key);
            if (it == first_hosted.end() || p.epoch < it->second) {
                first_hosted[key] = p.epoch;
            }
        }
    }
    std::unordered_map<std::string, const HonionSpec*> specs;
    for (const HonionSpec& h : out.honions) {
        specs[h.onion_address()] = &h;
    }
    // per-day consensus membership
    std::vector<std::unordered_set<std::string>> members;
    for (const ConsensusSnapshot& c : out.consensus) {
        members.emplace_back();
        for (const HsDirRelay& r : c.relays) {
            members.back().insert(r.label);
        }
    }

    REQUIRE(out.truth.visits.size() == out.visits.size());
    for (std::size_t i = 0; i < out.visits.size(); ++i) {
        const VisitRecord& v = out.visits[i];
        const GroundTruthVisit& t = out.truth.visits[i];
        CHECK(t.onion_address == v.onion_address);
        // the requester hosted the honion no later than the visit
        const auto hosted = first_hosted.find({t.snooper, t.onion_address});
        REQUIRE(hosted != first_hosted.end());
        CHECK(hosted->second <= v.day());
        // the honion server was still up
        const HonionSpec* spec = specs.at(v.onion_address);
        CHECK(v.timestamp >= static_cast<double>(spec->created_at));
        CHECK(v.timestamp < static_cast<double>(spec->created_at + spec->lifetime));
        // a churned-away snooper cannot probe
        CHECK(members[static_cast<std::size_t>(v.day())].count(t.snooper));
    }
}

TEST_CASE("the true snooper set explains every visit") {
    SimulationConfig cfg = base_config();
    cfg.n_days = 10;
    cfg.snoopers["relay-00004"] = {};
    SnooperModel d;
    d.kind = SnooperKind::PersistentDelayed;
    d.delay_days = 1;
    cfg.snoopers["relay-00021"] = d;

    const SimulationOutput out = run_simulation(cfg);
    const std::set<std::string> truth(out.truth.snoopers.begin(), out.truth.snoopers.end());
    for (const GroundTruthVisit& v : out.truth.visits) {
        CHECK(truth.count(v.snooper));
    }
}
