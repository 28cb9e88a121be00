// Licensed under the Apache License 2.0 (see LICENSE file).

#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <unistd.h>

#include "doctest.h"

#include "honion/report.hpp"
#include "honion/rng.hpp"

using namespace honion;

namespace {

VisitRecord visit(const std::string& onion, std::int64_t day, double offset,
                  const std::string& path = "/") {
    VisitRecord v;
    v.onion_address = onion;
    v.timestamp = static_cast<double>(day * kSecondsPerDay) + offset;
    v.request_path = path;
    v.is_favicon = path == "/favicon.ico";
    return v;
}

ProbeKind classify_one(const std::string& path) {
    const auto out = classify_requests({visit("ho", 0, 1.0, path)});
    REQUIRE(out.size() == 1);
    return out[0].probe_kind;
}

} // namespace

TEST_CASE("daily dedup keeps the earliest visit per honion and day") {
    const std::vector<VisitRecord> visits = {
        visit("h1", 0, 300.0),
        visit("h1", 0, 100.0),
        visit("h1", 0, 200.0),
        visit("h1", 1, 50.0),
    };
    const auto deduped = dedup_daily(visits);
    REQUIRE(deduped.size() == 2);
    CHECK(deduped[0].timestamp == doctest::Approx(100.0));
    CHECK(deduped[1].timestamp == doctest::Approx(1 * kSecondsPerDay + 50.0));
}

TEST_CASE("dedup is idempotent and matches an independent recount") {
    Rng rng(606);
    std::vector<VisitRecord> visits;
    for (int i = 0; i < 1000; ++i) {
        const auto onion = "h" + std::to_string(rng.below(17));
        const auto day = static_cast<std::int64_t>(rng.below(9));
        visits.push_back(visit(onion, day, rng.unit() * 86000.0));
    }
    const auto once = dedup_daily(visits);
    const auto twice = dedup_daily(once);
    REQUIRE(once.size() == twice.size());
    for (std::size_t i = 0; i < once.size(); ++i) {
        CHECK(once[i].timestamp == twice[i].timestamp);
    }

    // independent grouping pass
    std::set<std::pair<std::string, std::int64_t>> distinct;
    for (const VisitRecord& v : visits) {
        distinct.insert({v.onion_address, v.day()});
    }
    CHECK(once.size() == distinct.size());

    // stream order preserved
    double prev = -1.0;
    std::map<std::pair<std::string, std::int64_t>, double> earliest;
    for (const VisitRecord& v : visits) {
        auto [it, fresh] = earliest.emplace(std::make_pair(v.onion_address, v.day()), v.timestamp);
        if (!fresh && v.timestamp < it->second) it->second = v.timestamp;
    }
    (void)prev;
    for (const VisitRecord& v : once) {
        CHECK(v.timestamp == earliest.at({v.onion_address, v.day()}));
    }
}

TEST_CASE("request classification signatures") {
    CHECK(classify_one("/") == ProbeKind::AutomatedRoot);
    CHECK(classify_one("/server-status") == ProbeKind::StatusProbe);
    CHECK(classify_one("/robots.txt") == ProbeKind::Crawler);
    CHECK(classify_one("/sitemap.xml") == ProbeKind::Crawler);
    CHECK(classify_one("/index?file=../../etc/passwd") == ProbeKind::AttackProbe);
    CHECK(classify_one("/q?union=select+information_schema.tables") == ProbeKind::AttackProbe);
    CHECK(classify_one("/admin/views/ajax/autocomplete/user/a") == ProbeKind::AttackProbe);
    CHECK(classify_one("/download?f=boot.ini") == ProbeKind::AttackProbe);
    CHECK(classify_one("/rails/info/properties") == ProbeKind::AttackProbe);
    CHECK(classify_one("/index.php?=PHPE9568F34-D428-11d2-A769-00AA001ACF42") ==
          ProbeKind::AttackProbe);
    CHECK(classify_one("/description.json") == ProbeKind::Other);
    CHECK(classify_one("/some/page") == ProbeKind::Other);

    SUBCASE("matching is case-insensitive and percent-decoded") {
        CHECK(classify_one("/x?p=%2Fetc%2Fpasswd") == ProbeKind::AttackProbe);
        CHECK(classify_one("/ROBOTS.TXT") == ProbeKind::Crawler);
        CHECK(classify_one("/Server-Status") == ProbeKind::StatusProbe);
    }

    SUBCASE("every visit gets exactly one kind") {
        std::vector<VisitRecord> visits;
        const char* paths[] = {"/", "/favicon.ico", "/robots.txt", "/x", "/etc/passwd"};
        for (int day = 0; day < 3; ++day) {
            for (const char* p : paths) {
                visits.push_back(visit("ho", day, 10.0 + visits.size(), p));
            }
        }
        const auto out = classify_requests(visits);
        CHECK(out.size() == visits.size());
        for (std::size_t i = 0; i < out.size(); ++i) {
            CHECK(out[i].visit == i);
        }
    }
}

TEST_CASE("favicon pairing marks manual browsing") {
    SUBCASE("favicon next to a page fetch") {
        const std::vector<VisitRecord> visits = {
            visit("ho", 2, 100.0, "/"),
            visit("ho", 2, 101.0, "/favicon.ico"),
        };
        const auto out = classify_requests(visits);
        CHECK(out[0].probe_kind == ProbeKind::AutomatedRoot);
        CHECK(out[1].probe_kind == ProbeKind::ManualBrowser);
    }

    SUBCASE("favicon alone stays unclassified") {
        CHECK(classify_one("/favicon.ico") == ProbeKind::Other);
    }

    SUBCASE("pairing does not cross days or honions") {
        const std::vector<VisitRecord> visits = {
            visit("ho", 1, 100.0, "/"),
            visit("ho", 2, 100.0, "/favicon.ico"),
            visit("other", 2, 50.0, "/"),
        };
        const auto out = classify_requests(visits);
        CHECK(out[1].probe_kind == ProbeKind::Other);
    }
}

namespace {

// A two-relay scene: relay "fast" visited the day it first hosted, relay
// "slow" ten days after.
struct ProfileScene {
    AttributionGraph g;
    DetectionResult r;
    std::vector<PlacementRecord> placements;
    std::vector<VisitRecord> visits;

    ProfileScene() {
        g.hsdirs = {{Fingerprint::from_uint(1), "fast"}, {Fingerprint::from_uint(2), "slow"}};

        PlacementRecord a;
        a.onion_address = "ho-a";
        a.schedule = Schedule::Daily;
        a.epoch = 0;
        a.hsdirs = {{Fingerprint::from_uint(1), "fast"}};
        PlacementRecord b;
        b.onion_address = "ho-b";
        b.schedule = Schedule::Monthly;
        b.epoch = 3;
        b.hsdirs = {{Fingerprint::from_uint(2), "slow"}};
        PlacementRecord b2 = b;
        b2.epoch = 13;
        placements = {a, b, b2};

        visits = {visit("ho-a", 0, 60.0), visit("ho-b", 13, 60.0)};

        HonionInstance ia;
        ia.id = "ho-a@0";
        ia.onion_address = "ho-a";
        ia.visit_ids = {0};
        HonionInstance ib;
        ib.id = "ho-b@13";
        ib.onion_address = "ho-b";
        ib.visit_ids = {1};
        g.instances = {ia, ib};
        g.edges = {{0}, {1}};

        r.method = CoverMethod::Exact;
        r.explaining_set = {0, 1};
        r.per_relay_explained = {1, 1};
    }
};

} // namespace

TEST_CASE("snooper profiles separate immediate from delayed") {
    ProfileScene scene;
    const auto profiles = profile_snoopers(scene.g, scene.r, scene.placements, scene.visits);
    REQUIRE(profiles.size() == 2);

    const auto& fast = profiles[0].label == "fast" ? profiles[0] : profiles[1];
    const auto& slow = profiles[0].label == "fast" ? profiles[1] : profiles[0];

    CHECK(fast.immediate);
    CHECK(fast.median_latency == doctest::Approx(0.0));
    CHECK(fast.schedules_hit == std::set<Schedule>{Schedule::Daily});
    CHECK(fast.first_visit_day == 0);

    CHECK(!slow.immediate);
    CHECK(slow.median_latency == doctest::Approx(10.0)); // hosted day 3, visited day 13
    CHECK(slow.schedules_hit == std::set<Schedule>{Schedule::Monthly});
    CHECK(slow.visits_by_day.at(13) == 1);
}

TEST_CASE("category flips only when the median crosses one day") {
    // medians: {0,0,5} -> 0 (immediate); bump one 0 to 2: {0,2,5} -> 2 (delayed)
    const auto median_of = [](std::vector<std::int64_t> v) {
        std::sort(v.begin(), v.end());
        const std::size_t n = v.size();
        return n % 2 == 1 ? static_cast<double>(v[n / 2])
                          : (static_cast<double>(v[n / 2 - 1]) + static_cast<double>(v[n / 2])) / 2.0;
    };
    std::vector<std::int64_t> base = {0, 0, 5};
    CHECK(median_of(base) <= 1.0);
    std::vector<std::int64_t> bumped = {0, 2, 5};
    CHECK(median_of(bumped) > 1.0);
    // perturbing a non-median sample does not flip the category
    std::vector<std::int64_t> tail = {0, 0, 9};
    CHECK(median_of(tail) <= 1.0);
}

TEST_CASE("report emission round-trips through CSV") {
    ProfileScene scene;
    ReportBundle bundle;
    bundle.profiles = profile_snoopers(scene.g, scene.r, scene.placements, scene.visits);
    bundle.classifications = classify_requests(scene.visits);
    bundle.visits = scene.visits;
    bundle.placements = scene.placements;
    bundle.relay_tags = {{"fast", {"cloud"}}, {"slow", {"cloud", "exit"}}};

    const auto dir = std::filesystem::temp_directory_path() /
                     ("honion-report-" + std::to_string(::getpid()));
    emit_report(bundle, ReportFormat::Csv, dir.string());

    const auto read_lines = [&](const char* name) {
        std::ifstream in(dir / name);
        REQUIRE(in);
        std::vector<std::string> lines;
        std::string line;
        while (std::getline(in, line)) lines.push_back(line);
        return lines;
    };

    const auto suspects = read_lines("suspects.csv");
    REQUIRE(suspects.size() == 3);
    CHECK(suspects[0] ==
          "label,fingerprint,explained_instances,explained_visits,high_confidence,category,"
          "median_latency_days,first_visit_day,last_visit_day,schedules_hit");
    bool saw_fast = false, saw_slow = false;
    for (std::size_t i = 1; i < suspects.size(); ++i) {
        saw_fast |= suspects[i].find("fast") == 0 && suspects[i].find("immediate") != std::string::npos;
        saw_slow |= suspects[i].find("slow") == 0 && suspects[i].find(",delayed,") != std::string::npos;
    }
    CHECK(saw_fast);
    CHECK(saw_slow);

    const auto tags = read_lines("tag_breakdown.csv");
    REQUIRE(tags.size() == 2);
    CHECK(tags[0] == "cloud,exit,cloud_and_exit,neither");
    CHECK(tags[1] == "2,1,1,0");

    const auto days = read_lines("daily_visits.csv");
    CHECK(days[0] == "day,daily,weekly,monthly,unknown,total");
    CHECK(days.size() == 3); // day 0 and day 13

    const auto counts = read_lines("classification_counts.csv");
    CHECK(counts.size() == 7); // header + six kinds, always all six

    std::filesystem::remove_all(dir);
}

TEST_CASE("empty inputs produce headers-only files") {
    ReportBundle bundle;
    const auto dir = std::filesystem::temp_directory_path() /
                     ("honion-report-empty-" + std::to_string(::getpid()));
    emit_report(bundle, ReportFormat::Csv, dir.string());
    std::ifstream in(dir / "suspects.csv");
    REQUIRE(in);
    std::string line;
    int lines = 0;
    while (std::getline(in, line)) ++lines;
    CHECK(lines == 1);
    std::filesystem::remove_all(dir);
}
