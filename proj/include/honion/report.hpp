// Licensed under the Apache License 2.0 (see LICENSE file).

#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "honion/detect.hpp"
#include "honion/graph.hpp"

namespace honion {

enum class ProbeKind {
    AutomatedRoot, // bare "/" fetch
    ManualBrowser, // favicon request paired with a page request the same day
    Crawler,
    AttackProbe,
    StatusProbe,
    Other,
};

std::string to_string(ProbeKind k);

struct VisitClassification {
    std::size_t visit = 0; // index into the visit list
    ProbeKind probe_kind = ProbeKind::Other;
    std::string matched_signature;
};

struct SnooperProfile {
    std::string label;
    Fingerprint fingerprint;
    std::int64_t first_visit_day = 0;
    std::int64_t last_visit_day = 0;
    std::vector<std::int64_t> latency_days; // visit day minus earliest hosting day, per visit
    double median_latency = 0;
    bool immediate = false; // median latency <= 1 day
    std::set<Schedule> schedules_hit;
    std::int64_t explained_instances = 0;
    std::int64_t explained_visits = 0;
    std::map<std::int64_t, std::int64_t> visits_by_day; // explained visits per day
};

/// Keeps the earliest visit per (onion address, UTC day); survivors stay in
/// stream order. Idempotent.
std::vector<VisitRecord> dedup_daily(const std::vector<VisitRecord>& visits);

/// One ProbeKind per visit, from case-insensitive substring signatures over
/// the percent-decoded path+query.
std::vector<VisitClassification> classify_requests(const std::vector<VisitRecord>& visits);

/// Latency distribution and immediate/delayed category for every relay in the
/// explaining set.
std::vector<SnooperProfile> profile_snoopers(const AttributionGraph& g, const DetectionResult& r,
                                             const std::vector<PlacementRecord>& placements,
                                             const std::vector<VisitRecord>& visits);

enum class ReportFormat { Json, Csv };

struct ReportBundle {
    std::vector<SnooperProfile> profiles;
    std::vector<VisitClassification> classifications;
    std::vector<VisitRecord> visits;
    std::vector<PlacementRecord> placements;
    std::map<std::string, std::vector<std::string>> relay_tags; // label -> tags
};

/// Writes the summary tables (suspects, tag breakdown, daily visit counts per
/// schedule, per-relay time series, classification counts) under out_dir.
/// Deterministic column and row order.
void emit_report(const ReportBundle& bundle, ReportFormat format, const std::string& out_dir);

} // namespace honion
