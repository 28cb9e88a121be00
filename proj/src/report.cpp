// Licensed under the Apache License 2.0 (see LICENSE file).

#include "honion/report.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <unordered_map>

#include "json.hpp"

#include "honion/error.hpp"

namespace honion {

using nlohmann::json;

namespace {

std::string percent_decode(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '%' && i + 2 < s.size() && std::isxdigit(static_cast<unsigned char>(s[i + 1])) &&
            std::isxdigit(static_cast<unsigned char>(s[i + 2]))) {
            const auto hex = [](char c) {
                return c <= '9' ? c - '0' : (c | 0x20) - 'a' + 10;
            };
            out.push_back(static_cast<char>(hex(s[i + 1]) * 16 + hex(s[i + 2])));
            i += 2;
        } else {
            out.push_back(s[i]);
        }
    }
    return out;
}

std::string lowered(std::string s) {
    for (char& c : s) {
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    return s;
}

const std::vector<std::string> kAttackSignatures = {
    "information_schema.tables",
    "admin/views/ajax/autocomplete/user/",
    "boot.ini",
    "/etc/passwd",
    "rails/info/properties",
    "?=php",
};

} // namespace

std::string to_string(ProbeKind k) {
    switch (k) {
    case ProbeKind::AutomatedRoot: return "automated_root";
    case ProbeKind::ManualBrowser: return "manual_browser";
    case ProbeKind::Crawler: return "crawler";
    case ProbeKind::AttackProbe: return "attack_probe";
    case ProbeKind::StatusProbe: return "status_probe";
    case ProbeKind::Other: return "other";
    }
    raise(ErrorCode::InvalidArgument, "unknown probe kind");
}

std::vector<VisitRecord> dedup_daily(const std::vector<VisitRecord>& visits) {
    // Winner per (onion, day) is the earliest timestamp; first in stream on ties.
    std::map<std::pair<std::string, std::int64_t>, std::size_t> winner;
    for (std::size_t i = 0; i < visits.size(); ++i) {
        const auto key = std::make_pair(visits[i].onion_address, visits[i].day());
        const auto [it, inserted] = winner.emplace(key, i);
        if (!inserted && visits[i].timestamp < visits[it->second].timestamp) {
            it->second = i;
        }
    }
    std::vector<std::size_t> keep;
    keep.reserve(winner.size());
    for (const auto& [key, idx] : winner) {
        keep.push_back(idx);
    }
    std::sort(keep.begin(), keep.end());
    std::vector<VisitRecord> out;
    out.reserve(keep.size());
    for (std::size_t idx : keep) {
        out.push_back(visits[idx]);
    }
    return out;
}

std::vector<VisitClassification> classify_requests(const std::vector<VisitRecord>& visits) {
    // A favicon fetch next to a page fetch from the same honion on the same
    // day is browser behaviour, not a headless crawl.
    std::set<std::pair<std::string, std::int64_t>> page_days;
    for (const VisitRecord& v : visits) {
        if (!(v.is_favicon || v.request_path == "/favicon.ico")) {
            page_days.insert({v.onion_address, v.day()});
        }
    }

    std::vector<VisitClassification> out;
    out.reserve(visits.size());
    for (std::size_t i = 0; i < visits.size(); ++i) {
        const VisitRecord& v = visits[i];
        VisitClassification c;
        c.visit = i;

        if (v.is_favicon || v.request_path == "/favicon.ico") {
            if (page_days.count({v.onion_address, v.day()})) {
                c.probe_kind = ProbeKind::ManualBrowser;
                c.matched_signature = "favicon+page";
            } else {
                c.probe_kind = ProbeKind::Other;
                c.matched_signature = "favicon";
            }
            out.push_back(std::move(c));
            continue;
        }

        const std::string decoded = lowered(percent_decode(v.request_path));
        c.probe_kind = ProbeKind::Other;
        for (const std::string& sig : kAttackSignatures) {
            if (decoded.find(sig) != std::string::npos) {
                c.probe_kind = ProbeKind::AttackProbe;
                c.matched_signature = sig;
                break;
            }
        }
        if (c.probe_kind == ProbeKind::Other) {
            if (decoded.find("/server-status") != std::string::npos) {
                c.probe_kind = ProbeKind::StatusProbe;
                c.matched_signature = "/server-status";
            } else if (decoded.find("robots.txt") != std::string::npos) {
                c.probe_kind = ProbeKind::Crawler;
                c.matched_signature = "robots.txt";
            } else if (decoded.find("sitemap") != std::string::npos) {
                c.probe_kind = ProbeKind::Crawler;
                c.matched_signature = "sitemap";
            } else if (decoded == "/") {
                c.probe_kind = ProbeKind::AutomatedRoot;
                c.matched_signature = "/";
            }
        }
        out.push_back(std::move(c));
    }
    return out;
}

std::vector<SnooperProfile> profile_snoopers(const AttributionGraph& g, const DetectionResult& r,
                                             const std::vector<PlacementRecord>& placements,
                                             const std::vector<VisitRecord>& visits) {
    // Earliest day each relay hosted each honion, and each honion's schedule.
    std::map<std::pair<std::string, std::string>, std::int64_t> first_hosted;
    std::unordered_map<std::string, Schedule> schedule_of;
    for (const PlacementRecord& p : placements) {
        schedule_of.emplace(p.onion_address, p.schedule);
        for (const PlacementHost& h : p.hsdirs) {
            const auto key = std::make_pair(h.label, p.onion_address);
            const auto [it, inserted] = first_hosted.emplace(key, p.epoch);
            if (!inserted && p.epoch < it->second) {
                it->second = p.epoch;
            }
        }
    }

    std::vector<std::vector<std::uint32_t>> relay_instances(g.hsdirs.size());
    for (std::size_t i = 0; i < g.edges.size(); ++i) {
        for (std::uint32_t relay : g.edges[i]) {
            relay_instances[relay].push_back(static_cast<std::uint32_t>(i));
        }
    }

    std::vector<SnooperProfile> profiles;
    for (const SuspectRank& rank : rank_suspects(g, r)) {
        const GraphRelay& relay = g.hsdirs[rank.relay];
        SnooperProfile prof;
        prof.label = relay.label;
        prof.fingerprint = relay.fingerprint;
        prof.explained_instances = rank.explained_instances;
        prof.explained_visits = rank.explained_visits;

        bool any = false;
        for (std::uint32_t i : relay_instances[rank.relay]) {
            const HonionInstance& inst = g.instances[i];
            const auto sched = schedule_of.find(inst.onion_address);
            if (sched != schedule_of.end()) {
                prof.schedules_hit.insert(sched->second);
            }
            const auto hosted = first_hosted.find({relay.label, inst.onion_address});
            for (std::size_t vid : inst.visit_ids) {
                if (vid >= visits.size()) {
                    raise(ErrorCode::InvalidArgument,
                          "instance references a visit beyond the visit list");
                }
                const std::int64_t day = visits[vid].day();
                ++prof.visits_by_day[day];
                if (!any) {
                    prof.first_visit_day = prof.last_visit_day = day;
                    any = true;
                } else {
                    prof.first_visit_day = std::min(prof.first_visit_day, day);
                    prof.last_visit_day = std::max(prof.last_visit_day, day);
                }
                if (hosted != first_hosted.end()) {
                    prof.latency_days.push_back(day - hosted->second);
                }
            }
        }

        std::sort(prof.latency_days.begin(), prof.latency_days.end());
        if (!prof.latency_days.empty()) {
            const std::size_t n = prof.latency_days.size();
            prof.median_latency =
                n % 2 == 1 ? static_cast<double>(prof.latency_days[n / 2])
                           : (static_cast<double>(prof.latency_days[n / 2 - 1]) +
                              static_cast<double>(prof.latency_days[n / 2])) /
                                 2.0;
        }
        prof.immediate = prof.median_latency <= 1.0;
        profiles.push_back(std::move(prof));
    }
    return profiles;
}

namespace {

std::string csv_escape(const std::string& value) {
    if (value.find_first_of(",\"\n\r") == std::string::npos) {
        return value;
    }
    std::string out = "\"";
    for (char c : value) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out += "\"";
    return out;
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        raise(ErrorCode::Io, "cannot open for writing: " + path);
    }
    for (std::size_t i = 0; i < header.size(); ++i) {
        out << (i ? "," : "") << csv_escape(header[i]);
    }
    out << "\n";
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            out << (i ? "," : "") << csv_escape(row[i]);
        }
        out << "\n";
    }
    if (!out) {
        raise(ErrorCode::Io, "write failed: " + path);
    }
}

std::string format_double(double v) {
    json j = v;
    return j.dump();
}

std::string schedules_to_string(const std::set<Schedule>& s) {
    std::string out;
    for (Schedule sched : s) {
        out += (out.empty() ? "" : "|") + to_string(sched);
    }
    return out;
}

bool has_tag(const std::map<std::string, std::vector<std::string>>& tags, const std::string& label,
             const std::string& tag) {
    const auto it = tags.find(label);
    if (it == tags.end()) return false;
    return std::find(it->second.begin(), it->second.end(), tag) != it->second.end();
}

} // namespace

void emit_report(const ReportBundle& bundle, ReportFormat format, const std::string& out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    const auto at = [&](const char* name) {
        return (std::filesystem::path(out_dir) / name).string();
    };

    std::unordered_map<std::string, Schedule> schedule_of;
    for (const PlacementRecord& p : bundle.placements) {
        schedule_of.emplace(p.onion_address, p.schedule);
    }

    // Suspects table, ranked as the detector orders them.
    std::vector<std::vector<std::string>> suspect_rows;
    for (const SnooperProfile& p : bundle.profiles) {
        suspect_rows.push_back({p.label, p.fingerprint.hex(), std::to_string(p.explained_instances),
                                std::to_string(p.explained_visits),
                                p.explained_instances >= 2 ? "true" : "false",
                                p.immediate ? "immediate" : "delayed", format_double(p.median_latency),
                                std::to_string(p.first_visit_day), std::to_string(p.last_visit_day),
                                schedules_to_string(p.schedules_hit)});
    }

    // Cloud/exit mix of the explaining set. The counts overlap by design:
    // "cloud" and "exit" include relays carrying both tags.
    std::int64_t n_cloud = 0, n_exit = 0, n_both = 0, n_neither = 0;
    for (const SnooperProfile& p : bundle.profiles) {
        const bool cloud = has_tag(bundle.relay_tags, p.label, "cloud");
        const bool exit = has_tag(bundle.relay_tags, p.label, "exit");
        n_cloud += cloud;
        n_exit += exit;
        n_both += cloud && exit;
        n_neither += !cloud && !exit;
    }

    std::map<std::string, std::int64_t> tag_counts;
    for (const SnooperProfile& p : bundle.profiles) {
        const auto it = bundle.relay_tags.find(p.label);
        if (it == bundle.relay_tags.end()) continue;
        for (const std::string& tag : it->second) {
            ++tag_counts[tag];
        }
    }

    // Visit counts per day and schedule, raw and deduplicated.
    const auto count_by_day = [&](const std::vector<VisitRecord>& vs) {
        std::map<std::int64_t, std::map<std::string, std::int64_t>> table;
        for (const VisitRecord& v : vs) {
            auto& row = table[v.day()];
            const auto it = schedule_of.find(v.onion_address);
            ++row[it == schedule_of.end() ? "unknown" : to_string(it->second)];
            ++row["total"];
        }
        return table;
    };
    const auto daily_raw = count_by_day(bundle.visits);
    const auto daily_dedup = count_by_day(dedup_daily(bundle.visits));

    const auto day_rows = [](const std::map<std::int64_t, std::map<std::string, std::int64_t>>& t) {
        std::vector<std::vector<std::string>> rows;
        for (const auto& [day, counts] : t) {
            const auto get = [&](const char* k) {
                const auto it = counts.find(k);
                return std::to_string(it == counts.end() ? 0 : it->second);
            };
            rows.push_back({std::to_string(day), get("daily"), get("weekly"), get("monthly"),
                            get("unknown"), get("total")});
        }
        return rows;
    };

    std::vector<std::vector<std::string>> relay_day_rows;
    for (const SnooperProfile& p : bundle.profiles) {
        for (const auto& [day, count] : p.visits_by_day) {
            relay_day_rows.push_back({p.label, std::to_string(day), std::to_string(count)});
        }
    }

    std::map<std::string, std::int64_t> kind_counts = {
        {"automated_root", 0}, {"manual_browser", 0}, {"crawler", 0},
        {"attack_probe", 0},   {"status_probe", 0},   {"other", 0},
    };
    for (const VisitClassification& c : bundle.classifications) {
        ++kind_counts[to_string(c.probe_kind)];
    }

    std::vector<std::vector<std::string>> classification_rows;
    for (const VisitClassification& c : bundle.classifications) {
        const VisitRecord& v = bundle.visits.at(c.visit);
        classification_rows.push_back({std::to_string(c.visit), v.onion_address,
                                       std::to_string(v.day()), to_string(c.probe_kind),
                                       c.matched_signature});
    }

    if (format == ReportFormat::Csv) {
        write_csv(at("suspects.csv"),
                  {"label", "fingerprint", "explained_instances", "explained_visits",
                   "high_confidence", "category", "median_latency_days", "first_visit_day",
                   "last_visit_day", "schedules_hit"},
                  suspect_rows);
        write_csv(at("tag_breakdown.csv"), {"cloud", "exit", "cloud_and_exit", "neither"},
                  {{std::to_string(n_cloud), std::to_string(n_exit), std::to_string(n_both),
                    std::to_string(n_neither)}});
        std::vector<std::vector<std::string>> tag_rows;
        for (const auto& [tag, count] : tag_counts) {
            tag_rows.push_back({tag, std::to_string(count)});
        }
        write_csv(at("tag_counts.csv"), {"tag", "count"}, tag_rows);
        write_csv(at("daily_visits.csv"), {"day", "daily", "weekly", "monthly", "unknown", "total"},
                  day_rows(daily_raw));
        write_csv(at("daily_visits_dedup.csv"),
                  {"day", "daily", "weekly", "monthly", "unknown", "total"}, day_rows(daily_dedup));
        write_csv(at("relay_daily_visits.csv"), {"label", "day", "visits"}, relay_day_rows);
        std::vector<std::vector<std::string>> kind_rows;
        for (const auto& [kind, count] : kind_counts) {
            kind_rows.push_back({kind, std::to_string(count)});
        }
        write_csv(at("classification_counts.csv"), {"probe_kind", "count"}, kind_rows);
        write_csv(at("visit_classifications.csv"),
                  {"visit_index", "onion_address", "day", "probe_kind", "matched_signature"},
                  classification_rows);
        return;
    }

    json suspects = json::array();
    for (const SnooperProfile& p : bundle.profiles) {
        json by_day = json::array();
        for (const auto& [day, count] : p.visits_by_day) {
            by_day.push_back(json::array({day, count}));
        }
        suspects.push_back({{"label", p.label},
                            {"fingerprint", p.fingerprint.hex()},
                            {"explained_instances", p.explained_instances},
                            {"explained_visits", p.explained_visits},
                            {"high_confidence", p.explained_instances >= 2},
                            {"category", p.immediate ? "immediate" : "delayed"},
                            {"median_latency_days", p.median_latency},
                            {"latency_days", p.latency_days},
                            {"first_visit_day", p.first_visit_day},
                            {"last_visit_day", p.last_visit_day},
                            {"schedules_hit", schedules_to_string(p.schedules_hit)},
                            {"visits_by_day", std::move(by_day)}});
    }
    const auto day_table_json = [](const std::map<std::int64_t, std::map<std::string, std::int64_t>>& t) {
        json rows = json::array();
        for (const auto& [day, counts] : t) {
            const auto get = [&](const char* k) {
                const auto it = counts.find(k);
                return it == counts.end() ? 0 : it->second;
            };
            rows.push_back({{"day", day},
                            {"daily", get("daily")},
                            {"weekly", get("weekly")},
                            {"monthly", get("monthly")},
                            {"unknown", get("unknown")},
                            {"total", get("total")}});
        }
        return rows;
    };
    json classifications = json::array();
    for (const VisitClassification& c : bundle.classifications) {
        const VisitRecord& v = bundle.visits.at(c.visit);
        classifications.push_back({{"visit_index", c.visit},
                                   {"onion_address", v.onion_address},
                                   {"day", v.day()},
                                   {"probe_kind", to_string(c.probe_kind)},
                                   {"matched_signature", c.matched_signature}});
    }
    json report{{"suspects", std::move(suspects)},
                {"tag_breakdown",
                 {{"cloud", n_cloud}, {"exit", n_exit}, {"cloud_and_exit", n_both}, {"neither", n_neither}}},
                {"tag_counts", tag_counts},
                {"daily_visits", day_table_json(daily_raw)},
                {"daily_visits_dedup", day_table_json(daily_dedup)},
                {"classification_counts", kind_counts},
                {"visit_classifications", std::move(classifications)}};

    std::ofstream out(at("report.json"), std::ios::binary | std::ios::trunc);
    if (!out) {
        raise(ErrorCode::Io, "cannot open for writing: " + at("report.json"));
    }
    out << report.dump(2) << "\n";
    if (!out) {
        raise(ErrorCode::Io, "write failed: " + at("report.json"));
    }
}

} // namespace honion
