// Licensed under the Apache License 2.0 (see LICENSE file).

#include "honion/json_io.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "honion/error.hpp"

namespace honion {

using nlohmann::json;

namespace {

json parse_json(const std::string& text, const std::string& what) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded()) {
        raise(ErrorCode::Parse, "invalid JSON in " + what);
    }
    return j;
}

json parse_json_file(const std::string& path) {
    return parse_json(read_text_file(path), path);
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        raise(ErrorCode::Io, "cannot open for writing: " + path);
    }
    return out;
}

template <typename Fn>
void for_each_jsonl(const std::string& path, Fn&& fn) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        raise(ErrorCode::Io, "cannot open: " + path);
    }
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded()) {
            raise(ErrorCode::Parse, path + ": line " + std::to_string(lineno) + ": invalid JSON");
        }
        fn(j, lineno);
    }
}

json relay_to_json(const HsDirRelay& r) {
    return {{"fingerprint", r.fingerprint.hex()}, {"label", r.label}, {"tags", r.tags}};
}

HsDirRelay relay_from_json(const json& j) {
    HsDirRelay r;
    r.fingerprint = Fingerprint::parse(j.at("fingerprint").get<std::string>());
    r.label = j.at("label").get<std::string>();
    if (j.contains("tags")) {
        r.tags = j.at("tags").get<std::vector<std::string>>();
    }
    return r;
}

json visit_to_json(const VisitRecord& v, bool redact_tag) {
    return {{"onion_address", v.onion_address},
            {"timestamp", v.timestamp},
            {"request_path", v.request_path},
            {"requester_tag", redact_tag ? "" : v.requester_tag},
            {"is_favicon", v.is_favicon}};
}

VisitRecord visit_from_json(const json& j) {
    VisitRecord v;
    v.onion_address = j.at("onion_address").get<std::string>();
    v.timestamp = j.at("timestamp").get<double>();
    v.request_path = j.value("request_path", std::string{});
    v.requester_tag = j.value("requester_tag", std::string{});
    v.is_favicon = j.value("is_favicon", false);
    return v;
}

json placement_to_json(const PlacementRecord& p) {
    json hosts = json::array();
    for (const PlacementHost& h : p.hsdirs) {
        hosts.push_back({{"fingerprint", h.fingerprint.hex()}, {"label", h.label}});
    }
    return {{"onion_address", p.onion_address}, {"schedule", to_string(p.schedule)},
            {"epoch", p.epoch},                 {"valid_from", p.valid_from},
            {"valid_until", p.valid_until},     {"hsdirs", std::move(hosts)}};
}

PlacementRecord placement_from_json(const json& j) {
    PlacementRecord p;
    p.onion_address = j.at("onion_address").get<std::string>();
    p.schedule = schedule_from_string(j.at("schedule").get<std::string>());
    p.epoch = j.at("epoch").get<std::int64_t>();
    p.valid_from = j.at("valid_from").get<std::int64_t>();
    p.valid_until = j.at("valid_until").get<std::int64_t>();
    for (const json& h : j.at("hsdirs")) {
        p.hsdirs.push_back(
            {Fingerprint::parse(h.at("fingerprint").get<std::string>()), h.at("label").get<std::string>()});
    }
    return p;
}

SnooperModel snooper_from_json(const json& j) {
    SnooperModel m;
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "persistent_immediate") {
        m.kind = SnooperKind::PersistentImmediate;
    } else if (kind == "persistent_delayed") {
        m.kind = SnooperKind::PersistentDelayed;
    } else if (kind == "randomized_deterministic_delay") {
        m.kind = SnooperKind::RandomizedDeterministicDelay;
    } else if (kind == "probabilistic") {
        m.kind = SnooperKind::Probabilistic;
    } else {
        raise(ErrorCode::Config, "unknown snooper kind: " + kind);
    }
    m.delay_days = j.value("delay_days", 0);
    m.visit_probability = j.value("visit_probability", 1.0);
    if (j.contains("delay_distribution")) {
        for (const json& entry : j.at("delay_distribution")) {
            m.delay_distribution.emplace_back(entry.at(0).get<int>(), entry.at(1).get<double>());
        }
    }
    m.repeat_daily = j.value("repeat_daily", false);
    if (j.contains("activation_day")) {
        m.activation_day = j.at("activation_day").get<int>();
    }
    return m;
}

} // namespace

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        raise(ErrorCode::Io, "cannot open: " + path);
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
    auto out = open_out(path);
    out << text;
    if (!out) {
        raise(ErrorCode::Io, "write failed: " + path);
    }
}

ConsensusSnapshot load_consensus(const std::string& path) {
    const json j = parse_json_file(path);
    ConsensusSnapshot c;
    c.epoch = j.value("epoch", std::int64_t{0});
    for (const json& r : j.at("relays")) {
        c.relays.push_back(relay_from_json(r));
    }
    c.normalize();
    return c;
}

void save_consensus(const ConsensusSnapshot& c, const std::string& path) {
    json relays = json::array();
    for (const HsDirRelay& r : c.relays) {
        relays.push_back(relay_to_json(r));
    }
    write_text_file(path, json{{"epoch", c.epoch}, {"relays", std::move(relays)}}.dump() + "\n");
}

SimulationConfig parse_simulation_config(const std::string& json_text) {
    const json j = parse_json(json_text, "simulation config");
    SimulationConfig cfg;
    try {
        cfg.seed = j.at("seed").get<std::uint64_t>();
        cfg.n_hsdirs = j.at("n_hsdirs").get<std::int64_t>();
        cfg.n_days = j.at("n_days").get<int>();
        if (j.contains("schedules")) {
            const json& s = j.at("schedules");
            cfg.honions_daily = s.value("daily", 0);
            cfg.honions_weekly = s.value("weekly", 0);
            cfg.honions_monthly = s.value("monthly", 0);
        }
        if (j.contains("snoopers")) {
            for (const auto& [label, spec] : j.at("snoopers").items()) {
                cfg.snoopers[label] = snooper_from_json(spec);
            }
        }
        cfg.relay_churn = j.value("relay_churn", 0.0);
        const auto topology = j.value("topology", std::string("random"));
        if (topology == "random") {
            cfg.topology = RingTopology::Random;
        } else if (topology == "grid") {
            cfg.topology = RingTopology::Grid;
        } else {
            raise(ErrorCode::Config, "unknown topology: " + topology);
        }
    } catch (const json::exception& e) {
        raise(ErrorCode::Config, std::string("bad simulation config: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

SimulationConfig load_simulation_config(const std::string& path) {
    return parse_simulation_config(read_text_file(path));
}

CollectorConfig load_collector_config(const std::string& path) {
    const json j = parse_json_file(path);
    CollectorConfig cfg;
    try {
        for (const json& l : j.at("listeners")) {
            cfg.listeners.push_back(
                {l.at("port").get<std::uint16_t>(), l.at("onion_address").get<std::string>()});
        }
        cfg.log_path = j.at("log_path").get<std::string>();
        cfg.max_request_bytes = j.value("max_request_bytes", std::size_t{8192});
    } catch (const json::exception& e) {
        raise(ErrorCode::Config, std::string("bad collector config: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

std::vector<VisitRecord> load_visits(const std::string& path) {
    std::vector<VisitRecord> out;
    for_each_jsonl(path, [&](const json& j, std::size_t lineno) {
        try {
            out.push_back(visit_from_json(j));
        } catch (const json::exception& e) {
            raise(ErrorCode::Parse,
                  path + ": line " + std::to_string(lineno) + ": " + e.what());
        }
    });
    return out;
}

std::vector<PlacementRecord> load_placements(const std::string& path) {
    std::vector<PlacementRecord> out;
    for_each_jsonl(path, [&](const json& j, std::size_t lineno) {
        try {
            out.push_back(placement_from_json(j));
        } catch (const json::exception& e) {
            raise(ErrorCode::Parse,
                  path + ": line " + std::to_string(lineno) + ": " + e.what());
        }
    });
    return out;
}

void write_simulation_output(const SimulationOutput& out, const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    const auto at = [&](const char* name) { return (std::filesystem::path(dir) / name).string(); };

    {
        auto f = open_out(at(kConsensusFile));
        for (const ConsensusSnapshot& c : out.consensus) {
            json relays = json::array();
            for (const HsDirRelay& r : c.relays) {
                relays.push_back(relay_to_json(r));
            }
            f << json{{"epoch", c.epoch}, {"relays", std::move(relays)}}.dump() << "\n";
        }
    }
    {
        auto f = open_out(at(kHonionsFile));
        for (const HonionSpec& h : out.honions) {
            std::string ident;
            ident.reserve(20);
            static const char* hexd = "0123456789abcdef";
            for (std::uint8_t b : h.identifier) {
                ident.push_back(hexd[b >> 4]);
                ident.push_back(hexd[b & 0x0f]);
            }
            f << json{{"identifier", ident},
                      {"onion_address", h.onion_address()},
                      {"permanent_id_byte", h.permanent_id_byte},
                      {"schedule", to_string(h.schedule)},
                      {"created_at", h.created_at},
                      {"lifetime", h.lifetime}}
                     .dump()
              << "\n";
        }
    }
    {
        auto f = open_out(at(kPlacementsFile));
        for (const PlacementRecord& p : out.placements) {
            f << placement_to_json(p).dump() << "\n";
        }
    }
    {
        auto f = open_out(at(kVisitsFile));
        for (const VisitRecord& v : out.visits) {
            f << visit_to_json(v, /*redact_tag=*/true).dump() << "\n";
        }
    }
    {
        json visits = json::array();
        for (const GroundTruthVisit& v : out.truth.visits) {
            visits.push_back(
                {{"snooper", v.snooper}, {"onion_address", v.onion_address}, {"day", v.day}});
        }
        write_text_file(at(kGroundTruthFile),
                        json{{"snoopers", out.truth.snoopers}, {"visits", std::move(visits)}}.dump() +
                            "\n");
    }
}

GroundTruth load_ground_truth(const std::string& path) {
    const json j = parse_json_file(path);
    GroundTruth t;
    t.snoopers = j.at("snoopers").get<std::vector<std::string>>();
    for (const json& v : j.at("visits")) {
        t.visits.push_back({v.at("snooper").get<std::string>(),
                            v.at("onion_address").get<std::string>(),
                            v.at("day").get<std::int64_t>()});
    }
    return t;
}

void save_graph(const AttributionGraph& g, const std::string& path) {
    json hsdirs = json::array();
    for (const GraphRelay& r : g.hsdirs) {
        hsdirs.push_back({{"fingerprint", r.fingerprint.hex()}, {"label", r.label}});
    }
    json instances = json::array();
    for (const HonionInstance& inst : g.instances) {
        instances.push_back({{"id", inst.id},
                             {"onion_address", inst.onion_address},
                             {"first_day", inst.first_day},
                             {"last_day", inst.last_day},
                             {"visit_ids", inst.visit_ids}});
    }
    json edges = json::array();
    for (std::size_t i = 0; i < g.edges.size(); ++i) {
        for (std::uint32_t r : g.edges[i]) {
            edges.push_back(json::array({i, r}));
        }
    }
    write_text_file(path, json{{"hsdirs", std::move(hsdirs)},
                               {"instances", std::move(instances)},
                               {"edges", std::move(edges)}}
                              .dump() +
                              "\n");
}

AttributionGraph load_graph(const std::string& path) {
    const json j = parse_json_file(path);
    AttributionGraph g;
    try {
        for (const json& r : j.at("hsdirs")) {
            g.hsdirs.push_back({Fingerprint::parse(r.at("fingerprint").get<std::string>()),
                                r.at("label").get<std::string>()});
        }
        for (const json& inst : j.at("instances")) {
            HonionInstance h;
            h.id = inst.at("id").get<std::string>();
            h.onion_address = inst.at("onion_address").get<std::string>();
            h.first_day = inst.at("first_day").get<std::int64_t>();
            h.last_day = inst.at("last_day").get<std::int64_t>();
            if (inst.contains("visit_ids")) {
                h.visit_ids = inst.at("visit_ids").get<std::vector<std::size_t>>();
            }
            g.instances.push_back(std::move(h));
        }
        g.edges.assign(g.instances.size(), {});
        for (const json& e : j.at("edges")) {
            const auto i = e.at(0).get<std::size_t>();
            const auto r = e.at(1).get<std::uint32_t>();
            if (i >= g.instances.size()) {
                raise(ErrorCode::Parse, "edge references unknown instance index");
            }
            g.edges[i].push_back(r);
        }
        for (auto& adj : g.edges) {
            std::sort(adj.begin(), adj.end());
            adj.erase(std::unique(adj.begin(), adj.end()), adj.end());
        }
    } catch (const json::exception& e) {
        raise(ErrorCode::Parse, path + ": " + e.what());
    }
    g.check_valid();
    return g;
}

void save_graph_edgelist(const AttributionGraph& g, const std::string& path) {
    auto f = open_out(path);
    for (std::size_t i = 0; i < g.edges.size(); ++i) {
        for (std::uint32_t r : g.edges[i]) {
            f << g.instances[i].id << "\t" << g.hsdirs[r].label << "\n";
        }
    }
}

std::string plan_to_json(const CoveragePlan& plan) {
    return json{{"n_hsdirs", plan.n_hsdirs},
                {"target_fraction", plan.target_fraction},
                {"honions_required", plan.honions_required},
                {"predicted_coverage", plan.predicted_coverage}}
        .dump();
}

namespace {

json result_to_json(const AttributionGraph& g, const DetectionResult& r, bool with_timings) {
    json suspects = json::array();
    for (const SuspectRank& s : rank_suspects(g, r)) {
        suspects.push_back({{"label", g.hsdirs[s.relay].label},
                            {"fingerprint", g.hsdirs[s.relay].fingerprint.hex()},
                            {"explained_instances", s.explained_instances},
                            {"explained_visits", s.explained_visits},
                            {"high_confidence", s.high_confidence}});
    }
    json out{{"method", r.method == CoverMethod::Greedy ? "greedy" : "exact"},
             {"size", r.explaining_set.size()},
             {"explaining_set", std::move(suspects)},
             {"warnings", r.warnings}};
    if (r.method == CoverMethod::Exact) {
        out["lower_bound"] = r.lower_bound;
        out["proven_minimal"] = r.proven_minimal;
    }
    if (with_timings) {
        out["runtime_seconds"] = r.runtime_seconds;
    }
    return out;
}

} // namespace

std::string detection_report_json(const AttributionGraph& g, const DetectionResult* greedy,
                                  const DetectionResult* exact, bool with_timings) {
    json results = json::object();
    if (greedy) {
        results["greedy"] = result_to_json(g, *greedy, with_timings);
    }
    if (exact) {
        results["exact"] = result_to_json(g, *exact, with_timings);
    }
    return json{{"graph",
                 {{"hsdirs", g.hsdirs.size()},
                  {"instances", g.instances.size()},
                  {"edges", g.edge_count()},
                  {"components", connected_components(g).size()}}},
                {"results", std::move(results)}}
        .dump();
}

DetectionResult detection_result_from_report(const std::string& report_json,
                                             const AttributionGraph& g) {
    const json j = parse_json(report_json, "detection report");
    const json& results = j.at("results");
    const json* chosen = nullptr;
    CoverMethod method = CoverMethod::Greedy;
    if (results.contains("exact")) {
        chosen = &results.at("exact");
        method = CoverMethod::Exact;
    } else if (results.contains("greedy")) {
        chosen = &results.at("greedy");
    } else {
        raise(ErrorCode::Parse, "detection report holds no result");
    }

    std::map<std::pair<std::string, std::string>, std::uint32_t> index;
    for (std::uint32_t r = 0; r < g.hsdirs.size(); ++r) {
        index[{g.hsdirs[r].fingerprint.hex(), g.hsdirs[r].label}] = r;
    }

    DetectionResult res;
    res.method = method;
    try {
        for (const json& entry : chosen->at("explaining_set")) {
            const auto key = std::make_pair(entry.at("fingerprint").get<std::string>(),
                                            entry.at("label").get<std::string>());
            const auto it = index.find(key);
            if (it == index.end()) {
                raise(ErrorCode::Parse,
                      "report relay not present in the graph: " + key.second);
            }
            res.explaining_set.push_back(it->second);
            res.per_relay_explained.push_back(entry.at("explained_instances").get<std::int64_t>());
        }
        res.lower_bound = chosen->value("lower_bound", std::int64_t{0});
        res.proven_minimal = chosen->value("proven_minimal", false);
        if (chosen->contains("warnings")) {
            res.warnings = chosen->at("warnings").get<std::vector<std::string>>();
        }
    } catch (const json::exception& e) {
        raise(ErrorCode::Parse, std::string("bad detection report: ") + e.what());
    }
    return res;
}

std::map<std::string, std::vector<std::string>> load_relay_tags(const std::string& consensus_jsonl) {
    std::map<std::string, std::vector<std::string>> tags;
    for_each_jsonl(consensus_jsonl, [&](const json& j, std::size_t) {
        for (const json& r : j.at("relays")) {
            auto label = r.at("label").get<std::string>();
            if (r.contains("tags")) {
                tags[label] = r.at("tags").get<std::vector<std::string>>();
            } else {
                tags.emplace(std::move(label), std::vector<std::string>{});
            }
        }
    });
    return tags;
}

} // namespace honion
