// Licensed under the Apache License 2.0 (see LICENSE file).

#include "honion/sim.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "honion/error.hpp"

namespace honion {

namespace {

std::string relay_label(std::int64_t index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "relay-%05lld", static_cast<long long>(index));
    return buf;
}

std::string churned_label(std::int64_t epoch, std::size_t index) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "relay-d%lld-%03zu", static_cast<long long>(epoch), index);
    return buf;
}

} // namespace

void SnooperModel::validate() const {
    if (delay_days < 0) {
        raise(ErrorCode::Config, "snooper delay_days must be non-negative");
    }
    if (visit_probability < 0.0 || visit_probability > 1.0) {
        raise(ErrorCode::Config, "visit_probability must lie in [0,1]");
    }
    if (kind == SnooperKind::Probabilistic) {
        double total = 0.0;
        for (const auto& [delay, prob] : delay_distribution) {
            if (delay < 0) {
                raise(ErrorCode::Config, "delay_distribution delays must be non-negative");
            }
            if (prob < 0.0) {
                raise(ErrorCode::Config, "delay_distribution probabilities must be non-negative");
            }
            total += prob;
        }
        if (total > 1.0 + 1e-9) {
            raise(ErrorCode::Config, "delay_distribution probabilities must sum to at most 1");
        }
    }
    if (activation_day && *activation_day < 0) {
        raise(ErrorCode::Config, "activation_day must be non-negative");
    }
}

void SimulationConfig::validate() const {
    if (n_hsdirs < 3) {
        raise(ErrorCode::Config, "n_hsdirs must be at least 3");
    }
    if (n_days <= 0) {
        raise(ErrorCode::Config, "n_days must be positive");
    }
    if (honions_daily < 0 || honions_weekly < 0 || honions_monthly < 0) {
        raise(ErrorCode::Config, "honion counts must be non-negative");
    }
    if (relay_churn < 0.0 || relay_churn >= 1.0) {
        raise(ErrorCode::Config, "relay_churn must lie in [0,1)");
    }
    for (const auto& [label, model] : snoopers) {
        if (label.empty()) {
            raise(ErrorCode::Config, "snooper labels must be non-empty");
        }
        model.validate();
    }
}

ConsensusSnapshot generate_consensus(std::int64_t n_hsdirs, RingTopology topology, Rng& rng,
                                     std::int64_t epoch) {
    ConsensusSnapshot c;
    c.epoch = epoch;
    c.relays.reserve(static_cast<std::size_t>(n_hsdirs));
    for (std::int64_t i = 0; i < n_hsdirs; ++i) {
        HsDirRelay r;
        if (topology == RingTopology::Grid) {
            // Evenly spaced: fingerprint_k = floor(k * 2^64 / N) in the top
            // 64 bits, so every arc has the same length up to ~1e-16.
            const auto v = static_cast<std::uint64_t>(
                (static_cast<unsigned __int128>(i) << 64) / static_cast<std::uint64_t>(n_hsdirs));
            r.fingerprint = Fingerprint::from_top64(v);
        } else {
            rng.fill(r.fingerprint.bytes.data(), r.fingerprint.bytes.size());
        }
        r.label = relay_label(i);
        c.relays.push_back(std::move(r));
    }
    c.normalize();
    return c;
}

ConsensusSnapshot apply_churn(const ConsensusSnapshot& c, double fraction, Rng& rng) {
    if (fraction < 0.0 || fraction >= 1.0) {
        raise(ErrorCode::InvalidArgument, "churn fraction must lie in [0,1)");
    }
    ConsensusSnapshot next = c;
    next.epoch = c.epoch + 1;
    const auto n = next.relays.size();
    const auto replace = static_cast<std::size_t>(fraction * static_cast<double>(n));
    if (replace == 0) {
        return next;
    }
    // Partial Fisher-Yates picks the replaced subset uniformly.
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    for (std::size_t i = 0; i < replace; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
        std::swap(order[i], order[j]);
    }
    for (std::size_t i = 0; i < replace; ++i) {
        HsDirRelay fresh;
        rng.fill(fresh.fingerprint.bytes.data(), fresh.fingerprint.bytes.size());
        fresh.label = churned_label(next.epoch, i);
        next.relays[order[i]] = std::move(fresh);
    }
    next.normalize();
    return next;
}

std::optional<int> plan_visit_delay(const SnooperModel& model, Rng& rng) {
    if (model.kind != SnooperKind::Probabilistic) {
        return std::nullopt;
    }
    double u = rng.unit();
    for (const auto& [delay, prob] : model.delay_distribution) {
        if (u < prob) {
            return delay;
        }
        u -= prob;
    }
    return std::nullopt; // residual mass: never visits
}

std::vector<std::string> snooper_decide(const SnooperModel& model,
                                        const std::vector<LearnedHonion>& learned,
                                        std::int64_t today, Rng& rng) {
    std::vector<std::string> out;
    for (const LearnedHonion& entry : learned) {
        bool visit = false;
        switch (model.kind) {
        case SnooperKind::PersistentImmediate:
            visit = model.repeat_daily ? entry.learned_day <= today
                                       : entry.learned_day == today;
            break;
        case SnooperKind::PersistentDelayed: {
            const std::int64_t due = entry.learned_day + model.delay_days;
            visit = model.repeat_daily ? due <= today : due == today;
            break;
        }
        case SnooperKind::RandomizedDeterministicDelay: {
            const std::int64_t due = entry.learned_day + model.delay_days;
            const bool eligible = model.repeat_daily ? due <= today : due == today;
            visit = eligible && rng.bernoulli(model.visit_probability);
            break;
        }
        case SnooperKind::Probabilistic:
            visit = entry.planned_delay &&
                    entry.learned_day + *entry.planned_delay == today;
            break;
        }
        if (visit) {
            out.push_back(entry.onion_address);
        }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

SimulationOutput run_simulation(const SimulationConfig& cfg) {
    cfg.validate();

    Rng rng_topology(Rng::derive(cfg.seed, "topology"));
    Rng rng_honions(Rng::derive(cfg.seed, "honions"));
    Rng rng_visits(Rng::derive(cfg.seed, "visits"));

    SimulationOutput out;
    ConsensusSnapshot consensus = generate_consensus(cfg.n_hsdirs, cfg.topology, rng_topology, 0);

    std::unordered_set<std::string> labels;
    for (const HsDirRelay& r : consensus.relays) {
        labels.insert(r.label);
    }
    for (const auto& [label, model] : cfg.snoopers) {
        if (!labels.count(label)) {
            raise(ErrorCode::Config, "snooper label not present in the consensus: " + label);
        }
        out.truth.snoopers.push_back(label);
    }

    std::map<std::string, Rng> snooper_rngs;
    std::map<std::string, std::vector<LearnedHonion>> knowledge;
    std::map<std::string, std::unordered_set<std::string>> known_addresses;
    std::set<std::string> active_snoopers;
    for (const auto& [label, model] : cfg.snoopers) {
        snooper_rngs.emplace(label, Rng(Rng::derive(cfg.seed, "snooper/" + label)));
        knowledge[label];
        known_addresses[label];
        active_snoopers.insert(label);
    }

    std::unordered_map<std::string, std::size_t> honion_index;

    struct PendingVisit {
        VisitRecord record;
        GroundTruthVisit truth;
    };

    for (int day = 0; day < cfg.n_days; ++day) {
        if (day > 0) {
            if (cfg.relay_churn > 0.0) {
                consensus = apply_churn(consensus, cfg.relay_churn, rng_topology);
                std::unordered_set<std::string> now;
                for (const HsDirRelay& r : consensus.relays) {
                    now.insert(r.label);
                }
                // A restarted relay loses both its slot and everything it knew.
                for (auto it = active_snoopers.begin(); it != active_snoopers.end();) {
                    if (!now.count(*it)) {
                        knowledge[*it].clear();
                        known_addresses[*it].clear();
                        it = active_snoopers.erase(it);
                    } else {
                        ++it;
                    }
                }
            } else {
                consensus.epoch = day;
            }
        }
        out.consensus.push_back(consensus);

        // New batches: daily every day, weekly/monthly on their cadence.
        struct Batch {
            Schedule schedule;
            int count;
            bool due;
        };
        const Batch batches[] = {
            {Schedule::Daily, cfg.honions_daily, true},
            {Schedule::Weekly, cfg.honions_weekly, day % 7 == 0},
            {Schedule::Monthly, cfg.honions_monthly, day % 30 == 0},
        };
        for (const Batch& b : batches) {
            if (!b.due) continue;
            for (int i = 0; i < b.count; ++i) {
                HonionSpec h;
                rng_honions.fill(h.identifier.data(), h.identifier.size());
                h.permanent_id_byte = h.identifier[0];
                h.schedule = b.schedule;
                h.created_at = static_cast<std::int64_t>(day) * kSecondsPerDay;
                h.lifetime = schedule_lifetime(b.schedule);
                honion_index[h.onion_address()] = out.honions.size();
                out.honions.push_back(h);
            }
        }

        // Re-place every live honion and deliver the placement to its hosts.
        const std::int64_t t = static_cast<std::int64_t>(day) * kSecondsPerDay;
        for (const HonionSpec& h : out.honions) {
            if (!h.alive_at(t)) continue;
            PlacementRecord rec = responsible_hsdirs(h, consensus, t);
            for (const PlacementHost& host : rec.hsdirs) {
                if (!active_snoopers.count(host.label)) continue;
                auto& seen = known_addresses[host.label];
                if (seen.insert(rec.onion_address).second) {
                    const auto& model = cfg.snoopers.at(host.label);
                    knowledge[host.label].push_back(
                        {rec.onion_address, day, plan_visit_delay(model, snooper_rngs.at(host.label))});
                }
            }
            out.placements.push_back(std::move(rec));
        }

        // Snoopers pick their targets; dead honions have no server to answer.
        std::vector<PendingVisit> today_visits;
        for (const std::string& label : active_snoopers) {
            const auto& model = cfg.snoopers.at(label);
            auto targets = snooper_decide(model, knowledge[label], day, snooper_rngs.at(label));
            for (const std::string& onion : targets) {
                const HonionSpec& h = out.honions[honion_index.at(onion)];
                if (!h.alive_at(t)) continue;
                PendingVisit v;
                v.record.onion_address = onion;
                v.record.timestamp =
                    static_cast<double>(t) + static_cast<double>(rng_visits.below(86400000)) / 1000.0;
                v.record.request_path = "/";
                v.record.requester_tag = label;
                v.record.is_favicon = false;
                v.truth = {label, onion, day};
                today_visits.push_back(std::move(v));
            }
        }
        std::sort(today_visits.begin(), today_visits.end(),
                  [](const PendingVisit& a, const PendingVisit& b) {
                      if (a.record.timestamp != b.record.timestamp)
                          return a.record.timestamp < b.record.timestamp;
                      if (a.record.onion_address != b.record.onion_address)
                          return a.record.onion_address < b.record.onion_address;
                      return a.truth.snooper < b.truth.snooper;
                  });
        for (PendingVisit& v : today_visits) {
            out.visits.push_back(std::move(v.record));
            out.truth.visits.push_back(std::move(v.truth));
        }
    }
    return out;
}

} // namespace honion
