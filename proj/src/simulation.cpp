#include "actf/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <queue>
#include <sstream>

#include "actf/errors.hpp"
#include "actf/io_util.hpp"
#include "actf/rng.hpp"

namespace actf {

namespace {

constexpr std::uint64_t kArrivalStreamTag = 0x41525256;  // arrival process draws

Approach heading_after(Approach approach, Turn turn) {
    // compass heading of travel after executing the movement
    static constexpr Approach kLeft[4] = {Approach::W, Approach::E, Approach::N, Approach::S};
    static constexpr Approach kRight[4] = {Approach::E, Approach::W, Approach::S, Approach::N};
    const int i = static_cast<int>(approach);
    switch (turn) {
        case Turn::Through: return approach;
        case Turn::Left: return kLeft[i];
        case Turn::Right: return kRight[i];
    }
    return approach;
}

struct Hop {
    int intersection = -1;
    int phase = 0;
    double link_travel_s = 0.0;  // free-flow time on the feeder link
    std::string link_id;
};

struct Vehicle {
    double creation_s = 0.0;
    double delay_s = 0.0;
    int next_hop = 0;
    bool counts_for_stats = false;
    std::vector<Hop> path;
};

struct PendingArrival {
    double when = 0.0;
    std::int64_t vehicle = 0;
    bool operator>(const PendingArrival& other) const {
        return when > other.when || (when == other.when && vehicle > other.vehicle);
    }
};

struct MovementNode {
    int lanes = 1;
    bool is_left = false;
    int through_partner = -1;  // node blocked when this left bay overflows
    int storage_cap = 1 << 30;
    double detector_zone_s = 0.0;  // zone length over approach speed
    std::string link_id;
    double service_clock = 0.0;
    bool was_green = false;
    std::priority_queue<PendingArrival, std::vector<PendingArrival>, std::greater<>> inbound;
    std::deque<std::pair<std::int64_t, double>> queue;  // vehicle, stop-line arrival
};

double quarter_rate_vph(double volume, double phf, int quarter) {
    // one peak quarter at V/phf, the rest even out so the hour averages V
    const double peak = volume / phf;
    if (quarter == 1) return peak;
    return (4.0 * volume - peak) / 3.0;
}

}  // namespace

RunResult run_simulation(const ArterialNetwork& net, const DemandSpec& demand,
                         const TimingPlan& plan, std::uint64_t seed, double warmup_s,
                         double analysis_s, const SimParams& params,
                         const std::string& scenario_id) {
    const PlanValidation pv = validate_plan(plan);
    if (!pv.valid()) {
        throw DomainError("simulation requires a valid plan: " + pv.findings.front());
    }
    if (plan.intersections.size() != net.intersections.size()) {
        throw DomainError("plan does not cover the network");
    }
    if (demand.phf <= 0.0 || demand.phf > 1.0) {
        throw DomainError("peak hour factor must lie in (0, 1]");
    }

    const int n_int = static_cast<int>(net.intersections.size());
    const double dt = params.tick_s;
    const double gen_end = warmup_s + analysis_s;
    const double lt = demand.lt_rate_pct / 100.0;
    const double rt = 0.10;

    // movement nodes, one per (intersection, phase)
    std::vector<MovementNode> nodes(static_cast<std::size_t>(n_int) * 8);
    const auto node_id = [](int ix, int phase) { return ix * 8 + phase - 1; };
    for (int i = 0; i < n_int; ++i) {
        const Intersection& ix = net.intersections[static_cast<std::size_t>(i)];
        for (int p = 1; p <= 8; ++p) {
            MovementNode& node = nodes[static_cast<std::size_t>(node_id(i, p))];
            const Movement mv = ix.phase_movement[p];
            const Link* feeder = net.approach_link(i, mv.approach);
            node.is_left = mv.turn == Turn::Left;
            node.lanes = node.is_left ? feeder->lanes.left : feeder->lanes.through;
            node.link_id = feeder->from + "->" + feeder->to;
            if (node.is_left) {
                node.storage_cap = std::max(
                    1, static_cast<int>(params.left_bay_storage_m / params.queue_spacing_m));
                node.through_partner = node_id(i, ix.phase_for(mv.approach, Turn::Through));
            } else {
                node.storage_cap = std::max(
                    1, static_cast<int>(feeder->length_m * node.lanes / params.queue_spacing_m));
            }
            const auto det = ix.detectors.find(p);
            if (det != ix.detectors.end()) {
                node.detector_zone_s = det->second.zone_length_m / feeder->ffs_mps;
            }
        }
    }

    // vehicle factory: draws a full turning path at creation time so the
    // trajectory random numbers are independent of signal operation
    std::vector<Vehicle> vehicles;
    const auto build_path = [&](int first_ix, Approach approach, const Link* entry_link,
                                RandomStream& rng) {
        std::vector<Hop> path;
        int ix = first_ix;
        Approach heading = approach;
        const Link* feeder = entry_link;
        while (ix >= 0 && ix < n_int) {
            const Intersection& inter = net.intersections[static_cast<std::size_t>(ix)];
            const double u = rng.uniform();
            const Turn turn = u < lt ? Turn::Left : (u < lt + rt ? Turn::Right : Turn::Through);
            Hop hop;
            hop.intersection = ix;
            hop.phase = inter.phase_for(heading, turn);
            hop.link_travel_s = feeder->length_m / feeder->ffs_mps;
            hop.link_id = feeder->from + "->" + feeder->to;
            path.push_back(hop);
            heading = heading_after(heading, turn);
            int next_ix = -1;
            if (heading == Approach::E) next_ix = ix + 1;
            if (heading == Approach::W) next_ix = ix - 1;
            if (next_ix < 0 || next_ix >= n_int) break;
            const Link* next_feeder = nullptr;
            for (const auto& l : net.links) {
                if (l.from == inter.id &&
                    l.to == net.intersections[static_cast<std::size_t>(next_ix)].id) {
                    next_feeder = &l;
                }
            }
            if (next_feeder == nullptr) break;  // dead end: leave the network here
            feeder = next_feeder;
            ix = next_ix;
        }
        return path;
    };

    // pre-generate arrivals per external entry (thinned Poisson)
    std::vector<double> entry_volume;
    {
        const std::size_t n = net.intersections.size();
        if (demand.externals.vol_ss_nb.size() != n || demand.externals.vol_ss_sb.size() != n) {
            throw DomainError("demand volumes do not match the network");
        }
    }
    for (std::size_t e = 0; e < net.externals.size(); ++e) {
        const ExternalEntry& entry = net.externals[e];
        const int ix = net.intersection_index(entry.intersection);
        double volume = 0.0;
        switch (entry.approach) {
            case Approach::E: volume = demand.externals.vol_eb; break;
            case Approach::W: volume = demand.externals.vol_wb; break;
            case Approach::N: volume = demand.externals.vol_ss_nb[static_cast<std::size_t>(ix)]; break;
            case Approach::S: volume = demand.externals.vol_ss_sb[static_cast<std::size_t>(ix)]; break;
        }
        if (volume < 0) throw DomainError("negative demand volume");
        if (volume == 0.0) continue;

        const Link* entry_link = net.approach_link(ix, entry.approach);
        RandomStream rng(mix_keys(seed, kArrivalStreamTag, static_cast<std::uint64_t>(e)));

        const auto rate_vph = [&](double t) {
            if (!demand.peaked || t < warmup_s) return volume;
            const int quarter = std::min(3, static_cast<int>((t - warmup_s) / 900.0));
            return quarter_rate_vph(volume, demand.phf, quarter);
        };
        const double max_rate = demand.peaked ? volume / demand.phf : volume;

        double t = 0.0;
        while (true) {
            t += rng.exponential(max_rate / 3600.0);
            const double accept = rng.uniform();  // thinning keeps the draw layout fixed
            if (t >= gen_end) break;
            if (accept * max_rate > rate_vph(t)) continue;

            Vehicle veh;
            veh.creation_s = t;
            veh.counts_for_stats = t >= warmup_s && t < gen_end;
            veh.path = build_path(ix, entry.approach, entry_link, rng);
            if (veh.path.empty()) continue;
            const std::int64_t vid = static_cast<std::int64_t>(vehicles.size());
            const Hop& first = veh.path.front();
            nodes[static_cast<std::size_t>(node_id(first.intersection, first.phase))].inbound.push(
                {t + first.link_travel_s, vid});
            vehicles.push_back(std::move(veh));
        }
    }

    // controllers
    std::vector<RingBarrierController> controllers;
    controllers.reserve(static_cast<std::size_t>(n_int));
    for (int i = 0; i < n_int; ++i) {
        controllers.emplace_back(plan, net.intersections[static_cast<std::size_t>(i)].id,
                                 params.controller);
    }

    RunResult result;
    result.scenario_id = scenario_id;
    result.seed = seed;
    result.plan = plan.provenance;

    double delay_sum = 0.0;
    std::int64_t live = 0;        // vehicles between entry and exit
    std::int64_t live_stats = 0;  // the subset that counts for statistics
    for (const auto& v : vehicles) {
        ++live;
        if (v.counts_for_stats) {
            ++result.generated;
            ++live_stats;
        }
    }

    const auto discharge = [&](MovementNode& node, std::int64_t vid, double dep) {
        Vehicle& veh = vehicles[static_cast<std::size_t>(vid)];
        veh.delay_s += dep - node.queue.front().second;
        if (dep >= warmup_s && dep < warmup_s + analysis_s) {
            result.link_counts[node.link_id] += 1.0;
        }
        node.queue.pop_front();
        ++veh.next_hop;
        if (veh.next_hop < static_cast<int>(veh.path.size())) {
            const Hop& next = veh.path[static_cast<std::size_t>(veh.next_hop)];
            nodes[static_cast<std::size_t>(node_id(next.intersection, next.phase))].inbound.push(
                {dep + next.link_travel_s, vid});
        } else {
            --live;
            if (veh.counts_for_stats) {
                ++result.completed;
                --live_stats;
                delay_sum += veh.delay_s;
            }
        }
        (void)hop;
    };

    const double horizon = gen_end + params.drain_cap_s;
    double t = 0.0;
    for (std::int64_t tick = 0; t < horizon; ++tick, t = static_cast<double>(tick) * dt) {
        if (t >= gen_end && live == 0) break;

        // stop-bar presence: standing queue or a vehicle inside the zone
        std::vector<PhaseIndications> inds(static_cast<std::size_t>(n_int));
        for (int i = 0; i < n_int; ++i) {
            DetectorInputs inputs;
            for (int p = 1; p <= 8; ++p) {
                if (p == 2 || p == 6) continue;
                const MovementNode& node = nodes[static_cast<std::size_t>(node_id(i, p))];
                bool presence = !node.queue.empty();
                if (!presence && !node.inbound.empty()) {
                    presence = node.inbound.top().when <= t + node.detector_zone_s;
                }
                inputs.presence[p] = presence;
            }
            inds[static_cast<std::size_t>(i)] =
                controllers[static_cast<std::size_t>(i)].tick(inputs, dt);
        }

        const double tick_end = t + dt;
        for (int i = 0; i < n_int; ++i) {
            for (int p = 1; p <= 8; ++p) {
                MovementNode& node = nodes[static_cast<std::size_t>(node_id(i, p))];
                const bool green = inds[static_cast<std::size_t>(i)].green(p);
                if (green && !node.was_green) {
                    node.service_clock = t + params.startup_lost_s;
                }
                node.was_green = green;

                while (!node.inbound.empty() && node.inbound.top().when <= tick_end) {
                    node.queue.emplace_back(node.inbound.top().vehicle, node.inbound.top().when);
                    node.inbound.pop();
                }

                if (!green) continue;
                int lanes = node.lanes;
                if (!node.is_left) {
                    // a spilled-over left bay blocks its adjacent through lane
                    for (int q = 1; q <= 8; q += 2) {
                        const MovementNode& left = nodes[static_cast<std::size_t>(node_id(i, q))];
                        if (left.through_partner == node_id(i, p) &&
                            static_cast<int>(left.queue.size()) > left.storage_cap) {
                            lanes -= 1;
                        }
                    }
                }
                if (lanes <= 0) continue;
                const double headway = 3600.0 / (params.sat_flow_vphpl * lanes);
                while (!node.queue.empty()) {
                    const double dep = std::max(node.service_clock, node.queue.front().second);
                    if (dep >= tick_end) break;
                    node.service_clock = dep + headway;
                    discharge(node, node.queue.front().first, dep);
                }
            }
        }

        for (const auto& node : nodes) {
            if (static_cast<int>(node.queue.size()) > node.storage_cap) result.spillback = true;
        }
    }

    result.in_network_at_end = live_stats;
    result.avg_delay_s = result.completed > 0 ? delay_sum / static_cast<double>(result.completed) : 0.0;
    return result;
}

double average_delay(const std::vector<RunResult>& results) {
    if (results.empty()) throw DomainError("average_delay needs at least one run");
    const std::string& scenario = results.front().scenario_id;
    const PlanProvenance plan = results.front().plan;
    double weighted = 0.0;
    std::int64_t total = 0;
    for (const auto& r : results) {
        if (r.scenario_id != scenario || !(r.plan == plan)) {
            throw DomainError("average_delay requires runs of one scenario and plan");
        }
        weighted += r.avg_delay_s * static_cast<double>(r.completed);
        total += r.completed;
    }
    return total > 0 ? weighted / static_cast<double>(total) : 0.0;
}

std::string run_result_csv_header() {
    return "scenario,seed,plan,actf,avg_delay_s,completed,generated,in_network,spillback";
}

std::string run_result_csv_row(const RunResult& r) {
    std::ostringstream out;
    out << r.scenario_id << ',' << r.seed << ','
        << (r.plan.kind == PlanProvenance::Kind::Base ? "base" : "factored") << ','
        << format_double(r.plan.actf) << ',' << format_double(r.avg_delay_s) << ',' << r.completed
        << ',' << r.generated << ',' << r.in_network_at_end << ',' << (r.spillback ? 1 : 0);
    return out.str();
}

}  // namespace actf
