#include "actf/timing.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "actf/errors.hpp"

namespace actf {

using nlohmann::json;

int TimingPlan::intersection_index(const std::string& id) const {
    for (std::size_t i = 0; i < intersections.size(); ++i) {
        if (intersections[i].id == id) return static_cast<int>(i);
    }
    return -1;
}

double TimingPlan::ring_length(int intersection_idx, int ring) const {
    const auto& ix = intersections[static_cast<std::size_t>(intersection_idx)];
    double sum = 0.0;
    for (int p : kRingOrder[static_cast<std::size_t>(ring)]) {
        const PhaseTiming& ph = ix.phases[p];
        sum += ph.green_s + ph.yellow_s + ph.rc_s;
    }
    return sum;
}

PlanValidation validate_plan(const TimingPlan& plan) {
    PlanValidation v;
    const auto add = [&v](const std::string& s) { v.findings.push_back(s); };
    if (plan.cycle_s <= 0) add("cycle length must be positive");
    if (plan.intersections.empty()) add("plan has no intersections");
    constexpr double kTol = 1e-6;
    for (std::size_t i = 0; i < plan.intersections.size(); ++i) {
        const auto& ix = plan.intersections[i];
        const std::string where = "intersection '" + ix.id + "'";
        for (int ring = 0; ring < 2; ++ring) {
            const double len = plan.ring_length(static_cast<int>(i), ring);
            if (std::abs(len - plan.cycle_s) > kTol) {
                add(where + " ring " + std::to_string(ring + 1) + ": ring-length mismatch (" +
                    std::to_string(len) + " vs cycle " + std::to_string(plan.cycle_s) + ")");
            }
            int n_coord = 0;
            for (int p : kRingOrder[static_cast<std::size_t>(ring)]) {
                if (ix.phases[p].coordinated) ++n_coord;
            }
            if (n_coord != 1 || !ix.phases[coordinated_phase_of_ring(ring)].coordinated) {
                add(where + " ring " + std::to_string(ring + 1) +
                    ": coordinated phase must be exactly " +
                    std::to_string(coordinated_phase_of_ring(ring)));
            }
        }
        for (int p = 1; p <= 8; ++p) {
            const PhaseTiming& ph = ix.phases[p];
            if (ph.green_s + 1e-9 < ph.min_green_s) {
                add(where + " phase " + std::to_string(p) + ": min-green violation (" +
                    std::to_string(ph.green_s) + " < " + std::to_string(ph.min_green_s) + ")");
            }
            if (ph.yellow_s < 0 || ph.rc_s < 0 || ph.green_s < 0) {
                add(where + " phase " + std::to_string(p) + ": negative interval");
            }
        }
        if (ix.offset_s < 0 || ix.offset_s >= plan.cycle_s) {
            add(where + ": offset must lie in [0, cycle)");
        }
    }
    return v;
}

namespace {

// Greens proportional to weights with per-group floors: pin any group that
// falls below its floor and reallocate the rest until stable.
std::array<double, 4> allocate_with_floors(double budget, std::array<double, 4> weights,
                                           const std::array<double, 4>& floors,
                                           const std::string& where) {
    double floor_sum = 0.0;
    for (double f : floors) floor_sum += f;
    if (floor_sum > budget + 1e-9) {
        throw InfeasibleError(where + ": min-green floors (" + std::to_string(floor_sum) +
                              " s) exceed the available green time (" + std::to_string(budget) +
                              " s)");
    }
    const double wsum = weights[0] + weights[1] + weights[2] + weights[3];
    if (wsum <= 0) weights = {1.0, 1.0, 1.0, 1.0};

    std::array<double, 4> g{};
    std::array<bool, 4> pinned{};
    while (true) {
        double free_budget = budget;
        double free_weight = 0.0;
        for (int k = 0; k < 4; ++k) {
            if (pinned[k]) {
                free_budget -= floors[k];
            } else {
                free_weight += weights[k];
            }
        }
        bool changed = false;
        for (int k = 0; k < 4; ++k) {
            if (pinned[k]) {
                g[k] = floors[k];
                continue;
            }
            g[k] = free_weight > 0 ? free_budget * weights[k] / free_weight : free_budget / 4.0;
            if (g[k] < floors[k] - 1e-12) {
                pinned[k] = true;
                changed = true;
            }
        }
        if (!changed) break;
    }
    return g;
}

}  // namespace

TimingPlan optimize_base_plan(const ArterialNetwork& net, const MovementVolumes& vols,
                              const WebsterParams& params) {
    const std::size_t n = net.intersections.size();
    if (vols.approaches.size() != n) {
        throw DomainError("movement volumes do not match the network");
    }

    // Critical flow ratio per concurrency group {1,5} {2,6} {3,7} {4,8};
    // equal greens within a group keep the two rings barrier-aligned.
    constexpr std::array<std::array<int, 2>, 4> kGroups = {{{1, 5}, {2, 6}, {3, 7}, {4, 8}}};
    std::vector<std::array<double, 4>> group_y(n);
    double y_max = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double y_sum = 0.0;
        for (int k = 0; k < 4; ++k) {
            double y_crit = 0.0;
            for (int p : kGroups[static_cast<std::size_t>(k)]) {
                const Movement mv =
                    net.intersections[i].phase_movement[p];
                const Link* feeder = net.approach_link(static_cast<int>(i), mv.approach);
                const int lanes =
                    mv.turn == Turn::Left ? feeder->lanes.left : feeder->lanes.through;
                const double vol = vols.phase_volume(net, static_cast<int>(i), p);
                const double y = vol / (params.sat_flow_vphpl * std::max(lanes, 1));
                y_crit = std::max(y_crit, y);
            }
            group_y[i][static_cast<std::size_t>(k)] = y_crit;
            y_sum += y_crit;
        }
        y_max = std::max(y_max, y_sum);
    }

    if (y_max >= 1.0) {
        throw InfeasibleError("oversaturated design point: critical flow ratio Y = " +
                              std::to_string(y_max) + " >= 1");
    }

    const double lost_time = 4.0 * params.lost_time_per_phase_s;
    const double webster = (1.5 * lost_time + 5.0) / (1.0 - y_max);
    const double clamped = std::clamp(webster, params.min_cycle_s, params.max_cycle_s);
    const double cycle = std::ceil(clamped / 5.0) * 5.0;

    // total clearance per ring: 4 phases x (yellow + rc)
    const double clearance = 4.0 * (params.yellow_s + params.rc_s);
    const double green_budget = cycle - clearance;

    TimingPlan plan;
    plan.cycle_s = cycle;
    plan.provenance = {PlanProvenance::Kind::Base, 1.0};

    for (std::size_t i = 0; i < n; ++i) {
        const std::array<double, 4> floors = {params.min_green_actuated_s,
                                              params.min_green_coordinated_s,
                                              params.min_green_actuated_s,
                                              params.min_green_actuated_s};
        const std::array<double, 4> greens = allocate_with_floors(
            green_budget, group_y[i], floors, "intersection '" + net.intersections[i].id + "'");

        IntersectionPlan ix;
        ix.id = net.intersections[i].id;
        for (int k = 0; k < 4; ++k) {
            for (int p : kGroups[static_cast<std::size_t>(k)]) {
                PhaseTiming& ph = ix.phases[p];
                ph.green_s = greens[static_cast<std::size_t>(k)];
                ph.yellow_s = params.yellow_s;
                ph.rc_s = params.rc_s;
                ph.coordinated = (p == 2 || p == 6);
                ph.min_green_s = ph.coordinated ? params.min_green_coordinated_s
                                                : params.min_green_actuated_s;
            }
        }
        plan.intersections.push_back(std::move(ix));
    }

    // Offsets: coordinated green at intersection i should begin one free-flow
    // travel time downstream of its westbound neighbour. The controller clock
    // is (t + offset) mod C with green start at clock zero, so the stored
    // offset is the cycle complement of the cumulative travel time.
    double travel = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (i > 0) {
            const std::string& from = net.intersections[i - 1].id;
            const std::string& to = net.intersections[i].id;
            const Link* link = nullptr;
            for (const auto& l : net.links) {
                if (l.from == from && l.to == to) link = &l;
            }
            if (link == nullptr) {
                throw ValidationError("no eastbound link between '" + from + "' and '" + to + "'");
            }
            travel += link->length_m / link->ffs_mps;
        }
        const double tt = std::fmod(travel, cycle);
        plan.intersections[i].offset_s = tt == 0.0 ? 0.0 : cycle - tt;
    }

    const PlanValidation v = validate_plan(plan);
    if (!v.valid()) {
        throw InfeasibleError("base plan failed validation: " + v.findings.front());
    }
    return plan;
}

ActFTransformResult apply_actf(const TimingPlan& base, double actf) {
    if (actf < 1.0 || actf > 1.3) {
        throw DomainError("actuated factor must lie in [1.0, 1.3], got " + std::to_string(actf));
    }
    const PlanValidation v = validate_plan(base);
    if (!v.valid()) {
        throw DomainError("base plan is invalid: " + v.findings.front());
    }

    ActFTransformResult result;
    result.plan = base;
    result.plan.provenance = {PlanProvenance::Kind::Factored, actf};
    result.added_green_time.assign(base.intersections.size(), {0.0, 0.0});

    if (actf == 1.0) {
        // identity: keep every field, provenance included, bit-for-bit
        result.plan.provenance = base.provenance;
        return result;
    }

    for (std::size_t i = 0; i < base.intersections.size(); ++i) {
        auto& ix = result.plan.intersections[i];
        for (int ring = 0; ring < 2; ++ring) {
            const int coord = coordinated_phase_of_ring(ring);
            std::array<double, 4> addition{};
            double agt = 0.0;
            int slot = 0;
            for (int p : kRingOrder[static_cast<std::size_t>(ring)]) {
                if (p != coord) {
                    const double g = ix.phases[p].green_s;
                    addition[static_cast<std::size_t>(slot)] = g * actf - g;
                    agt += addition[static_cast<std::size_t>(slot)];
                }
                ++slot;
            }

            double scale = 1.0;
            const double coord_green = ix.phases[coord].green_s;
            const double coord_min = ix.phases[coord].min_green_s;
            double agt_used = agt;
            if (agt > 0 && coord_green - agt < coord_min) {
                // keep the coordinated split at its minimum and shrink the
                // additions in proportion to what each phase would have gained
                agt_used = coord_green - coord_min;
                scale = agt_used / agt;
                result.clamp_applied = true;
            }

            slot = 0;
            for (int p : kRingOrder[static_cast<std::size_t>(ring)]) {
                if (p != coord) {
                    ix.phases[p].green_s += scale * addition[static_cast<std::size_t>(slot)];
                }
                ++slot;
            }
            ix.phases[coord].green_s =
                scale == 1.0 ? coord_green - agt : coord_min;
            result.added_green_time[i][static_cast<std::size_t>(ring)] = agt_used;
        }
    }
    return result;
}

ForceOffTable compute_force_offs(const TimingPlan& plan) {
    const PlanValidation v = validate_plan(plan);
    if (!v.valid()) {
        throw DomainError("cannot schedule an invalid plan: " + v.findings.front());
    }
    ForceOffTable table;
    table.cycle_s = plan.cycle_s;
    for (const auto& ix : plan.intersections) {
        IntersectionSchedule sched;
        for (int ring = 0; ring < 2; ++ring) {
            double t = 0.0;  // local cycle clock; coordinated green starts at zero
            for (int p : kRingOrder[static_cast<std::size_t>(ring)]) {
                const PhaseTiming& ph = ix.phases[p];
                sched.phase[p].green_start = t;
                sched.phase[p].green_end = t + ph.green_s;
                t += ph.green_s + ph.yellow_s + ph.rc_s;
            }
            sched.yield_point[static_cast<std::size_t>(ring)] =
                sched.phase[coordinated_phase_of_ring(ring)].green_end;
        }
        table.intersections.push_back(sched);
    }
    return table;
}

namespace {

json phase_to_json(const PhaseTiming& ph) {
    return json{{"green_s", ph.green_s},
                {"yellow_s", ph.yellow_s},
                {"rc_s", ph.rc_s},
                {"min_green_s", ph.min_green_s},
                {"coordinated", ph.coordinated}};
}

}  // namespace

std::string serialize_plan(const TimingPlan& plan) {
    json doc;
    doc["format"] = "actf-plan/1";
    doc["cycle_s"] = plan.cycle_s;
    doc["intersections"] = json::array();
    for (const auto& ix : plan.intersections) {
        json j;
        j["id"] = ix.id;
        j["offset_s"] = ix.offset_s;
        json phases;
        for (int p = 1; p <= 8; ++p) phases[std::to_string(p)] = phase_to_json(ix.phases[p]);
        j["phases"] = std::move(phases);
        doc["intersections"].push_back(std::move(j));
    }
    if (plan.provenance.kind == PlanProvenance::Kind::Base) {
        doc["provenance"] = {{"kind", "base"}};
    } else {
        doc["provenance"] = {{"kind", "factored"}, {"actf", plan.provenance.actf}};
    }
    return doc.dump(2) + "\n";
}

TimingPlan load_plan(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("plan document is not valid JSON: ") + e.what());
    }
    if (!doc.contains("format") || doc.at("format") != "actf-plan/1") {
        throw ParseError("unsupported plan format tag (expected actf-plan/1)");
    }
    TimingPlan plan;
    plan.cycle_s = doc.at("cycle_s").get<double>();
    for (const auto& j : doc.at("intersections")) {
        IntersectionPlan ix;
        ix.id = j.at("id").get<std::string>();
        ix.offset_s = j.at("offset_s").get<double>();
        const json& phases = j.at("phases");
        for (int p = 1; p <= 8; ++p) {
            const auto it = phases.find(std::to_string(p));
            if (it == phases.end()) {
                throw ParseError("plan intersection '" + ix.id + "' is missing phase " +
                                 std::to_string(p));
            }
            PhaseTiming& ph = ix.phases[p];
            ph.green_s = it->at("green_s").get<double>();
            ph.yellow_s = it->at("yellow_s").get<double>();
            ph.rc_s = it->at("rc_s").get<double>();
            ph.min_green_s = it->at("min_green_s").get<double>();
            ph.coordinated = it->at("coordinated").get<bool>();
        }
        plan.intersections.push_back(std::move(ix));
    }
    if (doc.contains("provenance")) {
        const json& prov = doc.at("provenance");
        if (prov.at("kind") == "factored") {
            plan.provenance = {PlanProvenance::Kind::Factored, prov.value("actf", 1.0)};
        }
    }
    const PlanValidation v = validate_plan(plan);
    if (!v.valid()) {
        throw ValidationError("plan document violates invariants: " + v.findings.front());
    }
    return plan;
}

TimingPlan load_plan_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open plan document '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return load_plan(ss.str());
}

}  // namespace actf
