#pragma once

#include <array>
#include <string>
#include <vector>

#include "actf/network.hpp"

namespace actf {

// Ring layout is the standard NEMA one: ring 1 = phases 1-4, ring 2 = 5-8,
// barrier between {1,2,5,6} (major street) and {3,4,7,8} (side streets).
inline constexpr int ring_of_phase(int phase) { return phase <= 4 ? 0 : 1; }
inline constexpr bool major_side(int phase) {
    return phase == 1 || phase == 2 || phase == 5 || phase == 6;
}
inline constexpr int coordinated_phase_of_ring(int ring) { return ring == 0 ? 2 : 6; }

// Service order within a ring, starting from the coordinated phase.
inline constexpr std::array<std::array<int, 4>, 2> kRingOrder = {{{2, 3, 4, 1}, {6, 7, 8, 5}}};

struct PhaseTiming {
    double green_s = 0.0;  // effective green; clearances are held separately
    double yellow_s = 3.0;
    double rc_s = 1.0;
    double min_green_s = 7.0;
    bool coordinated = false;
    bool operator==(const PhaseTiming&) const = default;
};

struct IntersectionPlan {
    std::string id;
    double offset_s = 0.0;
    std::array<PhaseTiming, 9> phases{};  // NEMA 1..8, index 0 unused
    bool operator==(const IntersectionPlan&) const = default;
};

struct PlanProvenance {
    enum class Kind { Base, Factored };
    Kind kind = Kind::Base;
    double actf = 1.0;  // meaningful for Kind::Factored
    bool operator==(const PlanProvenance&) const = default;
};

struct TimingPlan {
    double cycle_s = 0.0;
    std::vector<IntersectionPlan> intersections;
    PlanProvenance provenance;
    bool operator==(const TimingPlan&) const = default;

    int intersection_index(const std::string& id) const;
    // green + yellow + rc summed over one ring of one intersection
    double ring_length(int intersection_idx, int ring) const;
};

struct ActFTransformResult {
    TimingPlan plan;
    // realized green time moved into the non-coordinated phases, per
    // intersection and ring; equals (actf-1) * sum of base greens when no
    // clamp fires
    std::vector<std::array<double, 2>> added_green_time;
    bool clamp_applied = false;
};

// Scheduled phase windows on the local cycle clock. Clock zero is the start
// of coordinated green; the controller maps global time t to this clock as
// (t + offset) mod C.
struct PhaseWindow {
    double green_start = 0.0;
    double green_end = 0.0;  // the fixed force-off point for actuated phases
};

struct IntersectionSchedule {
    std::array<PhaseWindow, 9> phase{};
    std::array<double, 2> yield_point{};  // scheduled end of coordinated green per ring
};

// Fixed force-off mode: the points below never move, whatever happened
// earlier in the cycle.
struct ForceOffTable {
    double cycle_s = 0.0;
    std::vector<IntersectionSchedule> intersections;

    double force_off(int intersection_idx, int phase) const {
        return intersections[static_cast<std::size_t>(intersection_idx)].phase[phase].green_end;
    }
};

struct PlanValidation {
    std::vector<std::string> findings;
    bool valid() const { return findings.empty(); }
};

struct WebsterParams {
    double sat_flow_vphpl = 1900.0;
    double lost_time_per_phase_s = 4.0;
    double min_cycle_s = 60.0;
    double max_cycle_s = 120.0;
    double yellow_s = 3.0;
    double rc_s = 1.0;
    double min_green_coordinated_s = 2.0;
    double min_green_actuated_s = 7.0;
};

// Webster-style background-cycle design: one cycle for the whole arterial
// (set by the busiest intersection), group greens proportional to critical
// flow ratios, offsets from eastbound free-flow travel time.
TimingPlan optimize_base_plan(const ArterialNetwork& net, const MovementVolumes& vols,
                              const WebsterParams& params);

// Multiply every non-coordinated green by actf and take the added time back
// out of the ring's coordinated green, holding cycle length, offsets and
// clearances fixed. If a coordinated green would fall below its minimum it
// is clamped there and the additions in that ring shrink proportionally.
ActFTransformResult apply_actf(const TimingPlan& base, double actf);

ForceOffTable compute_force_offs(const TimingPlan& plan);

PlanValidation validate_plan(const TimingPlan& plan);

// "actf-plan/1" document round trip
TimingPlan load_plan(const std::string& json_text);
TimingPlan load_plan_file(const std::string& path);
std::string serialize_plan(const TimingPlan& plan);

}  // namespace actf
