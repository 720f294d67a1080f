#pragma once

#include <array>
#include <string>
#include <vector>

#include "actf/timing.hpp"

namespace actf {

enum class Signal { Red, Yellow, Green };

enum class Interval { Green, Yellow, RedClearance, Dwell };

// Stop-bar presence per phase for one tick; detectors exist on actuated
// phases only, so presence on 2/6 is ignored.
struct DetectorInputs {
    std::array<bool, 9> presence{};
};

struct PhaseIndications {
    std::array<Signal, 9> signal{};  // defaults to Red
    bool green(int phase) const { return signal[phase] == Signal::Green; }
};

struct ControllerParams {
    double vehicle_extension_s = 2.0;
};

struct RingState {
    int phase = 0;  // active (or last served, while dwelling) phase
    Interval interval = Interval::Green;
    double interval_elapsed = 0.0;
    double green_elapsed = 0.0;
    double gap_timer = 0.0;  // time since last actuation on the active phase
    int pending = -1;        // phase waiting on a barrier crossing; 0 = park idle
    bool yielded_in_cycle = false;
};

struct TickRecord {
    double t = 0.0;
    double cycle_clock = 0.0;
    std::array<Signal, 9> signal{};
    std::array<int, 2> ring_phase{};
    std::array<Interval, 2> ring_interval{};
};

using SignalTrace = std::vector<TickRecord>;

// Semi-actuated coordinated dual-ring controller for one intersection.
// Coordinated phases (2/6) run on the background cycle without detection;
// everything else is served on call, pinned by fixed force-offs.
class RingBarrierController {
public:
    static constexpr double kDefaultTick = 0.1;

    RingBarrierController(const TimingPlan& plan, const std::string& intersection_id,
                          ControllerParams params = {});

    // Advance one tick. Inputs describe presence during the tick; the
    // returned indications are what the heads display for that tick.
    PhaseIndications tick(const DetectorInputs& inputs, double dt = kDefaultTick);

    PhaseIndications indications() const;

    double time() const { return time_; }
    double cycle_clock() const;
    double cycle_length() const { return cycle_; }
    const RingState& ring(int r) const { return rings_[static_cast<std::size_t>(r)]; }
    bool call(int phase) const { return calls_[phase]; }
    double force_off(int phase) const { return schedule_.phase[phase].green_end; }

private:
    bool actuated(int phase) const { return phase != 2 && phase != 6; }
    bool conflicting_call_for_coordinated(int ring) const;
    bool termination_due(int ring) const;
    int next_eligible(int ring, int after_phase) const;
    int entry_phase(int ring, bool major) const;
    void begin_green(int ring, int phase);
    void begin_dwell(int ring, int pending);
    void resolve_barrier();
    void check_invariants() const;

    double cycle_ = 0.0;
    double offset_ = 0.0;
    std::array<PhaseTiming, 9> phases_{};
    IntersectionSchedule schedule_{};
    ControllerParams params_;

    double time_ = 0.0;
    bool side_major_ = true;
    std::array<bool, 9> calls_{};
    std::array<bool, 2> force_off_latched_{};
    std::array<RingState, 2> rings_{};
};

struct DriftReport {
    std::vector<double> per_cycle;  // |start of coordinated green - schedule|, per cycle
    bool resting = false;           // no coordinated-green starts observed (rest in green)
    double max_drift() const;
};

// Measures how far the start of coordinated green lands from its scheduled
// point (local clock zero). The partial boot cycle is excluded.
DriftReport coordination_drift(const SignalTrace& trace, double cycle_s);

// Tab-separated trace export: t, cycle clock, indications 1..8, ring states.
std::string trace_to_tsv(const SignalTrace& trace);

}  // namespace actf
