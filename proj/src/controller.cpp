#include "actf/controller.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "actf/errors.hpp"
#include "actf/io_util.hpp"

namespace actf {

namespace {

constexpr double kEps = 1e-9;

// true if point lies in the half-open clock arc (from, to]
bool clock_crossed(double from, double to, double point, double cycle) {
    if (from == to) return false;
    if (from < to) return point > from + kEps && point <= to + kEps;
    // wrapped
    return point > from + kEps || point <= to + kEps;
    (void)cycle;
}

}  // namespace

RingBarrierController::RingBarrierController(const TimingPlan& plan,
                                             const std::string& intersection_id,
                                             ControllerParams params)
    : params_(params) {
    const PlanValidation v = validate_plan(plan);
    if (!v.valid()) {
        throw DomainError("controller requires a valid plan: " + v.findings.front());
    }
    const int idx = plan.intersection_index(intersection_id);
    if (idx < 0) {
        throw DomainError("plan has no intersection '" + intersection_id + "'");
    }
    cycle_ = plan.cycle_s;
    offset_ = plan.intersections[static_cast<std::size_t>(idx)].offset_s;
    phases_ = plan.intersections[static_cast<std::size_t>(idx)].phases;
    schedule_ = compute_force_offs(plan).intersections[static_cast<std::size_t>(idx)];

    // start resting in coordinated green, clock aligned to the offset
    for (int r = 0; r < 2; ++r) {
        rings_[static_cast<std::size_t>(r)].phase = coordinated_phase_of_ring(r);
        rings_[static_cast<std::size_t>(r)].interval = Interval::Green;
    }
}

double RingBarrierController::cycle_clock() const {
    return std::fmod(time_ + offset_, cycle_);
}

bool RingBarrierController::conflicting_call_for_coordinated(int ring) const {
    // anything that cannot run concurrently with this ring's coordinated
    // phase: the ring's own other phases plus the partner ring's side-street
    // phases (the partner's major-street left is compatible)
    for (int p = 1; p <= 8; ++p) {
        if (!calls_[p]) continue;
        if (ring_of_phase(p) == ring && p != coordinated_phase_of_ring(ring)) return true;
        if (ring_of_phase(p) != ring && !major_side(p)) return true;
    }
    return false;
}

bool RingBarrierController::termination_due(int ring) const {
    const RingState& rs = rings_[static_cast<std::size_t>(ring)];
    const int p = rs.phase;
    const PhaseTiming& ph = phases_[p];
    if (rs.green_elapsed + kEps < ph.min_green_s) return false;  // min green overrides all

    if (!actuated(p)) {
        // coordinated: yield once per cycle, at or after the yield point,
        // only when a conflicting call is waiting
        if (rs.yielded_in_cycle) return false;
        const double yield_at = schedule_.yield_point[static_cast<std::size_t>(ring)];
        if (cycle_clock() + kEps < yield_at) return false;
        return conflicting_call_for_coordinated(ring);
    }

    if (rs.gap_timer > params_.vehicle_extension_s + kEps) return true;          // gap-out
    if (rs.green_elapsed + kEps >= ph.green_s) return true;                      // max-out
    if (force_off_latched_[static_cast<std::size_t>(ring)]) return true;         // force-off
    return false;
}

int RingBarrierController::next_eligible(int ring, int after_phase) const {
    const auto& order = kRingOrder[static_cast<std::size_t>(ring)];
    int idx = 0;
    for (int i = 0; i < 4; ++i) {
        if (order[static_cast<std::size_t>(i)] == after_phase) idx = i;
    }
    const int coord = coordinated_phase_of_ring(ring);
    for (int step = 1; step <= 4; ++step) {
        const int q = order[static_cast<std::size_t>((idx + step) % 4)];
        if (q == coord || calls_[q]) return q;
    }
    return coord;
}

int RingBarrierController::entry_phase(int ring, bool major) const {
    // first eligible phase on the target side, in ring order after the last
    // served phase; -1 means nothing to serve there (park)
    const auto& order = kRingOrder[static_cast<std::size_t>(ring)];
    const int last = rings_[static_cast<std::size_t>(ring)].phase;
    int idx = 0;
    for (int i = 0; i < 4; ++i) {
        if (order[static_cast<std::size_t>(i)] == last) idx = i;
    }
    const int coord = coordinated_phase_of_ring(ring);
    for (int step = 1; step <= 4; ++step) {
        const int q = order[static_cast<std::size_t>((idx + step) % 4)];
        if (major_side(q) != major) continue;
        if (q == coord || calls_[q]) return q;
    }
    return major ? coord : -1;
}

void RingBarrierController::begin_green(int ring, int phase) {
    RingState& rs = rings_[static_cast<std::size_t>(ring)];
    rs.phase = phase;
    rs.interval = Interval::Green;
    rs.interval_elapsed = 0.0;
    rs.green_elapsed = 0.0;
    rs.gap_timer = 0.0;
    rs.pending = -1;
    calls_[phase] = false;
    force_off_latched_[static_cast<std::size_t>(ring)] = false;
}

void RingBarrierController::begin_dwell(int ring, int pending) {
    RingState& rs = rings_[static_cast<std::size_t>(ring)];
    rs.interval = Interval::Dwell;
    rs.interval_elapsed = 0.0;
    rs.pending = pending;
}

void RingBarrierController::resolve_barrier() {
    RingState& r0 = rings_[0];
    RingState& r1 = rings_[1];
    const bool r0_waiting = r0.interval == Interval::Dwell;
    const bool r1_waiting = r1.interval == Interval::Dwell;
    if (!r0_waiting || !r1_waiting) return;

    const bool cross_wanted = (r0.pending > 0 && major_side(r0.pending) != side_major_) ||
                              (r1.pending > 0 && major_side(r1.pending) != side_major_) ||
                              (r0.pending == 0 && r1.pending == 0);
    if (!cross_wanted) return;

    side_major_ = !side_major_;
    for (int r = 0; r < 2; ++r) {
        RingState& rs = rings_[static_cast<std::size_t>(r)];
        int target = rs.pending;
        if (target <= 0 || major_side(target) != side_major_) {
            target = entry_phase(r, side_major_);
        }
        if (target > 0) {
            begin_green(r, target);
        } else {
            begin_dwell(r, 0);  // park on the new side with nothing to serve
        }
    }
}

PhaseIndications RingBarrierController::tick(const DetectorInputs& inputs, double dt) {
    const double ck_prev = cycle_clock();
    time_ += dt;
    const double ck_now = cycle_clock();

    if (clock_crossed(ck_prev, ck_now, 0.0, cycle_)) {
        rings_[0].yielded_in_cycle = false;
        rings_[1].yielded_in_cycle = false;
    }

    // (a) latch calls; feed the extension timer of active greens
    for (int p = 1; p <= 8; ++p) {
        if (!actuated(p) || !inputs.presence[p]) continue;
        const int r = ring_of_phase(p);
        RingState& rs = rings_[static_cast<std::size_t>(r)];
        if (rs.interval == Interval::Green && rs.phase == p) {
            rs.gap_timer = 0.0;
        } else {
            calls_[p] = true;
        }
    }

    for (int r = 0; r < 2; ++r) {
        RingState& rs = rings_[static_cast<std::size_t>(r)];
        rs.interval_elapsed += dt;
        if (rs.interval == Interval::Green) {
            rs.green_elapsed += dt;
            if (!(rs.phase != 0 && inputs.presence[rs.phase] && actuated(rs.phase))) {
                rs.gap_timer += dt;
            }
            if (actuated(rs.phase) &&
                clock_crossed(ck_prev, ck_now, schedule_.phase[rs.phase].green_end, cycle_)) {
                force_off_latched_[static_cast<std::size_t>(r)] = true;
            }
        }
    }

    // (b)-(e) green termination, clearance progression, next-phase selection
    for (int r = 0; r < 2; ++r) {
        RingState& rs = rings_[static_cast<std::size_t>(r)];
        switch (rs.interval) {
            case Interval::Green:
                if (termination_due(r)) {
                    if (!actuated(rs.phase)) rs.yielded_in_cycle = true;
                    rs.interval = Interval::Yellow;
                    rs.interval_elapsed = 0.0;
                }
                break;
            case Interval::Yellow:
                if (rs.interval_elapsed + kEps >= phases_[rs.phase].yellow_s) {
                    rs.interval = Interval::RedClearance;
                    rs.interval_elapsed = 0.0;
                }
                break;
            case Interval::RedClearance:
                if (rs.interval_elapsed + kEps >= phases_[rs.phase].rc_s) {
                    int q = next_eligible(r, rs.phase);
                    const int partner = 1 - r;
                    const RingState& ps = rings_[static_cast<std::size_t>(partner)];
                    if (q == coordinated_phase_of_ring(r)) {
                        // don't slide back into coordinated green while the
                        // other ring needs the side-street side of the barrier
                        bool partner_needs_minor =
                            (ps.interval == Interval::Dwell && ps.pending > 0 &&
                             !major_side(ps.pending));
                        for (int p : kRingOrder[static_cast<std::size_t>(partner)]) {
                            if (!major_side(p) && calls_[p]) partner_needs_minor = true;
                        }
                        if (partner_needs_minor) {
                            begin_dwell(r, 0);
                            break;
                        }
                    }
                    if (major_side(q) == side_major_) {
                        begin_green(r, q);
                    } else {
                        begin_dwell(r, q);
                    }
                }
                break;
            case Interval::Dwell:
                // a parked ring picks up late calls arriving on its side
                if (rs.pending == 0) {
                    const int q = entry_phase(r, side_major_);
                    if (q > 0 && (calls_[q] || q == coordinated_phase_of_ring(r))) {
                        begin_green(r, q);
                    }
                }
                break;
        }
    }

    // (g) barrier crossing requires both rings ready
    resolve_barrier();
    check_invariants();
    return indications();
}

PhaseIndications RingBarrierController::indications() const {
    PhaseIndications out;
    for (int r = 0; r < 2; ++r) {
        const RingState& rs = rings_[static_cast<std::size_t>(r)];
        if (rs.phase == 0) continue;
        switch (rs.interval) {
            case Interval::Green: out.signal[rs.phase] = Signal::Green; break;
            case Interval::Yellow: out.signal[rs.phase] = Signal::Yellow; break;
            default: break;  // red clearance and dwell display red
        }
    }
    return out;
}

void RingBarrierController::check_invariants() const {
    const RingState& r0 = rings_[0];
    const RingState& r1 = rings_[1];
    const bool r0_active = r0.interval != Interval::Dwell && r0.phase != 0;
    const bool r1_active = r1.interval != Interval::Dwell && r1.phase != 0;
    if (r0_active && r1_active && major_side(r0.phase) != major_side(r1.phase)) {
        throw std::logic_error("barrier violation: phases " + std::to_string(r0.phase) + " and " +
                               std::to_string(r1.phase) + " active together");
    }
}

double DriftReport::max_drift() const {
    double m = 0.0;
    for (double d : per_cycle) m = std::max(m, d);
    return m;
}

DriftReport coordination_drift(const SignalTrace& trace, double cycle_s) {
    if (trace.empty() || trace.back().t - trace.front().t < 2.0 * cycle_s) {
        throw DomainError("drift measurement needs a trace of at least two cycles");
    }
    DriftReport report;
    const double t0 = trace.front().t;
    for (std::size_t i = 1; i < trace.size(); ++i) {
        const bool was_green = trace[i - 1].signal[2] == Signal::Green;
        const bool is_green = trace[i].signal[2] == Signal::Green;
        if (is_green && !was_green) {
            if (trace[i].t - t0 < cycle_s) continue;  // boot cycle
            const double ck = trace[i].cycle_clock;
            report.per_cycle.push_back(std::min(ck, cycle_s - ck));
        }
    }
    report.resting = report.per_cycle.empty();
    return report;
}

std::string trace_to_tsv(const SignalTrace& trace) {
    static const char* kSignalChar = "ryG";
    static const char* kIntervalName[] = {"green", "yellow", "rc", "dwell"};
    std::ostringstream out;
    out << "t\tclock\tphases_1_to_8\tring1\tring2\n";
    for (const auto& rec : trace) {
        out << format_double(rec.t) << '\t' << format_double(rec.cycle_clock) << '\t';
        for (int p = 1; p <= 8; ++p) {
            out << kSignalChar[static_cast<int>(rec.signal[p])];
        }
        for (int r = 0; r < 2; ++r) {
            out << '\t' << rec.ring_phase[static_cast<std::size_t>(r)] << ':'
                << kIntervalName[static_cast<int>(rec.ring_interval[static_cast<std::size_t>(r)])];
        }
        out << '\n';
    }
    return out.str();
}

}  // namespace actf
