#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "actf/controller.hpp"
#include "actf/network.hpp"
#include "actf/timing.hpp"

namespace actf {

struct DemandSpec {
    ExternalVolumes externals;
    double lt_rate_pct = 20.0;
    double phf = 0.92;
    bool peaked = false;  // flat hourly rate, or 4x15-min profile with the
                          // peak quarter at volume/(4*phf)
};

struct SimParams {
    double tick_s = 0.1;
    double sat_flow_vphpl = 1900.0;
    double startup_lost_s = 2.0;
    double left_bay_storage_m = 75.0;
    double queue_spacing_m = 7.0;
    double drain_cap_s = 900.0;  // grace period for in-flight vehicles after generation stops
    ControllerParams controller;
};

struct RunResult {
    std::string scenario_id;
    std::uint64_t seed = 0;
    PlanProvenance plan;
    double avg_delay_s = 0.0;   // over completed analysis-window vehicles
    std::int64_t completed = 0;
    std::int64_t generated = 0;  // created inside the analysis window
    std::int64_t in_network_at_end = 0;
    bool spillback = false;
    // stop-line crossings per feeder link during the analysis hour
    std::map<std::string, double> link_counts;
};

// Deterministic seeded point-queue simulation of the arterial under one
// timing plan. Identical inputs and seed give a bit-identical result;
// arrival streams are keyed by (seed, external entry) so the same seed sees
// the same traffic under different plans.
RunResult run_simulation(const ArterialNetwork& net, const DemandSpec& demand,
                         const TimingPlan& plan, std::uint64_t seed, double warmup_s = 900.0,
                         double analysis_s = 3600.0, const SimParams& params = {},
                         const std::string& scenario_id = "adhoc");

// Vehicle-weighted mean delay across runs of one (scenario, plan).
double average_delay(const std::vector<RunResult>& results);

std::string run_result_csv_header();
std::string run_result_csv_row(const RunResult& r);

}  // namespace actf
