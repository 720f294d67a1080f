#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace actf {

// Compass heading of travel. An eastbound approach enters from the west.
enum class Approach { N, S, E, W };

enum class Turn { Left, Through, Right };

Approach approach_from_string(const std::string& s);
std::string to_string(Approach a);
Turn turn_from_string(const std::string& s);
std::string to_string(Turn t);

struct Movement {
    Approach approach;
    Turn turn;
    bool operator==(const Movement&) const = default;
};

struct DetectorConfig {
    double zone_length_m = 10.0;  // stop-bar presence zone
    bool operator==(const DetectorConfig&) const = default;
};

struct Intersection {
    std::string id;
    // NEMA phases 1..8; index 0 unused.
    std::array<Movement, 9> phase_movement{};
    // Detectors exist only on actuated phases (1,3,4,5,7,8).
    std::map<int, DetectorConfig> detectors;

    bool operator==(const Intersection&) const = default;

    // Phase serving (approach, turn); right turns ride the through phase.
    int phase_for(Approach a, Turn t) const;
};

struct LaneGroupCounts {
    int left = 1;
    int through = 1;  // right turns share the through lanes
    bool operator==(const LaneGroupCounts&) const = default;
};

struct Link {
    std::string from;  // intersection id or external entry id
    std::string to;
    double length_m = 0.0;
    double ffs_mps = 0.0;  // free-flow speed
    LaneGroupCounts lanes;
    bool operator==(const Link&) const = default;
};

struct ExternalEntry {
    std::string id;
    std::string intersection;
    Approach approach;
    bool operator==(const ExternalEntry&) const = default;
};

// Immutable after load; safe to share across concurrent runs.
struct ArterialNetwork {
    std::vector<Intersection> intersections;  // document order = west to east
    std::vector<Link> links;
    std::vector<ExternalEntry> externals;

    bool operator==(const ArterialNetwork&) const = default;

    int intersection_index(const std::string& id) const;  // -1 if unknown
    const ExternalEntry* external_by_id(const std::string& id) const;

    // Inbound link feeding the given approach of an intersection; null if the
    // approach has no feeder (should not happen on a validated network).
    const Link* approach_link(int intersection_idx, Approach a) const;
};

// Hourly external demand, Table-style layout: one major entry per arterial
// end plus one side-street entry per intersection and direction.
struct ExternalVolumes {
    double vol_eb = 0.0;
    double vol_wb = 0.0;
    std::vector<double> vol_ss_nb;  // one per intersection
    std::vector<double> vol_ss_sb;
};

struct TurningCounts {
    double left = 0.0;
    double through = 0.0;
    double right = 0.0;
    double total() const { return left + through + right; }
};

struct MovementVolumes {
    // [intersection][approach] -> left/through/right split, veh/h
    std::vector<std::map<Approach, TurningCounts>> approaches;
    // volume targets per link id (the volume crossing the link's downstream
    // stop line), used as calibration counts
    std::map<std::string, double> link_targets;

    // Demand served by a NEMA phase: left phases carry the left turns,
    // through phases carry through + right.
    double phase_volume(const ArterialNetwork& net, int intersection_idx, int phase) const;
    double approach_volume(int intersection_idx, Approach a) const;
};

// Parse and validate an "actf-net/1" document.
ArterialNetwork load_network(const std::string& json_text);
ArterialNetwork load_network_file(const std::string& path);
std::string serialize_network(const ArterialNetwork& net);

// Expand external approach volumes into per-movement volumes, propagating
// internal link volumes downstream by turning-fraction flow balance.
// lt_rate is a percentage; right turns are fixed at 10%.
MovementVolumes expand_volumes(const ArterialNetwork& net, const ExternalVolumes& ext,
                               double lt_rate);

}  // namespace actf
