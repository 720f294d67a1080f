#include "actf/network.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "actf/errors.hpp"

namespace actf {

using nlohmann::json;

Approach approach_from_string(const std::string& s) {
    if (s == "N") return Approach::N;
    if (s == "S") return Approach::S;
    if (s == "E") return Approach::E;
    if (s == "W") return Approach::W;
    throw ParseError("unknown approach '" + s + "' (expected N|S|E|W)");
}

std::string to_string(Approach a) {
    switch (a) {
        case Approach::N: return "N";
        case Approach::S: return "S";
        case Approach::E: return "E";
        case Approach::W: return "W";
    }
    return "?";
}

Turn turn_from_string(const std::string& s) {
    if (s == "L") return Turn::Left;
    if (s == "T") return Turn::Through;
    if (s == "R") return Turn::Right;
    throw ParseError("unknown turn '" + s + "' (expected L|T|R)");
}

std::string to_string(Turn t) {
    switch (t) {
        case Turn::Left: return "L";
        case Turn::Through: return "T";
        case Turn::Right: return "R";
    }
    return "?";
}

int Intersection::phase_for(Approach a, Turn t) const {
    const Turn lookup = (t == Turn::Right) ? Turn::Through : t;
    for (int p = 1; p <= 8; ++p) {
        if (phase_movement[p].approach == a && phase_movement[p].turn == lookup) {
            return p;
        }
    }
    return -1;
}

int ArterialNetwork::intersection_index(const std::string& id) const {
    for (std::size_t i = 0; i < intersections.size(); ++i) {
        if (intersections[i].id == id) return static_cast<int>(i);
    }
    return -1;
}

const ExternalEntry* ArterialNetwork::external_by_id(const std::string& id) const {
    for (const auto& e : externals) {
        if (e.id == id) return &e;
    }
    return nullptr;
}

const Link* ArterialNetwork::approach_link(int intersection_idx, Approach a) const {
    const std::string& id = intersections[static_cast<std::size_t>(intersection_idx)].id;
    for (const auto& link : links) {
        if (link.to != id) continue;
        // external feeder: approach comes from the entry record
        if (const ExternalEntry* e = external_by_id(link.from)) {
            if (e->intersection == id && e->approach == a) return &link;
            continue;
        }
        // internal feeder: direction inferred from document order (west->east)
        const int from_idx = intersection_index(link.from);
        if (from_idx < 0) continue;
        const Approach dir = (from_idx < intersection_idx) ? Approach::E : Approach::W;
        if (dir == a) return &link;
    }
    return nullptr;
}

double MovementVolumes::approach_volume(int intersection_idx, Approach a) const {
    const auto& m = approaches[static_cast<std::size_t>(intersection_idx)];
    const auto it = m.find(a);
    return it == m.end() ? 0.0 : it->second.total();
}

double MovementVolumes::phase_volume(const ArterialNetwork& net, int intersection_idx,
                                     int phase) const {
    const Intersection& ix = net.intersections[static_cast<std::size_t>(intersection_idx)];
    const Movement mv = ix.phase_movement[phase];
    const auto& m = approaches[static_cast<std::size_t>(intersection_idx)];
    const auto it = m.find(mv.approach);
    if (it == m.end()) return 0.0;
    return mv.turn == Turn::Left ? it->second.left : it->second.through + it->second.right;
}

namespace {

const json& require_field(const json& j, const char* key, const std::string& path) {
    const auto it = j.find(key);
    if (it == j.end()) {
        throw ParseError("missing field '" + std::string(key) + "' at " + path);
    }
    return *it;
}

double require_number(const json& j, const char* key, const std::string& path) {
    const json& v = require_field(j, key, path);
    if (!v.is_number()) {
        throw ParseError("field '" + std::string(key) + "' at " + path + " must be a number");
    }
    return v.get<double>();
}

std::string require_string(const json& j, const char* key, const std::string& path) {
    const json& v = require_field(j, key, path);
    if (!v.is_string()) {
        throw ParseError("field '" + std::string(key) + "' at " + path + " must be a string");
    }
    return v.get<std::string>();
}

// Left phase n protects across the through phase it opposes; same-approach
// pairs in the standard layout are (1,6), (5,2), (3,8), (7,4).
constexpr int kOpposedThrough[9] = {0, 6, 0, 8, 0, 2, 0, 4, 0};

void validate(const ArterialNetwork& net) {
    if (net.intersections.empty()) {
        throw ValidationError("network has no intersections");
    }
    std::set<std::string> ids;
    for (const auto& ix : net.intersections) {
        if (!ids.insert(ix.id).second) {
            throw ValidationError("duplicate intersection id '" + ix.id + "'");
        }
    }
    for (const auto& e : net.externals) {
        if (!ids.insert(e.id).second) {
            throw ValidationError("duplicate id '" + e.id + "' (externals and intersections share one namespace)");
        }
        if (net.intersection_index(e.intersection) < 0) {
            throw ValidationError("external '" + e.id + "' references unknown intersection '" +
                                  e.intersection + "'");
        }
    }
    for (const auto& link : net.links) {
        for (const std::string* end : {&link.from, &link.to}) {
            if (net.intersection_index(*end) < 0 && net.external_by_id(*end) == nullptr) {
                throw ValidationError("link endpoint '" + *end + "' is not a known intersection or external entry");
            }
        }
        if (link.length_m <= 0 || link.ffs_mps <= 0) {
            throw ValidationError("link " + link.from + "->" + link.to +
                                  " must have positive length and free-flow speed");
        }
        if (link.lanes.left < 0 || link.lanes.through < 1) {
            throw ValidationError("link " + link.from + "->" + link.to + " has invalid lane counts");
        }
    }

    for (const auto& ix : net.intersections) {
        std::set<std::pair<Approach, Turn>> seen;
        for (int p = 1; p <= 8; ++p) {
            const Movement& mv = ix.phase_movement[p];
            const bool odd = (p % 2) == 1;
            if (odd && mv.turn != Turn::Left) {
                throw ValidationError("intersection '" + ix.id + "' phase " + std::to_string(p) +
                                      " must be a protected left");
            }
            if (!odd && mv.turn != Turn::Through) {
                throw ValidationError("intersection '" + ix.id + "' phase " + std::to_string(p) +
                                      " must be a through movement");
            }
            if (!seen.insert({mv.approach, mv.turn}).second) {
                throw ValidationError("intersection '" + ix.id + "' assigns (" + to_string(mv.approach) +
                                      "," + to_string(mv.turn) + ") to more than one phase");
            }
        }
        // coordinated phases 2 and 6 are the major-street throughs
        const auto a2 = ix.phase_movement[2].approach;
        const auto a6 = ix.phase_movement[6].approach;
        const bool major_ew = (a2 == Approach::E && a6 == Approach::W) ||
                              (a2 == Approach::W && a6 == Approach::E);
        if (!major_ew) {
            throw ValidationError("intersection '" + ix.id +
                                  "' phases 2/6 must be the opposing E/W arterial throughs");
        }
        for (int p = 1; p <= 8; p += 2) {
            const int opp = kOpposedThrough[p];
            if (ix.phase_movement[p].approach != ix.phase_movement[opp].approach) {
                throw ValidationError("intersection '" + ix.id + "' phase " + std::to_string(p) +
                                      " must share its approach with phase " + std::to_string(opp));
            }
        }
        for (const auto& [p, det] : ix.detectors) {
            if (p == 2 || p == 6) {
                throw ValidationError("intersection '" + ix.id +
                                      "' places a detector on coordinated phase " + std::to_string(p));
            }
            if (p < 1 || p > 8) {
                throw ValidationError("intersection '" + ix.id + "' detector on invalid phase " +
                                      std::to_string(p));
            }
            if (det.zone_length_m <= 0) {
                throw ValidationError("intersection '" + ix.id + "' detector zone must be positive");
            }
        }
        for (int p : {1, 3, 4, 5, 7, 8}) {
            if (ix.detectors.find(p) == ix.detectors.end()) {
                throw ValidationError("intersection '" + ix.id + "' is missing a detector on actuated phase " +
                                      std::to_string(p));
            }
        }
        // every approach must have an inbound link
        const int idx = net.intersection_index(ix.id);
        for (Approach a : {Approach::N, Approach::S, Approach::E, Approach::W}) {
            if (net.approach_link(idx, a) == nullptr) {
                throw ValidationError("intersection '" + ix.id + "' approach " + to_string(a) +
                                      " has no inbound link");
            }
        }
    }

    // internal links must connect adjacent intersections in document order
    for (const auto& link : net.links) {
        const int a = net.intersection_index(link.from);
        const int b = net.intersection_index(link.to);
        if (a >= 0 && b >= 0 && std::abs(a - b) != 1) {
            throw ValidationError("internal link " + link.from + "->" + link.to +
                                  " must connect adjacent intersections");
        }
    }
}

}  // namespace

ArterialNetwork load_network(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("network document is not valid JSON: ") + e.what());
    }
    if (require_string(doc, "format", "$") != "actf-net/1") {
        throw ParseError("unsupported network format tag (expected actf-net/1)");
    }

    ArterialNetwork net;
    const json& jix = require_field(doc, "intersections", "$");
    for (std::size_t i = 0; i < jix.size(); ++i) {
        const std::string path = "$.intersections[" + std::to_string(i) + "]";
        const json& j = jix[i];
        Intersection ix;
        ix.id = require_string(j, "id", path);
        const json& phases = require_field(j, "phases", path);
        for (int p = 1; p <= 8; ++p) {
            const std::string key = std::to_string(p);
            const auto it = phases.find(key);
            if (it == phases.end()) {
                throw ValidationError("intersection '" + ix.id + "' must define all 8 NEMA phases (missing " +
                                      key + ")");
            }
            ix.phase_movement[p].approach =
                approach_from_string(require_string(*it, "approach", path + ".phases." + key));
            ix.phase_movement[p].turn =
                turn_from_string(require_string(*it, "turn", path + ".phases." + key));
        }
        if (phases.size() != 8) {
            throw ValidationError("intersection '" + ix.id + "' must define exactly 8 phases");
        }
        if (j.contains("detectors")) {
            for (const auto& [key, det] : j.at("detectors").items()) {
                DetectorConfig cfg;
                cfg.zone_length_m = require_number(det, "zone_length_m", path + ".detectors." + key);
                ix.detectors[std::stoi(key)] = cfg;
            }
        }
        net.intersections.push_back(std::move(ix));
    }

    const json& jlinks = require_field(doc, "links", "$");
    for (std::size_t i = 0; i < jlinks.size(); ++i) {
        const std::string path = "$.links[" + std::to_string(i) + "]";
        const json& j = jlinks[i];
        Link link;
        link.from = require_string(j, "from", path);
        link.to = require_string(j, "to", path);
        link.length_m = require_number(j, "length_m", path);
        link.ffs_mps = require_number(j, "ffs_mps", path);
        const json& lanes = require_field(j, "lanes", path);
        link.lanes.left = static_cast<int>(require_number(lanes, "left", path + ".lanes"));
        link.lanes.through = static_cast<int>(require_number(lanes, "through", path + ".lanes"));
        net.links.push_back(std::move(link));
    }

    const json& jext = require_field(doc, "externals", "$");
    for (std::size_t i = 0; i < jext.size(); ++i) {
        const std::string path = "$.externals[" + std::to_string(i) + "]";
        const json& j = jext[i];
        ExternalEntry e;
        e.id = require_string(j, "id", path);
        e.intersection = require_string(j, "intersection", path);
        e.approach = approach_from_string(require_string(j, "approach", path));
        net.externals.push_back(std::move(e));
    }

    validate(net);
    return net;
}

ArterialNetwork load_network_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open network document '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return load_network(ss.str());
}

std::string serialize_network(const ArterialNetwork& net) {
    json doc;
    doc["format"] = "actf-net/1";
    doc["intersections"] = json::array();
    for (const auto& ix : net.intersections) {
        json j;
        j["id"] = ix.id;
        json phases;
        for (int p = 1; p <= 8; ++p) {
            phases[std::to_string(p)] = {{"approach", to_string(ix.phase_movement[p].approach)},
                                         {"turn", to_string(ix.phase_movement[p].turn)}};
        }
        j["phases"] = std::move(phases);
        json dets;
        for (const auto& [p, det] : ix.detectors) {
            dets[std::to_string(p)] = {{"zone_length_m", det.zone_length_m}};
        }
        j["detectors"] = std::move(dets);
        doc["intersections"].push_back(std::move(j));
    }
    doc["links"] = json::array();
    for (const auto& link : net.links) {
        doc["links"].push_back({{"from", link.from},
                                {"to", link.to},
                                {"length_m", link.length_m},
                                {"ffs_mps", link.ffs_mps},
                                {"lanes", {{"left", link.lanes.left}, {"through", link.lanes.through}}}});
    }
    doc["externals"] = json::array();
    for (const auto& e : net.externals) {
        doc["externals"].push_back(
            {{"id", e.id}, {"intersection", e.intersection}, {"approach", to_string(e.approach)}});
    }
    return doc.dump(2) + "\n";
}

MovementVolumes expand_volumes(const ArterialNetwork& net, const ExternalVolumes& ext,
                               double lt_rate) {
    constexpr double kRightRate = 10.0;
    if (lt_rate < 0 || lt_rate + kRightRate > 100.0) {
        throw DomainError("left-turn rate must satisfy 0 <= lt and lt + 10 <= 100");
    }
    const std::size_t n = net.intersections.size();
    if (ext.vol_ss_nb.size() != n || ext.vol_ss_sb.size() != n) {
        throw DomainError("external volume vectors must have one entry per intersection");
    }
    if (ext.vol_eb < 0 || ext.vol_wb < 0) throw DomainError("negative external volume");
    for (double v : ext.vol_ss_nb) {
        if (v < 0) throw DomainError("negative external volume");
    }
    for (double v : ext.vol_ss_sb) {
        if (v < 0) throw DomainError("negative external volume");
    }

    const double lt = lt_rate / 100.0;
    const double rt = kRightRate / 100.0;
    const auto split = [lt, rt](double v) {
        TurningCounts c;
        c.left = lt * v;
        c.right = rt * v;
        c.through = v - c.left - c.right;
        return c;
    };

    MovementVolumes mv;
    mv.approaches.resize(n);

    // side streets are fed by externals only
    for (std::size_t i = 0; i < n; ++i) {
        mv.approaches[i][Approach::N] = split(ext.vol_ss_nb[i]);
        mv.approaches[i][Approach::S] = split(ext.vol_ss_sb[i]);
    }

    // eastbound sweep, west to east: through + side-street feeders
    double v_eb = ext.vol_eb;
    for (std::size_t i = 0; i < n; ++i) {
        mv.approaches[i][Approach::E] = split(v_eb);
        // heading north, right is east; heading south, left is east
        v_eb = mv.approaches[i][Approach::E].through + mv.approaches[i][Approach::N].right +
               mv.approaches[i][Approach::S].left;
    }

    // westbound sweep, east to west
    double v_wb = ext.vol_wb;
    for (std::size_t j = n; j-- > 0;) {
        mv.approaches[j][Approach::W] = split(v_wb);
        v_wb = mv.approaches[j][Approach::W].through + mv.approaches[j][Approach::S].right +
               mv.approaches[j][Approach::N].left;
    }

    // per-link calibration targets: volume crossing the link's downstream stop line
    for (const auto& link : net.links) {
        const int to_idx = net.intersection_index(link.to);
        if (to_idx < 0) continue;
        for (Approach a : {Approach::N, Approach::S, Approach::E, Approach::W}) {
            if (net.approach_link(to_idx, a) == &link) {
                mv.link_targets[link.from + "->" + link.to] = mv.approach_volume(to_idx, a);
            }
        }
    }
    return mv;
}

}  // namespace actf
