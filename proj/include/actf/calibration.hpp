#pragma once

#include <map>
#include <string>
#include <vector>

namespace actf {

enum class GehConvention {
    Standard,  // sqrt((e-v)^2 / ((e+v)/2))
    Halved,    // sqrt((e-v)^2 / (2(e+v))); reproduces some published tables
};

// Volume-comparison statistic. Defined as 0 when both volumes are 0.
double geh(double model_estimate, double count, GehConvention conv = GehConvention::Standard);

struct LinkCalibration {
    std::string link;
    double count = 0.0;     // target V
    double estimate = 0.0;  // model E
    double geh = 0.0;
    bool pass = false;  // GEH < 5
};

struct CalibrationReport {
    std::vector<LinkCalibration> links;
    double network_geh = 0.0;      // GEH of summed volumes
    double links_pass_share = 0.0; // fraction of links with GEH < 5
    bool links_85pct = false;      // >= 85% of links below 5
    bool network_pass = false;     // network GEH < 4
    bool pass = false;             // both criteria
};

// link id -> (model estimate E, target count V)
CalibrationReport check_calibration(const std::map<std::string, std::pair<double, double>>& counts,
                                    GehConvention conv = GehConvention::Standard);

std::string calibration_report_csv(const CalibrationReport& report);

}  // namespace actf
