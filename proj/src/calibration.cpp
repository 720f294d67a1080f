#include "actf/calibration.hpp"

#include <cmath>
#include <sstream>

#include "actf/errors.hpp"
#include "actf/io_util.hpp"

namespace actf {

double geh(double model_estimate, double count, GehConvention conv) {
    if (model_estimate < 0 || count < 0) {
        throw DomainError("volumes must be non-negative");
    }
    const double sum = model_estimate + count;
    if (sum == 0.0) return 0.0;
    const double diff = model_estimate - count;
    const double denom = conv == GehConvention::Standard ? sum / 2.0 : 2.0 * sum;
    return std::sqrt(diff * diff / denom);
}

CalibrationReport check_calibration(const std::map<std::string, std::pair<double, double>>& counts,
                                    GehConvention conv) {
    if (counts.empty()) throw DomainError("calibration needs at least one link");
    CalibrationReport report;
    double sum_e = 0.0;
    double sum_v = 0.0;
    int n_pass = 0;
    for (const auto& [link, ev] : counts) {
        LinkCalibration lc;
        lc.link = link;
        lc.estimate = ev.first;
        lc.count = ev.second;
        lc.geh = geh(lc.estimate, lc.count, conv);
        lc.pass = lc.geh < 5.0;
        if (lc.pass) ++n_pass;
        sum_e += lc.estimate;
        sum_v += lc.count;
        report.links.push_back(std::move(lc));
    }
    report.links_pass_share = static_cast<double>(n_pass) / static_cast<double>(counts.size());
    report.links_85pct = report.links_pass_share >= 0.85;
    report.network_geh = geh(sum_e, sum_v, conv);
    report.network_pass = report.network_geh < 4.0;
    report.pass = report.links_85pct && report.network_pass;
    return report;
}

std::string calibration_report_csv(const CalibrationReport& report) {
    std::ostringstream out;
    out << "link,estimate,count,geh,pass\n";
    for (const auto& lc : report.links) {
        out << lc.link << ',' << format_double(lc.estimate) << ',' << format_double(lc.count)
            << ',' << format_double(lc.geh) << ',' << (lc.pass ? "yes" : "no") << '\n';
    }
    out << "# network_geh=" << format_double(report.network_geh)
        << " links_pass_share=" << format_double(report.links_pass_share)
        << " links_85pct=" << (report.links_85pct ? "yes" : "no")
        << " network_pass=" << (report.network_pass ? "yes" : "no")
        << " overall=" << (report.pass ? "PASS" : "FAIL") << '\n';
    return out.str();
}

}  // namespace actf
