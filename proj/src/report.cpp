#include "driftspec/report.hpp"

#include <cstdio>
#include <ostream>

#include "json.hpp"

namespace driftspec {

std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

void write_sweep_csv(std::ostream& out, std::span<const SweepRecord> records) {
    out << "alpha,lambda_numeric,S1,S2,S3,S4,sup_error,scaled_max_drift,max_count,"
           "tail_mass,pohozaev\n";
    for (const auto& r : records) {
        out << format_number(r.alpha) << ',' << format_number(r.lambda_numeric);
        for (int k = 0; k < 4; ++k) {
            const double s = k < static_cast<int>(r.partial_sums.size())
                                 ? r.partial_sums[k]
                                 : r.partial_sums.back();
            out << ',' << format_number(s);
        }
        out << ',' << format_number(r.rescaled_sup_error) << ','
            << format_number(r.scaled_max_drift) << ',' << r.max_count << ','
            << format_number(r.boundary_tail_mass) << ','
            << format_number(r.pohozaev_residual) << '\n';
    }
}

std::string sweep_report_json(const ExperimentConfig& cfg,
                              std::span<const SweepRecord> records,
                              std::span<const std::pair<int, OrderFit>> fits) {
    nlohmann::ordered_json j;
    j["schema_version"] = 1;

    nlohmann::ordered_json cfgj;
    std::string canon;
    for (const auto& [k, v] : cfg.resolved_items()) {
        cfgj[k] = v;
        canon += k + "=" + v + "\n";
    }
    j["config"] = cfgj;
    char hash[24];
    std::snprintf(hash, sizeof hash, "%016llx",
                  static_cast<unsigned long long>(fnv1a64(canon)));
    j["config_hash"] = hash;

    nlohmann::ordered_json recs = nlohmann::ordered_json::array();
    for (const auto& r : records) {
        nlohmann::ordered_json o;
        o["alpha"] = format_number(r.alpha);
        o["lambda_numeric"] = format_number(r.lambda_numeric);
        nlohmann::ordered_json sums = nlohmann::ordered_json::array();
        for (double s : r.partial_sums) sums.push_back(format_number(s));
        o["partial_sums"] = sums;
        o["sup_error"] = format_number(r.rescaled_sup_error);
        nlohmann::ordered_json d = nlohmann::ordered_json::array();
        for (double v : r.d_alpha) d.push_back(format_number(v));
        o["d_alpha"] = d;
        o["scaled_max_drift"] = format_number(r.scaled_max_drift);
        o["max_count"] = r.max_count;
        o["tail_mass"] = format_number(r.boundary_tail_mass);
        o["pohozaev"] = format_number(r.pohozaev_residual);
        o["solver_residual"] = format_number(r.solver_residual);
        o["runtime_seconds"] = format_number(r.runtime_seconds);
        recs.push_back(o);
    }
    j["records"] = recs;

    nlohmann::ordered_json fj = nlohmann::ordered_json::array();
    for (const auto& [order, fit] : fits) {
        nlohmann::ordered_json o;
        o["order"] = order;
        o["slope"] = format_number(fit.slope);
        o["r_squared"] = format_number(fit.r_squared);
        o["points_used"] = fit.points_used;
        o["at_floor"] = fit.at_floor;
        fj.push_back(o);
    }
    j["residual_order_fits"] = fj;
    return j.dump(2) + "\n";
}

}  // namespace driftspec
