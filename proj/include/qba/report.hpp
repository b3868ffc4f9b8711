#pragma once

// Case-study style results: one row per approach with RD and RR, their
// 95% intervals, and diagnostics. CSV at full precision, aligned text at
// two decimals, and a key = value run manifest.

#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "qba/bias_parameters.hpp"
#include "qba/csv.hpp"
#include "qba/engine.hpp"

namespace qba {

struct ReportRow {
    std::string approach;  // Primary / Simultaneous / One-at-a-time
    std::string method;    // Primary, All biases, SB-collider, ...
    EstimateResult result;
};

// Primary first, then the simultaneous row, then single biases in the order
// SB-collider, SB-generalizability(consent), SB-generalizability(English),
// MB-A, MB-Y, CB.
inline std::vector<ReportRow> assemble_report(const EstimateResult& primary,
                                              const std::optional<EstimateResult>& simultaneous,
                                              const std::map<BiasKind, EstimateResult>& single) {
    std::vector<ReportRow> rows{{"Primary", "Primary", primary}};
    if (simultaneous) rows.push_back({"Simultaneous", "All biases", *simultaneous});
    for (auto k : {BiasKind::missingness_ry, BiasKind::selection_consent_s, BiasKind::selection_english_e,
                   BiasKind::misclass_a, BiasKind::misclass_y, BiasKind::confounding_u}) {
        auto it = single.find(k);
        if (it != single.end()) rows.push_back({"One-at-a-time", bias_report_label(k), it->second});
    }
    return rows;
}

inline constexpr const char* kEstimatesHeader =
    "approach,method,interval,rd,rd_se,rd_lo,rd_hi,log_rr,log_rr_se,log_rr_lo,log_rr_hi,rr,rr_lo,rr_hi,"
    "log_rr_fallback,n_analytic,max_weight,weight_cv,replicates,dropped,warning";

inline void write_estimates_csv(const std::vector<ReportRow>& rows, std::ostream& os) {
    using detail::format_double;
    os << kEstimatesHeader << '\n';
    for (const auto& row : rows) {
        const auto& r = row.result;
        os << row.approach << ',' << row.method << ',' << to_string(r.interval_kind) << ','
           << format_double(r.rd_hat) << ',' << format_double(r.rd_se) << ',' << format_double(r.interval_rd.lo)
           << ',' << format_double(r.interval_rd.hi) << ',' << format_double(r.log_rr_hat) << ','
           << format_double(r.log_rr_se) << ',' << format_double(r.interval_log_rr.lo) << ','
           << format_double(r.interval_log_rr.hi) << ',' << format_double(std::exp(r.log_rr_hat)) << ','
           << format_double(std::exp(r.interval_log_rr.lo)) << ',' << format_double(std::exp(r.interval_log_rr.hi))
           << ',' << r.log_rr_fallback << ',' << r.n_analytic << ',' << format_double(r.max_weight) << ','
           << format_double(r.weight_cv) << ',' << r.replicates << ',' << r.dropped << ',' << r.warning << '\n';
    }
}

inline void write_estimates_table(const std::vector<ReportRow>& rows, std::ostream& os) {
    auto f2 = [](double v) {
        if (!std::isfinite(v)) return std::string("NA");
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.2f", v);
        return std::string(buf);
    };
    std::size_t wa = 8, wm = 6;
    for (const auto& r : rows) {
        wa = std::max(wa, r.approach.size());
        wm = std::max(wm, r.method.size());
    }
    char buf[512];
    std::snprintf(buf, sizeof buf, "%-*s  %-*s  %6s  %-16s  %6s  %-16s\n", static_cast<int>(wa), "Approach",
                  static_cast<int>(wm), "Biases", "RD", "95% interval", "RR", "95% interval");
    os << buf;
    bool any_ci = false;
    for (const auto& row : rows) {
        const auto& r = row.result;
        const bool ci = r.interval_kind == IntervalKind::confidence;
        any_ci = any_ci || ci;
        const std::string rd_iv = f2(r.interval_rd.lo) + ", " + f2(r.interval_rd.hi) + (ci ? " *" : "");
        const std::string rr_iv = f2(std::exp(r.interval_log_rr.lo)) + ", " + f2(std::exp(r.interval_log_rr.hi)) +
                                  (ci ? " *" : "");
        std::snprintf(buf, sizeof buf, "%-*s  %-*s  %6s  %-16s  %6s  %-16s\n", static_cast<int>(wa),
                      row.approach.c_str(), static_cast<int>(wm), row.method.c_str(), f2(r.rd_hat).c_str(),
                      rd_iv.c_str(), f2(std::exp(r.log_rr_hat)).c_str(), rr_iv.c_str());
        os << buf;
    }
    if (any_ci) os << "* 95% confidence interval; other rows show 95% simulation intervals\n";
    for (const auto& row : rows)
        if (row.result.warning)
            os << "warning: " << row.method << ": " << row.result.dropped << " of " << row.result.replicates
               << " replicates dropped\n";
}

// key = value lines, in insertion order.
using Manifest = std::vector<std::pair<std::string, std::string>>;

inline void write_manifest(const Manifest& m, std::ostream& os) {
    for (const auto& [k, v] : m) os << k << " = " << v << '\n';
}

}  // namespace qba
