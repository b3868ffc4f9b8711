#pragma once

// Performance of bias-adjustment methods over simulation replicates: bias,
// relative bias, empirical and model SE, coverage and bias-eliminated
// coverage, with CSV and aligned-text emitters.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "qba/csv.hpp"
#include "qba/engine.hpp"
#include "qba/error.hpp"

namespace qba {

enum class Estimand { rd, log_rr };

inline const char* to_string(Estimand e) { return e == Estimand::rd ? "RD" : "logRR"; }

inline Estimand estimand_from_string(const std::string& s) {
    if (s == "RD") return Estimand::rd;
    if (s == "logRR") return Estimand::log_rr;
    throw DataError("unknown estimand '" + s + "'");
}

// One method's result in one replicate.
struct ReplicateEntry {
    double rd = 0, rd_se = 0;
    Interval rd_ci;
    double log_rr = 0, log_rr_se = 0;
    Interval log_rr_ci;
    bool rd_converged = false;
    bool log_rr_converged = false;
    bool log_rr_separated = false;  // diverging exposure coefficient, values as reported

    static ReplicateEntry from(const EstimateResult& r) {
        ReplicateEntry e;
        e.rd = r.rd_hat;
        e.rd_se = r.rd_se;
        e.rd_ci = r.interval_rd;
        e.log_rr = r.log_rr_hat;
        e.log_rr_se = r.log_rr_se;
        e.log_rr_ci = r.interval_log_rr;
        e.rd_converged = r.rd_converged && std::isfinite(r.rd_hat);
        e.log_rr_converged = r.log_rr_converged && std::isfinite(r.log_rr_hat);
        e.log_rr_separated = r.log_rr_separated && std::isfinite(r.log_rr_hat) && std::isfinite(r.log_rr_se);
        return e;
    }
    static ReplicateEntry failed() { return {}; }

    bool converged(Estimand k) const { return k == Estimand::rd ? rd_converged : log_rr_converged; }
    bool separated(Estimand k) const { return k == Estimand::log_rr && log_rr_separated; }
    double estimate(Estimand k) const { return k == Estimand::rd ? rd : log_rr; }
    double se(Estimand k) const { return k == Estimand::rd ? rd_se : log_rr_se; }
    const Interval& ci(Estimand k) const { return k == Estimand::rd ? rd_ci : log_rr_ci; }
};

struct ReplicationLog {
    double rd_true = 0.0;
    double log_rr_true = 0.0;
    std::vector<std::string> methods;  // insertion order
    std::map<std::string, std::vector<ReplicateEntry>> entries;

    void add(const std::string& method, const ReplicateEntry& e) {
        auto [it, inserted] = entries.try_emplace(method);
        if (inserted) methods.push_back(method);
        it->second.push_back(e);
    }

    double truth(Estimand k) const { return k == Estimand::rd ? rd_true : log_rr_true; }

    void validate() const {
        if (!std::isfinite(rd_true) || !std::isfinite(log_rr_true))
            throw DataError("replication log: truths must be finite");
        std::size_t count = 0;
        for (const auto& m : methods) {
            const auto c = entries.at(m).size();
            if (count != 0 && c != count)
                throw DataError("replication log: methods have unequal replication counts");
            count = c;
        }
    }
};

struct PerformanceRow {
    static constexpr double nan = std::numeric_limits<double>::quiet_NaN();

    std::string method;
    Estimand estimand = Estimand::rd;
    double truth = nan;
    double mean_estimate = nan;
    double bias = nan;
    double relative_bias = nan;  // percent; NaN when the truth is zero
    double emp_se = nan;
    double model_se = nan;
    double coverage = nan;
    double bias_eliminated_coverage = nan;
    std::size_t n_used = 0;
    std::size_t n_dropped = 0;
    std::size_t n_separated = 0;  // included or dropped according to the policy
};

// What to do with replicates whose exposure coefficient diverges.
enum class SeparatedFits { exclude, include };

using PerformanceReport = std::vector<PerformanceRow>;

inline PerformanceRow performance_row(const std::string& method, Estimand k,
                                      const std::vector<ReplicateEntry>& entries, double truth,
                                      SeparatedFits policy = SeparatedFits::exclude) {
    PerformanceRow row;
    row.method = method;
    row.estimand = k;
    row.truth = truth;
    std::vector<const ReplicateEntry*> used;
    for (const auto& e : entries) {
        row.n_separated += e.separated(k);
        if (e.converged(k) || (policy == SeparatedFits::include && e.separated(k)))
            used.push_back(&e);
        else
            ++row.n_dropped;
    }
    row.n_used = used.size();
    if (used.size() < 2)
        throw NumericError("performance of " + method + ": fewer than 2 converged replications");
    const double n = static_cast<double>(used.size());
    double sum = 0, se_sum = 0;
    for (auto* e : used) {
        sum += e->estimate(k);
        se_sum += e->se(k);
    }
    const double mean = sum / n;
    double ss = 0;
    std::size_t cover = 0, cover_mean = 0;
    for (auto* e : used) {
        ss += (e->estimate(k) - mean) * (e->estimate(k) - mean);
        cover += e->ci(k).contains(truth);
        cover_mean += e->ci(k).contains(mean);
    }
    row.mean_estimate = mean;
    row.bias = mean - truth;
    row.relative_bias = truth != 0.0 ? 100.0 * row.bias / truth : PerformanceRow::nan;
    row.emp_se = std::sqrt(ss / (n - 1));
    row.model_se = se_sum / n;
    row.coverage = static_cast<double>(cover) / n;
    row.bias_eliminated_coverage = static_cast<double>(cover_mean) / n;
    return row;
}

// Rows for every method, RD then log RR per method.
inline PerformanceReport performance_report(const ReplicationLog& log,
                                            SeparatedFits policy = SeparatedFits::exclude) {
    log.validate();
    PerformanceReport out;
    for (const auto& m : log.methods)
        for (auto k : {Estimand::rd, Estimand::log_rr})
            out.push_back(performance_row(m, k, log.entries.at(m), log.truth(k), policy));
    return out;
}

inline int method_rank(const std::string& method) {
    static const std::vector<std::string> order{"Primary", "All biases", "CB", "MB-A", "MB-Y", "SB-collider"};
    for (std::size_t i = 0; i < order.size(); ++i)
        if (method == order[i]) return static_cast<int>(i);
    if (method.rfind("SB-generalizability", 0) == 0) return static_cast<int>(order.size());
    return static_cast<int>(order.size()) + 1;
}

// Rows of one estimand in display order.
inline std::vector<PerformanceRow> comparative_table(const PerformanceReport& report, Estimand k) {
    std::vector<PerformanceRow> out;
    for (const auto& r : report)
        if (r.estimand == k) out.push_back(r);
    std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        return method_rank(a.method) < method_rank(b.method);
    });
    return out;
}

inline constexpr const char* kPerformanceHeader =
    "method,estimand,truth,mean_estimate,bias,relative_bias,emp_se,model_se,coverage,"
    "bias_eliminated_coverage,n_used,n_dropped,n_separated";

inline void write_performance_csv(const std::vector<PerformanceRow>& rows, std::ostream& os) {
    os << kPerformanceHeader << '\n';
    for (const auto& r : rows) {
        os << r.method << ',' << to_string(r.estimand) << ',' << detail::format_double(r.truth) << ','
           << detail::format_double(r.mean_estimate) << ',' << detail::format_double(r.bias) << ','
           << detail::format_double(r.relative_bias) << ',' << detail::format_double(r.emp_se) << ','
           << detail::format_double(r.model_se) << ',' << detail::format_double(r.coverage) << ','
           << detail::format_double(r.bias_eliminated_coverage) << ',' << r.n_used << ',' << r.n_dropped
           << ',' << r.n_separated << '\n';
    }
}

inline std::vector<PerformanceRow> read_performance_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line != kPerformanceHeader)
        throw DataError("performance CSV: unexpected header");
    auto num = [](const std::string& s) {
        if (s.empty() || s == "nan") return PerformanceRow::nan;
        return std::stod(s);
    };
    std::vector<PerformanceRow> out;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto f = detail::split_csv_line(line);
        if (f.size() != 13) throw DataError("performance CSV: expected 13 fields");
        PerformanceRow r;
        r.method = f[0];
        r.estimand = estimand_from_string(f[1]);
        r.truth = num(f[2]);
        r.mean_estimate = num(f[3]);
        r.bias = num(f[4]);
        r.relative_bias = num(f[5]);
        r.emp_se = num(f[6]);
        r.model_se = num(f[7]);
        r.coverage = num(f[8]);
        r.bias_eliminated_coverage = num(f[9]);
        r.n_used = std::stoul(f[10]);
        r.n_dropped = std::stoul(f[11]);
        r.n_separated = std::stoul(f[12]);
        out.push_back(std::move(r));
    }
    return out;
}

// Aligned text, values to 2 decimals.
inline void write_performance_table(const std::vector<PerformanceRow>& rows, std::ostream& os) {
    auto fmt = [](double v) {
        if (!std::isfinite(v)) return std::string("NA");
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.2f", v);
        return std::string(buf);
    };
    std::size_t wm = 6;
    for (const auto& r : rows) wm = std::max(wm, r.method.size());
    char buf[256];
    std::snprintf(buf, sizeof buf, "%-*s %-6s %8s %10s %8s %8s %8s %10s %7s\n", static_cast<int>(wm), "Method",
                  "Est", "Bias", "Rel.bias", "Emp SE", "Model SE", "Coverage", "BE cover", "Dropped");
    os << buf;
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%-*s %-6s %8s %10s %8s %8s %8s %10s %7zu\n", static_cast<int>(wm),
                      r.method.c_str(), to_string(r.estimand), fmt(r.bias).c_str(), fmt(r.relative_bias).c_str(),
                      fmt(r.emp_se).c_str(), fmt(r.model_se).c_str(), fmt(r.coverage).c_str(),
                      fmt(r.bias_eliminated_coverage).c_str(), r.n_dropped);
        os << buf;
    }
}

}  // namespace qba
