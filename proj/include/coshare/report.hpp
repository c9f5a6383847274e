#pragma once

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "coshare/csv.hpp"
#include "coshare/error.hpp"
#include "coshare/fit.hpp"
#include "coshare/projection.hpp"

namespace coshare {

namespace detail {

inline std::string fixed(double v, int digits) {
    if (std::isnan(v))
        return "NA";
    if (std::isinf(v))
        return v > 0 ? "Inf" : "-Inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    std::string s(buf);
    // no negative zero after rounding
    if (s[0] == '-' && s.find_first_not_of("-0.") == std::string::npos)
        s.erase(0, 1);
    return s;
}

inline std::string reported_theta(const FitResult& f, std::size_t k, int digits) {
    if (k < f.separated.size() && f.separated[k])
        return f.theta[k] < 0 ? "-Inf" : "Inf";
    return digits < 0 ? fmt(f.theta[k]) : fixed(f.theta[k], digits);
}

} // namespace detail

/// Machine-readable coefficients: `label,theta,std_err,stars`.
inline void write_fit_csv(std::ostream& out, const FitResult& f, char delim = ',') {
    csv::write_row(out, {"label", "theta", "std_err", "stars"}, delim);
    for (std::size_t k = 0; k < f.labels.size(); ++k)
        csv::write_row(out,
                       {f.labels[k], detail::fmt(f.theta[k]), detail::fmt(f.std_err[k]),
                        f.separated.size() > k && f.separated[k] ? "?" : significance_stars(f.theta[k], f.std_err[k])},
                       delim);
}

/// Fit-level scalars and diagnostics as `key,value`.
inline void write_fit_summary(std::ostream& out, const FitResult& f, char delim = ',') {
    csv::write_row(out, {"key", "value"}, delim);
    csv::write_row(out, {"method", std::string(to_string(f.method))}, delim);
    csv::write_row(out, {"n_obs", std::to_string(f.n_obs)}, delim);
    csv::write_row(out, {"loglik", detail::fmt(f.loglik)}, delim);
    csv::write_row(out, {"null_loglik", detail::fmt(f.null_loglik)}, delim);
    csv::write_row(out, {"aic", detail::fmt(f.aic)}, delim);
    csv::write_row(out, {"bic", detail::fmt(f.bic)}, delim);
    for (const auto& [k, v] : f.diagnostics)
        csv::write_row(out, {"diagnostics." + k, v}, delim);
}

/// Coefficient table: estimate with stars, standard error in parentheses
/// beneath, then Num.Obs./AIC/BIC.
inline void write_fit_table(std::ostream& out, const FitResult& f, const std::string& title = "Coefficient") {
    std::size_t width = std::string("Num.Obs.").size();
    for (const auto& l : f.labels)
        width = std::max(width, l.size());
    width += 2;
    const auto pad = [&](const std::string& s) { return s + std::string(width - s.size(), ' '); };
    out << pad("") << title << '\n';
    for (std::size_t k = 0; k < f.labels.size(); ++k) {
        const bool sep = k < f.separated.size() && f.separated[k];
        out << pad(f.labels[k]) << detail::reported_theta(f, k, 3)
            << (sep ? "" : significance_stars(f.theta[k], f.std_err[k])) << '\n';
        out << pad("") << '(' << (sep ? "NA" : detail::fixed(f.std_err[k], 3)) << ")\n";
    }
    out << pad("Num.Obs.") << f.n_obs << '\n';
    out << pad("AIC") << detail::fixed(f.aic, 1) << '\n';
    out << pad("BIC") << detail::fixed(f.bic, 1) << '\n';
}

struct Coefficients {
    std::vector<std::string> labels;
    StatVector theta;
    StatVector std_err;
};

/// Reads back the output of write_fit_csv.
inline Coefficients read_fit_csv(std::istream& in, char delim = ',') {
    csv::Table t(in, delim);
    const auto cl = t.column("label"), ct = t.column("theta"), cs = t.column("std_err");
    Coefficients c;
    for (const auto& r : t.rows()) {
        c.labels.push_back(csv::Table::field(r, cl));
        const auto num = [&](std::size_t col) {
            const auto& s = csv::Table::field(r, col);
            try {
                return std::stod(s);
            } catch (const std::exception&) {
                throw InputError("line " + std::to_string(r.line) + ": bad number '" + s + "'");
            }
        };
        c.theta.push_back(num(ct));
        c.std_err.push_back(num(cs));
    }
    return c;
}

/// `label,count`.
inline void write_histogram(std::ostream& out, const Histogram& h, char delim = ',') {
    csv::write_row(out, {"label", "count"}, delim);
    for (const auto& [label, count] : h)
        csv::write_row(out, {label, std::to_string(count)}, delim);
}

} // namespace coshare
