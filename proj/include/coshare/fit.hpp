#pragma once

// Estimators for dyad-independent ERGMs: maximum pseudolikelihood (IRLS),
// exact maximum likelihood by enumerating every graph on a small node set,
// and Geyer-Thompson Monte-Carlo MLE.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "coshare/error.hpp"
#include "coshare/model.hpp"
#include "coshare/network.hpp"
#include "coshare/rng.hpp"
#include "coshare/sampler.hpp"

namespace coshare {

enum class FitMethod { MPLE, MCMLE, Exact };

inline std::string_view to_string(FitMethod m) {
    switch (m) {
    case FitMethod::MPLE: return "MPLE";
    case FitMethod::MCMLE: return "MCMLE";
    case FitMethod::Exact: return "Exact";
    }
    return "";
}

inline std::optional<FitMethod> parse_method(std::string_view s) {
    const auto k = lower(trim(s));
    if (k == "mple")
        return FitMethod::MPLE;
    if (k == "mcmle")
        return FitMethod::MCMLE;
    if (k == "exact")
        return FitMethod::Exact;
    return std::nullopt;
}

struct FitResult {
    std::vector<std::string> labels;
    StatVector theta;
    StatVector std_err;
    std::vector<bool> separated; // coefficient diverges (reported as +/-Inf)
    double loglik = 0;
    double null_loglik = 0;
    double aic = 0;
    double bic = 0;
    std::uint64_t n_obs = 0;
    FitMethod method = FitMethod::MPLE;
    std::map<std::string, std::string> diagnostics;
};

struct InformationCriteria {
    double aic;
    double bic;
};

/// AIC = 2p - 2 loglik, BIC = p ln(n_obs) - 2 loglik, with n_obs the dyad count.
inline InformationCriteria information_criteria(double loglik, std::size_t p, std::uint64_t n_obs) {
    if (n_obs < 1)
        throw InputError("information criteria need n_obs >= 1");
    const auto k = static_cast<double>(p);
    return {2.0 * k - 2.0 * loglik, k * std::log(static_cast<double>(n_obs)) - 2.0 * loglik};
}

/// Two-sided Wald test marker: *** p<0.001, ** p<0.01, * p<0.05.
inline std::string significance_stars(double theta, double std_err) {
    if (!(std_err > 0) || !std::isfinite(std_err))
        return "?";
    const double z = theta / std_err;
    const double p = std::erfc(std::abs(z) / std::sqrt(2.0));
    if (p < 0.001)
        return "***";
    if (p < 0.01)
        return "**";
    if (p < 0.05)
        return "*";
    return "";
}

/// Log-likelihood of the Bernoulli graph with edge probability d, over n_obs dyads.
inline double null_loglik(std::uint64_t edges, std::uint64_t n_obs) {
    if (n_obs == 0)
        return 0.0;
    const double d = static_cast<double>(edges) / static_cast<double>(n_obs);
    const auto xlogx = [](double x) { return x > 0 ? x * std::log(x) : 0.0; };
    return static_cast<double>(n_obs) * (xlogx(d) + xlogx(1.0 - d));
}

namespace detail {

inline double log1pexp(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

inline double sigmoid(double x) {
    if (x >= 0)
        return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

/// Dyads grouped by identical change-statistic rows.
struct Design {
    Eigen::MatrixXd x;      // rows x p
    Eigen::VectorXd trials; // dyads with this row
    Eigen::VectorXd ties;   // of which are edges
};

inline Design build_design(const Network& y, const ExpandedModel& m) {
    const auto n = m.node_count();
    const auto p = m.size();
    std::map<StatVector, std::pair<double, double>> rows;
    StatVector d(p);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            std::fill(d.begin(), d.end(), 0.0);
            m.accumulate_change(i, j, d);
            auto& r = rows[d];
            r.first += 1.0;
            r.second += y.has_edge(i, j) ? 1.0 : 0.0;
        }
    Design out;
    out.x.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(p));
    out.trials.resize(static_cast<Eigen::Index>(rows.size()));
    out.ties.resize(static_cast<Eigen::Index>(rows.size()));
    Eigen::Index r = 0;
    for (const auto& [row, counts] : rows) {
        for (std::size_t k = 0; k < p; ++k)
            out.x(r, static_cast<Eigen::Index>(k)) = row[k];
        out.trials(r) = counts.first;
        out.ties(r) = counts.second;
        ++r;
    }
    return out;
}

inline double logistic_loglik(const Design& d, const Eigen::VectorXd& beta) {
    const Eigen::VectorXd eta = d.x * beta;
    double ll = 0;
    for (Eigen::Index r = 0; r < eta.size(); ++r)
        ll += d.ties(r) * eta(r) - d.trials(r) * log1pexp(eta(r));
    return ll;
}

inline std::string join(const std::vector<std::string>& v, std::string_view sep = ", ") {
    std::string out;
    for (const auto& s : v) {
        if (!out.empty())
            out += sep;
        out += s;
    }
    return out;
}

/// Labels spanning the null space of the (dyad-weighted) design, empty when full rank.
inline std::vector<std::string> collinear_labels(const Design& d, const std::vector<std::string>& labels) {
    const auto p = d.x.cols();
    if (p == 0)
        return {};
    Eigen::MatrixXd gram = d.x.transpose() * d.trials.asDiagonal() * d.x;
    std::vector<std::string> out;
    Eigen::VectorXd s(p);
    for (Eigen::Index k = 0; k < p; ++k) {
        s(k) = std::sqrt(gram(k, k));
        if (s(k) == 0)
            out.push_back(labels[static_cast<std::size_t>(k)]);
    }
    if (!out.empty())
        return out;
    const Eigen::MatrixXd corr = s.cwiseInverse().asDiagonal() * gram * s.cwiseInverse().asDiagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(corr);
    const double tol = 1e-10 * std::max(1.0, es.eigenvalues().maxCoeff());
    std::vector<bool> flagged(static_cast<std::size_t>(p), false);
    for (Eigen::Index e = 0; e < p; ++e) {
        if (es.eigenvalues()(e) > tol)
            continue;
        for (Eigen::Index k = 0; k < p; ++k)
            if (std::abs(es.eigenvectors()(k, e)) > 1e-6)
                flagged[static_cast<std::size_t>(k)] = true;
    }
    for (Eigen::Index k = 0; k < p; ++k)
        if (flagged[static_cast<std::size_t>(k)])
            out.push_back(labels[static_cast<std::size_t>(k)]);
    return out;
}

/// A one-signed column whose nonzero dyads are all ties or all non-ties.
inline std::vector<bool> separating_columns(const Design& d) {
    std::vector<bool> out(static_cast<std::size_t>(d.x.cols()), false);
    for (Eigen::Index k = 0; k < d.x.cols(); ++k) {
        const auto col = d.x.col(k);
        if (col.minCoeff() < 0 && col.maxCoeff() > 0)
            continue;
        double trials = 0, ties = 0;
        for (Eigen::Index r = 0; r < col.size(); ++r)
            if (col(r) != 0) {
                trials += d.trials(r);
                ties += d.ties(r);
            }
        if (trials > 0 && (ties == 0 || ties == trials))
            out[static_cast<std::size_t>(k)] = true;
    }
    return out;
}

inline std::string fmt(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

inline void check_not_degenerate(const Network& y) {
    if (y.dyads() == 0)
        throw EstimationError("separation: fewer than two nodes");
    if (y.edge_count() == 0)
        throw EstimationError("separation: the observed graph is empty");
    if (y.edge_count() == y.dyads())
        throw EstimationError("separation: the observed graph is complete");
}

inline void finish(FitResult& r, const ExpandedModel& m, const Network& y) {
    r.labels = m.labels();
    r.n_obs = y.dyads();
    r.null_loglik = null_loglik(y.edge_count(), r.n_obs);
    const auto ic = information_criteria(r.loglik, r.labels.size(), r.n_obs);
    r.aic = ic.aic;
    r.bic = ic.bic;
    for (std::size_t k = 0; k < m.warnings().size(); ++k)
        r.diagnostics["warning." + std::to_string(k + 1)] = m.warnings()[k];
}

struct IrlsResult {
    Eigen::VectorXd beta;
    Eigen::MatrixXd cov;
    Eigen::VectorXd scaled_se; // standard errors on the unit-scaled design
    int iterations = 0;
    double max_score = 0;
    bool converged = false;
};

/// Newton-Raphson (IRLS) for grouped logistic regression from beta = 0. The
/// design is column-scaled internally; stops at max |score| < tol or max_iter.
inline IrlsResult irls(const Design& d, double tol = 1e-8, int max_iter = 50) {
    const auto p = d.x.cols();
    Eigen::VectorXd scale(p);
    for (Eigen::Index k = 0; k < p; ++k) {
        const double s = d.x.col(k).cwiseAbs().maxCoeff();
        scale(k) = s > 0 ? s : 1.0;
    }
    Design z = d;
    z.x = d.x * scale.cwiseInverse().asDiagonal();
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
    IrlsResult out;
    const auto derivatives = [&](const Eigen::VectorXd& b, Eigen::VectorXd& score, Eigen::MatrixXd& info) {
        const Eigen::VectorXd eta = z.x * b;
        Eigen::VectorXd resid(eta.size()), w(eta.size());
        for (Eigen::Index r = 0; r < eta.size(); ++r) {
            const double pr = sigmoid(eta(r));
            resid(r) = z.ties(r) - z.trials(r) * pr;
            w(r) = z.trials(r) * pr * (1.0 - pr);
        }
        score = z.x.transpose() * resid;
        info = z.x.transpose() * w.asDiagonal() * z.x;
    };
    Eigen::VectorXd score;
    Eigen::MatrixXd info;
    double ll = logistic_loglik(z, beta);
    for (out.iterations = 0; out.iterations < max_iter; ++out.iterations) {
        derivatives(beta, score, info);
        out.max_score = score.cwiseAbs().maxCoeff();
        if (out.max_score < tol) {
            out.converged = true;
            break;
        }
        Eigen::VectorXd step = info.ldlt().solve(score);
        if (!step.allFinite())
            step = info.completeOrthogonalDecomposition().solve(score);
        double t = 1.0;
        bool moved = false;
        for (int h = 0; h < 40; ++h, t *= 0.5) {
            const Eigen::VectorXd cand = beta + t * step;
            const double lc = logistic_loglik(z, cand);
            if (std::isfinite(lc) && lc >= ll) {
                beta = cand;
                ll = lc;
                moved = true;
                break;
            }
        }
        if (!moved) {
            out.converged = true; // no ascent direction left at machine precision
            break;
        }
    }
    derivatives(beta, score, info);
    out.max_score = score.cwiseAbs().maxCoeff();
    const Eigen::MatrixXd cov_scaled = info.ldlt().solve(Eigen::MatrixXd::Identity(p, p));
    out.beta = beta.cwiseQuotient(scale);
    out.scaled_se = cov_scaled.diagonal().cwiseSqrt();
    out.cov = scale.cwiseInverse().asDiagonal() * cov_scaled * scale.cwiseInverse().asDiagonal();
    return out;
}

inline StatVector to_std(const Eigen::VectorXd& v) { return StatVector(v.data(), v.data() + v.size()); }

inline Eigen::VectorXd to_eigen(std::span<const double> v) {
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

} // namespace detail

/// Exact log-likelihood of a dyad-independent model at theta (the logistic likelihood).
inline double dyad_independent_loglik(const Network& y, const ExpandedModel& m, std::span<const double> theta) {
    return detail::logistic_loglik(detail::build_design(y, m), detail::to_eigen(theta));
}

/// Maximum pseudolikelihood. For these dyad-independent terms it is the exact MLE.
inline FitResult fit_mple(const Network& y, const ExpandedModel& m) {
    detail::check_not_degenerate(y);
    const auto design = detail::build_design(y, m);
    if (auto bad = detail::collinear_labels(design, m.labels()); !bad.empty())
        throw EstimationError("rank-deficient model; collinear statistics: " + detail::join(bad));
    const auto fit = detail::irls(design);
    FitResult r;
    r.method = FitMethod::MPLE;
    r.theta = detail::to_std(fit.beta);
    r.std_err.resize(r.theta.size());
    for (std::size_t k = 0; k < r.theta.size(); ++k)
        r.std_err[k] = std::sqrt(fit.cov(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k)));
    r.separated = detail::separating_columns(design);
    std::vector<std::string> sep;
    for (std::size_t k = 0; k < r.theta.size(); ++k) {
        // a diverging coefficient shows up as |theta| > 20 or, on the unit-scaled
        // design, as a vanishing information (fitted probabilities at 0 or 1)
        if (std::abs(r.theta[k]) > 20 || !(fit.scaled_se(static_cast<Eigen::Index>(k)) < 1e3))
            r.separated[k] = true;
        if (r.separated[k])
            sep.push_back(m.labels()[k]);
    }
    r.loglik = detail::logistic_loglik(design, fit.beta);
    detail::finish(r, m, y);
    r.diagnostics["iterations"] = std::to_string(fit.iterations);
    r.diagnostics["converged"] = fit.converged ? "true" : "false";
    r.diagnostics["max_abs_score"] = detail::fmt(fit.max_score);
    r.diagnostics["design_rows"] = std::to_string(design.x.rows());
    if (!sep.empty())
        r.diagnostics["separation"] = detail::join(sep);
    return r;
}

inline constexpr std::uint64_t exact_max_dyads = 21;

/// Exact MLE by enumerating all 2^D graphs on the node set (D <= 21) and
/// Newton iteration on the exact log-likelihood.
inline FitResult exact_mle(const Network& y, const ExpandedModel& m) {
    const auto D = y.dyads();
    if (D > exact_max_dyads)
        throw EstimationError("exact enumeration refused: " + std::to_string(D) + " dyads exceed the limit of " +
                              std::to_string(exact_max_dyads));
    detail::check_not_degenerate(y);
    const auto p = static_cast<Eigen::Index>(m.size());
    const auto n = y.node_count();
    std::vector<std::pair<std::size_t, std::size_t>> dyads;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            dyads.emplace_back(i, j);
    const std::uint64_t graphs = std::uint64_t{1} << D;

    // Visits g(y) of every graph in Gray-code order.
    const bool cache = graphs * static_cast<std::uint64_t>(p) <= (std::uint64_t{1} << 22);
    std::vector<double> table;
    const auto enumerate = [&](auto&& visit) {
        if (cache && !table.empty()) {
            for (std::uint64_t k = 0; k < graphs; ++k)
                visit(std::span<const double>(table.data() + k * p, static_cast<std::size_t>(p)));
            return;
        }
        Network net(n);
        for (std::uint64_t k = 0; k < graphs; ++k) {
            if (k > 0) {
                const auto bit = static_cast<std::size_t>(std::countr_zero(k));
                net.toggle(dyads[bit].first, dyads[bit].second);
            }
            const auto s = sufficient_stats(net, m);
            if (cache)
                table.insert(table.end(), s.begin(), s.end());
            visit(std::span<const double>(s));
        }
    };

    const Eigen::VectorXd observed = detail::to_eigen(sufficient_stats(y, m));
    Eigen::VectorXd lo = Eigen::VectorXd::Constant(p, std::numeric_limits<double>::infinity());
    Eigen::VectorXd hi = -lo;

    struct Moments {
        double log_kappa;
        Eigen::VectorXd mean;
        Eigen::MatrixXd cov;
    };
    // Streaming log-sum-exp with rescaling at each new maximum.
    const auto moments = [&](const Eigen::VectorXd& theta) {
        double shift = -std::numeric_limits<double>::infinity();
        double w_sum = 0;
        Eigen::VectorXd s1 = Eigen::VectorXd::Zero(p);
        Eigen::MatrixXd s2 = Eigen::MatrixXd::Zero(p, p);
        enumerate([&](std::span<const double> g) {
            const Eigen::Map<const Eigen::VectorXd> gv(g.data(), p);
            lo = lo.cwiseMin(gv);
            hi = hi.cwiseMax(gv);
            const double e = theta.dot(gv);
            if (e > shift) {
                const double f = std::exp(shift - e);
                w_sum *= f;
                s1 *= f;
                s2 *= f;
                shift = e;
            }
            const double w = std::exp(e - shift);
            w_sum += w;
            s1 += w * gv;
            s2.noalias() += w * gv * gv.transpose();
        });
        Moments out;
        out.log_kappa = shift + std::log(w_sum);
        out.mean = s1 / w_sum;
        out.cov = s2 / w_sum - out.mean * out.mean.transpose();
        return out;
    };

    Eigen::VectorXd theta = Eigen::VectorXd::Zero(p);
    auto mom = moments(theta);
    {
        // statistics that never vary, or vary together, cannot be identified
        Eigen::VectorXd sd = mom.cov.diagonal().cwiseSqrt();
        std::vector<std::string> bad;
        for (Eigen::Index k = 0; k < p; ++k)
            if (!(sd(k) > 0))
                bad.push_back(m.labels()[static_cast<std::size_t>(k)]);
        if (bad.empty()) {
            const Eigen::MatrixXd corr = sd.cwiseInverse().asDiagonal() * mom.cov * sd.cwiseInverse().asDiagonal();
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(corr);
            for (Eigen::Index e = 0; e < p; ++e)
                if (es.eigenvalues()(e) <= 1e-10 * std::max(1.0, es.eigenvalues().maxCoeff()))
                    for (Eigen::Index k = 0; k < p; ++k)
                        if (std::abs(es.eigenvectors()(k, e)) > 1e-6)
                            bad.push_back(m.labels()[static_cast<std::size_t>(k)]);
            std::sort(bad.begin(), bad.end());
            bad.erase(std::unique(bad.begin(), bad.end()), bad.end());
        }
        if (!bad.empty())
            throw EstimationError("rank-deficient model; collinear statistics: " + detail::join(bad));
    }
    double ll = theta.dot(observed) - mom.log_kappa;
    int it = 0;
    bool converged = false;
    for (; it < 100; ++it) {
        const Eigen::VectorXd grad = observed - mom.mean;
        if (grad.cwiseAbs().maxCoeff() < 1e-10) {
            converged = true;
            break;
        }
        const Eigen::VectorXd step = mom.cov.ldlt().solve(grad);
        double t = 1.0;
        bool moved = false;
        for (int h = 0; h < 40; ++h, t *= 0.5) {
            const Eigen::VectorXd cand = theta + t * step;
            auto cm = moments(cand);
            const double lc = cand.dot(observed) - cm.log_kappa;
            if (std::isfinite(lc) && lc >= ll) {
                theta = cand;
                mom = std::move(cm);
                ll = lc;
                moved = true;
                break;
            }
        }
        if (!moved) {
            converged = true;
            break;
        }
    }
    FitResult r;
    r.method = FitMethod::Exact;
    r.theta = detail::to_std(theta);
    const Eigen::MatrixXd inv = mom.cov.ldlt().solve(Eigen::MatrixXd::Identity(p, p));
    r.std_err.resize(static_cast<std::size_t>(p));
    r.separated.assign(static_cast<std::size_t>(p), false);
    std::vector<std::string> sep;
    for (Eigen::Index k = 0; k < p; ++k) {
        const auto ks = static_cast<std::size_t>(k);
        r.std_err[ks] = std::sqrt(inv(k, k));
        if (observed(k) == lo(k) || observed(k) == hi(k) || std::abs(theta(k)) > 20) {
            r.separated[ks] = true;
            sep.push_back(m.labels()[ks]);
        }
    }
    r.loglik = ll;
    detail::finish(r, m, y);
    r.diagnostics["iterations"] = std::to_string(it);
    r.diagnostics["converged"] = converged ? "true" : "false";
    r.diagnostics["graphs_enumerated"] = std::to_string(graphs);
    if (!sep.empty())
        r.diagnostics["separation"] = detail::join(sep);
    return r;
}

struct McmleOptions {
    int max_iterations = 20;
    double tolerance = 1e-3; // max |delta theta| between iterations
    double collapse_limit = 0.95;
};

/// Geyer-Thompson Monte-Carlo MLE. Starts at theta0 or the MPLE; each round
/// samples at the current theta and maximises the importance-sampled
/// log-likelihood ratio by Newton steps. Without convergence the estimate is
/// the mean of the later half of the trailing full-step iterates.
inline FitResult fit_mcmle(const Network& y, const ExpandedModel& m, const SamplerConfig& cfg,
                           std::optional<StatVector> theta0 = std::nullopt, const McmleOptions& opt = {}) {
    cfg.validate();
    detail::check_not_degenerate(y);
    const auto p = static_cast<Eigen::Index>(m.size());
    Eigen::VectorXd theta;
    if (theta0) {
        if (theta0->size() != m.size())
            throw InputError("theta0 length does not match the model");
        theta = detail::to_eigen(*theta0);
    } else {
        theta = detail::to_eigen(fit_mple(y, m).theta);
    }
    const Eigen::VectorXd observed = detail::to_eigen(sufficient_stats(y, m));
    auto eng = rng::substream(cfg.seed, "fit_mcmle");

    Eigen::MatrixXd z;          // sampled statistics minus observed, last round
    Eigen::VectorXd weights;    // importance weights at the final theta, last round
    ChainStats last_chain;
    bool converged = false;
    int rounds = 0;
    double last_delta = 0;
    double last_step_length = 1.0;
    std::vector<Eigen::VectorXd> full_steps; // iterates since the last shortened step
    for (; rounds < opt.max_iterations;) {
        ++rounds;
        const StatVector th = detail::to_std(theta);
        auto sample = sample_statistics(m, th, cfg, y, eng, &last_chain);
        if (last_chain.collapsed_fraction() > opt.collapse_limit)
            throw DegeneracyError("model degeneracy: " + detail::fmt(100 * last_chain.collapsed_fraction()) +
                                  "% of sampled graphs are empty or complete");
        const auto mcount = static_cast<Eigen::Index>(sample.size());
        z.resize(mcount, p);
        for (Eigen::Index k = 0; k < mcount; ++k)
            for (Eigen::Index j = 0; j < p; ++j)
                z(k, j) = sample[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)] - observed(j);
        const Eigen::VectorXd zbar = z.colwise().mean();

        // Maximise l(delta) = -log mean exp(delta . (z_k - shift)), where the
        // target moves from the sample mean (shift = zbar) toward the
        // observation (shift = 0) by the step length gamma.
        Eigen::VectorXd delta = Eigen::VectorXd::Zero(p);
        double gamma = 1.0;
        bool solved = false;
        for (int attempt = 0; attempt < 20 && !solved; ++attempt, gamma *= 0.5) {
            const Eigen::VectorXd target = (1.0 - gamma) * zbar;
            Eigen::VectorXd d = Eigen::VectorXd::Zero(p);
            const auto objective = [&](const Eigen::VectorXd& dd, Eigen::VectorXd* w) {
                Eigen::VectorXd e = z * dd;
                const double mx = e.maxCoeff();
                Eigen::VectorXd ex = (e.array() - mx).exp();
                const double s = ex.sum();
                if (w)
                    *w = ex / s;
                return dd.dot(target) - (mx + std::log(s / static_cast<double>(mcount)));
            };
            Eigen::VectorXd w;
            double f = objective(d, &w);
            bool ok = false;
            for (int inner = 0; inner < 100; ++inner) {
                const Eigen::VectorXd mean = z.transpose() * w;
                const Eigen::VectorXd grad = target - mean;
                if (grad.cwiseAbs().maxCoeff() < 1e-10 * std::max(1.0, z.cwiseAbs().maxCoeff())) {
                    ok = true;
                    break;
                }
                const Eigen::MatrixXd centered = z.rowwise() - mean.transpose();
                const Eigen::MatrixXd cov = centered.transpose() * w.asDiagonal() * centered;
                Eigen::VectorXd step = cov.completeOrthogonalDecomposition().solve(grad);
                double t = 1.0;
                bool moved = false;
                for (int h = 0; h < 40; ++h, t *= 0.5) {
                    Eigen::VectorXd wc;
                    const Eigen::VectorXd cand = d + t * step;
                    const double fc = objective(cand, &wc);
                    if (std::isfinite(fc) && fc >= f) {
                        // a gain at rounding level means the maximum is reached
                        moved = fc - f > 1e-13 * (1.0 + std::abs(f));
                        d = cand;
                        f = fc;
                        w = wc;
                        break;
                    }
                }
                if (!moved) {
                    ok = true;
                    break;
                }
            }
            const double ess = 1.0 / w.squaredNorm();
            if (ok && d.allFinite() && ess >= 0.05 * static_cast<double>(mcount)) {
                delta = d;
                weights = w;
                solved = true;
                last_step_length = gamma;
            }
        }
        if (!solved)
            throw EstimationError("MCMLE: the importance-sampled likelihood could not be maximised");
        theta += delta;
        last_delta = delta.cwiseAbs().maxCoeff();
        if (last_step_length == 1.0 && last_delta < opt.tolerance) {
            converged = true;
            break;
        }
        if (last_step_length == 1.0)
            full_steps.push_back(theta);
        else
            full_steps.clear();
    }
    // Once full steps are taken each iterate is the MLE plus fresh Monte-Carlo
    // noise, so averaging the later half of them cuts that noise.
    std::size_t averaged = 1;
    if (!converged && full_steps.size() >= 2) {
        averaged = (full_steps.size() + 1) / 2;
        theta.setZero();
        for (std::size_t k = full_steps.size() - averaged; k < full_steps.size(); ++k)
            theta += full_steps[k] / static_cast<double>(averaged);
    }

    // Information from the reweighted last sample; Monte-Carlo error of the
    // sample mean from batch means.
    const auto mcount = z.rows();
    const Eigen::VectorXd mean = z.transpose() * weights;
    const Eigen::MatrixXd centered = z.rowwise() - mean.transpose();
    const Eigen::MatrixXd info = centered.transpose() * weights.asDiagonal() * centered;
    const Eigen::Index batches = std::min<Eigen::Index>(32, mcount);
    const Eigen::Index per = mcount / batches;
    Eigen::MatrixXd bm(batches, p);
    for (Eigen::Index b = 0; b < batches; ++b)
        bm.row(b) = z.middleRows(b * per, per).colwise().mean();
    const Eigen::MatrixXd bc = bm.rowwise() - bm.colwise().mean();
    const Eigen::MatrixXd mc_cov = batches > 1 ? Eigen::MatrixXd((bc.transpose() * bc) / double(batches - 1) / double(batches))
                                               : Eigen::MatrixXd::Zero(p, p);
    const Eigen::MatrixXd inv = info.completeOrthogonalDecomposition().pseudoInverse();
    const Eigen::MatrixXd cov = inv + inv * mc_cov * inv;

    FitResult r;
    r.method = FitMethod::MCMLE;
    r.theta = detail::to_std(theta);
    r.std_err.resize(static_cast<std::size_t>(p));
    r.separated.assign(static_cast<std::size_t>(p), false);
    std::vector<std::string> sep;
    for (Eigen::Index k = 0; k < p; ++k) {
        const auto ks = static_cast<std::size_t>(k);
        r.std_err[ks] = std::sqrt(cov(k, k));
        if (std::abs(theta(k)) > 20) {
            r.separated[ks] = true;
            sep.push_back(m.labels()[ks]);
        }
    }
    // dyad-independent terms: the exact likelihood is the logistic one
    r.loglik = dyad_independent_loglik(y, m, r.theta);
    detail::finish(r, m, y);
    r.diagnostics["iterations"] = std::to_string(rounds);
    r.diagnostics["converged"] = converged ? "true" : "false";
    if (!converged)
        r.diagnostics["status"] = "warning: no convergence after " + std::to_string(rounds) + " iterations";
    r.diagnostics["last_max_abs_delta"] = detail::fmt(last_delta);
    r.diagnostics["last_step_length"] = detail::fmt(last_step_length);
    r.diagnostics["averaged_iterates"] = std::to_string(averaged);
    r.diagnostics["acceptance_rate"] = detail::fmt(last_chain.acceptance_rate());
    r.diagnostics["sampler.burn_in"] = std::to_string(cfg.burn_in);
    r.diagnostics["sampler.interval"] = std::to_string(cfg.interval);
    r.diagnostics["sampler.sample_size"] = std::to_string(cfg.sample_size);
    r.diagnostics["sampler.proposal"] = std::string(to_string(cfg.proposal));
    r.diagnostics["sampler.seed"] = std::to_string(cfg.seed);
    if (!sep.empty())
        r.diagnostics["separation"] = detail::join(sep);
    return r;
}

} // namespace coshare
