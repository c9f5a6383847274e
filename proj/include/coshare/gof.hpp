#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "coshare/csv.hpp"
#include "coshare/error.hpp"
#include "coshare/fit.hpp"
#include "coshare/model.hpp"
#include "coshare/network.hpp"
#include "coshare/rng.hpp"
#include "coshare/sampler.hpp"

namespace coshare {

struct GofRow {
    std::string family; // model, degree, esp, distance
    std::string bin;
    double observed = 0;
    double mean = 0;
    double q025 = 0, q50 = 0, q975 = 0;
    double min = 0, max = 0;
    double p = 1; // empirical two-sided p-value
};

struct GofReport {
    std::size_t nsim = 0;
    std::vector<GofRow> rows;
    ChainStats chain;
};

/// Thrown when simulated graphs collapse; carries the report computed so far.
class GofDegeneracyError : public DegeneracyError {
  public:
    GofDegeneracyError(const std::string& what, GofReport partial)
        : DegeneracyError(what), partial_(std::move(partial)) {}
    [[nodiscard]] const GofReport& partial() const noexcept { return partial_; }

  private:
    GofReport partial_;
};

inline constexpr std::size_t esp_cap = 10;

/// Structural summaries of one graph. Maps are keyed by bin index.
struct StructureSummary {
    std::map<std::size_t, double> degree;
    std::vector<double> esp;                 // esp_cap + 1 bins, last is "10+"
    std::map<std::size_t, double> distance;  // geodesic length -> pairs in the largest component
    double unreachable = 0;                  // pairs not both inside the largest component
};

/// Degree counts, edgewise shared partners and geodesic distances over the
/// largest connected component.
inline StructureSummary summarize_structure(const Network& y) {
    StructureSummary s;
    const auto n = y.node_count();
    const auto adj = y.adjacency_lists();
    for (std::size_t i = 0; i < n; ++i)
        s.degree[adj[i].size()] += 1;

    s.esp.assign(esp_cap + 1, 0.0);
    for (const auto& [a, b] : y.edges()) {
        std::size_t shared = 0;
        auto ia = adj[a].begin(), ib = adj[b].begin();
        while (ia != adj[a].end() && ib != adj[b].end()) {
            if (*ia < *ib)
                ++ia;
            else if (*ib < *ia)
                ++ib;
            else {
                ++shared;
                ++ia;
                ++ib;
            }
        }
        s.esp[std::min(shared, esp_cap)] += 1;
    }

    // largest component; ties go to the component with the smallest index
    std::vector<int> comp(n, -1);
    std::vector<std::size_t> sizes;
    for (std::size_t v = 0; v < n; ++v) {
        if (comp[v] >= 0)
            continue;
        const int c = static_cast<int>(sizes.size());
        std::size_t size = 0;
        std::deque<std::size_t> q{v};
        comp[v] = c;
        while (!q.empty()) {
            auto u = q.front();
            q.pop_front();
            ++size;
            for (auto w : adj[u])
                if (comp[w] < 0) {
                    comp[w] = c;
                    q.push_back(w);
                }
        }
        sizes.push_back(size);
    }
    const int largest =
        sizes.empty() ? -1 : static_cast<int>(std::max_element(sizes.begin(), sizes.end()) - sizes.begin());
    double within = 0;
    std::vector<int> dist(n);
    for (std::size_t v = 0; v < n; ++v) {
        if (comp[v] != largest)
            continue;
        std::fill(dist.begin(), dist.end(), -1);
        dist[v] = 0;
        std::deque<std::size_t> q{v};
        while (!q.empty()) {
            auto u = q.front();
            q.pop_front();
            for (auto w : adj[u])
                if (dist[w] < 0) {
                    dist[w] = dist[u] + 1;
                    q.push_back(w);
                }
        }
        for (std::size_t w = v + 1; w < n; ++w)
            if (dist[w] > 0) {
                s.distance[static_cast<std::size_t>(dist[w])] += 1;
                within += 1;
            }
    }
    s.unreachable = static_cast<double>(y.dyads()) - within;
    return s;
}

namespace detail {

/// Linear-interpolation quantile of sorted values.
inline double quantile_sorted(const std::vector<double>& v, double q) {
    if (v.size() == 1)
        return v[0];
    const double h = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

inline GofRow summarize_bin(std::string family, std::string bin, double observed, std::vector<double> sims) {
    GofRow r;
    r.family = std::move(family);
    r.bin = std::move(bin);
    r.observed = observed;
    std::sort(sims.begin(), sims.end());
    double sum = 0;
    std::size_t le = 0, ge = 0;
    for (double x : sims) {
        sum += x;
        le += x <= observed;
        ge += x >= observed;
    }
    const auto k = static_cast<double>(sims.size());
    r.mean = sum / k;
    r.min = sims.front();
    r.max = sims.back();
    r.q025 = quantile_sorted(sims, 0.025);
    r.q50 = quantile_sorted(sims, 0.5);
    r.q975 = quantile_sorted(sims, 0.975);
    r.p = std::min(1.0, 2.0 * static_cast<double>(std::min(le, ge)) / k);
    return r;
}

inline std::vector<GofRow> build_rows(const ExpandedModel& m, const StatVector& obs_stats,
                                      const StructureSummary& obs, const std::vector<StatVector>& sim_stats,
                                      const std::vector<StructureSummary>& sims) {
    std::vector<GofRow> rows;
    const auto column = [&](auto&& get) {
        std::vector<double> v;
        v.reserve(sims.size());
        for (std::size_t k = 0; k < sims.size(); ++k)
            v.push_back(get(k));
        return v;
    };
    for (std::size_t j = 0; j < m.size(); ++j)
        rows.push_back(summarize_bin("model", m.labels()[j], obs_stats[j],
                                     column([&](std::size_t k) { return sim_stats[k][j]; })));

    const auto lookup = [](const std::map<std::size_t, double>& h, std::size_t b) {
        auto it = h.find(b);
        return it == h.end() ? 0.0 : it->second;
    };
    std::size_t max_degree = obs.degree.empty() ? 0 : obs.degree.rbegin()->first;
    for (const auto& s : sims)
        if (!s.degree.empty())
            max_degree = std::max(max_degree, s.degree.rbegin()->first);
    for (std::size_t b = 0; b <= max_degree; ++b)
        rows.push_back(summarize_bin("degree", std::to_string(b), lookup(obs.degree, b),
                                     column([&](std::size_t k) { return lookup(sims[k].degree, b); })));

    for (std::size_t b = 0; b <= esp_cap; ++b)
        rows.push_back(summarize_bin("esp", b == esp_cap ? std::to_string(esp_cap) + "+" : std::to_string(b),
                                     obs.esp[b], column([&](std::size_t k) { return sims[k].esp[b]; })));

    std::size_t max_dist = obs.distance.empty() ? 0 : obs.distance.rbegin()->first;
    for (const auto& s : sims)
        if (!s.distance.empty())
            max_dist = std::max(max_dist, s.distance.rbegin()->first);
    for (std::size_t b = 1; b <= max_dist; ++b)
        rows.push_back(summarize_bin("distance", std::to_string(b), lookup(obs.distance, b),
                                     column([&](std::size_t k) { return lookup(sims[k].distance, b); })));
    rows.push_back(summarize_bin("distance", "unreachable", obs.unreachable,
                                 column([&](std::size_t k) { return sims[k].unreachable; })));
    return rows;
}

} // namespace detail

/// Simulates nsim graphs at the fitted coefficients (one chain from the
/// observed graph, cfg.interval steps apart) and compares model statistics,
/// degrees, edgewise shared partners and geodesic distances. Deterministic for
/// a fixed seed regardless of `threads`.
inline GofReport gof_run(const Network& y, const ExpandedModel& m, const FitResult& fit, std::int64_t nsim,
                         SamplerConfig cfg, unsigned threads = 1, double collapse_limit = 0.95) {
    if (nsim < 1)
        throw InputError("gof: nsim must be at least 1");
    if (fit.theta.size() != m.size())
        throw InputError("gof: fit does not match the model");
    for (double t : fit.theta)
        if (!std::isfinite(t))
            throw InputError("gof: fitted coefficients must be finite");
    cfg.sample_size = nsim;
    auto eng = rng::substream(cfg.seed, "gof");
    std::vector<std::vector<Network::Edge>> draws;
    std::vector<StatVector> sim_stats;
    GofReport report;
    report.nsim = static_cast<std::size_t>(nsim);
    report.chain = run_chain(m, fit.theta, cfg, y, eng, [&](const Network& s) {
        draws.push_back(s.edges());
        sim_stats.push_back(sufficient_stats(s, m));
    });

    std::vector<StructureSummary> sims(draws.size());
    const auto work = [&](std::size_t from, std::size_t to) {
        for (std::size_t k = from; k < to; ++k) {
            Network net(y.node_count());
            for (const auto& [a, b] : draws[k])
                net.add(a, b);
            sims[k] = summarize_structure(net);
        }
    };
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(draws.size())));
    if (threads == 1) {
        work(0, draws.size());
    } else {
        std::vector<std::thread> pool;
        const auto chunk = (draws.size() + threads - 1) / threads;
        for (unsigned t = 0; t < threads; ++t)
            pool.emplace_back(work, std::min(draws.size(), t * chunk), std::min(draws.size(), (t + 1) * chunk));
        for (auto& th : pool)
            th.join();
    }
    report.rows = detail::build_rows(m, sufficient_stats(y, m), summarize_structure(y), sim_stats, sims);
    if (report.chain.collapsed_fraction() > collapse_limit)
        throw GofDegeneracyError("gof: " + detail::fmt(100 * report.chain.collapsed_fraction()) +
                                     "% of simulated graphs are empty or complete",
                                 std::move(report));
    return report;
}

/// Long-format table `family,bin,observed,mean,q025,q50,q975,min,max,p`.
inline void write_gof(std::ostream& out, const GofReport& r, char delim = ',') {
    csv::write_row(out, {"family", "bin", "observed", "mean", "q025", "q50", "q975", "min", "max", "p"}, delim);
    for (const auto& row : r.rows)
        csv::write_row(out,
                       {row.family, row.bin, detail::fmt(row.observed), detail::fmt(row.mean), detail::fmt(row.q025),
                        detail::fmt(row.q50), detail::fmt(row.q975), detail::fmt(row.min), detail::fmt(row.max),
                        detail::fmt(row.p)},
                       delim);
}

} // namespace coshare
