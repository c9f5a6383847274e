#pragma once

// Metropolis-Hastings sampler over graphs on a fixed node set.

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "coshare/error.hpp"
#include "coshare/model.hpp"
#include "coshare/network.hpp"
#include "coshare/rng.hpp"

namespace coshare {

enum class Proposal { random_dyad, tie_no_tie };

inline std::string_view to_string(Proposal p) { return p == Proposal::random_dyad ? "random_dyad" : "tie_no_tie"; }

inline std::optional<Proposal> parse_proposal(std::string_view s) {
    s = trim(s);
    if (s == "random_dyad")
        return Proposal::random_dyad;
    if (s == "tie_no_tie")
        return Proposal::tie_no_tie;
    return std::nullopt;
}

struct SamplerConfig {
    std::int64_t burn_in = 16384;
    std::int64_t interval = 1024;
    std::int64_t sample_size = 1024;
    Proposal proposal = Proposal::tie_no_tie;
    std::uint64_t seed = 1;

    void validate() const {
        if (burn_in < 1 || interval < 1 || sample_size < 1)
            throw InputError("sampler: burn_in, interval and sample_size must be positive");
    }
};

struct ChainStats {
    std::uint64_t steps = 0;
    std::uint64_t accepted = 0;
    std::uint64_t retained = 0;
    std::uint64_t collapsed = 0; // retained graphs that were empty or complete

    [[nodiscard]] double acceptance_rate() const { return steps ? static_cast<double>(accepted) / steps : 0.0; }
    [[nodiscard]] double collapsed_fraction() const { return retained ? static_cast<double>(collapsed) / retained : 0.0; }
};

namespace detail {

/// Probability that tie-no-tie proposes a particular dyad, given the edge count
/// and whether the dyad is currently an edge.
inline double tnt_probability(std::uint64_t edges, std::uint64_t dyads, bool is_edge) {
    const double dyad_branch = edges > 0 ? 0.5 : 1.0;
    double q = dyad_branch / static_cast<double>(dyads);
    if (is_edge && edges > 0)
        q += 0.5 / static_cast<double>(edges);
    return q;
}

} // namespace detail

/// One Metropolis-Hastings toggle. Returns true when the proposal was accepted.
inline bool metropolis_step(Network& y, const ExpandedModel& m, std::span<const double> theta, Proposal proposal,
                            rng::Engine& eng) {
    const auto n = y.node_count();
    const auto dyads = y.dyads();
    const auto edges = y.edge_count();
    std::size_t i, j;
    const bool pick_edge = proposal == Proposal::tie_no_tie && edges > 0 && rng::uniform01(eng) < 0.5;
    if (pick_edge) {
        const auto& e = y.edges()[rng::uniform_below(eng, edges)];
        i = e.first;
        j = e.second;
    } else {
        i = rng::uniform_below(eng, n);
        j = rng::uniform_below(eng, n - 1);
        if (j >= i)
            ++j;
    }
    const bool present = y.has_edge(i, j);
    double ratio = std::exp((present ? -1.0 : 1.0) * m.change_score(theta, i, j));
    if (proposal == Proposal::tie_no_tie) {
        const auto after = present ? edges - 1 : edges + 1;
        ratio *= detail::tnt_probability(after, dyads, !present) / detail::tnt_probability(edges, dyads, present);
    }
    if (ratio >= 1.0 || rng::uniform01(eng) < ratio) {
        y.toggle(i, j);
        return true;
    }
    return false;
}

/// Runs a chain from `start` and calls visit(const Network&) on every
/// `interval`-th state after `burn_in` steps, `sample_size` times.
template <class Visitor>
ChainStats run_chain(const ExpandedModel& m, std::span<const double> theta, const SamplerConfig& cfg, Network state,
                     rng::Engine& eng, Visitor&& visit) {
    cfg.validate();
    if (theta.size() != m.size())
        throw InputError("theta length does not match the model");
    for (double t : theta)
        if (!std::isfinite(t))
            throw InputError("theta must be finite");
    if (state.node_count() != m.node_count())
        throw InputError("start network does not match the model's node set");
    ChainStats st;
    if (state.node_count() < 2)
        throw InputError("sampling needs at least two nodes");
    const auto dyads = state.dyads();
    const auto step = [&] {
        ++st.steps;
        st.accepted += metropolis_step(state, m, theta, cfg.proposal, eng);
    };
    for (std::int64_t k = 0; k < cfg.burn_in; ++k)
        step();
    for (std::int64_t s = 0; s < cfg.sample_size; ++s) {
        for (std::int64_t k = 0; k < cfg.interval; ++k)
            step();
        ++st.retained;
        if (state.edge_count() == 0 || state.edge_count() == dyads)
            ++st.collapsed;
        visit(static_cast<const Network&>(state));
    }
    return st;
}

/// Retained graphs of a chain started at `start`, seeded from cfg.seed.
inline std::vector<Network> sample_networks(const ExpandedModel& m, std::span<const double> theta,
                                            const SamplerConfig& cfg, const Network& start,
                                            ChainStats* stats = nullptr) {
    auto eng = rng::substream(cfg.seed, "sample_networks");
    std::vector<Network> out;
    auto st = run_chain(m, theta, cfg, start, eng, [&](const Network& y) { out.push_back(y); });
    if (stats)
        *stats = st;
    return out;
}

/// Sufficient statistics (one row per retained graph) of a chain.
inline std::vector<StatVector> sample_statistics(const ExpandedModel& m, std::span<const double> theta,
                                                 const SamplerConfig& cfg, const Network& start, rng::Engine& eng,
                                                 ChainStats* stats = nullptr) {
    std::vector<StatVector> out;
    out.reserve(static_cast<std::size_t>(cfg.sample_size));
    auto st = run_chain(m, theta, cfg, start, eng, [&](const Network& y) { out.push_back(sufficient_stats(y, m)); });
    if (stats)
        *stats = st;
    return out;
}

} // namespace coshare
