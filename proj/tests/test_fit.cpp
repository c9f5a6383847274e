#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <sstream>

#include "coshare/fit.hpp"
#include "coshare/report.hpp"
#include "support.hpp"

using namespace coshare;
using namespace testing_support;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;

namespace {

/// n = 4 nodes with the first k of the 6 dyads present.
CoShareGraph four_nodes(int k) {
    CoShareGraph g;
    for (std::size_t i = 0; i < 4; ++i)
        g.add_node(NodeId(node_name(i)));
    int placed = 0;
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = i + 1; j < 4; ++j)
            if (placed++ < k)
                g.set_edge(NodeId(node_name(i)), NodeId(node_name(j)), 1);
    return g;
}

Fixture edges_only(const CoShareGraph& g) {
    AttributeTable attrs;
    for (const auto& v : g.nodes()) {
        NodeAttributes a;
        a.domain = "ES";
        attrs.set(v, a);
    }
    SciTable sci;
    sci.set("ES", "ES", 10);
    return make_fixture(g, attrs, sci, "edges");
}

/// Random n-node fixture whose fitted coefficients are all finite.
Fixture interior_fixture(std::size_t n, const std::string& spec, std::uint64_t seed, double p = 0.5,
                         std::size_t countries = 2) {
    std::mt19937_64 gen(seed);
    for (int attempt = 0; attempt < 200; ++attempt) {
        auto g = random_graph(n, p, gen);
        auto attrs = random_attributes(g, gen, countries, 2, 2);
        auto f = make_fixture(g, attrs, random_sci(gen), spec);
        try {
            const auto r = fit_mple(f.y, f.model);
            if (std::none_of(r.separated.begin(), r.separated.end(), [](bool b) { return b; }) &&
                std::all_of(r.theta.begin(), r.theta.end(), [](double t) { return std::abs(t) < 8; }))
                return f;
        } catch (const EstimationError&) {
        }
    }
    FAIL("no interior fixture found");
    throw std::logic_error("unreachable");
}

} // namespace

TEST_CASE("Bernoulli closed form", "[fit]") {
    for (int k = 1; k <= 5; ++k) {
        const auto f = edges_only(four_nodes(k));
        const double d = k / 6.0;
        const double expected = std::log(d / (1 - d));
        const auto mple = fit_mple(f.y, f.model);
        const auto exact = exact_mle(f.y, f.model);
        CHECK_THAT(mple.theta[0], WithinAbs(expected, 1e-8));
        CHECK_THAT(exact.theta[0], WithinAbs(expected, 1e-8));
        // standard error of a logit proportion
        CHECK_THAT(mple.std_err[0], WithinAbs(1 / std::sqrt(6 * d * (1 - d)), 1e-8));
        CHECK_THAT(exact.std_err[0], WithinAbs(1 / std::sqrt(6 * d * (1 - d)), 1e-8));
        CHECK_THAT(mple.loglik, WithinAbs(mple.null_loglik, 1e-9));
        CHECK(mple.n_obs == 6);
    }
    const auto f = edges_only(four_nodes(4));
    CHECK_THAT(fit_mple(f.y, f.model).theta[0], WithinAbs(0.6931471805599453, 1e-8));
    CHECK_THAT(exact_mle(edges_only(four_nodes(3)).y, edges_only(four_nodes(3)).model).theta[0], WithinAbs(0.0, 1e-10));
}

TEST_CASE("estimation errors", "[fit]") {
    SECTION("empty and complete graphs") {
        for (int k : {0, 6}) {
            const auto f = edges_only(four_nodes(k));
            CHECK_THROWS_WITH(fit_mple(f.y, f.model), ContainsSubstring("separation"));
            CHECK_THROWS_AS(exact_mle(f.y, f.model), EstimationError);
            CHECK_THROWS_AS(fit_mcmle(f.y, f.model, SamplerConfig{}), EstimationError);
        }
    }
    SECTION("rank deficiency names the collinear labels") {
        auto g = four_nodes(3);
        AttributeTable attrs;
        for (const auto& v : g.nodes()) {
            NodeAttributes a;
            a.domain = "ES";
            attrs.set(v, a);
        }
        SciTable sci;
        sci.set("ES", "ES", 10);
        const auto f = make_fixture(g, attrs, sci, "edges + edges");
        CHECK_THROWS_WITH(fit_mple(f.y, f.model), ContainsSubstring("rank-deficient") &&
                                                      ContainsSubstring("edges") && ContainsSubstring("edges#2"));
        CHECK_THROWS_AS(exact_mle(f.y, f.model), EstimationError);
    }
    SECTION("exact enumeration refuses large node sets") {
        std::mt19937_64 gen(3);
        const auto f = edges_only(random_graph(8, 0.5, gen)); // 28 dyads
        CHECK_THROWS_WITH(exact_mle(f.y, f.model), ContainsSubstring("21"));
        std::mt19937_64 gen7(3);
        CHECK_NOTHROW(exact_mle(edges_only(random_graph(7, 0.5, gen7)).y, edges_only(random_graph(7, 0.5, gen7)).model));
    }
}

TEST_CASE("perfectly separating column is flagged", "[fit]") {
    // every within-ES dyad is an edge, so nodematch(domain) separates
    CoShareGraph g;
    AttributeTable attrs;
    const char* dom[] = {"ES", "ES", "ES", "MX", "MX"};
    for (std::size_t i = 0; i < 5; ++i) {
        g.add_node(NodeId(node_name(i)));
        NodeAttributes a;
        a.domain = dom[i];
        attrs.set(NodeId(node_name(i)), a);
    }
    g.set_edge(NodeId("v000"), NodeId("v001"), 1);
    g.set_edge(NodeId("v000"), NodeId("v002"), 1);
    g.set_edge(NodeId("v001"), NodeId("v002"), 1);
    g.set_edge(NodeId("v000"), NodeId("v003"), 1);
    g.set_edge(NodeId("v002"), NodeId("v004"), 1);
    g.set_edge(NodeId("v003"), NodeId("v004"), 1);
    SciTable sci;
    sci.set("ES", "ES", 10);
    sci.set("ES", "MX", 10);
    sci.set("MX", "MX", 10);
    const auto f = make_fixture(g, attrs, sci, "edges + nodematch(domain)");
    const auto r = fit_mple(f.y, f.model);
    CHECK_FALSE(r.separated[0]);
    CHECK(r.separated[1]);
    CHECK(r.theta[1] > 0);
    CHECK_THAT(r.diagnostics.at("separation"), ContainsSubstring("nodematch.domain"));
    std::ostringstream table;
    write_fit_table(table, r);
    CHECK_THAT(table.str(), ContainsSubstring("Inf"));
}

TEST_CASE("MPLE equals the exact MLE for dyad-independent models", "[fit]") {
    const std::vector<std::string> specs{"edges + nodematch(domain)",
                                         "edges + nodematch(language) + edgecov(sci)",
                                         "edges + nodemix(category)"};
    std::uint64_t seed = 100;
    for (std::size_t n : {5u, 6u})
        for (const auto& spec : specs) {
            const auto f = interior_fixture(n, spec, seed++);
            const auto mple = fit_mple(f.y, f.model);
            const auto exact = exact_mle(f.y, f.model);
            REQUIRE(mple.labels == exact.labels);
            for (std::size_t k = 0; k < mple.theta.size(); ++k) {
                CHECK_THAT(mple.theta[k], WithinAbs(exact.theta[k], 1e-6));
                CHECK_THAT(mple.std_err[k], WithinAbs(exact.std_err[k], 1e-6));
            }
            CHECK_THAT(mple.loglik, WithinAbs(exact.loglik, 1e-6));
            CHECK(mple.n_obs == dyad_count(n));
        }
}

TEST_CASE("label permutation equivariance", "[fit]") {
    auto a = interior_fixture(12, "edges + nodematch(domain) + edgecov(sci)", 7);
    CovariateRegistry cov;
    cov.emplace("sci", build_dyad_matrix(a.graph, a.attrs, a.sci, SciTransform::log10));
    const auto b = expand_model(ModelSpec::parse("edgecov(sci) + edges + nodematch(domain)"), a.graph, a.attrs, cov);
    const auto ra = fit_mple(a.y, a.model);
    const auto rb = fit_mple(Network::from_graph(a.graph, b.nodes()), b);
    REQUIRE(rb.labels == std::vector<std::string>{"edgecov.sci", "edges", "nodematch.domain"});
    CHECK_THAT(rb.theta[0], WithinAbs(ra.theta[2], 1e-9));
    CHECK_THAT(rb.theta[1], WithinAbs(ra.theta[0], 1e-9));
    CHECK_THAT(rb.theta[2], WithinAbs(ra.theta[1], 1e-9));
    CHECK_THAT(rb.loglik, WithinAbs(ra.loglik, 1e-9));
}

TEST_CASE("shifting a covariate only moves the edges coefficient", "[fit]") {
    const auto f = interior_fixture(6, "edges + edgecov(sci)", 41);
    const auto& base = f.model.nodes();
    CovariateRegistry shifted;
    const double c = 2.5;
    shifted.emplace("sci", build_dyad_matrix(f.graph, f.attrs, f.sci, SciTransform::log10).transformed(
                               [c](double x) { return x + c; }));
    const auto m2 = expand_model(ModelSpec::parse("edges + edgecov(sci)"), f.graph, f.attrs, shifted);
    REQUIRE(m2.nodes() == base);
    const auto r1 = exact_mle(f.y, f.model);
    const auto r2 = exact_mle(f.y, m2);
    CHECK_THAT(r2.theta[1], WithinAbs(r1.theta[1], 1e-6));
    CHECK_THAT(r2.theta[0], WithinAbs(r1.theta[0] - c * r1.theta[1], 1e-6));
    CHECK_THAT(r2.loglik, WithinAbs(r1.loglik, 1e-8));
}

TEST_CASE("significance stars", "[fit]") {
    CHECK(significance_stars(-3.483, 0.120) == "***");
    CHECK(significance_stars(0.063, 0.058) == "");
    CHECK(significance_stars(0.0, 0.3) == "");
    CHECK(significance_stars(0.0, 1e-9) == "");
    CHECK(significance_stars(1.0, 0.0) == "?");
    CHECK(significance_stars(1.0, std::nan("")) == "?");
    // two-sided thresholds: z = 2.0 -> p 0.0455, z = 2.7 -> 0.0069, z = 3.4 -> 0.00067
    CHECK(significance_stars(2.0, 1.0) == "*");
    CHECK(significance_stars(-2.7, 1.0) == "**");
    CHECK(significance_stars(3.4, 1.0) == "***");
    CHECK(significance_stars(1.9, 1.0) == "");
}

TEST_CASE("information criteria", "[fit]") {
    const auto t1 = information_criteria(-10105.3, 17, 108811);
    CHECK_THAT(t1.aic, WithinAbs(2 * 17 + 2 * 10105.3, 1e-9));
    CHECK_THAT(t1.bic - t1.aic, WithinAbs(163.15, 0.01));
    // Table 1 reports 20407.7 - 20244.6 and Table 2 11858.7 - 11744.2 (one decimal)
    CHECK(std::abs((t1.bic - t1.aic) - (20407.7 - 20244.6)) < 0.1);
    const auto t2 = information_criteria(-5860.1, 12, 102831);
    CHECK_THAT(t2.bic - t2.aic, WithinAbs(114.49, 0.01));
    CHECK(std::abs((t2.bic - t2.aic) - (11858.7 - 11744.2)) < 0.1);
    const auto t0 = information_criteria(-42.0, 0, 10);
    CHECK(t0.aic == 84.0);
    CHECK(t0.bic == 84.0);
}

TEST_CASE("null log-likelihood", "[fit]") {
    const double d = 0.25;
    CHECK_THAT(null_loglik(25, 100), WithinAbs(100 * (d * std::log(d) + (1 - d) * std::log(1 - d)), 1e-12));
    CHECK(null_loglik(0, 10) == 0.0);
}

TEST_CASE("MCMLE agrees with the exact estimators", "[fit][mcmle]") {
    SamplerConfig cfg;
    cfg.burn_in = 2000;
    cfg.seed = 17;
    SECTION("n = 30 against MPLE") {
        cfg.interval = 100;
        cfg.sample_size = 4000;
        const auto f = interior_fixture(30, "edges + nodematch(domain)", 5, 0.4, 3);
        const auto mple = fit_mple(f.y, f.model);
        for (auto proposal : {Proposal::tie_no_tie, Proposal::random_dyad}) {
            cfg.proposal = proposal;
            const auto mc = fit_mcmle(f.y, f.model, cfg);
            CHECK(mc.method == FitMethod::MCMLE);
            for (std::size_t k = 0; k < mc.theta.size(); ++k)
                CHECK_THAT(mc.theta[k], WithinAbs(mple.theta[k], 0.05));
            CHECK_THAT(mc.loglik, WithinAbs(mple.loglik, 0.05));
            CHECK(mc.n_obs == 435);
            CHECK(mc.diagnostics.count("converged"));
        }
    }
    SECTION("n = 5 against enumeration, from a poor start") {
        cfg.interval = 32;
        cfg.sample_size = 16384;
        const auto f = interior_fixture(5, "edges + nodematch(domain)", 9);
        const auto exact = exact_mle(f.y, f.model);
        const auto mc = fit_mcmle(f.y, f.model, cfg, StatVector{0.0, 0.0});
        for (std::size_t k = 0; k < mc.theta.size(); ++k) {
            CHECK_THAT(mc.theta[k], WithinAbs(exact.theta[k], 0.05));
            // the Monte-Carlo inflation only adds to the information-based error
            CHECK(mc.std_err[k] > 0.9 * exact.std_err[k]);
        }
    }
    SECTION("deterministic for a seed") {
        cfg.interval = 10;
        const auto f = interior_fixture(10, "edges + nodematch(domain)", 3);
        cfg.sample_size = 500;
        CHECK(fit_mcmle(f.y, f.model, cfg).theta == fit_mcmle(f.y, f.model, cfg).theta);
    }
    SECTION("bad configuration") {
        const auto f = interior_fixture(6, "edges", 3);
        cfg.interval = 0;
        cfg.sample_size = 10;
        CHECK_THROWS_AS(fit_mcmle(f.y, f.model, cfg), InputError);
    }
}

TEST_CASE("simulate then fit recovers theta", "[fit][mcmle]") {
    // edges-only at theta = -3 on 200 nodes
    std::mt19937_64 gen(2024);
    const double p = 1 / (1 + std::exp(3.0));
    const auto f = edges_only(random_graph(200, p, gen));
    SamplerConfig cfg;
    cfg.burn_in = 20000;
    cfg.interval = 200;
    cfg.sample_size = 1000;
    cfg.seed = 5;
    const auto r = fit_mcmle(f.y, f.model, cfg);
    CHECK(std::abs(r.theta[0] + 3.0) < 3 * r.std_err[0]);
    CHECK(r.n_obs == 19900);
}

TEST_CASE("fit output formats", "[fit][report]") {
    const auto f = edges_only(four_nodes(3));
    const auto r = fit_mple(f.y, f.model);
    std::ostringstream table;
    write_fit_table(table, r);
    const auto s = table.str();
    CHECK_THAT(s, ContainsSubstring("edges     0.000\n"));
    CHECK_THAT(s, ContainsSubstring("(0.816)"));
    CHECK_THAT(s, ContainsSubstring("Num.Obs.  6\n"));
    CHECK_THAT(s, ContainsSubstring("AIC"));
    CHECK_THAT(s, ContainsSubstring("BIC"));

    std::stringstream csv;
    write_fit_csv(csv, r);
    CHECK(csv.str().rfind("label,theta,std_err,stars\nedges,", 0) == 0);
    const auto back = read_fit_csv(csv);
    CHECK(back.labels == r.labels);
    CHECK_THAT(back.theta[0], WithinAbs(r.theta[0], 1e-12));
    CHECK_THAT(back.std_err[0], WithinAbs(r.std_err[0], 1e-12));

    std::ostringstream summary;
    write_fit_summary(summary, r);
    CHECK_THAT(summary.str(), ContainsSubstring("method,MPLE\n"));
    CHECK_THAT(summary.str(), ContainsSubstring("n_obs,6\n"));
}
