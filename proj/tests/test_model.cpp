#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "coshare/model.hpp"
#include "support.hpp"

using namespace coshare;
using namespace testing_support;
using Catch::Matchers::ContainsSubstring;

namespace {

const std::string full_model = "edges + nodematch(domain) + nodematch(language) + nodemix(category) + edgecov(sci)";

CoShareGraph complete_graph(const std::vector<std::string>& names) {
    CoShareGraph g;
    for (std::size_t a = 0; a < names.size(); ++a) {
        g.add_node(NodeId(names[a]));
        for (std::size_t b = a + 1; b < names.size(); ++b)
            g.set_edge(NodeId(names[a]), NodeId(names[b]), 1);
    }
    return g;
}

AttributeTable with_categories(const std::vector<std::pair<std::string, Category>>& rows) {
    AttributeTable t;
    for (const auto& [v, c] : rows) {
        NodeAttributes a;
        a.domain = "ES";
        a.language = "es";
        a.category = c;
        t.set(NodeId(v), a);
    }
    return t;
}

/// Integer SCI values so that edgecov sums are exact in floating point.
SciTable integer_sci(std::mt19937_64& gen) {
    SciTable s;
    const auto& c = country_pool();
    for (std::size_t a = 0; a < c.size(); ++a)
        for (std::size_t b = a; b < c.size(); ++b)
            s.set(c[a], c[b], static_cast<double>(1 + gen() % 1000));
    return s;
}

/// g(y) by a direct per-edge tally over labels, independent of the model's codes.
StatVector tally(const Fixture& f) {
    const auto& m = f.model;
    StatVector s(m.size(), 0.0);
    const auto& lab = m.labels();
    const auto& nodes = m.nodes();
    const auto index_of = [&](const std::string& l) {
        return static_cast<std::size_t>(std::find(lab.begin(), lab.end(), l) - lab.begin());
    };
    const auto cov = build_dyad_matrix(f.graph, f.attrs, f.sci, SciTransform::identity);
    for (const auto& e : f.graph.edges()) {
        const auto* a = f.attrs.find(e.a);
        const auto* b = f.attrs.find(e.b);
        s[index_of("edges")] += 1;
        if (a->domain == b->domain)
            s[index_of("nodematch.domain")] += 1;
        if (a->language == b->language)
            s[index_of("nodematch.language")] += 1;
        auto ca = std::string(to_string(*a->category)), cb = std::string(to_string(*b->category));
        if (cb < ca)
            std::swap(ca, cb);
        const auto k = index_of("mix.category." + ca + "." + cb);
        if (k < lab.size())
            s[k] += 1;
        const auto ia = static_cast<std::size_t>(std::find(nodes.begin(), nodes.end(), e.a) - nodes.begin());
        const auto ib = static_cast<std::size_t>(std::find(nodes.begin(), nodes.end(), e.b) - nodes.begin());
        s[index_of("edgecov.sci")] += cov(ia, ib);
    }
    return s;
}

} // namespace

TEST_CASE("model grammar", "[model]") {
    const auto spec = ModelSpec::parse(" edges+nodematch( domain ) + nodemix(category, Media, Politics) + edgecov(sci)");
    REQUIRE(spec.terms.size() == 4);
    CHECK(spec.terms[1].kind == TermSpec::Kind::NodeMatch);
    CHECK(spec.terms[1].field == AttrField::domain);
    REQUIRE(spec.terms[2].reference);
    CHECK(spec.terms[2].reference->first == "Media");
    CHECK(spec.terms[3].matrix == "sci");
    CHECK(spec.to_string() == "edges + nodematch(domain) + nodemix(category, Media, Politics) + edgecov(sci)");
    CHECK(ModelSpec::parse(spec.to_string()).to_string() == spec.to_string());

    CHECK_THROWS_AS(ModelSpec::parse(""), InputError);
    CHECK_THROWS_AS(ModelSpec::parse("edges +"), InputError);
    CHECK_THROWS_AS(ModelSpec::parse("triangles"), InputError);
    CHECK_THROWS_AS(ModelSpec::parse("nodematch(colour)"), InputError);
    CHECK_THROWS_AS(ModelSpec::parse("nodematch(domain"), InputError);
    CHECK_THROWS_AS(ModelSpec::parse("nodemix(category, Media)"), InputError);
    CHECK_THROWS_AS(ModelSpec::parse("edgecov()"), InputError);
}

TEST_CASE("nodemix expansion", "[model]") {
    SECTION("three categories with the default reference give five labels") {
        const auto g = complete_graph({"a", "b", "c", "d"});
        const auto attrs = with_categories({{"a", Category::CommunityOther},
                                            {"b", Category::CommunityOther},
                                            {"c", Category::ConspiracyTheories},
                                            {"d", Category::Politics}});
        const auto m = expand_model(ModelSpec::parse("nodemix(category)"), g, attrs);
        CHECK(m.labels() == std::vector<std::string>{
                                "mix.category.CommunityOther.ConspiracyTheories",
                                "mix.category.CommunityOther.Politics",
                                "mix.category.ConspiracyTheories.Politics",
                            });
        // ConspiracyTheories.ConspiracyTheories and Politics.Politics have one node each: no dyads
        CHECK(m.warnings().size() == 2);
    }
    SECTION("three categories, two nodes each, explicit reference") {
        const auto g = complete_graph({"a", "b", "c", "d", "e", "f"});
        const auto attrs = with_categories({{"a", Category::CommunityOther},
                                            {"b", Category::CommunityOther},
                                            {"c", Category::ConspiracyTheories},
                                            {"d", Category::ConspiracyTheories},
                                            {"e", Category::Politics},
                                            {"f", Category::Politics}});
        const auto m =
            expand_model(ModelSpec::parse("nodemix(category, CommunityOther, CommunityOther)"), g, attrs);
        CHECK(m.size() == 5);
        CHECK(m.labels().front() == "mix.category.CommunityOther.ConspiracyTheories");
        CHECK(m.labels().back() == "mix.category.Politics.Politics");
        CHECK(m.warnings().empty());
    }
    SECTION("five categories") {
        std::vector<std::pair<std::string, Category>> rows;
        std::vector<std::string> names;
        for (std::size_t k = 0; k < 10; ++k) {
            names.push_back("n" + std::to_string(k));
            rows.emplace_back(names.back(), all_categories[k % 5]);
        }
        const auto g = complete_graph(names);
        const auto m = expand_model(ModelSpec::parse("nodemix(category)"), g, with_categories(rows));
        CHECK(m.size() == 14);
        CHECK(m.labels()[0] == "mix.category.CommunityOther.ConspiracyTheories");
        CHECK(m.labels()[1] == "mix.category.ConspiracyTheories.ConspiracyTheories");
        // a single ReligionSpirituality node leaves its own pair without dyads
        rows[8].second = Category::Politics;
        const auto m13 = expand_model(ModelSpec::parse("nodemix(category)"), g, with_categories(rows));
        CHECK(m13.size() == 13);
        CHECK(std::find(m13.labels().begin(), m13.labels().end(),
                        "mix.category.ReligionSpirituality.ReligionSpirituality") == m13.labels().end());
    }
    SECTION("a single category gives no labels and a warning") {
        const auto g = complete_graph({"a", "b", "c"});
        const auto attrs =
            with_categories({{"a", Category::Media}, {"b", Category::Media}, {"c", Category::Media}});
        const auto m = expand_model(ModelSpec::parse("edges + nodemix(category)"), g, attrs);
        CHECK(m.labels() == std::vector<std::string>{"edges"});
        CHECK_FALSE(m.warnings().empty());
    }
    SECTION("unrealizable reference") {
        const auto g = complete_graph({"a", "b"});
        const auto attrs = with_categories({{"a", Category::Media}, {"b", Category::Politics}});
        CHECK_THROWS_WITH(expand_model(ModelSpec::parse("nodemix(category, Media, Religion)"), g, attrs),
                          ContainsSubstring("not realizable"));
    }
}

TEST_CASE("model binding errors and warnings", "[model]") {
    const auto g = complete_graph({"a", "b", "c"});
    auto attrs = with_categories({{"a", Category::Media}, {"b", Category::Media}, {"c", Category::Politics}});
    SECTION("duplicate terms get distinct labels") {
        const auto m = expand_model(ModelSpec::parse("edges + edges"), g, attrs);
        CHECK(m.labels() == std::vector<std::string>{"edges", "edges#2"});
    }
    SECTION("single-valued nodematch warns") {
        const auto m = expand_model(ModelSpec::parse("edges + nodematch(language)"), g, attrs);
        REQUIRE(m.warnings().size() == 1);
        CHECK_THAT(m.warnings()[0], ContainsSubstring("nodematch.language"));
    }
    SECTION("unregistered covariate") {
        CHECK_THROWS_WITH(expand_model(ModelSpec::parse("edgecov(sci)"), g, attrs),
                          ContainsSubstring("not registered"));
    }
    SECTION("unlabelled node") {
        attrs.set(NodeId("c"), NodeAttributes{});
        CHECK_THROWS_WITH(expand_model(ModelSpec::parse("nodematch(domain)"), g, attrs), ContainsSubstring("'c'"));
    }
}

TEST_CASE("sufficient statistics, simple cases", "[model]") {
    const auto g = complete_graph({"a", "b", "c"});
    const auto attrs = with_categories({{"a", Category::Media}, {"b", Category::Media}, {"c", Category::Politics}});
    const auto m = expand_model(ModelSpec::parse("edges + nodematch(language) + nodematch(category)"), g, attrs);
    const auto y = Network::from_graph(g, m.nodes());
    CHECK(sufficient_stats(y, m) == StatVector{3, 3, 1});
}

TEST_CASE("sufficient statistics equal a per-edge tally", "[model]") {
    std::mt19937_64 gen(12);
    for (int rep = 0; rep < 30; ++rep) {
        auto g = random_graph(12, 0.35, gen);
        auto attrs = random_attributes(g, gen, 3, 2, 3);
        auto f = make_fixture(g, attrs, integer_sci(gen), full_model, SciTransform::identity);
        CHECK(sufficient_stats(f.y, f.model) == tally(f));
    }
}

TEST_CASE("change statistics", "[model]") {
    std::mt19937_64 gen(21);
    SECTION("examples") {
        CoShareGraph g;
        g.set_edge(NodeId("a"), NodeId("b"), 1);
        g.add_node(NodeId("c"));
        AttributeTable attrs;
        for (auto [v, d] : {std::pair{"a", "ES"}, {"b", "ES"}, {"c", "MX"}}) {
            NodeAttributes x;
            x.domain = d;
            attrs.set(NodeId(v), x);
        }
        const auto m = expand_model(ModelSpec::parse("edges + nodematch(domain)"), g, attrs);
        const auto y = Network::from_graph(g, m.nodes());
        CHECK(change_stats(y, m, 0, 1) == StatVector{1, 1});
        CHECK(change_stats(y, m, 0, 2) == StatVector{1, 0});
        CHECK_THROWS_AS(change_stats(y, m, 1, 1), InputError);
        CHECK_THROWS_AS(change_stats(y, m, 0, 3), InputError);
    }
    SECTION("toggle-and-subtract, exact with integer covariates") {
        for (int rep = 0; rep < 30; ++rep) {
            auto g = random_graph(10, 0.4, gen);
            auto f = make_fixture(g, random_attributes(g, gen), integer_sci(gen), full_model, SciTransform::identity);
            const auto n = f.y.node_count();
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = i + 1; j < n; ++j) {
                    auto plus = f.y, minus = f.y;
                    plus.add(i, j);
                    minus.remove(i, j);
                    auto diff = sufficient_stats(plus, f.model);
                    const auto low = sufficient_stats(minus, f.model);
                    for (std::size_t k = 0; k < diff.size(); ++k)
                        diff[k] -= low[k];
                    CHECK(change_stats(f.y, f.model, i, j) == diff);
                    CHECK(change_stats(f.y, f.model, j, i) == diff);
                }
        }
    }
    SECTION("log10 covariates agree to rounding") {
        auto g = random_graph(9, 0.5, gen);
        auto f = make_fixture(g, random_attributes(g, gen), random_sci(gen), full_model);
        for (std::size_t i = 0; i < 9; ++i)
            for (std::size_t j = i + 1; j < 9; ++j) {
                auto plus = f.y, minus = f.y;
                plus.add(i, j);
                minus.remove(i, j);
                const auto hi = sufficient_stats(plus, f.model), lo = sufficient_stats(minus, f.model);
                const auto d = change_stats(f.y, f.model, i, j);
                for (std::size_t k = 0; k < d.size(); ++k)
                    CHECK_THAT(hi[k] - lo[k], Catch::Matchers::WithinAbs(d[k], 1e-12));
            }
    }
    SECTION("change score is theta . delta") {
        auto g = random_graph(8, 0.5, gen);
        auto f = make_fixture(g, random_attributes(g, gen), random_sci(gen), full_model);
        StatVector theta(f.model.size());
        for (auto& t : theta)
            t = std::uniform_real_distribution<double>(-2, 2)(gen);
        for (std::size_t i = 0; i < 8; ++i)
            for (std::size_t j = i + 1; j < 8; ++j) {
                const auto d = change_stats(f.y, f.model, i, j);
                double dot = 0;
                for (std::size_t k = 0; k < d.size(); ++k)
                    dot += theta[k] * d[k];
                CHECK_THAT(f.model.change_score(theta, i, j), Catch::Matchers::WithinAbs(dot, 1e-12));
            }
    }
}

TEST_CASE("network toggles", "[model]") {
    Network y(4);
    y.add(0, 1);
    y.add(2, 3);
    y.add(1, 2);
    CHECK(y.edge_count() == 3);
    CHECK(y.degree(1) == 2);
    y.toggle(0, 1);
    CHECK_FALSE(y.has_edge(1, 0));
    CHECK(y.edge_count() == 2);
    y.remove(0, 3);
    CHECK(y.edge_count() == 2);
    CHECK(y.sorted_edges() == std::vector<Network::Edge>{{1, 2}, {2, 3}});
    CHECK_THROWS_AS(y.toggle(2, 2), InputError);
    CHECK_THROWS_AS(y.add(0, 4), InputError);
}
