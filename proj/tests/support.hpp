#pragma once

// Random fixtures shared by the test binaries. Uses its own std::mt19937_64 so
// fixtures do not depend on the library's RNG plumbing.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "coshare/covariates.hpp"
#include "coshare/graph.hpp"
#include "coshare/model.hpp"
#include "coshare/network.hpp"
#include "coshare/projection.hpp"

namespace testing_support {

using namespace coshare;

inline std::string node_name(std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "v%03zu", i);
    return buf;
}

/// G(n, p) on nodes v000, v001, ...; every node present even if isolated.
inline CoShareGraph random_graph(std::size_t n, double p, std::mt19937_64& gen) {
    CoShareGraph g;
    std::bernoulli_distribution coin(p);
    for (std::size_t i = 0; i < n; ++i)
        g.add_node(NodeId(node_name(i)));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (coin(gen))
                g.set_edge(NodeId(node_name(i)), NodeId(node_name(j)), 1);
    return g;
}

inline const std::vector<std::string>& country_pool() {
    static const std::vector<std::string> c{"AR", "ES", "MX", "US"};
    return c;
}

/// Fully labelled attributes drawn from small pools.
inline AttributeTable random_attributes(const CoShareGraph& g, std::mt19937_64& gen, std::size_t countries = 3,
                                        std::size_t languages = 2, std::size_t categories = 3) {
    static const std::vector<std::string> langs{"en", "es", "pt"};
    AttributeTable t;
    for (const auto& v : g.nodes()) {
        NodeAttributes a;
        a.domain = country_pool()[std::uniform_int_distribution<std::size_t>(0, countries - 1)(gen)];
        a.language = langs[std::uniform_int_distribution<std::size_t>(0, languages - 1)(gen)];
        a.category = all_categories[std::uniform_int_distribution<std::size_t>(0, categories - 1)(gen)];
        t.set(v, a);
    }
    return t;
}

/// SCI over country_pool() with log10 values in [1, 4].
inline SciTable random_sci(std::mt19937_64& gen) {
    SciTable s;
    std::uniform_real_distribution<double> u(1.0, 4.0);
    const auto& c = country_pool();
    for (std::size_t a = 0; a < c.size(); ++a)
        for (std::size_t b = a; b < c.size(); ++b)
            s.set(c[a], c[b], std::pow(10.0, u(gen)));
    return s;
}

struct Fixture {
    CoShareGraph graph;
    AttributeTable attrs;
    SciTable sci;
    ExpandedModel model;
    Network y;
};

inline Fixture make_fixture(CoShareGraph g, AttributeTable attrs, SciTable sci, const std::string& spec,
                            SciTransform transform = SciTransform::log10) {
    Fixture f{std::move(g), std::move(attrs), std::move(sci), {}, {}};
    CovariateRegistry cov;
    cov.emplace("sci", build_dyad_matrix(f.graph, f.attrs, f.sci, transform));
    f.model = expand_model(ModelSpec::parse(spec), f.graph, f.attrs, cov);
    f.y = Network::from_graph(f.graph, f.model.nodes());
    return f;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    const auto d = std::filesystem::temp_directory_path() / ("coshare_test_" + name);
    std::filesystem::remove_all(d);
    std::filesystem::create_directories(d);
    return d;
}

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

/// Every regular file under dir, keyed by relative path.
inline std::map<std::string, std::string> read_tree(const std::filesystem::path& dir) {
    std::map<std::string, std::string> out;
    for (const auto& e : std::filesystem::recursive_directory_iterator(dir))
        if (e.is_regular_file())
            out[std::filesystem::relative(e.path(), dir).generic_string()] = slurp(e.path());
    return out;
}

} // namespace testing_support
