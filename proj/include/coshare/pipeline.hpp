#pragma once

// End-to-end orchestration behind the `coshare` command line tool: build the
// co-share network, fit, simulate, goodness-of-fit and attribute reports.

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "coshare/covariates.hpp"
#include "coshare/error.hpp"
#include "coshare/fit.hpp"
#include "coshare/gof.hpp"
#include "coshare/graph.hpp"
#include "coshare/ingest.hpp"
#include "coshare/model.hpp"
#include "coshare/projection.hpp"
#include "coshare/report.hpp"
#include "coshare/sampler.hpp"

namespace coshare {

namespace fs = std::filesystem;

enum class StageOrder { trim_then_filter, filter_then_trim };

struct PipelineConfig {
    fs::path posts;
    fs::path attributes;
    fs::path sci;
    fs::path out = "out";

    std::optional<PostFormat> format; // inferred from the posts extension when unset
    IngestConfig ingest{Date{std::chrono::year{2020} / 2 / 1}, Date{std::chrono::year{2021} / 10 / 1}, {}, 2};
    bool canonicalize_urls = true;

    double quantile = 0.99;
    bool largest_component = false;
    StageOrder order = StageOrder::trim_then_filter;

    std::string model = "edges + nodematch(domain) + nodematch(language) + nodemix(category) + edgecov(sci)";
    FitMethod method = FitMethod::MPLE;
    SciTransform sci_transform = SciTransform::log10;

    SamplerConfig sampler;
    std::int64_t nsim = 100;
    bool write_simulated_graphs = false;
    unsigned threads = 1;
};

namespace detail {

inline bool parse_bool(const std::string& key, std::string_view v) {
    const auto k = lower(trim(v));
    if (k == "true" || k == "1" || k == "yes" || k == "on")
        return true;
    if (k == "false" || k == "0" || k == "no" || k == "off")
        return false;
    throw InputError("config " + key + ": expected a boolean, got '" + std::string(v) + "'");
}

inline std::int64_t parse_int(const std::string& key, std::string_view v) {
    try {
        std::size_t pos = 0;
        const std::string s(trim(v));
        const auto x = std::stoll(s, &pos);
        if (pos != s.size())
            throw std::invalid_argument(s);
        return x;
    } catch (const std::exception&) {
        throw InputError("config " + key + ": expected an integer, got '" + std::string(v) + "'");
    }
}

inline std::uint64_t parse_seed(const std::string& key, std::string_view v) {
    const auto s = trim(v);
    std::uint64_t x = 0;
    const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
    if (s.empty() || ec != std::errc{} || end != s.data() + s.size())
        throw InputError("config " + key + ": expected an unsigned 64-bit integer, got '" + std::string(v) + "'");
    return x;
}

inline double parse_double(const std::string& key, std::string_view v) {
    try {
        std::size_t pos = 0;
        const std::string s(trim(v));
        const auto x = std::stod(s, &pos);
        if (pos != s.size())
            throw std::invalid_argument(s);
        return x;
    } catch (const std::exception&) {
        throw InputError("config " + key + ": expected a number, got '" + std::string(v) + "'");
    }
}

inline std::vector<std::string> split_terms(std::string_view v) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= v.size()) {
        auto sep = v.find_first_of(";|", start);
        if (sep == std::string_view::npos)
            sep = v.size();
        auto piece = trim(v.substr(start, sep - start));
        if (!piece.empty())
            out.emplace_back(piece);
        start = sep + 1;
    }
    return out;
}

} // namespace detail

/// Applies one `section.key = value` setting. Relative paths resolve against `base`.
inline void apply_setting(PipelineConfig& c, const std::string& key, const std::string& value,
                          const fs::path& base = {}) {
    using namespace detail;
    const auto path = [&] {
        fs::path p(std::string(trim(value)));
        return p.is_relative() && !base.empty() ? base / p : p;
    };
    const auto date = [&] {
        auto d = parse_date(value);
        if (!d)
            throw InputError("config " + key + ": expected YYYY-MM-DD, got '" + value + "'");
        return *d;
    };
    if (key == "paths.posts")
        c.posts = path();
    else if (key == "paths.attributes")
        c.attributes = path();
    else if (key == "paths.sci")
        c.sci = path();
    else if (key == "paths.out")
        c.out = path();
    else if (key == "ingest.format") {
        const auto v = lower(trim(value));
        if (v == "delimited" || v == "csv")
            c.format = PostFormat::delimited;
        else if (v == "json_lines" || v == "jsonl")
            c.format = PostFormat::json_lines;
        else if (v == "auto")
            c.format.reset();
        else
            throw InputError("config ingest.format: unknown format '" + value + "'");
    } else if (key == "ingest.date_from")
        c.ingest.date_from = date();
    else if (key == "ingest.date_to")
        c.ingest.date_to = date();
    else if (key == "ingest.keyterms")
        c.ingest.key_terms = split_terms(value);
    else if (key == "ingest.min_shares")
        c.ingest.min_total_shares = parse_int(key, value);
    else if (key == "ingest.canonicalize_urls")
        c.canonicalize_urls = parse_bool(key, value);
    else if (key == "projection.quantile")
        c.quantile = parse_double(key, value);
    else if (key == "projection.largest_component")
        c.largest_component = parse_bool(key, value);
    else if (key == "projection.order") {
        const auto v = lower(trim(value));
        if (v == "trim-filter")
            c.order = StageOrder::trim_then_filter;
        else if (v == "filter-trim")
            c.order = StageOrder::filter_then_trim;
        else
            throw InputError("config projection.order: expected trim-filter or filter-trim");
    } else if (key == "fit.model")
        c.model = std::string(trim(value));
    else if (key == "fit.method") {
        auto m = parse_method(value);
        if (!m)
            throw InputError("config fit.method: expected mple, mcmle or exact");
        c.method = *m;
    } else if (key == "fit.sci_transform") {
        auto t = parse_transform(value);
        if (!t)
            throw InputError("config fit.sci_transform: expected identity, log10 or zscore");
        c.sci_transform = *t;
    } else if (key == "sampler.burn_in")
        c.sampler.burn_in = parse_int(key, value);
    else if (key == "sampler.interval")
        c.sampler.interval = parse_int(key, value);
    else if (key == "sampler.sample_size")
        c.sampler.sample_size = parse_int(key, value);
    else if (key == "sampler.proposal") {
        auto p = parse_proposal(value);
        if (!p)
            throw InputError("config sampler.proposal: expected random_dyad or tie_no_tie");
        c.sampler.proposal = *p;
    } else if (key == "gof.nsim")
        c.nsim = parse_int(key, value);
    else if (key == "simulate.write_graphs")
        c.write_simulated_graphs = parse_bool(key, value);
    else if (key == "run.seed")
        c.sampler.seed = parse_seed(key, value);
    else if (key == "run.threads")
        c.threads = static_cast<unsigned>(std::max<std::int64_t>(1, parse_int(key, value)));
    else
        throw InputError("config: unknown key '" + key + "'");
}

/// Flat `section.key = value` lines; `#` starts a comment.
inline void load_config(std::istream& in, PipelineConfig& c, const fs::path& base = {}) {
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        if (trim(line).empty())
            continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw InputError("config line " + std::to_string(n) + ": expected key = value");
        apply_setting(c, std::string(trim(std::string_view(line).substr(0, eq))),
                      std::string(trim(std::string_view(line).substr(eq + 1))), base);
    }
}

inline void load_config_file(const fs::path& file, PipelineConfig& c) {
    std::ifstream in(file);
    if (!in)
        throw InputError("cannot open config file " + file.string());
    load_config(in, c, file.parent_path());
}

/// Resolved configuration, one `key = value` per line, loadable by load_config.
inline std::string describe(const PipelineConfig& c) {
    std::ostringstream os;
    const auto date = [](Date d) {
        const std::chrono::year_month_day ymd{d};
        char buf[16];
        std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                      static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
        return std::string(buf);
    };
    std::string terms;
    for (const auto& t : c.ingest.key_terms)
        terms += (terms.empty() ? "" : "; ") + t;
    os << "ingest.format = "
       << (c.format ? (*c.format == PostFormat::delimited ? "delimited" : "json_lines") : "auto") << '\n'
       << "ingest.date_from = " << date(c.ingest.date_from) << '\n'
       << "ingest.date_to = " << date(c.ingest.date_to) << '\n'
       << "ingest.keyterms = " << terms << '\n'
       << "ingest.min_shares = " << c.ingest.min_total_shares << '\n'
       << "ingest.canonicalize_urls = " << (c.canonicalize_urls ? "true" : "false") << '\n'
       << "projection.quantile = " << detail::fmt(c.quantile) << '\n'
       << "projection.largest_component = " << (c.largest_component ? "true" : "false") << '\n'
       << "projection.order = " << (c.order == StageOrder::trim_then_filter ? "trim-filter" : "filter-trim") << '\n'
       << "fit.model = " << c.model << '\n'
       << "fit.method = " << lower(to_string(c.method)) << '\n'
       << "fit.sci_transform = " << to_string(c.sci_transform) << '\n'
       << "sampler.burn_in = " << c.sampler.burn_in << '\n'
       << "sampler.interval = " << c.sampler.interval << '\n'
       << "sampler.sample_size = " << c.sampler.sample_size << '\n'
       << "sampler.proposal = " << to_string(c.sampler.proposal) << '\n'
       << "gof.nsim = " << c.nsim << '\n'
       << "run.seed = " << c.sampler.seed << '\n';
    return os.str();
}

/// Counts recorded at each build stage, in pipeline order.
using Manifest = std::vector<std::pair<std::string, std::uint64_t>>;

inline void write_manifest(std::ostream& out, const Manifest& m) {
    for (const auto& [k, v] : m)
        out << k << '=' << v << '\n';
}

inline Manifest read_manifest(std::istream& in) {
    Manifest m;
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty() || line[0] == '#')
            continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw InputError("manifest: expected key=value, got '" + line + "'");
        m.emplace_back(std::string(trim(std::string_view(line).substr(0, eq))),
                       static_cast<std::uint64_t>(std::stoull(line.substr(eq + 1))));
    }
    return m;
}

namespace detail {

inline std::ifstream open_in(const fs::path& p, std::string_view what) {
    if (p.empty())
        throw InputError(std::string(what) + " path is not set");
    std::ifstream in(p, std::ios::binary);
    if (!in)
        throw InputError("cannot open " + std::string(what) + " file " + p.string());
    return in;
}

inline std::ofstream open_out(const fs::path& p) {
    std::ofstream out(p, std::ios::binary);
    if (!out)
        throw InputError("cannot write " + p.string());
    return out;
}

template <class F>
auto stage(std::string_view name, F&& f) {
    try {
        return f();
    } catch (const InputError& e) {
        throw InputError(std::string(name) + ": " + e.what());
    }
}

inline void write_graph_files(const fs::path& dir, std::string_view stem, const CoShareGraph& g,
                              const AttributeTable* attrs) {
    auto e = open_out(dir / (std::string(stem) + "_edges.csv"));
    write_edge_list(e, g);
    auto n = open_out(dir / (std::string(stem) + "_nodes.csv"));
    write_node_list(n, g, attrs);
}

} // namespace detail

struct BuildResult {
    Manifest manifest;
    CoShareGraph network;
};

/// Ingest -> bipartite -> threshold -> projection -> [largest component] ->
/// trim/filter (configured order). Writes every stage plus manifest.txt and
/// config_used.txt into c.out.
inline BuildResult cmd_build(const PipelineConfig& c) {
    c.ingest.validate();
    if (!(c.quantile >= 0.0 && c.quantile < 1.0))
        throw InputError("projection.quantile must lie in [0, 1)");
    fs::create_directories(c.out);
    const auto format = c.format.value_or(
        c.posts.extension() == ".jsonl" || c.posts.extension() == ".json" ? PostFormat::json_lines
                                                                          : PostFormat::delimited);
    auto parsed = detail::stage("ingest", [&] {
        auto in = detail::open_in(c.posts, "posts");
        return parse_posts(in, format);
    });
    const auto attrs = detail::stage("attributes", [&] {
        auto in = detail::open_in(c.attributes, "attributes");
        return load_attributes(in);
    });
    const auto sci = detail::stage("sci", [&] {
        auto in = detail::open_in(c.sci, "sci");
        return load_sci(in);
    });

    BuildResult res;
    auto& m = res.manifest;
    m.emplace_back("posts_read", parsed.records.size());
    m.emplace_back("posts_unknown_media", parsed.unknown_media_types);
    const auto kept = filter_posts(parsed.records, c.ingest);
    m.emplace_back("posts_retained", kept.size());
    const auto bip = build_bipartite(kept, c.canonicalize_urls);
    m.emplace_back("bipartite_groups", bip.group_count());
    m.emplace_back("bipartite_urls", bip.url_count());
    m.emplace_back("bipartite_edges", bip.edge_count());
    const auto active = apply_min_activity(bip, c.ingest.min_total_shares);
    m.emplace_back("threshold_groups", active.group_count());
    m.emplace_back("threshold_urls", active.url_count());
    m.emplace_back("threshold_edges", active.edge_count());

    const bool write = !parsed.records.empty();
    const auto emit = [&](std::string_view stem, const CoShareGraph& g, const AttributeTable* a) {
        if (write)
            detail::write_graph_files(c.out, stem, g, a);
    };
    if (write) {
        auto f = detail::open_out(c.out / "bipartite_edges.csv");
        write_bipartite_edge_list(f, bip);
        auto t = detail::open_out(c.out / "bipartite_threshold_edges.csv");
        write_bipartite_edge_list(t, active);
    }

    CoShareGraph g = project_coshare(active);
    m.emplace_back("projected_nodes", g.node_count());
    m.emplace_back("projected_edges", g.edge_count());
    emit("projected", g, nullptr);
    if (c.largest_component) {
        g = largest_component(g);
        m.emplace_back("component_nodes", g.node_count());
        m.emplace_back("component_edges", g.edge_count());
        emit("component", g, nullptr);
    }
    const auto trim_stage = [&] {
        if (g.edge_count() == 0) {
            g = g.without_isolates();
        } else {
            m.emplace_back("trim_threshold_weight", static_cast<std::uint64_t>(weight_quantile(g, c.quantile)));
            g = trim_upper_percentile(g, c.quantile);
        }
        m.emplace_back("trimmed_nodes", g.node_count());
        m.emplace_back("trimmed_edges", g.edge_count());
        emit("trimmed", g, &attrs);
    };
    const auto filter_stage = [&] {
        g = filter_by_attributes(g, attrs, sci.countries());
        m.emplace_back("filtered_nodes", g.node_count());
        m.emplace_back("filtered_edges", g.edge_count());
        emit("filtered", g, &attrs);
    };
    if (c.order == StageOrder::trim_then_filter) {
        trim_stage();
        filter_stage();
    } else {
        filter_stage();
        trim_stage();
    }
    m.emplace_back("final_nodes", g.node_count());
    m.emplace_back("final_edges", g.edge_count());
    m.emplace_back("final_dyads", dyad_count(g.node_count()));
    emit("network", g, &attrs);

    auto mf = detail::open_out(c.out / "manifest.txt");
    write_manifest(mf, m);
    auto cf = detail::open_out(c.out / "config_used.txt");
    cf << describe(c);
    res.network = std::move(g);
    return res;
}

/// The final network of a build with its node attributes.
struct LoadedNetwork {
    CoShareGraph graph;
    AttributeTable attrs;
};

inline LoadedNetwork load_network(const fs::path& dir) {
    LoadedNetwork out;
    auto nodes = detail::open_in(dir / "network_nodes.csv", "node list");
    out.attrs = load_attributes(nodes);
    auto edges = detail::open_in(dir / "network_edges.csv", "edge list");
    out.graph = read_edge_list(edges);
    for (const auto& [v, a] : out.attrs.rows())
        out.graph.add_node(v);
    return out;
}

/// Everything the estimators need: the bound model and the binary network.
struct ModelContext {
    LoadedNetwork data;
    ExpandedModel model;
    Network y;
};

inline ModelContext prepare_model(const PipelineConfig& c) {
    ModelContext ctx;
    ctx.data = detail::stage("load network", [&] { return load_network(c.out); });
    const auto spec = ModelSpec::parse(c.model);
    CovariateRegistry cov;
    const bool wants_sci = std::any_of(spec.terms.begin(), spec.terms.end(), [](const TermSpec& t) {
        return t.kind == TermSpec::Kind::EdgeCov && t.matrix == "sci";
    });
    if (wants_sci) {
        const auto sci = detail::stage("sci", [&] {
            auto in = detail::open_in(c.sci, "sci");
            return load_sci(in);
        });
        cov.emplace("sci", build_dyad_matrix(ctx.data.graph, ctx.data.attrs, sci, c.sci_transform));
    }
    ctx.model = detail::stage("model", [&] { return expand_model(spec, ctx.data.graph, ctx.data.attrs, cov); });
    ctx.y = Network::from_graph(ctx.data.graph, ctx.model.nodes());
    return ctx;
}

/// Fits c.model to the built network and writes fit.csv, fit_table.txt and fit_summary.csv.
inline FitResult cmd_fit(const PipelineConfig& c) {
    auto ctx = prepare_model(c);
    FitResult fit;
    try {
        switch (c.method) {
        case FitMethod::MPLE: fit = fit_mple(ctx.y, ctx.model); break;
        case FitMethod::Exact: fit = exact_mle(ctx.y, ctx.model); break;
        case FitMethod::MCMLE: fit = fit_mcmle(ctx.y, ctx.model, c.sampler); break;
        }
    } catch (const EstimationError& e) {
        throw EstimationError("fit [" + c.model + "]: " + e.what());
    } catch (const DegeneracyError& e) {
        throw DegeneracyError("fit [" + c.model + "]: " + e.what());
    }
    fit.diagnostics["model"] = c.model;
    fit.diagnostics["sci_transform"] = std::string(to_string(c.sci_transform));
    auto a = detail::open_out(c.out / "fit.csv");
    write_fit_csv(a, fit);
    auto b = detail::open_out(c.out / "fit_table.txt");
    write_fit_table(b, fit);
    auto s = detail::open_out(c.out / "fit_summary.csv");
    write_fit_summary(s, fit);
    return fit;
}

/// Coefficients from fit.csv, checked against the model's labels.
inline FitResult load_fit(const PipelineConfig& c, const ExpandedModel& m) {
    auto in = detail::open_in(c.out / "fit.csv", "fit");
    auto coef = read_fit_csv(in);
    if (coef.labels != m.labels())
        throw InputError("fit.csv labels do not match model '" + c.model + "'");
    FitResult f;
    f.labels = coef.labels;
    f.theta = coef.theta;
    f.std_err = coef.std_err;
    return f;
}

/// Goodness of fit at the stored coefficients; writes gof.csv.
inline GofReport cmd_gof(const PipelineConfig& c) {
    auto ctx = prepare_model(c);
    const auto fit = load_fit(c, ctx.model);
    try {
        auto r = gof_run(ctx.y, ctx.model, fit, c.nsim, c.sampler, c.threads);
        auto out = detail::open_out(c.out / "gof.csv");
        write_gof(out, r);
        return r;
    } catch (const GofDegeneracyError& e) {
        auto out = detail::open_out(c.out / "gof.csv");
        write_gof(out, e.partial());
        throw;
    }
}

/// Attribute histograms (distribution_<field>.csv) followed by the gof report.
inline GofReport cmd_report(const PipelineConfig& c) {
    const auto data = detail::stage("load network", [&] { return load_network(c.out); });
    for (auto f : {AttrField::domain, AttrField::language, AttrField::category}) {
        const auto h = attribute_distribution(data.graph, data.attrs, f);
        auto out = detail::open_out(c.out / ("distribution_" + std::string(to_string(f)) + ".csv"));
        write_histogram(out, h);
    }
    return cmd_gof(c);
}

/// Draws sampler.sample_size graphs at the stored coefficients; writes
/// simulated_stats.csv and, if requested, one edge list per draw.
inline std::vector<StatVector> cmd_simulate(const PipelineConfig& c) {
    auto ctx = prepare_model(c);
    const auto fit = load_fit(c, ctx.model);
    auto eng = rng::substream(c.sampler.seed, "simulate");
    std::vector<StatVector> stats;
    if (c.write_simulated_graphs)
        fs::create_directories(c.out / "simulated");
    run_chain(ctx.model, fit.theta, c.sampler, ctx.y, eng, [&](const Network& s) {
        stats.push_back(sufficient_stats(s, ctx.model));
        if (c.write_simulated_graphs) {
            char name[32];
            std::snprintf(name, sizeof name, "sim_%05zu_edges.csv", stats.size());
            auto out = detail::open_out(c.out / "simulated" / name);
            write_edge_list(out, s.to_graph(ctx.model.nodes()));
        }
    });
    auto out = detail::open_out(c.out / "simulated_stats.csv");
    std::vector<std::string> header{"draw"};
    header.insert(header.end(), ctx.model.labels().begin(), ctx.model.labels().end());
    csv::write_row(out, header);
    for (std::size_t k = 0; k < stats.size(); ++k) {
        std::vector<std::string> row{std::to_string(k + 1)};
        for (double v : stats[k])
            row.push_back(detail::fmt(v));
        csv::write_row(out, row);
    }
    return stats;
}

} // namespace coshare
