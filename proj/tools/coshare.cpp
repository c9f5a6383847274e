// coshare: build co-share networks and fit ERGMs to them.
//
//   coshare build    --config run.cfg
//   coshare fit      --config run.cfg --method mcmle --seed 7
//   coshare gof      --config run.cfg --nsim 200 --threads 4
//   coshare report   --config run.cfg
//   coshare simulate --config run.cfg --sample-size 50
//
// Exit status: 0 ok, 1 input error, 2 estimation error, 3 degeneracy.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "coshare/pipeline.hpp"

namespace {

struct Overrides {
    std::string config;
    std::optional<std::string> posts, attributes, sci, out, format;
    std::optional<std::string> from, to;
    std::vector<std::string> keyterms;
    std::optional<std::int64_t> min_shares;
    bool no_canonicalize = false;
    std::optional<double> quantile;
    std::optional<std::string> largest_component, order;
    std::optional<std::string> model, method, sci_transform, proposal;
    std::optional<std::int64_t> burn_in, interval, sample_size, nsim;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;
    bool write_graphs = false;
};

void add_options(CLI::App& app, Overrides& o) {
    app.add_option("-c,--config", o.config, "key = value configuration file");
    app.add_option("--posts", o.posts, "post records (csv or jsonl)");
    app.add_option("--attributes", o.attributes, "node_id,domain,language,category");
    app.add_option("--sci", o.sci, "country_a,country_b,sci");
    app.add_option("-o,--out", o.out, "output directory");
    app.add_option("--format", o.format, "delimited | json_lines | auto");
    app.add_option("--from", o.from, "first day of the window, YYYY-MM-DD");
    app.add_option("--to", o.to, "end of the window (exclusive), YYYY-MM-DD");
    app.add_option("--keyterms", o.keyterms, "key term; repeat for several")->take_all();
    app.add_option("--min-shares", o.min_shares, "minimum total shares per group");
    app.add_flag("--no-canonicalize-urls", o.no_canonicalize, "keep URLs verbatim");
    app.add_option("--quantile", o.quantile, "edge weight quantile for trimming, in [0,1)");
    app.add_option("--largest-component", o.largest_component, "true | false");
    app.add_option("--order", o.order, "trim-filter | filter-trim");
    app.add_option("--model", o.model, "e.g. 'edges + nodematch(language)'");
    app.add_option("--method", o.method, "mple | mcmle | exact");
    app.add_option("--sci-transform", o.sci_transform, "identity | log10 | zscore");
    app.add_option("--proposal", o.proposal, "random_dyad | tie_no_tie");
    app.add_option("--burn-in", o.burn_in);
    app.add_option("--interval", o.interval);
    app.add_option("--sample-size", o.sample_size);
    app.add_option("--nsim", o.nsim, "graphs simulated for goodness of fit");
    app.add_option("--seed", o.seed, "master seed");
    app.add_option("--threads", o.threads, "worker threads (results do not depend on it)");
    app.add_flag("--write-graphs", o.write_graphs, "simulate: also write each draw's edge list");
}

coshare::PipelineConfig resolve(const Overrides& o) {
    using coshare::apply_setting;
    coshare::PipelineConfig c;
    if (!o.config.empty())
        coshare::load_config_file(o.config, c);
    const auto set = [&](const char* key, const auto& v) {
        if (v)
            apply_setting(c, key, std::string(*v));
    };
    const auto num = [&](const char* key, const auto& v) {
        if (v)
            apply_setting(c, key, std::to_string(*v));
    };
    set("paths.posts", o.posts);
    set("paths.attributes", o.attributes);
    set("paths.sci", o.sci);
    set("paths.out", o.out);
    set("ingest.format", o.format);
    set("ingest.date_from", o.from);
    set("ingest.date_to", o.to);
    if (!o.keyterms.empty())
        c.ingest.key_terms = o.keyterms;
    num("ingest.min_shares", o.min_shares);
    if (o.no_canonicalize)
        c.canonicalize_urls = false;
    if (o.quantile)
        c.quantile = *o.quantile;
    set("projection.largest_component", o.largest_component);
    set("projection.order", o.order);
    set("fit.model", o.model);
    set("fit.method", o.method);
    set("fit.sci_transform", o.sci_transform);
    set("sampler.proposal", o.proposal);
    num("sampler.burn_in", o.burn_in);
    num("sampler.interval", o.interval);
    num("sampler.sample_size", o.sample_size);
    num("gof.nsim", o.nsim);
    if (o.seed)
        c.sampler.seed = *o.seed;
    if (o.threads)
        c.threads = std::max(1u, *o.threads);
    if (o.write_graphs)
        c.write_simulated_graphs = true;
    return c;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"co-share network construction and ERGM estimation"};
    app.require_subcommand(1);
    Overrides o;
    auto* build = app.add_subcommand("build", "ingest posts and write the network at every stage");
    auto* fit = app.add_subcommand("fit", "estimate the model; writes fit.csv and fit_table.txt");
    auto* gof = app.add_subcommand("gof", "goodness of fit at the stored estimates");
    auto* report = app.add_subcommand("report", "attribute distributions plus goodness of fit");
    auto* simulate = app.add_subcommand("simulate", "draw graphs at the stored estimates");
    for (auto* s : {build, fit, gof, report, simulate})
        add_options(*s, o);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        const auto cfg = resolve(o);
        if (build->parsed()) {
            const auto r = coshare::cmd_build(cfg);
            coshare::write_manifest(std::cout, r.manifest);
        } else if (fit->parsed()) {
            const auto f = coshare::cmd_fit(cfg);
            coshare::write_fit_table(std::cout, f);
        } else if (gof->parsed()) {
            const auto r = coshare::cmd_gof(cfg);
            std::cout << "gof: " << r.rows.size() << " rows, " << r.nsim << " simulations\n";
        } else if (report->parsed()) {
            const auto r = coshare::cmd_report(cfg);
            std::cout << "report: " << r.rows.size() << " gof rows, " << r.nsim << " simulations\n";
        } else if (simulate->parsed()) {
            const auto s = coshare::cmd_simulate(cfg);
            std::cout << "simulate: " << s.size() << " draws\n";
        }
    } catch (const coshare::DegeneracyError& e) {
        std::cerr << "coshare: degenerate: " << e.what() << '\n';
        return 3;
    } catch (const coshare::EstimationError& e) {
        std::cerr << "coshare: estimation failed: " << e.what() << '\n';
        return 2;
    } catch (const coshare::InputError& e) {
        std::cerr << "coshare: " << e.what() << '\n';
        return 1;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "coshare: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "coshare: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
