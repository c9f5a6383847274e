#pragma once

// ERGM terms for co-share networks: edges, nodematch, nodemix and edgecov.
// Every term is dyad-independent, so change statistics depend only on the
// dyad's endpoints.

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "coshare/covariates.hpp"
#include "coshare/error.hpp"
#include "coshare/graph.hpp"
#include "coshare/network.hpp"
#include "coshare/projection.hpp"

namespace coshare {

using StatVector = std::vector<double>;

struct TermSpec {
    enum class Kind { Edges, NodeMatch, NodeMix, EdgeCov };

    Kind kind = Kind::Edges;
    AttrField field = AttrField::domain;                           // NodeMatch, NodeMix
    std::optional<std::pair<std::string, std::string>> reference;  // NodeMix; default: smallest pair
    std::string matrix;                                            // EdgeCov

    static TermSpec edges() { return {}; }
    static TermSpec nodematch(AttrField f) { return {Kind::NodeMatch, f, std::nullopt, {}}; }
    static TermSpec nodemix(AttrField f, std::optional<std::pair<std::string, std::string>> ref = std::nullopt) {
        return {Kind::NodeMix, f, std::move(ref), {}};
    }
    static TermSpec edgecov(std::string name) { return {Kind::EdgeCov, AttrField::domain, std::nullopt, std::move(name)}; }
};

struct ModelSpec {
    std::vector<TermSpec> terms;

    /// Parses `term ('+' term)*` where term is `edges`, `nodematch(field)`,
    /// `nodemix(field[, A, B])` or `edgecov(name)`.
    static ModelSpec parse(std::string_view text);

    [[nodiscard]] std::string to_string() const;
};

namespace detail {

inline std::vector<std::string> split_args(std::string_view s) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        auto comma = s.find(',', start);
        auto piece = trim(s.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
        out.emplace_back(piece);
        if (comma == std::string_view::npos)
            break;
        start = comma + 1;
    }
    return out;
}

} // namespace detail

inline ModelSpec ModelSpec::parse(std::string_view text) {
    ModelSpec spec;
    std::size_t pos = 0;
    const auto fail = [&](const std::string& why) {
        throw InputError("model '" + std::string(text) + "': " + why);
    };
    while (true) {
        auto plus = text.find('+', pos);
        auto raw = trim(text.substr(pos, plus == std::string_view::npos ? std::string_view::npos : plus - pos));
        if (raw.empty())
            fail("empty term");
        std::string name;
        std::vector<std::string> args;
        auto open = raw.find('(');
        if (open == std::string_view::npos) {
            name = std::string(raw);
        } else {
            if (raw.back() != ')')
                fail("unbalanced parentheses in '" + std::string(raw) + "'");
            name = std::string(trim(raw.substr(0, open)));
            args = detail::split_args(raw.substr(open + 1, raw.size() - open - 2));
        }
        name = lower(name);
        const auto field_arg = [&]() {
            if (args.empty() || args[0].empty())
                fail(name + " needs an attribute argument");
            auto f = parse_field(args[0]);
            if (!f)
                fail("unknown attribute '" + args[0] + "'");
            return *f;
        };
        if (name == "edges") {
            if (!args.empty())
                fail("edges takes no arguments");
            spec.terms.push_back(TermSpec::edges());
        } else if (name == "nodematch") {
            if (args.size() != 1)
                fail("nodematch takes one argument");
            spec.terms.push_back(TermSpec::nodematch(field_arg()));
        } else if (name == "nodemix") {
            auto f = field_arg();
            if (args.size() == 1)
                spec.terms.push_back(TermSpec::nodemix(f));
            else if (args.size() == 3)
                spec.terms.push_back(TermSpec::nodemix(f, std::pair{args[1], args[2]}));
            else
                fail("nodemix takes (field) or (field, A, B)");
        } else if (name == "edgecov") {
            if (args.size() != 1 || args[0].empty())
                fail("edgecov takes one matrix name");
            spec.terms.push_back(TermSpec::edgecov(args[0]));
        } else {
            fail("unknown term '" + name + "'");
        }
        if (plus == std::string_view::npos)
            break;
        pos = plus + 1;
    }
    return spec;
}

inline std::string ModelSpec::to_string() const {
    std::string out;
    for (const auto& t : terms) {
        if (!out.empty())
            out += " + ";
        switch (t.kind) {
        case TermSpec::Kind::Edges: out += "edges"; break;
        case TermSpec::Kind::NodeMatch: out += "nodematch(" + std::string(coshare::to_string(t.field)) + ")"; break;
        case TermSpec::Kind::NodeMix:
            out += "nodemix(" + std::string(coshare::to_string(t.field));
            if (t.reference)
                out += ", " + t.reference->first + ", " + t.reference->second;
            out += ")";
            break;
        case TermSpec::Kind::EdgeCov: out += "edgecov(" + t.matrix + ")"; break;
        }
    }
    return out;
}

using CovariateRegistry = std::map<std::string, DyadCovariateMatrix>;

/// A model bound to a node set: per-node label codes, aligned covariates and
/// the expanded statistic labels.
class ExpandedModel {
  public:
    struct Term {
        TermSpec::Kind kind;
        std::size_t offset = 0;            // first statistic index
        std::size_t width = 0;             // number of statistics
        std::vector<int> code;             // per-node label code (NodeMatch, NodeMix)
        std::vector<std::string> levels;   // code -> label
        std::vector<int> mix_slot;         // levels x levels -> statistic index or -1
        std::vector<std::pair<int, int>> mix_pairs; // statistic -> (code a, code b), a <= b
        std::shared_ptr<const std::vector<double>> cov; // n x n, node order aligned
    };

    [[nodiscard]] std::size_t size() const noexcept { return labels_.size(); }
    [[nodiscard]] std::size_t node_count() const noexcept { return nodes_.size(); }
    [[nodiscard]] const std::vector<NodeId>& nodes() const noexcept { return nodes_; }
    [[nodiscard]] const std::vector<std::string>& labels() const noexcept { return labels_; }
    [[nodiscard]] const std::vector<std::string>& warnings() const noexcept { return warnings_; }
    [[nodiscard]] const std::vector<Term>& terms() const noexcept { return terms_; }
    [[nodiscard]] const ModelSpec& spec() const noexcept { return spec_; }
    [[nodiscard]] bool dyad_independent() const noexcept { return true; }

    /// Adds sign * delta(i,j) into out (size() entries).
    void accumulate_change(std::size_t i, std::size_t j, std::span<double> out, double sign = 1.0) const {
        const auto n = nodes_.size();
        for (const auto& t : terms_) {
            switch (t.kind) {
            case TermSpec::Kind::Edges: out[t.offset] += sign; break;
            case TermSpec::Kind::NodeMatch:
                if (t.code[i] == t.code[j])
                    out[t.offset] += sign;
                break;
            case TermSpec::Kind::NodeMix: {
                const int s = t.mix_slot[t.code[i] * t.levels.size() + t.code[j]];
                if (s >= 0)
                    out[static_cast<std::size_t>(s)] += sign;
                break;
            }
            case TermSpec::Kind::EdgeCov: out[t.offset] += sign * (*t.cov)[i * n + j]; break;
            }
        }
    }

    /// theta . delta(i,j), without materialising delta.
    [[nodiscard]] double change_score(std::span<const double> theta, std::size_t i, std::size_t j) const {
        const auto n = nodes_.size();
        double s = 0.0;
        for (const auto& t : terms_) {
            switch (t.kind) {
            case TermSpec::Kind::Edges: s += theta[t.offset]; break;
            case TermSpec::Kind::NodeMatch:
                if (t.code[i] == t.code[j])
                    s += theta[t.offset];
                break;
            case TermSpec::Kind::NodeMix: {
                const int k = t.mix_slot[t.code[i] * t.levels.size() + t.code[j]];
                if (k >= 0)
                    s += theta[static_cast<std::size_t>(k)];
                break;
            }
            case TermSpec::Kind::EdgeCov: s += theta[t.offset] * (*t.cov)[i * n + j]; break;
            }
        }
        return s;
    }

  private:
    friend ExpandedModel expand_model(const ModelSpec&, const CoShareGraph&, const AttributeTable&,
                                      const CovariateRegistry&);

    ModelSpec spec_;
    std::vector<NodeId> nodes_;
    std::vector<std::string> labels_;
    std::vector<std::string> warnings_;
    std::vector<Term> terms_;
};

/// Binds a model to the graph's nodes (ascending order). NodeMix expands to one
/// statistic per realizable unordered label pair, minus the reference pair;
/// pairs with no dyads are dropped with a warning.
inline ExpandedModel expand_model(const ModelSpec& spec, const CoShareGraph& g, const AttributeTable& attrs,
                                  const CovariateRegistry& covariates = {}) {
    ExpandedModel m;
    m.spec_ = spec;
    m.nodes_ = g.nodes();
    const auto n = m.nodes_.size();
    std::map<std::string, int> seen_labels;
    const auto push_label = [&](std::string label) {
        auto& count = seen_labels[label];
        if (++count > 1)
            label += "#" + std::to_string(count);
        m.labels_.push_back(std::move(label));
    };
    const auto encode = [&](ExpandedModel::Term& t, AttrField f) {
        std::map<std::string, int> level_code;
        std::vector<std::string> raw(n);
        for (std::size_t i = 0; i < n; ++i) {
            auto l = attrs.label(m.nodes_[i], f);
            if (!l)
                throw InputError("node '" + m.nodes_[i].str() + "' has no " + std::string(to_string(f)) + " label");
            raw[i] = *l;
            level_code.emplace(*l, 0);
        }
        int c = 0;
        for (auto& [label, code] : level_code) {
            code = c++;
            t.levels.push_back(label);
        }
        t.code.resize(n);
        for (std::size_t i = 0; i < n; ++i)
            t.code[i] = level_code.at(raw[i]);
    };

    for (const auto& spec_term : spec.terms) {
        ExpandedModel::Term t;
        t.kind = spec_term.kind;
        t.offset = m.labels_.size();
        switch (spec_term.kind) {
        case TermSpec::Kind::Edges:
            push_label("edges");
            break;
        case TermSpec::Kind::NodeMatch: {
            encode(t, spec_term.field);
            const auto label = "nodematch." + std::string(to_string(spec_term.field));
            if (t.levels.size() <= 1)
                m.warnings_.push_back(label + ": single " + std::string(to_string(spec_term.field)) +
                                      " value, statistic equals the edge count");
            push_label(label);
            break;
        }
        case TermSpec::Kind::NodeMix: {
            encode(t, spec_term.field);
            const auto L = t.levels.size();
            std::vector<std::uint64_t> level_size(L, 0);
            for (int c : t.code)
                ++level_size[static_cast<std::size_t>(c)];
            const auto pair_dyads = [&](std::size_t a, std::size_t b) {
                return a == b ? dyad_count(level_size[a]) : level_size[a] * level_size[b];
            };
            const auto name = [&](std::size_t a, std::size_t b) { return t.levels[a] + "." + t.levels[b]; };
            // reference: requested pair, else the smallest pair with at least one dyad
            std::optional<std::pair<std::size_t, std::size_t>> ref;
            if (spec_term.reference) {
                auto ra = std::find(t.levels.begin(), t.levels.end(), spec_term.reference->first);
                auto rb = std::find(t.levels.begin(), t.levels.end(), spec_term.reference->second);
                if (ra == t.levels.end() || rb == t.levels.end())
                    throw InputError("nodemix reference pair " + spec_term.reference->first + "." +
                                     spec_term.reference->second + " is not realizable");
                auto a = static_cast<std::size_t>(ra - t.levels.begin());
                auto b = static_cast<std::size_t>(rb - t.levels.begin());
                ref = std::pair{std::min(a, b), std::max(a, b)};
            } else {
                for (std::size_t a = 0; a < L && !ref; ++a)
                    for (std::size_t b = a; b < L && !ref; ++b)
                        if (pair_dyads(a, b) > 0)
                            ref = std::pair{a, b};
            }
            t.mix_slot.assign(L * L, -1);
            const auto prefix = "mix." + std::string(to_string(spec_term.field)) + ".";
            if (L <= 1)
                m.warnings_.push_back(prefix.substr(0, prefix.size() - 1) + ": single level, no statistics");
            // ordered by the second label, then the first
            for (std::size_t b = 0; b < L; ++b)
                for (std::size_t a = 0; a <= b; ++a) {
                    if (ref && ref->first == a && ref->second == b)
                        continue;
                    if (pair_dyads(a, b) == 0) {
                        m.warnings_.push_back(prefix + name(a, b) + ": no dyads, dropped");
                        continue;
                    }
                    const auto slot = static_cast<int>(m.labels_.size());
                    t.mix_slot[a * L + b] = t.mix_slot[b * L + a] = slot;
                    t.mix_pairs.emplace_back(static_cast<int>(a), static_cast<int>(b));
                    push_label(prefix + name(a, b));
                }
            break;
        }
        case TermSpec::Kind::EdgeCov: {
            auto it = covariates.find(spec_term.matrix);
            if (it == covariates.end())
                throw InputError("edgecov matrix '" + spec_term.matrix + "' is not registered");
            const auto& mat = it->second;
            std::map<NodeId, std::size_t> pos;
            for (std::size_t k = 0; k < mat.node_order().size(); ++k)
                pos.emplace(mat.node_order()[k], k);
            std::vector<std::size_t> map_to(n);
            for (std::size_t i = 0; i < n; ++i) {
                auto p = pos.find(m.nodes_[i]);
                if (p == pos.end())
                    throw InputError("edgecov matrix '" + spec_term.matrix + "' lacks node '" + m.nodes_[i].str() + "'");
                map_to[i] = p->second;
            }
            auto cells = std::make_shared<std::vector<double>>(n * n, 0.0);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j)
                    if (i != j)
                        (*cells)[i * n + j] = mat(map_to[i], map_to[j]);
            t.cov = std::move(cells);
            push_label("edgecov." + spec_term.matrix);
            break;
        }
        }
        t.width = m.labels_.size() - t.offset;
        m.terms_.push_back(std::move(t));
    }
    return m;
}

/// g(y): computed term by term from the edge list.
inline StatVector sufficient_stats(const Network& y, const ExpandedModel& m) {
    if (y.node_count() != m.node_count())
        throw InputError("network and model disagree on node count");
    StatVector s(m.size(), 0.0);
    const auto n = m.node_count();
    for (const auto& t : m.terms()) {
        switch (t.kind) {
        case TermSpec::Kind::Edges: s[t.offset] = static_cast<double>(y.edge_count()); break;
        case TermSpec::Kind::NodeMatch: {
            std::size_t c = 0;
            for (const auto& [a, b] : y.edges())
                c += t.code[a] == t.code[b];
            s[t.offset] = static_cast<double>(c);
            break;
        }
        case TermSpec::Kind::NodeMix: {
            const auto L = t.levels.size();
            std::vector<std::size_t> tally(L * L, 0);
            for (const auto& [a, b] : y.edges()) {
                auto ca = static_cast<std::size_t>(t.code[a]), cb = static_cast<std::size_t>(t.code[b]);
                ++tally[std::min(ca, cb) * L + std::max(ca, cb)];
            }
            for (std::size_t k = 0; k < t.mix_pairs.size(); ++k) {
                const auto [a, b] = t.mix_pairs[k];
                s[t.offset + k] = static_cast<double>(tally[static_cast<std::size_t>(a) * L + static_cast<std::size_t>(b)]);
            }
            break;
        }
        case TermSpec::Kind::EdgeCov: {
            double c = 0;
            for (const auto& [a, b] : y.edges())
                c += (*t.cov)[a * n + b];
            s[t.offset] = c;
            break;
        }
        }
    }
    return s;
}

/// delta(i,j) = g(y with {i,j}) - g(y without {i,j}).
inline StatVector change_stats(const Network& y, const ExpandedModel& m, std::size_t i, std::size_t j) {
    if (i == j)
        throw InputError("change statistics of a self-dyad are undefined");
    if (i >= m.node_count() || j >= m.node_count() || y.node_count() != m.node_count())
        throw InputError("dyad outside the model's node set");
    StatVector d(m.size(), 0.0);
    m.accumulate_change(i, j, d);
    return d;
}

} // namespace coshare
