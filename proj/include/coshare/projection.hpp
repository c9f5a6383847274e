#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "coshare/csv.hpp"
#include "coshare/error.hpp"
#include "coshare/graph.hpp"

namespace coshare {

enum class Category { ConspiracyTheories, Media, Politics, ReligionSpirituality, CommunityOther };

inline constexpr std::array<Category, 5> all_categories = {
    Category::ConspiracyTheories, Category::Media, Category::Politics, Category::ReligionSpirituality,
    Category::CommunityOther};

inline std::string_view to_string(Category c) {
    switch (c) {
    case Category::ConspiracyTheories: return "ConspiracyTheories";
    case Category::Media: return "Media";
    case Category::Politics: return "Politics";
    case Category::ReligionSpirituality: return "ReligionSpirituality";
    case Category::CommunityOther: return "CommunityOther";
    }
    return "";
}

/// Accepts enum names and display names ("Religion & Spirituality", "Community/Other"):
/// letters only, case-insensitive.
inline std::optional<Category> parse_category(std::string_view s) {
    std::string key;
    for (char c : s)
        if (std::isalpha(static_cast<unsigned char>(c)))
            key.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    for (auto c : all_categories) {
        std::string name;
        for (char ch : to_string(c))
            name.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
        if (name == key)
            return c;
    }
    return std::nullopt;
}

enum class AttrField { domain, language, category };

inline std::string_view to_string(AttrField f) {
    switch (f) {
    case AttrField::domain: return "domain";
    case AttrField::language: return "language";
    case AttrField::category: return "category";
    }
    return "";
}

inline std::optional<AttrField> parse_field(std::string_view s) {
    s = trim(s);
    if (s == "domain")
        return AttrField::domain;
    if (s == "language")
        return AttrField::language;
    if (s == "category")
        return AttrField::category;
    return std::nullopt;
}

inline bool is_country_code(std::string_view s) {
    return s.size() == 2 && std::isalpha(static_cast<unsigned char>(s[0])) &&
           std::isalpha(static_cast<unsigned char>(s[1]));
}

inline std::string upper(std::string_view s) {
    std::string out(s);
    for (auto& c : out)
        c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return out;
}

inline std::string lower(std::string_view s) {
    std::string out(s);
    for (auto& c : out)
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

struct NodeAttributes {
    std::optional<std::string> domain;   // ISO 3166-1 alpha-2, uppercase
    std::optional<std::string> language; // ISO 639-1, lowercase
    std::optional<Category> category;

    [[nodiscard]] std::optional<std::string> label(AttrField f) const {
        switch (f) {
        case AttrField::domain: return domain;
        case AttrField::language: return language;
        case AttrField::category:
            if (category)
                return std::string(to_string(*category));
            return std::nullopt;
        }
        return std::nullopt;
    }

    [[nodiscard]] bool complete() const { return domain && language && category; }
};

class AttributeTable {
  public:
    void set(const NodeId& v, NodeAttributes a) {
        if (a.domain)
            a.domain = upper(trim(*a.domain));
        if (a.language)
            a.language = lower(trim(*a.language));
        rows_[v] = std::move(a);
    }

    [[nodiscard]] const NodeAttributes* find(const NodeId& v) const {
        auto it = rows_.find(v);
        return it == rows_.end() ? nullptr : &it->second;
    }

    [[nodiscard]] std::optional<std::string> label(const NodeId& v, AttrField f) const {
        const auto* a = find(v);
        return a ? a->label(f) : std::nullopt;
    }

    [[nodiscard]] std::size_t size() const noexcept { return rows_.size(); }
    [[nodiscard]] const std::map<NodeId, NodeAttributes>& rows() const noexcept { return rows_; }

  private:
    std::map<NodeId, NodeAttributes> rows_;
};

namespace detail {

inline NodeAttributes parse_attribute_row(const csv::Row& r, std::size_t cd, std::size_t cl, std::size_t cc) {
    const auto opt = [&](std::size_t col) -> std::optional<std::string> {
        if (col >= r.fields.size())
            return std::nullopt;
        auto v = trim(r.fields[col]);
        if (v.empty())
            return std::nullopt;
        return std::string(v);
    };
    const auto where = "line " + std::to_string(r.line) + ": ";
    NodeAttributes a;
    a.domain = opt(cd);
    if (a.domain && !is_country_code(*a.domain))
        throw InputError(where + "malformed country code '" + *a.domain + "'");
    a.language = opt(cl);
    if (auto c = opt(cc)) {
        a.category = parse_category(*c);
        if (!a.category)
            throw InputError(where + "unknown category '" + *c + "'");
    }
    return a;
}

} // namespace detail

/// Reads `node_id,domain,language,category`; empty cells are missing values.
inline AttributeTable load_attributes(std::istream& in, char delim = ',') {
    csv::Table t(in, delim);
    const auto ci = t.column("node_id"), cd = t.column("domain"), cl = t.column("language"),
               cc = t.column("category");
    AttributeTable out;
    for (const auto& r : t.rows()) {
        NodeId id(csv::Table::field(r, ci));
        if (out.find(id))
            throw InputError("line " + std::to_string(r.line) + ": duplicate node_id '" + id.str() + "'");
        out.set(id, detail::parse_attribute_row(r, cd, cl, cc));
    }
    return out;
}

/// One row per node: `node_id,domain,language,category` (empty when unlabeled).
inline void write_node_list(std::ostream& out, const CoShareGraph& g, const AttributeTable* attrs,
                            char delim = ',') {
    csv::write_row(out, {"node_id", "domain", "language", "category"}, delim);
    for (const auto& v : g.nodes()) {
        std::vector<std::string> row{v.str(), "", "", ""};
        if (attrs) {
            if (const auto* a = attrs->find(v)) {
                row[1] = a->domain.value_or("");
                row[2] = a->language.value_or("");
                row[3] = a->category ? std::string(to_string(*a->category)) : "";
            }
        }
        csv::write_row(out, row, delim);
    }
}

/// Weight of {a,b} = number of distinct urls shared by both groups.
inline CoShareGraph project_coshare(const BipartiteGraph& g) {
    const auto groups = g.groups();
    std::map<NodeId, std::uint32_t> index;
    for (std::uint32_t i = 0; i < groups.size(); ++i)
        index.emplace(groups[i], i);

    // url -> adjacent group indices (ascending because groups are visited in order)
    std::map<NodeId, std::vector<std::uint32_t>> sharers;
    for (const auto& [grp, row] : g.adjacency())
        for (const auto& [url, c] : row)
            sharers[url].push_back(index.at(grp));

    std::unordered_map<std::uint64_t, std::int64_t> pair_weight;
    for (const auto& [url, members] : sharers)
        for (std::size_t x = 0; x < members.size(); ++x)
            for (std::size_t y = x + 1; y < members.size(); ++y)
                ++pair_weight[(std::uint64_t{members[x]} << 32) | members[y]];

    std::vector<std::pair<std::uint64_t, std::int64_t>> sorted(pair_weight.begin(), pair_weight.end());
    std::sort(sorted.begin(), sorted.end());
    CoShareGraph out;
    for (const auto& v : groups)
        out.add_node(v);
    for (const auto& [key, w] : sorted)
        out.set_edge(groups[key >> 32], groups[key & 0xFFFFFFFFu], w);
    return out;
}

/// Nearest-rank q-quantile of the edge weights: the ceil(q*m)-th smallest (k >= 1).
inline std::int64_t weight_quantile(const CoShareGraph& g, double q) {
    if (!(q >= 0.0 && q < 1.0))
        throw InputError("quantile must lie in [0, 1)");
    std::vector<std::int64_t> w;
    for (const auto& e : g.edges())
        w.push_back(e.weight);
    if (w.empty())
        throw InputError("cannot take a weight quantile of a graph without edges");
    std::sort(w.begin(), w.end());
    // guard against q*m landing a hair above an integer
    const double pos = q * static_cast<double>(w.size());
    auto k = static_cast<std::size_t>(std::ceil(pos - 1e-9 * std::max(1.0, pos)));
    k = std::clamp<std::size_t>(k, 1, w.size());
    return w[k - 1];
}

/// Keeps edges whose weight reaches the nearest-rank q-quantile, ties included,
/// then removes isolates.
inline CoShareGraph trim_upper_percentile(const CoShareGraph& g, double q) {
    if (!(q >= 0.0 && q < 1.0))
        throw InputError("quantile must lie in [0, 1)");
    if (g.edge_count() == 0) {
        if (q > 0.0)
            throw InputError("cannot trim a graph without edges at q > 0");
        return g.without_isolates();
    }
    const auto t = weight_quantile(g, q);
    CoShareGraph out;
    for (const auto& e : g.edges())
        if (e.weight >= t)
            out.set_edge(e.a, e.b, e.weight);
    return out;
}

/// Keeps fully labelled nodes whose country is covered; removes isolates afterwards.
inline CoShareGraph filter_by_attributes(const CoShareGraph& g, const AttributeTable& attrs,
                                         const std::set<std::string>& covered_countries) {
    std::set<NodeId> keep;
    for (const auto& v : g.nodes()) {
        const auto* a = attrs.find(v);
        if (a && a->complete() && covered_countries.count(*a->domain))
            keep.insert(v);
    }
    return g.induced(keep).without_isolates();
}

using Histogram = std::vector<std::pair<std::string, std::size_t>>;

/// Label counts over the graph's nodes, by descending count then label.
inline Histogram attribute_distribution(const CoShareGraph& g, const AttributeTable& attrs, AttrField field) {
    std::map<std::string, std::size_t> counts;
    for (const auto& v : g.nodes()) {
        auto l = attrs.label(v, field);
        if (!l)
            throw InputError("node '" + v.str() + "' has no " + std::string(to_string(field)) + " label");
        ++counts[*l];
    }
    Histogram h(counts.begin(), counts.end());
    std::stable_sort(h.begin(), h.end(), [](const auto& x, const auto& y) { return x.second > y.second; });
    return h;
}

} // namespace coshare
