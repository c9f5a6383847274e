#pragma once

#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "coshare/csv.hpp"
#include "coshare/error.hpp"
#include "coshare/graph.hpp"
#include "coshare/projection.hpp"

namespace coshare {

inline constexpr double sci_min = 1.0;
inline constexpr double sci_max = 1e9;

/// Symmetric country-pair Social Connectedness Index values, including self-pairs.
class SciTable {
  public:
    /// Stores {a, b}; a conflicting value for an existing pair is an error.
    void set(std::string_view a, std::string_view b, double sci) {
        auto ka = upper(trim(a)), kb = upper(trim(b));
        if (!is_country_code(ka))
            throw InputError("malformed country code '" + std::string(a) + "'");
        if (!is_country_code(kb))
            throw InputError("malformed country code '" + std::string(b) + "'");
        if (!(sci >= sci_min && sci <= sci_max))
            throw InputError("SCI value out of range [1, 1e9] for " + ka + "-" + kb);
        auto key = ka < kb ? std::pair{ka, kb} : std::pair{kb, ka};
        auto [it, fresh] = values_.emplace(key, sci);
        if (!fresh && it->second != sci)
            throw InputError("conflicting SCI values for " + key.first + "-" + key.second);
        countries_.insert(ka);
        countries_.insert(kb);
    }

    [[nodiscard]] std::optional<double> get(std::string_view a, std::string_view b) const {
        std::string ka(a), kb(b);
        auto it = values_.find(ka < kb ? std::pair{ka, kb} : std::pair{kb, ka});
        if (it == values_.end())
            return std::nullopt;
        return it->second;
    }

    [[nodiscard]] std::size_t size() const noexcept { return values_.size(); }
    [[nodiscard]] const std::set<std::string>& countries() const noexcept { return countries_; }

  private:
    std::map<std::pair<std::string, std::string>, double> values_;
    std::set<std::string> countries_;
};

/// Reads `country_a,country_b,sci`. The published column names
/// `user_loc,fr_loc,scaled_sci` are accepted as well.
inline SciTable load_sci(std::istream& in, char delim = ',') {
    csv::Table t(in, delim);
    const bool published = !t.has_column("country_a") && t.has_column("user_loc");
    const auto ca = t.column(published ? "user_loc" : "country_a");
    const auto cb = t.column(published ? "fr_loc" : "country_b");
    const auto cv = t.column(published ? "scaled_sci" : "sci");
    SciTable out;
    for (const auto& r : t.rows()) {
        const auto& raw = csv::Table::field(r, cv);
        double v = 0;
        try {
            std::size_t pos = 0;
            v = std::stod(raw, &pos);
            if (trim(std::string_view(raw).substr(pos)).size())
                throw std::invalid_argument(raw);
        } catch (const std::exception&) {
            throw InputError("line " + std::to_string(r.line) + ": bad SCI value '" + raw + "'");
        }
        try {
            out.set(csv::Table::field(r, ca), csv::Table::field(r, cb), v);
        } catch (const InputError& e) {
            throw InputError("line " + std::to_string(r.line) + ": " + e.what());
        }
    }
    return out;
}

enum class SciTransform { identity, log10, zscore };

inline std::string_view to_string(SciTransform t) {
    switch (t) {
    case SciTransform::identity: return "identity";
    case SciTransform::log10: return "log10";
    case SciTransform::zscore: return "zscore";
    }
    return "";
}

inline std::optional<SciTransform> parse_transform(std::string_view s) {
    s = trim(s);
    if (s == "identity")
        return SciTransform::identity;
    if (s == "log10")
        return SciTransform::log10;
    if (s == "zscore")
        return SciTransform::zscore;
    return std::nullopt;
}

/// Dense symmetric node x node matrix; the diagonal is unused and kept at zero.
class DyadCovariateMatrix {
  public:
    DyadCovariateMatrix() = default;
    DyadCovariateMatrix(std::vector<NodeId> order, std::vector<double> cells)
        : order_(std::move(order)), cells_(std::move(cells)) {
        if (cells_.size() != order_.size() * order_.size())
            throw InputError("covariate matrix dimension mismatch");
    }

    [[nodiscard]] std::size_t size() const noexcept { return order_.size(); }
    [[nodiscard]] const std::vector<NodeId>& node_order() const noexcept { return order_; }
    [[nodiscard]] double operator()(std::size_t i, std::size_t j) const noexcept {
        return cells_[i * order_.size() + j];
    }
    [[nodiscard]] const std::vector<double>& cells() const noexcept { return cells_; }

    /// Copy with every off-diagonal cell mapped through f.
    template <class F>
    [[nodiscard]] DyadCovariateMatrix transformed(F&& f) const {
        auto c = cells_;
        const auto n = order_.size();
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                if (i != j)
                    c[i * n + j] = f(c[i * n + j]);
        return {order_, std::move(c)};
    }

  private:
    std::vector<NodeId> order_;
    std::vector<double> cells_;
};

/// Cell (i,j) = transform(sci(domain_i, domain_j)) over the graph's nodes in
/// ascending order. zscore standardises over the upper triangle (population
/// standard deviation); a constant triangle maps to zeros.
inline DyadCovariateMatrix build_dyad_matrix(const CoShareGraph& g, const AttributeTable& attrs,
                                             const SciTable& sci, SciTransform transform) {
    auto order = g.nodes();
    const auto n = order.size();
    std::vector<std::string> dom(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto d = attrs.label(order[i], AttrField::domain);
        if (!d)
            throw InputError("node '" + order[i].str() + "' has no domain label");
        dom[i] = *d;
    }
    std::vector<double> cells(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            auto v = sci.get(dom[i], dom[j]);
            if (!v)
                throw InputError("no SCI value for country pair " + dom[i] + "-" + dom[j]);
            const double x = transform == SciTransform::log10 ? std::log10(*v) : *v;
            cells[i * n + j] = cells[j * n + i] = x;
        }
    if (transform == SciTransform::zscore && n >= 2) {
        double sum = 0, count = 0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) {
                sum += cells[i * n + j];
                count += 1;
            }
        const double mean = sum / count;
        double ss = 0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j)
                ss += (cells[i * n + j] - mean) * (cells[i * n + j] - mean);
        const double sd = std::sqrt(ss / count);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) {
                const double z = sd > 0 ? (cells[i * n + j] - mean) / sd : 0.0;
                cells[i * n + j] = cells[j * n + i] = z;
            }
    }
    return {std::move(order), std::move(cells)};
}

} // namespace coshare
