#pragma once

#include <algorithm>
#include <compare>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "coshare/csv.hpp"
#include "coshare/error.hpp"

namespace coshare {

inline std::string_view trim(std::string_view s) {
    constexpr std::string_view ws = " \t\r\n\f\v";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos)
        return {};
    const auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

/// Stable string key for a node. Surrounding whitespace is trimmed; case is kept.
class NodeId {
  public:
    explicit NodeId(std::string_view raw) : value_(trim(raw)) {
        if (value_.empty())
            throw InputError("empty node identifier");
    }

    [[nodiscard]] const std::string& str() const noexcept { return value_; }

    friend auto operator<=>(const NodeId&, const NodeId&) = default;
    friend bool operator==(const NodeId&, const NodeId&) = default;

    friend std::ostream& operator<<(std::ostream& os, const NodeId& id) { return os << id.value_; }

  private:
    std::string value_;
};

/// Number of unordered dyads among n nodes.
constexpr std::uint64_t dyad_count(std::uint64_t n) noexcept { return n < 2 ? 0 : n * (n - 1) / 2; }

/// Groups x URLs with per-pair share counts. Direction (group shares url) is implicit.
class BipartiteGraph {
  public:
    void add_group(const NodeId& g) { edges_.try_emplace(g); }
    void add_url(const NodeId& u) { urls_.emplace(u, 0); }

    /// Adds `count` shares of url by group, creating both nodes as needed.
    void add_share(const NodeId& group, const NodeId& url, std::int64_t count = 1) {
        if (count < 1)
            throw InputError("share count must be positive");
        auto& row = edges_[group];
        auto [it, fresh] = row.try_emplace(url, 0);
        it->second += count;
        auto& deg = urls_[url];
        if (fresh)
            ++deg;
    }

    [[nodiscard]] std::size_t group_count() const noexcept { return edges_.size(); }
    [[nodiscard]] std::size_t url_count() const noexcept { return urls_.size(); }
    [[nodiscard]] std::size_t edge_count() const noexcept {
        std::size_t m = 0;
        for (const auto& [g, row] : edges_)
            m += row.size();
        return m;
    }

    [[nodiscard]] bool has_group(const NodeId& g) const { return edges_.count(g) != 0; }
    [[nodiscard]] bool has_url(const NodeId& u) const { return urls_.count(u) != 0; }

    [[nodiscard]] std::int64_t share_count(const NodeId& g, const NodeId& u) const {
        auto it = edges_.find(g);
        if (it == edges_.end())
            return 0;
        auto jt = it->second.find(u);
        return jt == it->second.end() ? 0 : jt->second;
    }

    /// Sum of share counts over all incident edges of a group.
    [[nodiscard]] std::int64_t total_shares(const NodeId& g) const {
        auto it = edges_.find(g);
        if (it == edges_.end())
            throw InputError("unknown group '" + g.str() + "'");
        std::int64_t s = 0;
        for (const auto& [u, c] : it->second)
            s += c;
        return s;
    }

    /// Number of distinct groups adjacent to a url.
    [[nodiscard]] std::size_t url_degree(const NodeId& u) const {
        auto it = urls_.find(u);
        if (it == urls_.end())
            throw InputError("unknown url '" + u.str() + "'");
        return it->second;
    }

    /// group -> (url -> share count), ordered.
    [[nodiscard]] const std::map<NodeId, std::map<NodeId, std::int64_t>>& adjacency() const noexcept {
        return edges_;
    }

    [[nodiscard]] std::vector<NodeId> groups() const {
        std::vector<NodeId> out;
        out.reserve(edges_.size());
        for (const auto& [g, row] : edges_)
            out.push_back(g);
        return out;
    }

    [[nodiscard]] std::vector<NodeId> urls() const {
        std::vector<NodeId> out;
        out.reserve(urls_.size());
        for (const auto& [u, d] : urls_)
            out.push_back(u);
        return out;
    }

  private:
    std::map<NodeId, std::map<NodeId, std::int64_t>> edges_;
    std::map<NodeId, std::size_t> urls_; // url -> number of adjacent groups
};

struct WeightedEdge {
    NodeId a; // a < b
    NodeId b;
    std::int64_t weight;
};

/// Undirected, weighted group-group graph without self-loops.
class CoShareGraph {
  public:
    void add_node(const NodeId& v) { adj_.try_emplace(v); }

    /// Inserts or overwrites the undirected edge {a, b}.
    void set_edge(const NodeId& a, const NodeId& b, std::int64_t weight) {
        if (a == b)
            throw InputError("self-loop on '" + a.str() + "'");
        if (weight < 1)
            throw InputError("edge weight must be positive");
        adj_[a][b] = weight;
        adj_[b][a] = weight;
    }

    [[nodiscard]] std::size_t node_count() const noexcept { return adj_.size(); }
    [[nodiscard]] std::size_t edge_count() const noexcept {
        std::size_t twice = 0;
        for (const auto& [v, nb] : adj_)
            twice += nb.size();
        return twice / 2;
    }
    [[nodiscard]] bool empty() const noexcept { return adj_.empty(); }
    [[nodiscard]] bool has_node(const NodeId& v) const { return adj_.count(v) != 0; }

    [[nodiscard]] std::optional<std::int64_t> weight(const NodeId& a, const NodeId& b) const {
        auto it = adj_.find(a);
        if (it == adj_.end())
            return std::nullopt;
        auto jt = it->second.find(b);
        if (jt == it->second.end())
            return std::nullopt;
        return jt->second;
    }

    [[nodiscard]] const std::map<NodeId, std::int64_t>& neighbors(const NodeId& v) const {
        auto it = adj_.find(v);
        if (it == adj_.end())
            throw InputError("unknown node '" + v.str() + "'");
        return it->second;
    }

    /// Nodes in ascending order.
    [[nodiscard]] std::vector<NodeId> nodes() const {
        std::vector<NodeId> out;
        out.reserve(adj_.size());
        for (const auto& [v, nb] : adj_)
            out.push_back(v);
        return out;
    }

    /// Edges with a < b, ordered by (a, b).
    [[nodiscard]] std::vector<WeightedEdge> edges() const {
        std::vector<WeightedEdge> out;
        for (const auto& [a, nb] : adj_)
            for (auto it = nb.upper_bound(a); it != nb.end(); ++it)
                out.push_back({a, it->first, it->second});
        return out;
    }

    /// Subgraph induced by `keep` (nodes outside the graph are ignored).
    [[nodiscard]] CoShareGraph induced(const std::set<NodeId>& keep) const {
        CoShareGraph out;
        for (const auto& [v, nb] : adj_) {
            if (!keep.count(v))
                continue;
            auto& row = out.adj_[v];
            for (const auto& [u, w] : nb)
                if (keep.count(u))
                    row.emplace(u, w);
        }
        return out;
    }

    /// Copy without zero-degree nodes.
    [[nodiscard]] CoShareGraph without_isolates() const {
        CoShareGraph out;
        for (const auto& [v, nb] : adj_)
            if (!nb.empty())
                out.adj_.emplace(v, nb);
        return out;
    }

    friend bool operator==(const CoShareGraph&, const CoShareGraph&) = default;

  private:
    std::map<NodeId, std::map<NodeId, std::int64_t>> adj_;
};

/// Unweighted degree. Throws InputError for an unknown node.
inline std::size_t degree(const CoShareGraph& g, const NodeId& v) { return g.neighbors(v).size(); }

/// Connected components, each sorted, listed in order of their smallest member.
inline std::vector<std::vector<NodeId>> connected_components(const CoShareGraph& g) {
    std::vector<std::vector<NodeId>> comps;
    std::set<NodeId> seen;
    for (const auto& start : g.nodes()) {
        if (seen.count(start))
            continue;
        std::vector<NodeId> comp;
        std::deque<NodeId> queue{start};
        seen.insert(start);
        while (!queue.empty()) {
            NodeId v = queue.front();
            queue.pop_front();
            comp.push_back(v);
            for (const auto& [u, w] : g.neighbors(v))
                if (seen.insert(u).second)
                    queue.push_back(u);
        }
        std::sort(comp.begin(), comp.end());
        comps.push_back(std::move(comp));
    }
    return comps;
}

/// Induced subgraph on the largest connected component. Equal sizes are
/// resolved in favour of the component holding the smallest NodeId.
inline CoShareGraph largest_component(const CoShareGraph& g) {
    if (g.empty())
        return {};
    auto comps = connected_components(g);
    // comps are already ordered by smallest member, so the first maximum wins.
    const auto best = std::max_element(comps.begin(), comps.end(), [](const auto& x, const auto& y) {
        return x.size() < y.size();
    });
    return g.induced(std::set<NodeId>(best->begin(), best->end()));
}

/// Writes `src,dst,weight`, one row per undirected edge with src < dst.
inline void write_edge_list(std::ostream& out, const CoShareGraph& g, char delim = ',') {
    csv::write_row(out, {"src", "dst", "weight"}, delim);
    for (const auto& e : g.edges())
        csv::write_row(out, {e.a.str(), e.b.str(), std::to_string(e.weight)}, delim);
}

/// Writes `group,url,share_count`.
inline void write_bipartite_edge_list(std::ostream& out, const BipartiteGraph& g, char delim = ',') {
    csv::write_row(out, {"group", "url", "share_count"}, delim);
    for (const auto& [grp, row] : g.adjacency())
        for (const auto& [url, c] : row)
            csv::write_row(out, {grp.str(), url.str(), std::to_string(c)}, delim);
}

/// Reads an edge list written by write_edge_list.
inline CoShareGraph read_edge_list(std::istream& in, char delim = ',') {
    csv::Table t(in, delim);
    const auto cs = t.column("src"), cd = t.column("dst"), cw = t.column("weight");
    CoShareGraph g;
    for (const auto& r : t.rows()) {
        const std::string& ws = csv::Table::field(r, cw);
        std::int64_t w = 0;
        try {
            std::size_t pos = 0;
            w = std::stoll(ws, &pos);
            if (pos != ws.size())
                throw std::invalid_argument(ws);
        } catch (const std::exception&) {
            throw InputError("line " + std::to_string(r.line) + ": bad weight '" + ws + "'");
        }
        try {
            g.set_edge(NodeId(csv::Table::field(r, cs)), NodeId(csv::Table::field(r, cd)), w);
        } catch (const InputError& e) {
            throw InputError("line " + std::to_string(r.line) + ": " + e.what());
        }
    }
    return g;
}

} // namespace coshare
