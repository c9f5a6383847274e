#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <utility>
#include <vector>

#include "coshare/error.hpp"
#include "coshare/graph.hpp"

namespace coshare {

/// Binary undirected graph on nodes 0..n-1 with O(1) toggles and uniform edge
/// lookup. Used by the estimators and the sampler; memory is O(n^2).
class Network {
  public:
    using Edge = std::pair<std::uint32_t, std::uint32_t>; // first < second

    Network() = default;
    explicit Network(std::size_t n) : n_(n), slot_(n * n, -1), degree_(n, 0) {}

    /// Binary view of g with nodes indexed by `order`. Nodes of g outside `order` are an error.
    static Network from_graph(const CoShareGraph& g, const std::vector<NodeId>& order) {
        Network net(order.size());
        std::map<NodeId, std::uint32_t> index;
        for (std::uint32_t i = 0; i < order.size(); ++i)
            index.emplace(order[i], i);
        for (const auto& e : g.edges()) {
            auto a = index.find(e.a), b = index.find(e.b);
            if (a == index.end() || b == index.end())
                throw InputError("edge endpoint missing from node order");
            net.add(a->second, b->second);
        }
        return net;
    }

    [[nodiscard]] std::size_t node_count() const noexcept { return n_; }
    [[nodiscard]] std::size_t edge_count() const noexcept { return edges_.size(); }
    [[nodiscard]] std::uint64_t dyads() const noexcept { return dyad_count(n_); }
    [[nodiscard]] const std::vector<Edge>& edges() const noexcept { return edges_; }
    [[nodiscard]] std::uint32_t degree(std::size_t i) const { return degree_.at(i); }

    [[nodiscard]] bool has_edge(std::size_t i, std::size_t j) const noexcept { return slot_[i * n_ + j] >= 0; }

    /// Toggles {i, j}; returns true when the edge is present afterwards.
    bool toggle(std::size_t i, std::size_t j) {
        if (has_edge(i, j)) {
            remove(i, j);
            return false;
        }
        add(i, j);
        return true;
    }

    void add(std::size_t i, std::size_t j) {
        check(i, j);
        if (has_edge(i, j))
            return;
        if (i > j)
            std::swap(i, j);
        const auto k = static_cast<std::int32_t>(edges_.size());
        edges_.emplace_back(static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j));
        slot_[i * n_ + j] = slot_[j * n_ + i] = k;
        ++degree_[i];
        ++degree_[j];
    }

    void remove(std::size_t i, std::size_t j) {
        check(i, j);
        const auto k = slot_[i * n_ + j];
        if (k < 0)
            return;
        slot_[i * n_ + j] = slot_[j * n_ + i] = -1;
        const auto last = edges_.back();
        edges_.pop_back();
        if (static_cast<std::size_t>(k) < edges_.size()) {
            edges_[k] = last;
            slot_[last.first * n_ + last.second] = slot_[last.second * n_ + last.first] = k;
        }
        --degree_[i];
        --degree_[j];
    }

    /// Adjacency lists with ascending neighbours.
    [[nodiscard]] std::vector<std::vector<std::uint32_t>> adjacency_lists() const {
        std::vector<std::vector<std::uint32_t>> adj(n_);
        for (const auto& [a, b] : edges_) {
            adj[a].push_back(b);
            adj[b].push_back(a);
        }
        for (auto& row : adj)
            std::sort(row.begin(), row.end());
        return adj;
    }

    /// Weighted graph (unit weights) over the given node names.
    [[nodiscard]] CoShareGraph to_graph(const std::vector<NodeId>& order) const {
        CoShareGraph g;
        for (const auto& v : order)
            g.add_node(v);
        for (const auto& [a, b] : edges_)
            g.set_edge(order.at(a), order.at(b), 1);
        return g;
    }

    /// Edge pairs sorted, independent of toggle history.
    [[nodiscard]] std::vector<Edge> sorted_edges() const {
        auto e = edges_;
        std::sort(e.begin(), e.end());
        return e;
    }

    friend bool operator==(const Network& x, const Network& y) {
        return x.n_ == y.n_ && x.sorted_edges() == y.sorted_edges();
    }

  private:
    void check(std::size_t i, std::size_t j) const {
        if (i >= n_ || j >= n_)
            throw InputError("node index out of range");
        if (i == j)
            throw InputError("self-dyad");
    }

    std::size_t n_ = 0;
    std::vector<std::int32_t> slot_; // edge index or -1, both orientations
    std::vector<Edge> edges_;
    std::vector<std::uint32_t> degree_;
};

} // namespace coshare
