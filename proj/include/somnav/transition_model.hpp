#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <queue>
#include <stdexcept>
#include <string>
#include <vector>

#include "somnav/action.hpp"
#include "somnav/som.hpp"

namespace somnav {

/// A route through memory: nodes visited and the action labeling each hop.
/// The estimate is the hop count and stands in for "actions needed".
struct Plan {
    std::vector<NodeId> nodes;
    std::vector<Action> actions;
    int estimate = 0;
};

/// Markov chain over map nodes: counts of observed (from, action, to)
/// events, and shortest-path planning across them.
///
/// Planning treats every node pair with at least `min_edge_count` recorded
/// non-self-loop transitions (any action) as a unit-cost directed edge, so a
/// plan's length reads directly as an action count. Self-loops are kept in
/// the counts but never planned over.
class TransitionModel {
public:
    explicit TransitionModel(int node_count, int min_edge_count = 1,
                             std::uint64_t built_at_version = 0)
        : node_count_(node_count),
          min_edge_count_(min_edge_count),
          built_at_version_(built_at_version),
          counts_(static_cast<std::size_t>(node_count)) {
        if (node_count < 1) {
            throw std::invalid_argument("TransitionModel: node_count must be >= 1");
        }
        if (min_edge_count < 1) {
            throw std::invalid_argument("TransitionModel: min_edge_count must be >= 1");
        }
    }

    int node_count() const { return node_count_; }
    int min_edge_count() const { return min_edge_count_; }

    void record(NodeId from, Action action, NodeId to) { record(from, action, to, 1); }

    /// Bulk form for restoring persisted counts.
    void record(NodeId from, Action action, NodeId to, std::int64_t times) {
        check_node(from);
        check_node(to);
        if (times < 1) {
            throw std::invalid_argument("TransitionModel: count increment must be >= 1");
        }
        auto& per_action = counts_[static_cast<std::size_t>(from)][to];
        per_action[static_cast<std::size_t>(action)] += times;
        total_ += times;
    }

    std::int64_t count(NodeId from, Action action, NodeId to) const {
        check_node(from);
        check_node(to);
        const auto& row = counts_[static_cast<std::size_t>(from)];
        auto it = row.find(to);
        if (it == row.end()) return 0;
        return it->second[static_cast<std::size_t>(action)];
    }

    std::int64_t total_recorded() const { return total_; }

    /// Maximum-likelihood P(to | from, action); 0 when (from, action) was
    /// never observed.
    double action_probability(NodeId from, Action action, NodeId to) const {
        check_node(from);
        check_node(to);
        const auto& row = counts_[static_cast<std::size_t>(from)];
        std::int64_t denom = 0;
        std::int64_t num = 0;
        for (const auto& [t, per_action] : row) {
            const std::int64_t c = per_action[static_cast<std::size_t>(action)];
            denom += c;
            if (t == to) num = c;
        }
        if (denom == 0) return 0.0;
        return static_cast<double>(num) / static_cast<double>(denom);
    }

    /// The action most often observed to take from -> to; ties break toward
    /// the smaller encoding. Empty when the transition was never seen.
    std::optional<Action> best_action(NodeId from, NodeId to) const {
        check_node(from);
        check_node(to);
        const auto& row = counts_[static_cast<std::size_t>(from)];
        auto it = row.find(to);
        if (it == row.end()) return std::nullopt;
        std::int64_t best = 0;
        Action pick = Action::forward;
        for (Action a : kAllActions) {
            const std::int64_t c = it->second[static_cast<std::size_t>(a)];
            if (c > best) {
                best = c;
                pick = a;
            }
        }
        if (best == 0) return std::nullopt;
        return pick;
    }

    /// Dijkstra over the unit-cost edge graph. Deterministic: nodes settle
    /// in (distance, index) order and a relaxation only replaces a strictly
    /// worse entry, so among shortest paths the one through smaller indices
    /// wins. Empty when the goal is unreachable; start == goal yields the
    /// empty plan.
    std::optional<Plan> plan(NodeId start, NodeId goal) const {
        check_node(start);
        check_node(goal);
        if (start == goal) {
            return Plan{{start}, {}, 0};
        }
        constexpr int kUnreached = -1;
        std::vector<int> dist(static_cast<std::size_t>(node_count_), kUnreached);
        std::vector<NodeId> pred(static_cast<std::size_t>(node_count_), -1);
        using Entry = std::pair<int, NodeId>;
        std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;
        dist[static_cast<std::size_t>(start)] = 0;
        heap.push({0, start});
        std::vector<bool> settled(static_cast<std::size_t>(node_count_), false);
        while (!heap.empty()) {
            const auto [d, u] = heap.top();
            heap.pop();
            if (settled[static_cast<std::size_t>(u)]) continue;
            settled[static_cast<std::size_t>(u)] = true;
            if (u == goal) break;
            for (const auto& [v, per_action] : counts_[static_cast<std::size_t>(u)]) {
                if (v == u) continue;  // self-loops make no progress
                std::int64_t total = 0;
                for (std::int64_t c : per_action) total += c;
                if (total < min_edge_count_) continue;
                auto& dv = dist[static_cast<std::size_t>(v)];
                if (dv == kUnreached || d + 1 < dv) {
                    dv = d + 1;
                    pred[static_cast<std::size_t>(v)] = u;
                    heap.push({dv, v});
                }
            }
        }
        if (dist[static_cast<std::size_t>(goal)] == kUnreached) {
            return std::nullopt;
        }
        Plan p;
        for (NodeId n = goal; n != -1; n = pred[static_cast<std::size_t>(n)]) {
            p.nodes.push_back(n);
        }
        std::reverse(p.nodes.begin(), p.nodes.end());
        for (std::size_t i = 0; i + 1 < p.nodes.size(); ++i) {
            auto a = best_action(p.nodes[i], p.nodes[i + 1]);
            if (!a) {
                throw std::logic_error("plan: edge without recorded action");
            }
            p.actions.push_back(*a);
        }
        p.estimate = static_cast<int>(p.actions.size());
        return p;
    }

    std::uint64_t built_at_version() const { return built_at_version_; }

    /// Drop every recorded transition and stamp the model as built against
    /// the given map version.
    void reset(std::uint64_t som_version) {
        for (auto& row : counts_) row.clear();
        total_ = 0;
        built_at_version_ = som_version;
    }

    /// Visit nonzero counts in (from, action, to) order.
    template <typename Fn>
    void for_each_count(Fn&& fn) const {
        for (NodeId from = 0; from < node_count_; ++from) {
            for (Action a : kAllActions) {
                for (const auto& [to, per_action] : counts_[static_cast<std::size_t>(from)]) {
                    const std::int64_t c = per_action[static_cast<std::size_t>(a)];
                    if (c > 0) fn(from, a, to, c);
                }
            }
        }
    }

private:
    void check_node(NodeId n) const {
        if (n < 0 || n >= node_count_) {
            throw std::out_of_range("TransitionModel: node " + std::to_string(n) +
                                    " outside [0," + std::to_string(node_count_) + ")");
        }
    }

    int node_count_;
    int min_edge_count_;
    std::uint64_t built_at_version_;
    // per from-node: to-node -> counts per action
    std::vector<std::map<NodeId, std::array<std::int64_t, kActionCount>>> counts_;
    std::int64_t total_ = 0;
};

/// True iff the model was built against the map version it is about to be
/// used with. A stale model's node identities may no longer mean anything.
inline bool reindex_guard(const TransitionModel& model, std::uint64_t som_version) {
    return model.built_at_version() == som_version;
}

}  // namespace somnav
