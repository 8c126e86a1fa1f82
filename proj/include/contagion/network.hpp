#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "contagion/detect.hpp"
#include "contagion/errors.hpp"

namespace contagion {

struct UndirectedGraph {
    std::vector<std::string> node_ids;
    Eigen::MatrixXd weights;  // symmetric, zero diagonal

    Eigen::Index n_nodes() const { return weights.rows(); }
};

// Undirected weight is the larger of the two directed flows, keeping the
// stronger directional signal.
inline UndirectedGraph symmetrize(const ContagionNetwork& net) {
    UndirectedGraph g;
    g.node_ids = net.node_ids;
    const Eigen::Index n = static_cast<Eigen::Index>(net.n_nodes());
    g.weights = Eigen::MatrixXd::Zero(n, n);
    for (const auto& e : net.edges) {
        const double w = std::max(g.weights(e.source, e.target), e.weight);
        g.weights(e.source, e.target) = w;
        g.weights(e.target, e.source) = w;
    }
    return g;
}

struct CommunityPartition {
    std::vector<int> assignments;  // node -> community, ids contiguous from 0
    int n_communities = 0;
    double modularity = 0.0;
};

namespace network_detail {

inline double modularity_of(const Eigen::MatrixXd& W, const std::vector<int>& comm) {
    const Eigen::Index n = W.rows();
    const double two_m = W.sum();
    if (two_m <= 0.0) return 0.0;
    const Eigen::VectorXd deg = W.rowwise().sum();
    double q = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            if (comm[static_cast<size_t>(i)] == comm[static_cast<size_t>(j)])
                q += W(i, j) - deg(i) * deg(j) / two_m;
    return q / two_m;
}

inline std::vector<int> relabel_contiguous(const std::vector<int>& raw) {
    std::map<int, int> seen;
    std::vector<int> out(raw.size());
    int next = 0;
    for (size_t i = 0; i < raw.size(); ++i) {
        auto it = seen.find(raw[i]);
        if (it == seen.end()) it = seen.emplace(raw[i], next++).first;
        out[i] = it->second;
    }
    return out;
}

} // namespace network_detail

// Random-walk agglomerative community detection: communities are merged by
// the smallest walk-distance criterion among adjacent pairs, and the
// partition sequence is cut at maximum modularity. Only connected
// communities can merge, so disjoint components never join; isolated nodes
// end as singletons.
inline CommunityPartition walktrap(const UndirectedGraph& g, int steps = 4) {
    if (steps < 1) throw DomainError("walk length must be >= 1");
    const Eigen::Index n = g.n_nodes();
    CommunityPartition best;
    if (n == 0) return best;

    const Eigen::MatrixXd& W = g.weights;
    const Eigen::VectorXd deg = W.rowwise().sum();

    // t-step transition probabilities; rows of isolated nodes stay zero.
    Eigen::MatrixXd P = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        if (deg(i) > 0.0) P.row(i) = W.row(i) / deg(i);
    Eigen::MatrixXd Pt = P;
    for (int s = 1; s < steps; ++s) Pt = Pt * P;

    struct Community {
        std::vector<Eigen::Index> members;
        Eigen::VectorXd prob;  // average t-step distribution of members
        bool alive = true;
    };
    std::vector<Community> comms;
    comms.reserve(static_cast<size_t>(2 * n));
    std::vector<int> node_comm(static_cast<size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        Community c;
        c.members = {i};
        c.prob = Pt.row(i);
        comms.push_back(std::move(c));
        node_comm[static_cast<size_t>(i)] = static_cast<int>(i);
    }

    auto adjacent = [&](const Community& a, const Community& b) {
        for (Eigen::Index i : a.members)
            for (Eigen::Index j : b.members)
                if (W(i, j) > 0.0) return true;
        return false;
    };
    auto walk_distance2 = [&](const Community& a, const Community& b) {
        double r2 = 0.0;
        for (Eigen::Index k = 0; k < n; ++k) {
            if (deg(k) <= 0.0) continue;
            const double d = a.prob(k) - b.prob(k);
            r2 += d * d / deg(k);
        }
        return r2;
    };

    double best_q = network_detail::modularity_of(W, node_comm);
    best.assignments = node_comm;

    const double n_inv = 1.0 / static_cast<double>(n);
    for (;;) {
        // Pick the adjacent pair with the smallest merge criterion;
        // ties resolve to the lowest community id pair.
        double best_ds = std::numeric_limits<double>::infinity();
        int pick_a = -1, pick_b = -1;
        for (size_t a = 0; a < comms.size(); ++a) {
            if (!comms[a].alive) continue;
            for (size_t b = a + 1; b < comms.size(); ++b) {
                if (!comms[b].alive) continue;
                if (!adjacent(comms[a], comms[b])) continue;
                const double na = static_cast<double>(comms[a].members.size());
                const double nb = static_cast<double>(comms[b].members.size());
                const double ds = n_inv * (na * nb / (na + nb)) *
                                  walk_distance2(comms[a], comms[b]);
                if (ds < best_ds) {
                    best_ds = ds;
                    pick_a = static_cast<int>(a);
                    pick_b = static_cast<int>(b);
                }
            }
        }
        if (pick_a < 0) break;  // no adjacent pairs left

        Community merged;
        const auto& ca = comms[static_cast<size_t>(pick_a)];
        const auto& cb = comms[static_cast<size_t>(pick_b)];
        merged.members = ca.members;
        merged.members.insert(merged.members.end(), cb.members.begin(), cb.members.end());
        const double na = static_cast<double>(ca.members.size());
        const double nb = static_cast<double>(cb.members.size());
        merged.prob = (na * ca.prob + nb * cb.prob) / (na + nb);
        comms[static_cast<size_t>(pick_a)].alive = false;
        comms[static_cast<size_t>(pick_b)].alive = false;
        const int new_id = static_cast<int>(comms.size());
        comms.push_back(std::move(merged));
        for (Eigen::Index i : comms.back().members) node_comm[static_cast<size_t>(i)] = new_id;

        const double q = network_detail::modularity_of(W, node_comm);
        if (q > best_q) {
            best_q = q;
            best.assignments = node_comm;
        }
    }

    best.assignments = network_detail::relabel_contiguous(best.assignments);
    best.n_communities = 1 + *std::max_element(best.assignments.begin(), best.assignments.end());
    best.modularity = best_q;
    return best;
}

struct DegreeShares {
    double advanced_out = 0.0;
    double emerging_out = 0.0;
    double advanced_in = 0.0;
    double emerging_in = 0.0;
    bool empty = false;  // no edges: shares reported missing
};

// Share of total out-degree (shock transmission) and in-degree (shock
// reception) held by the advanced and emerging market classes.
inline DegreeShares degree_decomposition(const ContagionNetwork& net,
                                         const std::vector<MarketClass>& classes) {
    if (classes.size() != net.n_nodes())
        throw DomainError("class labels do not cover all nodes");
    DegreeShares s;
    if (net.edges.empty()) {
        s.empty = true;
        s.advanced_out = s.emerging_out = s.advanced_in = s.emerging_in = nan_value();
        return s;
    }
    double adv_out = 0.0, adv_in = 0.0;
    for (const auto& e : net.edges) {
        if (classes[static_cast<size_t>(e.source)] == MarketClass::advanced) adv_out += 1.0;
        if (classes[static_cast<size_t>(e.target)] == MarketClass::advanced) adv_in += 1.0;
    }
    const double total = static_cast<double>(net.edges.size());
    s.advanced_out = adv_out / total;
    s.emerging_out = 1.0 - s.advanced_out;
    s.advanced_in = adv_in / total;
    s.emerging_in = 1.0 - s.advanced_in;
    return s;
}

} // namespace contagion
