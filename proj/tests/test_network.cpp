#include <catch2/catch_amalgamated.hpp>

#include <numeric>
#include <random>

#include "contagion/network.hpp"

using namespace contagion;

namespace {

ContagionNetwork make_net(int n, const std::vector<std::tuple<int, int, double>>& edges) {
    ContagionNetwork net;
    for (int i = 0; i < n; ++i) {
        net.node_ids.push_back("M" + std::to_string(i));
        net.node_class.push_back(i % 2 == 0 ? MarketClass::advanced : MarketClass::emerging);
    }
    for (const auto& [s, t, w] : edges) net.edges.push_back({s, t, w});
    return net;
}

UndirectedGraph clique_pair(int k, double bridge) {
    UndirectedGraph g;
    const int n = 2 * k;
    for (int i = 0; i < n; ++i) g.node_ids.push_back("N" + std::to_string(i));
    g.weights = Eigen::MatrixXd::Zero(n, n);
    auto connect = [&](int a, int b, double w) {
        g.weights(a, b) = w;
        g.weights(b, a) = w;
    };
    for (int a = 0; a < k; ++a)
        for (int b = a + 1; b < k; ++b) {
            connect(a, b, 1.0);
            connect(k + a, k + b, 1.0);
        }
    if (bridge > 0.0) connect(0, k, bridge);
    return g;
}

bool same_partition(const std::vector<int>& a, const std::vector<int>& b) {
    if (a.size() != b.size()) return false;
    std::map<int, int> fwd, bwd;
    for (size_t i = 0; i < a.size(); ++i) {
        auto f = fwd.emplace(a[i], b[i]);
        if (!f.second && f.first->second != b[i]) return false;
        auto g = bwd.emplace(b[i], a[i]);
        if (!g.second && g.first->second != a[i]) return false;
    }
    return true;
}

} // namespace

TEST_CASE("symmetrization keeps the stronger direction") {
    auto net = make_net(3, {{0, 1, 0.1}});
    auto g = symmetrize(net);
    CHECK(g.weights(0, 1) == Catch::Approx(0.1));
    CHECK(g.weights(1, 0) == Catch::Approx(0.1));

    auto net2 = make_net(3, {{0, 1, 0.1}, {1, 0, 0.3}});
    auto g2 = symmetrize(net2);
    CHECK(g2.weights(0, 1) == Catch::Approx(0.3));

    auto empty = symmetrize(make_net(3, {}));
    CHECK(empty.weights.cwiseAbs().maxCoeff() == 0.0);

    // idempotent on an already-symmetric edge list
    auto net3 = make_net(3, {{0, 1, 0.2}, {1, 0, 0.2}});
    auto g3 = symmetrize(net3);
    CHECK(g3.weights == symmetrize(net3).weights);
}

TEST_CASE("walktrap separates disjoint cliques") {
    UndirectedGraph g;
    const int n = 8;
    for (int i = 0; i < n; ++i) g.node_ids.push_back("N" + std::to_string(i));
    g.weights = Eigen::MatrixXd::Zero(n, n);
    for (int a = 0; a < 4; ++a)
        for (int b = a + 1; b < 4; ++b) {
            g.weights(a, b) = g.weights(b, a) = 1.0;
            g.weights(4 + a, 4 + b) = g.weights(4 + b, 4 + a) = 1.0;
        }
    auto part = walktrap(g);
    CHECK(part.n_communities == 2);
    for (int i = 0; i < 4; ++i) {
        CHECK(part.assignments[static_cast<size_t>(i)] == part.assignments[0]);
        CHECK(part.assignments[static_cast<size_t>(4 + i)] == part.assignments[4]);
    }
    CHECK(part.assignments[0] != part.assignments[4]);
}

TEST_CASE("walktrap keeps a complete graph together") {
    UndirectedGraph g;
    const int n = 6;
    for (int i = 0; i < n; ++i) g.node_ids.push_back("N" + std::to_string(i));
    g.weights = Eigen::MatrixXd::Ones(n, n);
    g.weights.diagonal().setZero();
    auto part = walktrap(g);
    CHECK(part.n_communities == 1);
    CHECK(part.modularity == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("weakly bridged cliques split at high modularity") {
    auto g = clique_pair(5, 0.1);
    auto part = walktrap(g);
    CHECK(part.n_communities == 2);
    CHECK(part.modularity > 0.3);
    for (int i = 0; i < 5; ++i) {
        CHECK(part.assignments[static_cast<size_t>(i)] == part.assignments[0]);
        CHECK(part.assignments[static_cast<size_t>(5 + i)] == part.assignments[5]);
    }
}

TEST_CASE("walktrap is invariant to node relabeling") {
    auto g = clique_pair(4, 0.2);
    const int n = static_cast<int>(g.n_nodes());
    std::vector<int> perm(static_cast<size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    std::mt19937_64 rng(17);
    for (int i = n - 1; i > 0; --i)
        std::swap(perm[static_cast<size_t>(i)], perm[bounded_rand(rng, static_cast<uint64_t>(i + 1))]);

    UndirectedGraph h;
    h.node_ids.resize(static_cast<size_t>(n));
    h.weights = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        h.node_ids[static_cast<size_t>(perm[static_cast<size_t>(i)])] = g.node_ids[static_cast<size_t>(i)];
        for (int j = 0; j < n; ++j)
            h.weights(perm[static_cast<size_t>(i)], perm[static_cast<size_t>(j)]) = g.weights(i, j);
    }
    auto pg = walktrap(g);
    auto ph = walktrap(h);
    CHECK(pg.n_communities == ph.n_communities);
    std::vector<int> mapped(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i)
        mapped[static_cast<size_t>(i)] = ph.assignments[static_cast<size_t>(perm[static_cast<size_t>(i)])];
    CHECK(same_partition(pg.assignments, mapped));
}

TEST_CASE("isolated nodes remain singleton communities") {
    UndirectedGraph g;
    for (int i = 0; i < 5; ++i) g.node_ids.push_back("N" + std::to_string(i));
    g.weights = Eigen::MatrixXd::Zero(5, 5);
    g.weights(0, 1) = g.weights(1, 0) = 1.0;
    auto part = walktrap(g);
    CHECK(part.n_communities == 4);
    CHECK(part.assignments[0] == part.assignments[1]);
    CHECK(part.modularity >= 0.0);
}

TEST_CASE("degree decomposition splits by market class") {
    // all edges originate at advanced nodes (even ids)
    auto net = make_net(4, {{0, 1, 0.5}, {2, 1, 0.4}, {0, 3, 0.3}});
    auto shares = degree_decomposition(net, net.node_class);
    CHECK(shares.advanced_out == Catch::Approx(1.0));
    CHECK(shares.emerging_out == Catch::Approx(0.0));
    CHECK(shares.emerging_in == Catch::Approx(1.0));

    auto single = make_net(2, {{0, 1, 0.2}});
    auto s1 = degree_decomposition(single, single.node_class);
    CHECK(s1.advanced_out == Catch::Approx(1.0));
    CHECK(s1.emerging_in == Catch::Approx(1.0));

    // shares always sum to one per direction
    std::mt19937_64 rng(23);
    std::vector<std::tuple<int, int, double>> edges;
    for (int k = 0; k < 12; ++k) {
        const int s = static_cast<int>(bounded_rand(rng, 6));
        int t = static_cast<int>(bounded_rand(rng, 6));
        if (t == s) t = (t + 1) % 6;
        edges.emplace_back(s, t, 0.1);
    }
    auto rand_net = make_net(6, edges);
    auto sr = degree_decomposition(rand_net, rand_net.node_class);
    CHECK(sr.advanced_out + sr.emerging_out == Catch::Approx(1.0));
    CHECK(sr.advanced_in + sr.emerging_in == Catch::Approx(1.0));

    auto none = degree_decomposition(make_net(3, {}), std::vector<MarketClass>(3, MarketClass::advanced));
    CHECK(none.empty);
    CHECK(std::isnan(none.advanced_out));
}
