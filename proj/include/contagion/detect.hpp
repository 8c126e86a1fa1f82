#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "contagion/errors.hpp"
#include "contagion/ingest.hpp"
#include "contagion/parallel.hpp"
#include "contagion/quantreg.hpp"
#include "contagion/series.hpp"
#include "contagion/wavelet.hpp"

namespace contagion {

// Directional flow values for every ordered market pair at one
// (period, scale, quantile) cell. The diagonal and degenerate pairs are NaN
// and excluded from all statistics.
struct FlowTensor {
    std::string period;
    int scale = 0;
    double tau = 0.5;
    std::vector<std::string> market_ids;
    Eigen::MatrixXd values;  // N x N, row = source, col = target

    Eigen::Index n_markets() const { return values.rows(); }
};

struct NetworkEdge {
    int source = 0;
    int target = 0;
    double weight = 0.0;
};

struct ContagionNetwork {
    std::vector<std::string> node_ids;
    std::vector<MarketClass> node_class;
    std::vector<NetworkEdge> edges;
    double threshold = 0.0;

    size_t n_nodes() const { return node_ids.size(); }
};

struct DetectionSummary {
    double mean_wqte = 0.0;   // over retained edges; NaN when none
    double max_wqte = 0.0;    // over all ordered pairs; NaN when none finite
    double density_pct = 0.0;
    int n_edges = 0;
    std::string top_transmitter;  // empty when the network is empty
    std::string top_receiver;
};

// Log-ratio of absolute residual sums from the restricted quantile
// regression of the target's next value on its own lag versus the
// regression augmented with the source's lag. Positive values mean the
// source's history improves the conditional-quantile prediction.
inline double wqte_pair(const Series& d_source, const Series& d_target, double tau) {
    if (d_source.size() != d_target.size())
        throw DomainError("wqte_pair input length mismatch");
    const size_t T = d_target.size();
    if (T < 50) throw InsufficientData("wqte_pair needs T >= 50");

    const Eigen::Index n = static_cast<Eigen::Index>(T - 1);
    Eigen::VectorXd y(n);
    Eigen::MatrixXd x_own(n, 1), x_aug(n, 2);
    for (Eigen::Index t = 0; t < n; ++t) {
        y(t) = d_target[static_cast<size_t>(t) + 1];
        x_own(t, 0) = d_target[static_cast<size_t>(t)];
        x_aug(t, 0) = d_target[static_cast<size_t>(t)];
        x_aug(t, 1) = d_source[static_cast<size_t>(t)];
    }

    const QuantileFit restricted = qr_fit(x_own, y, tau);
    QuantileFit augmented = qr_fit(x_aug, y, tau);

    // The augmented model nests the restricted one: the restricted solution
    // with a zero source coefficient is feasible and leaves the residuals
    // unchanged. If the augmented solve landed on a worse point, take it.
    if (restricted.check_loss < augmented.check_loss) {
        Eigen::VectorXd embedded(3);
        embedded << restricted.coefficients(0), restricted.coefficients(1), 0.0;
        augmented.coefficients = embedded;
        augmented.residuals = restricted.residuals;
        augmented.check_loss = restricted.check_loss;
        augmented.abs_residual_sum = restricted.abs_residual_sum;
    }

    const double s1 = restricted.abs_residual_sum;
    const double s2 = augmented.abs_residual_sum;
    if (s1 <= 1e-300 || s2 <= 1e-300)
        throw DegenerateFit("perfect quantile fit leaves no residual mass");
    return std::log(s1) - std::log(s2);
}

// All N(N-1) ordered pairs at scale s and quantile tau. Pairs whose fit is
// degenerate or collinear are recorded as NaN and excluded from statistics.
inline FlowTensor flow_matrix(const std::vector<WaveletDecomposition>& decomps,
                              const std::vector<std::string>& market_ids,
                              int scale, double tau,
                              const std::string& period = "",
                              int threads = 1) {
    const size_t n = decomps.size();
    if (n != market_ids.size()) throw DomainError("decomposition / id count mismatch");
    if (n < 2) throw InsufficientData("flow matrix needs at least 2 markets");
    for (const auto& d : decomps) {
        if (scale < 1 || scale > d.levels) throw DomainError("scale outside decomposition levels");
        if (d.details[static_cast<size_t>(scale - 1)].size() !=
            decomps[0].details[static_cast<size_t>(scale - 1)].size())
            throw DomainError("decompositions do not share a common length");
    }

    FlowTensor out;
    out.period = period;
    out.scale = scale;
    out.tau = tau;
    out.market_ids = market_ids;
    out.values = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(n),
                                           static_cast<Eigen::Index>(n), nan_value());

    std::vector<std::pair<size_t, size_t>> pairs;
    pairs.reserve(n * (n - 1));
    for (size_t i = 0; i < n; ++i)
        for (size_t j = 0; j < n; ++j)
            if (i != j) pairs.emplace_back(i, j);

    parallel_for(pairs.size(), threads, [&](size_t k) {
        const auto [i, j] = pairs[k];
        const Series& src = decomps[i].details[static_cast<size_t>(scale - 1)];
        const Series& tgt = decomps[j].details[static_cast<size_t>(scale - 1)];
        try {
            out.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                wqte_pair(src, tgt, tau);
        } catch (const DegenerateFit&) {
            // left as NaN
        } catch (const SingularDesign&) {
            // identical or collinear detail series carry no incremental
            // information; left as NaN
        }
    });
    return out;
}

// Seventy-fifth percentile of the strictly positive off-diagonal flows of
// the baseline tensor. Computed once per run and reused for every period.
inline double baseline_threshold(const FlowTensor& baseline) {
    Series positives;
    const Eigen::Index n = baseline.n_markets();
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) {
            if (i == j) continue;
            const double v = baseline.values(i, j);
            if (std::isfinite(v) && v > 0.0) positives.push_back(v);
        }
    if (positives.size() < 4)
        throw InsufficientData("baseline threshold needs at least 4 positive flows");
    return quantile_type7(positives, 0.75);
}

inline ContagionNetwork threshold_network(const FlowTensor& flows, double threshold,
                                          const std::vector<MarketClass>& classes) {
    if (!std::isfinite(threshold)) throw DomainError("threshold must be finite");
    if (classes.size() != flows.market_ids.size())
        throw DomainError("class labels do not match flow tensor markets");
    ContagionNetwork net;
    net.node_ids = flows.market_ids;
    net.node_class = classes;
    net.threshold = threshold;
    const Eigen::Index n = flows.n_markets();
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) {
            if (i == j) continue;
            const double v = flows.values(i, j);
            if (std::isfinite(v) && v > threshold)
                net.edges.push_back({static_cast<int>(i), static_cast<int>(j), v});
        }
    return net;
}

enum class NodeRanking { out_degree, strength };

// Table-1 style summary for one (period, scale, tau) cell. Top transmitter
// and receiver rank by degree (strength available as an option); ties break
// lexicographically by market id.
inline DetectionSummary summarize(const ContagionNetwork& net, const FlowTensor& flows,
                                  NodeRanking ranking = NodeRanking::out_degree) {
    if (net.node_ids != flows.market_ids)
        throw DomainError("network and flow tensor nodes disagree");
    const size_t n = net.n_nodes();
    DetectionSummary s;
    s.n_edges = static_cast<int>(net.edges.size());
    s.density_pct = 100.0 * static_cast<double>(s.n_edges) /
                    (static_cast<double>(n) * static_cast<double>(n - 1));

    double max_v = nan_value();
    for (Eigen::Index i = 0; i < flows.n_markets(); ++i)
        for (Eigen::Index j = 0; j < flows.n_markets(); ++j) {
            if (i == j) continue;
            const double v = flows.values(i, j);
            if (std::isfinite(v) && (!std::isfinite(max_v) || v > max_v)) max_v = v;
        }
    s.max_wqte = max_v;

    if (net.edges.empty()) {
        s.mean_wqte = nan_value();
        return s;
    }
    double sum = 0.0;
    std::vector<double> out_score(n, 0.0), in_score(n, 0.0);
    for (const auto& e : net.edges) {
        sum += e.weight;
        const double unit = ranking == NodeRanking::out_degree ? 1.0 : e.weight;
        out_score[static_cast<size_t>(e.source)] += unit;
        in_score[static_cast<size_t>(e.target)] += unit;
    }
    s.mean_wqte = sum / static_cast<double>(net.edges.size());

    auto pick_top = [&](const std::vector<double>& score) {
        size_t best = 0;
        for (size_t i = 1; i < n; ++i) {
            if (score[i] > score[best] ||
                (score[i] == score[best] && net.node_ids[i] < net.node_ids[best]))
                best = i;
        }
        return net.node_ids[best];
    };
    s.top_transmitter = pick_top(out_score);
    s.top_receiver = pick_top(in_score);
    return s;
}

} // namespace contagion
