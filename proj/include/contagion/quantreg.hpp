#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "contagion/errors.hpp"

namespace contagion {

// Linear conditional-quantile fit. Residuals are y - Zb for the
// intercept-augmented design Z = [1, X].
struct QuantileFit {
    double tau = 0.5;
    Eigen::VectorXd coefficients;  // intercept first, then the p slopes
    Eigen::VectorXd residuals;
    double check_loss = 0.0;       // sum of rho_tau(residual)
    double abs_residual_sum = 0.0;
};

namespace quantreg_detail {

inline double check_loss(const Eigen::VectorXd& u, double tau) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < u.size(); ++i)
        total += u(i) * (tau - (u(i) < 0.0 ? 1.0 : 0.0));
    return total;
}

// Weighted least squares on row-scaled QR.
inline Eigen::VectorXd weighted_ls(const Eigen::MatrixXd& Z, const Eigen::VectorXd& y,
                                   const Eigen::VectorXd& w) {
    Eigen::VectorXd sw = w.array().sqrt();
    Eigen::MatrixXd Zw = sw.asDiagonal() * Z;
    Eigen::VectorXd yw = sw.asDiagonal() * y;
    return Zw.householderQr().solve(yw);
}

} // namespace quantreg_detail

// Minimize the check loss sum rho_tau(y - [1,X] b). Iteratively reweighted
// least squares with an annealed smoothing epsilon (1e-3 down to 1e-10 over
// at most 200 iterations), then a polish step that interpolates candidate
// active sets drawn from the smallest residuals and keeps the best basic
// solution found. Deterministic for fixed inputs.
inline QuantileFit qr_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double tau) {
    if (!(tau > 0.0 && tau < 1.0)) throw DomainError("tau must lie in (0,1)");
    const Eigen::Index n = y.size();
    const Eigen::Index q = X.cols() + 1;
    if (X.rows() != n) throw DomainError("design and response length mismatch");
    if (n <= q) throw InsufficientData("quantile regression needs n > p+1");

    Eigen::MatrixXd Z(n, q);
    Z.col(0).setOnes();
    if (X.cols() > 0) Z.rightCols(X.cols()) = X;

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Z);
    qr.setThreshold(1e-10);
    if (qr.rank() < q) throw SingularDesign("rank-deficient quantile design");

    using quantreg_detail::check_loss;

    Eigen::VectorXd b = qr.solve(y);  // OLS start
    Eigen::VectorXd best_b = b;
    double best_loss = check_loss(y - Z * b, tau);

    constexpr int kMaxIter = 200;
    constexpr int kAnnealIter = 150;  // epsilon reaches the floor here
    constexpr double kEpsStart = 1e-3;
    constexpr double kEpsFloor = 1e-10;
    const double decay = std::pow(kEpsFloor / kEpsStart, 1.0 / (kAnnealIter - 1));
    double eps = kEpsStart;
    for (int it = 0; it < kMaxIter; ++it) {
        const Eigen::VectorXd u = y - Z * b;
        Eigen::VectorXd w(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const double side = u(i) >= 0.0 ? tau : 1.0 - tau;
            w(i) = side / std::sqrt(u(i) * u(i) + eps * eps);
        }
        const Eigen::VectorXd b_next = quantreg_detail::weighted_ls(Z, y, w);
        const double loss = check_loss(y - Z * b_next, tau);
        if (loss < best_loss) {
            best_loss = loss;
            best_b = b_next;
        }
        const double step = (b_next - b).cwiseAbs().maxCoeff();
        b = b_next;
        if (step < 1e-13 && eps <= kEpsFloor) break;
        eps = std::max(eps * decay, kEpsFloor);
    }

    // Polish: a check-loss optimum sits at a basic solution interpolating q
    // observations. Take subsets of the smallest current residuals as
    // candidate active sets and keep exchanging while the loss improves.
    {
        const Eigen::Index m = std::min<Eigen::Index>(n, q + 3);
        std::vector<Eigen::Index> order(static_cast<size_t>(n));
        std::vector<Eigen::Index> subset(static_cast<size_t>(q));
        for (int round = 0; round < 60; ++round) {
            const Eigen::VectorXd u = y - Z * best_b;
            for (Eigen::Index i = 0; i < n; ++i) order[static_cast<size_t>(i)] = i;
            std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index c) {
                const double da = std::abs(u(a)), dc = std::abs(u(c));
                if (da != dc) return da < dc;
                return a < c;
            });
            bool improved = false;
            std::vector<bool> pick(static_cast<size_t>(m), false);
            std::fill(pick.begin(), pick.begin() + static_cast<size_t>(q), true);
            do {
                Eigen::Index k = 0;
                for (Eigen::Index i = 0; i < m; ++i)
                    if (pick[static_cast<size_t>(i)])
                        subset[static_cast<size_t>(k++)] = order[static_cast<size_t>(i)];
                Eigen::MatrixXd Zs(q, q);
                Eigen::VectorXd ys(q);
                for (Eigen::Index r = 0; r < q; ++r) {
                    Zs.row(r) = Z.row(subset[static_cast<size_t>(r)]);
                    ys(r) = y(subset[static_cast<size_t>(r)]);
                }
                Eigen::FullPivLU<Eigen::MatrixXd> lu(Zs);
                if (!lu.isInvertible()) continue;
                const Eigen::VectorXd cand = lu.solve(ys);
                const double loss = check_loss(y - Z * cand, tau);
                if (loss < best_loss - 1e-15 * (1.0 + std::abs(best_loss))) {
                    best_loss = loss;
                    best_b = cand;
                    improved = true;
                }
            } while (std::prev_permutation(pick.begin(), pick.end()));
            if (!improved) break;
        }
    }

    QuantileFit fit;
    fit.tau = tau;
    fit.coefficients = best_b;
    fit.residuals = y - Z * best_b;
    fit.check_loss = check_loss(fit.residuals, tau);
    fit.abs_residual_sum = fit.residuals.cwiseAbs().sum();
    return fit;
}

} // namespace contagion
