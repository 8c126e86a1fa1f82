#pragma once

#include <Eigen/Dense>
#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/distributions/normal.hpp>
#include <cmath>

#include "contagion/errors.hpp"

namespace contagion {

struct OlsFit {
    Eigen::VectorXd beta;
    Eigen::VectorXd residuals;
    Eigen::VectorXd fitted;
    double rss = 0.0;
    Eigen::Index rank = 0;
};

inline OlsFit ols(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
    if (X.rows() != y.size()) throw DomainError("OLS design/response mismatch");
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    qr.setThreshold(1e-10);
    OlsFit fit;
    fit.rank = qr.rank();
    fit.beta = qr.solve(y);
    fit.fitted = X * fit.beta;
    fit.residuals = y - fit.fitted;
    fit.rss = fit.residuals.squaredNorm();
    return fit;
}

inline OlsFit ols_full_rank(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                            const std::string& what) {
    OlsFit fit = ols(X, y);
    if (fit.rank < X.cols()) throw SingularDesign("rank-deficient design in " + what);
    return fit;
}

// Upper-tail probabilities.
inline double chi2_sf(double x, double df) {
    if (df <= 0.0) throw DomainError("chi-square df must be positive");
    if (!(x > 0.0)) return 1.0;
    boost::math::chi_squared dist(df);
    return boost::math::cdf(boost::math::complement(dist, x));
}

inline double f_sf(double x, double df1, double df2) {
    if (df1 <= 0.0 || df2 <= 0.0) throw DomainError("F df must be positive");
    if (!(x > 0.0)) return 1.0;
    boost::math::fisher_f dist(df1, df2);
    return boost::math::cdf(boost::math::complement(dist, x));
}

inline double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw DomainError("quantile level outside (0,1)");
    boost::math::normal dist;
    return boost::math::quantile(dist, p);
}

// F statistics hit this cap instead of overflowing when the unrestricted
// residual is numerically zero.
constexpr double kFStatCeiling = 1e15;

// Partial F test of the extra columns in [X_restricted, X_extra].
inline double partial_f_stat(const Eigen::MatrixXd& X_restricted,
                             const Eigen::MatrixXd& X_extra,
                             const Eigen::VectorXd& y) {
    const Eigen::Index n = y.size();
    const Eigen::Index k = X_extra.cols();
    Eigen::MatrixXd X_full(n, X_restricted.cols() + k);
    X_full << X_restricted, X_extra;
    const OlsFit restricted = ols(X_restricted, y);
    const OlsFit full = ols(X_full, y);
    const Eigen::Index df2 = n - X_full.cols();
    if (df2 <= 0) throw InsufficientData("partial F has no residual degrees of freedom");
    const double drop = restricted.rss - full.rss;
    if (full.rss <= 1e-12 * std::max(1.0, restricted.rss))
        return drop <= 1e-12 * std::max(1.0, restricted.rss) ? 0.0 : kFStatCeiling;
    const double stat = (drop / static_cast<double>(k)) /
                        (full.rss / static_cast<double>(df2));
    return std::min(std::max(stat, 0.0), kFStatCeiling);
}

} // namespace contagion
