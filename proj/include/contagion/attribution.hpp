#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "contagion/errors.hpp"
#include "contagion/ingest.hpp"
#include "contagion/linalg.hpp"
#include "contagion/parallel.hpp"
#include "contagion/series.hpp"

namespace contagion {

constexpr int kNumInstruments = 18;
constexpr int kMaxInstrumentLag = 15;
// Instruments trim the max lag plus one extra row for the lagged outcome.
constexpr int kLinkTrim = kMaxInstrumentLag + 1;

inline const std::array<int, 3>& instrument_lags() {
    static const std::array<int, 3> lags = {5, 10, 15};
    return lags;
}

// Cross-channel interaction pairs entering at lag 5. Three pairs keep the
// instrument count at eighteen; the composition is configurable.
using InteractionSpec = std::vector<std::pair<int, int>>;

inline const InteractionSpec& default_interactions() {
    static const InteractionSpec spec = {
        {kTrade, kFinancial}, {kGeopolitical, kMonetary}, {kBehavioural, kFinancial}};
    return spec;
}

// Per-link estimation sample. All columns share T after the leading
// kLinkTrim rows are dropped for lag construction.
struct LinkSample {
    std::string period;
    std::pair<int, int> pair_index{0, 0};
    std::pair<std::string, std::string> pair_ids;
    Eigen::VectorXd comovement;      // C_t = r_i,t * r_j,t
    Eigen::VectorXd comovement_lag;  // C_{t-1}
    Eigen::MatrixXd channels;        // T x 5
    Eigen::VectorXd global_factor;   // T
    Eigen::MatrixXd instruments;     // T x 18

    Eigen::Index rows() const { return comovement.size(); }
};

enum class Method { IV2SLS, LASSOIV, LP1, LP5, LP22, RIGOBON };

inline std::string method_name(Method m) {
    switch (m) {
        case Method::IV2SLS: return "IV2SLS";
        case Method::LASSOIV: return "LASSOIV";
        case Method::LP1: return "LP1";
        case Method::LP5: return "LP5";
        case Method::LP22: return "LP22";
        case Method::RIGOBON: return "RIGOBON";
    }
    return "?";
}

struct StructuralEstimate {
    Method method = Method::IV2SLS;
    Eigen::VectorXd theta;           // 5 channel coefficients
    double alpha = 0.0;              // intercept (NaN when not applicable)
    double gamma_factor = 0.0;       // global-factor coefficient
    double gamma_lag = 0.0;          // lagged-comovement coefficient
    Eigen::MatrixXd cov;             // 5x5 coefficient covariance; empty if missing
    std::array<bool, 5> excluded{};  // Rigobon no-variance-shift flags
    std::vector<int> selected_instruments;  // LASSO route only
    bool lasso_fallback = false;

    bool has_cov() const { return cov.size() == 25; }
};

struct DiagnosticsRecord {
    std::array<double, 5> first_stage_F{};
    double sargan_stat = 0.0;
    double sargan_p = 1.0;
    bool sargan_available = false;
    double dwh_stat = 0.0;
    double dwh_p = 1.0;
    std::array<double, 5> robustness_value{};
};

// Minimum confounder strength (partial R-squared with both treatment and
// outcome) that would drive a coefficient with t-statistic `t_stat` to
// zero: rho* = (sqrt(f^4 + 4 f^2) - f^2) / 2 with f = |t| / sqrt(dof).
inline double robustness_value(double t_stat, double dof) {
    if (!(dof > 0.0)) throw DomainError("robustness value needs dof > 0");
    const double f = std::abs(t_stat) / std::sqrt(dof);
    const double f2 = f * f;
    return 0.5 * (std::sqrt(f2 * f2 + 4.0 * f2) - f2);
}

// ---------------------------------------------------------------------------
// Sample construction
// ---------------------------------------------------------------------------

// Lagged channel levels at lags 5/10/15 (channel-major) plus three
// cross-channel products of lag-5 values. Leading rows clamp the lag index
// at zero; callers drop those rows when building link samples.
inline Eigen::MatrixXd build_instruments(const Eigen::MatrixXd& channels,
                                         const InteractionSpec& interactions = default_interactions()) {
    if (channels.cols() != kNumChannels) throw DomainError("instrument builder expects 5 channels");
    const Eigen::Index T = channels.rows();
    if (T <= kMaxInstrumentLag) throw InsufficientData("need T > 15 for instrument lags");
    if (interactions.size() != 3) throw ConfigError("instrument spec needs exactly 3 interactions");

    Eigen::MatrixXd Z(T, kNumInstruments);
    Eigen::Index col = 0;
    for (int c = 0; c < kNumChannels; ++c)
        for (int lag : instrument_lags()) {
            for (Eigen::Index t = 0; t < T; ++t)
                Z(t, col) = channels(std::max<Eigen::Index>(0, t - lag), c);
            ++col;
        }
    for (const auto& [a, b] : interactions) {
        if (a < 0 || a >= kNumChannels || b < 0 || b >= kNumChannels)
            throw ConfigError("interaction channel index out of range");
        for (Eigen::Index t = 0; t < T; ++t) {
            const Eigen::Index s = std::max<Eigen::Index>(0, t - 5);
            Z(t, col) = channels(s, a) * channels(s, b);
        }
        ++col;
    }
    return Z;
}

inline LinkSample build_link_sample(const Series& returns_i, const Series& returns_j,
                                    const Eigen::MatrixXd& channels,
                                    const Eigen::VectorXd& factor,
                                    const std::string& period = "",
                                    const InteractionSpec& interactions = default_interactions()) {
    const size_t T_in = returns_i.size();
    if (returns_j.size() != T_in || static_cast<size_t>(channels.rows()) != T_in ||
        static_cast<size_t>(factor.size()) != T_in)
        throw DomainError("link sample inputs are not aligned");
    if (T_in <= static_cast<size_t>(kLinkTrim))
        throw InsufficientData("period too short for lag construction");
    const Eigen::Index T = static_cast<Eigen::Index>(T_in) - kLinkTrim;
    if (T < 60)
        throw InsufficientData("link sample has " + std::to_string(T) +
                               " rows after trimming, need 60");

    Eigen::VectorXd C(static_cast<Eigen::Index>(T_in));
    for (size_t t = 0; t < T_in; ++t)
        C(static_cast<Eigen::Index>(t)) = returns_i[t] * returns_j[t];
    const Eigen::MatrixXd Z_full = build_instruments(channels, interactions);

    LinkSample s;
    s.period = period;
    s.comovement = C.tail(T);
    s.comovement_lag = C.segment(kLinkTrim - 1, T);
    s.channels = channels.bottomRows(T);
    s.global_factor = factor.tail(T);
    s.instruments = Z_full.bottomRows(T);
    return s;
}

namespace attribution_detail {

// Exogenous controls W = [1, f_t, C_{t-1}].
inline Eigen::MatrixXd controls(const LinkSample& s) {
    Eigen::MatrixXd W(s.rows(), 3);
    W.col(0).setOnes();
    W.col(1) = s.global_factor;
    W.col(2) = s.comovement_lag;
    return W;
}

inline Eigen::MatrixXd select_columns(const Eigen::MatrixXd& M, const std::vector<int>& idx) {
    Eigen::MatrixXd out(M.rows(), static_cast<Eigen::Index>(idx.size()));
    for (size_t k = 0; k < idx.size(); ++k) out.col(static_cast<Eigen::Index>(k)) = M.col(idx[k]);
    return out;
}

} // namespace attribution_detail

// ---------------------------------------------------------------------------
// Two-stage least squares
// ---------------------------------------------------------------------------

// 2SLS of the comovement on the five channel composites (endogenous) with
// exogenous controls included in both stages, using the given excluded
// instrument columns. Heteroskedasticity-robust coefficient covariance.
inline StructuralEstimate fit_2sls_with(const LinkSample& s, const Eigen::MatrixXd& Z_excluded,
                                        Method method = Method::IV2SLS) {
    const Eigen::Index T = s.rows();
    const Eigen::MatrixXd W = attribution_detail::controls(s);
    if (Z_excluded.cols() < kNumChannels)
        throw IdentificationError("fewer instruments than endogenous channels");

    Eigen::MatrixXd X(T, kNumChannels + W.cols());
    X << s.channels, W;
    Eigen::MatrixXd Z(T, Z_excluded.cols() + W.cols());
    Z << Z_excluded, W;

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> zqr(Z);
    zqr.setThreshold(1e-10);
    if (zqr.rank() < Z.cols()) throw SingularDesign("instrument matrix is rank deficient");

    // First-stage projections via the thin Q factor.
    Eigen::MatrixXd Q = zqr.householderQ() * Eigen::MatrixXd::Identity(T, Z.cols());
    Eigen::MatrixXd X_hat = Q * (Q.transpose() * X);

    const OlsFit second = ols_full_rank(X_hat, s.comovement, "2SLS second stage");
    const Eigen::VectorXd beta = second.beta;
    const Eigen::VectorXd u = s.comovement - X * beta;  // structural residuals

    // HC0 sandwich on the projected design.
    Eigen::MatrixXd bread = (X_hat.transpose() * X_hat).inverse();
    Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(X.cols(), X.cols());
    for (Eigen::Index t = 0; t < T; ++t) {
        const Eigen::VectorXd row = X_hat.row(t);
        meat.noalias() += u(t) * u(t) * row * row.transpose();
    }
    Eigen::MatrixXd cov_full = bread * meat * bread;

    StructuralEstimate est;
    est.method = method;
    est.theta = beta.head(kNumChannels);
    est.alpha = beta(kNumChannels);
    est.gamma_factor = beta(kNumChannels + 1);
    est.gamma_lag = beta(kNumChannels + 2);
    est.cov = cov_full.topLeftCorner(kNumChannels, kNumChannels);
    return est;
}

// Partial F statistic of the excluded instruments in the first-stage
// regression of channel `channel_index` on instruments plus controls.
inline double first_stage_partial_F(const LinkSample& s, int channel_index,
                                    const Eigen::MatrixXd* Z_excluded = nullptr) {
    if (channel_index < 0 || channel_index >= kNumChannels)
        throw DomainError("channel index out of range");
    const Eigen::MatrixXd W = attribution_detail::controls(s);
    const Eigen::MatrixXd& Z = Z_excluded ? *Z_excluded : s.instruments;
    return partial_f_stat(W, Z, s.channels.col(channel_index));
}

// Sargan over-identification statistic: T times the R-squared of the
// structural residuals regressed on all instruments and controls,
// chi-square with (instruments - endogenous) degrees of freedom.
inline std::pair<double, double> sargan_test(const LinkSample& s, const StructuralEstimate& est,
                                             const Eigen::MatrixXd* Z_excluded = nullptr) {
    const Eigen::MatrixXd& Zex = Z_excluded ? *Z_excluded : s.instruments;
    const Eigen::Index k = Zex.cols();
    if (k == kNumChannels)
        throw NotOveridentified("instrument count equals endogenous count");
    if (k < kNumChannels)
        throw IdentificationError("fewer instruments than endogenous channels");

    const Eigen::VectorXd u = s.comovement -
                              (est.alpha + (s.channels * est.theta).array() +
                               est.gamma_factor * s.global_factor.array() +
                               est.gamma_lag * s.comovement_lag.array())
                                  .matrix();
    const Eigen::MatrixXd W = attribution_detail::controls(s);
    Eigen::MatrixXd Z(s.rows(), k + W.cols());
    Z << Zex, W;
    const OlsFit aux = ols(Z, u);
    const double tss = u.squaredNorm();
    const double r2 = tss > 0.0 ? 1.0 - aux.rss / tss : 0.0;
    const double stat = static_cast<double>(s.rows()) * std::max(0.0, r2);
    const double df = static_cast<double>(k - kNumChannels);
    return {stat, chi2_sf(stat, df)};
}

// Durbin-Wu-Hausman endogeneity test in augmented-regression form: the
// five first-stage residual series are added to the OLS of the comovement
// on channels and controls, and their joint F is reported.
inline std::pair<double, double> dwh_test(const LinkSample& s) {
    const Eigen::Index T = s.rows();
    const Eigen::MatrixXd W = attribution_detail::controls(s);
    Eigen::MatrixXd ZW(T, s.instruments.cols() + W.cols());
    ZW << s.instruments, W;

    Eigen::MatrixXd V(T, kNumChannels);
    for (int c = 0; c < kNumChannels; ++c)
        V.col(c) = ols_full_rank(ZW, s.channels.col(c), "DWH first stage").residuals;

    Eigen::MatrixXd base(T, kNumChannels + W.cols());
    base << s.channels, W;
    const double stat = partial_f_stat(base, V, s.comovement);
    const double df2 = static_cast<double>(T - base.cols() - V.cols());
    if (df2 <= 0) throw InsufficientData("DWH has no residual degrees of freedom");
    return {stat, f_sf(stat, static_cast<double>(kNumChannels), df2)};
}

// ---------------------------------------------------------------------------
// LASSO instrument selection (post-double-selection)
// ---------------------------------------------------------------------------

namespace attribution_detail {

// Coordinate-descent LASSO on standardized columns with centred response.
// Objective: sum (y - Zb)^2 + lambda * sum |b_j|. Returns indices with
// exactly nonzero coefficients.
inline std::vector<int> lasso_active_set(const Eigen::MatrixXd& Z_raw, const Eigen::VectorXd& y_raw,
                                         double lambda) {
    const Eigen::Index T = Z_raw.rows();
    const Eigen::Index p = Z_raw.cols();
    Eigen::MatrixXd Z(T, p);
    std::vector<bool> usable(static_cast<size_t>(p), true);
    for (Eigen::Index j = 0; j < p; ++j) {
        const double m = Z_raw.col(j).mean();
        const double sd = std::sqrt((Z_raw.col(j).array() - m).square().sum() /
                                    static_cast<double>(T));
        if (sd > 0.0) {
            Z.col(j) = (Z_raw.col(j).array() - m) / sd;
        } else {
            Z.col(j).setZero();
            usable[static_cast<size_t>(j)] = false;
        }
    }
    Eigen::VectorXd y = y_raw.array() - y_raw.mean();

    Eigen::VectorXd b = Eigen::VectorXd::Zero(p);
    Eigen::VectorXd resid = y;
    const double zz = static_cast<double>(T);  // each usable column has z'z = T
    for (int sweep = 0; sweep < 10000; ++sweep) {
        double max_change = 0.0;
        for (Eigen::Index j = 0; j < p; ++j) {
            if (!usable[static_cast<size_t>(j)]) continue;
            const double rho = Z.col(j).dot(resid) + zz * b(j);
            double bj = 0.0;
            const double thr = lambda / 2.0;
            if (rho > thr) bj = (rho - thr) / zz;
            else if (rho < -thr) bj = (rho + thr) / zz;
            if (bj != b(j)) {
                resid += Z.col(j) * (b(j) - bj);
                max_change = std::max(max_change, std::abs(bj - b(j)));
                b(j) = bj;
            }
        }
        if (max_change < 1e-10) break;
    }
    std::vector<int> active;
    for (Eigen::Index j = 0; j < p; ++j)
        if (b(j) != 0.0) active.push_back(static_cast<int>(j));
    return active;
}

// Plug-in penalty: 2.2 * sd(residual) * sqrt(T) * Phi^-1(1 - 0.05 / (2*18)),
// with the residual scale taken from the full OLS of the target on the
// instruments.
inline double plugin_lambda(const Eigen::MatrixXd& Z, const Eigen::VectorXd& y) {
    const Eigen::Index T = Z.rows();
    Eigen::MatrixXd X(T, Z.cols() + 1);
    X.col(0).setOnes();
    X.rightCols(Z.cols()) = Z;
    const OlsFit fit = ols(X, y);
    const double sigma = std::sqrt(fit.rss / static_cast<double>(T));
    const double z = normal_quantile(1.0 - 0.05 / (2.0 * kNumInstruments));
    return 2.2 * sigma * std::sqrt(static_cast<double>(T)) * z;
}

} // namespace attribution_detail

// LASSO selection of instruments for one target: channel_index in 0..4
// selects for that channel's first stage, -1 selects for the outcome.
// A non-finite lambda_override means the plug-in penalty.
inline std::vector<int> lasso_select(const LinkSample& s, int channel_index,
                                     double lambda_override = nan_value()) {
    if (channel_index < -1 || channel_index >= kNumChannels)
        throw DomainError("channel index out of range");
    const Eigen::VectorXd y =
        channel_index < 0 ? s.comovement : s.channels.col(channel_index);
    const double lambda = std::isfinite(lambda_override)
                              ? lambda_override
                              : attribution_detail::plugin_lambda(s.instruments, y);
    if (lambda < 0.0) throw DomainError("negative LASSO penalty");
    return attribution_detail::lasso_active_set(s.instruments, y, lambda);
}

struct LassoIvResult {
    StructuralEstimate estimate;
    std::vector<int> selected;  // union over outcome and channels
    bool fallback = false;      // full instrument set restored
};

// Post-double-selection: union the LASSO selections for the outcome and
// each endogenous channel, then re-run 2SLS on the selected instruments.
// An empty or under-identifying union falls back to all eighteen, flagged.
inline LassoIvResult fit_lasso_iv(const LinkSample& s) {
    std::set<int> sel;
    for (int target = -1; target < kNumChannels; ++target)
        for (int j : lasso_select(s, target)) sel.insert(j);

    LassoIvResult out;
    out.selected.assign(sel.begin(), sel.end());
    if (static_cast<int>(out.selected.size()) < kNumChannels) {
        out.fallback = true;
        out.selected.resize(kNumInstruments);
        for (int j = 0; j < kNumInstruments; ++j) out.selected[static_cast<size_t>(j)] = j;
    }
    const Eigen::MatrixXd Zsel = attribution_detail::select_columns(s.instruments, out.selected);
    out.estimate = fit_2sls_with(s, Zsel, Method::LASSOIV);
    out.estimate.selected_instruments = out.selected;
    out.estimate.lasso_fallback = out.fallback;
    return out;
}

// Primary 2SLS with the full instrument set plus its diagnostics.
inline std::pair<StructuralEstimate, DiagnosticsRecord> fit_2sls(const LinkSample& s) {
    StructuralEstimate est = fit_2sls_with(s, s.instruments, Method::IV2SLS);
    DiagnosticsRecord diag;
    for (int c = 0; c < kNumChannels; ++c)
        diag.first_stage_F[static_cast<size_t>(c)] = first_stage_partial_F(s, c);
    try {
        std::tie(diag.sargan_stat, diag.sargan_p) = sargan_test(s, est);
        diag.sargan_available = true;
    } catch (const NotOveridentified&) {
        diag.sargan_available = false;
    }
    std::tie(diag.dwh_stat, diag.dwh_p) = dwh_test(s);
    const double dof = static_cast<double>(s.rows() - (kNumChannels + 3));
    for (int c = 0; c < kNumChannels; ++c) {
        const double se = std::sqrt(est.cov(c, c));
        const double t = se > 0.0 ? est.theta(c) / se : 0.0;
        diag.robustness_value[static_cast<size_t>(c)] = robustness_value(t, dof);
    }
    return {est, diag};
}

// ---------------------------------------------------------------------------
// Local projections
// ---------------------------------------------------------------------------

// Horizon-h OLS of the future comovement on today's channels and controls,
// with Newey-West covariance at bandwidth h.
inline StructuralEstimate fit_local_projection(const LinkSample& s, int horizon) {
    if (horizon < 1) throw DomainError("local projection horizon must be >= 1");
    const Eigen::Index T = s.rows();
    if (T <= horizon + 20) throw InsufficientData("too few rows for local projection");
    const Eigen::Index n = T - horizon;

    Eigen::MatrixXd X(n, kNumChannels + 3);
    Eigen::VectorXd y(n);
    for (Eigen::Index t = 0; t < n; ++t) {
        y(t) = s.comovement(t + horizon);
        for (int c = 0; c < kNumChannels; ++c) X(t, c) = s.channels(t, c);
        X(t, kNumChannels) = 1.0;
        X(t, kNumChannels + 1) = s.global_factor(t);
        X(t, kNumChannels + 2) = s.comovement_lag(t);
    }
    const OlsFit fit = ols_full_rank(X, y, "local projection");

    // Newey-West with Bartlett weights, bandwidth = horizon.
    const Eigen::Index k = X.cols();
    Eigen::MatrixXd S = Eigen::MatrixXd::Zero(k, k);
    for (Eigen::Index t = 0; t < n; ++t) {
        const Eigen::VectorXd xt = X.row(t) * fit.residuals(t);
        S.noalias() += xt * xt.transpose();
    }
    for (int lag = 1; lag <= horizon; ++lag) {
        const double w = 1.0 - static_cast<double>(lag) / (static_cast<double>(horizon) + 1.0);
        Eigen::MatrixXd G = Eigen::MatrixXd::Zero(k, k);
        for (Eigen::Index t = lag; t < n; ++t) {
            const Eigen::VectorXd a = X.row(t) * fit.residuals(t);
            const Eigen::VectorXd b = X.row(t - lag) * fit.residuals(t - lag);
            G.noalias() += a * b.transpose();
        }
        S += w * (G + G.transpose());
    }
    const Eigen::MatrixXd XtX_inv = (X.transpose() * X).inverse();
    const Eigen::MatrixXd cov_full = XtX_inv * S * XtX_inv;

    StructuralEstimate est;
    est.method = horizon == 1 ? Method::LP1 : horizon == 5 ? Method::LP5 : Method::LP22;
    est.theta = fit.beta.head(kNumChannels);
    est.alpha = fit.beta(kNumChannels);
    est.gamma_factor = fit.beta(kNumChannels + 1);
    est.gamma_lag = fit.beta(kNumChannels + 2);
    est.cov = cov_full.topLeftCorner(kNumChannels, kNumChannels);
    return est;
}

// ---------------------------------------------------------------------------
// Heteroskedasticity-based identification
// ---------------------------------------------------------------------------

enum class Regime : int { L = 0, H = 1 };

// Rolling variance of the cross-market mean return over a trailing window
// (shorter at the start of the sample); high regime where the variance
// exceeds the within-period median, ties low.
inline std::vector<Regime> regime_partition(const ReturnPanel& panel, int window = 22) {
    const Eigen::Index T = panel.rows();
    if (T <= window) throw InsufficientData("period shorter than the regime window");
    const Eigen::VectorXd m = panel.returns.rowwise().mean();
    Series var(static_cast<size_t>(T), 0.0);
    for (Eigen::Index t = 0; t < T; ++t) {
        const Eigen::Index n = std::min<Eigen::Index>(t + 1, window);
        const Eigen::Index first = t + 1 - n;
        const auto win = m.segment(first, n);
        if (win.maxCoeff() == win.minCoeff()) continue;  // exactly flat window
        const double mu = win.mean();
        var[static_cast<size_t>(t)] =
            (win.array() - mu).square().sum() / static_cast<double>(n);
    }
    const double med = median(var);
    std::vector<Regime> out(static_cast<size_t>(T));
    for (size_t t = 0; t < out.size(); ++t)
        out[t] = var[t] > med ? Regime::H : Regime::L;
    return out;
}

// Cross-regime covariance-over-variance ratio per channel, on series
// demeaned within each regime. Channels without a variance shift get a
// zero coefficient and an exclusion flag.
inline StructuralEstimate fit_rigobon(const LinkSample& s, const std::vector<Regime>& regimes) {
    if (regimes.size() != static_cast<size_t>(s.rows()))
        throw DomainError("regime labels do not match sample rows");
    std::vector<Eigen::Index> hi, lo;
    for (size_t t = 0; t < regimes.size(); ++t)
        (regimes[t] == Regime::H ? hi : lo).push_back(static_cast<Eigen::Index>(t));
    if (hi.size() < 30 || lo.size() < 30)
        throw InsufficientData("each regime needs at least 30 rows");

    auto moments = [&](const std::vector<Eigen::Index>& idx, int channel) {
        double mc = 0.0, my = 0.0;
        for (Eigen::Index t : idx) {
            mc += s.channels(t, channel);
            my += s.comovement(t);
        }
        mc /= static_cast<double>(idx.size());
        my /= static_cast<double>(idx.size());
        double cov = 0.0, var = 0.0;
        for (Eigen::Index t : idx) {
            const double dc = s.channels(t, channel) - mc;
            cov += dc * (s.comovement(t) - my);
            var += dc * dc;
        }
        cov /= static_cast<double>(idx.size());
        var /= static_cast<double>(idx.size());
        return std::make_pair(cov, var);
    };

    StructuralEstimate est;
    est.method = Method::RIGOBON;
    est.theta = Eigen::VectorXd::Zero(kNumChannels);
    est.alpha = nan_value();
    est.gamma_factor = nan_value();
    est.gamma_lag = nan_value();
    for (int c = 0; c < kNumChannels; ++c) {
        const auto [cov_h, var_h] = moments(hi, c);
        const auto [cov_l, var_l] = moments(lo, c);
        const double dvar = var_h - var_l;
        if (std::abs(dvar) < 1e-12 * std::max(var_h, var_l)) {
            est.excluded[static_cast<size_t>(c)] = true;
            est.theta(c) = 0.0;
        } else {
            est.theta(c) = (cov_h - cov_l) / dvar;
        }
    }
    return est;
}

// ---------------------------------------------------------------------------
// Shares, aggregation, bootstrap, sensitivity
// ---------------------------------------------------------------------------

inline Eigen::VectorXd shares(const StructuralEstimate& est) {
    if (est.theta.size() != kNumChannels) throw DomainError("estimate has no 5-vector theta");
    const double total = est.theta.cwiseAbs().sum();
    if (!(total > 0.0)) throw UndefinedShares("all structural coefficients are zero");
    return est.theta.cwiseAbs() / total;
}

inline int dominant_channel(const Eigen::VectorXd& share_vec) {
    if (share_vec.size() != kNumChannels) throw DomainError("share vector is not length 5");
    Eigen::Index best = 0;
    share_vec.maxCoeff(&best);
    return static_cast<int>(best);
}

inline Eigen::VectorXd aggregate_period_shares(const std::vector<Eigen::VectorXd>& link_shares) {
    if (link_shares.empty()) throw InsufficientData("no link shares to aggregate");
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(kNumChannels);
    for (const auto& v : link_shares) {
        if (v.size() != kNumChannels) throw DomainError("share vector is not length 5");
        sum += v;
    }
    Eigen::VectorXd mean = sum / static_cast<double>(link_shares.size());
    const double total = mean.sum();
    if (total > 0.0) mean /= total;
    return mean;
}

struct BootstrapInterval {
    std::array<std::pair<double, double>, 5> ci{};  // (lo95, hi95) per channel
    bool degenerate = false;                        // fewer than two links
};

// Paired-link bootstrap of the period-mean shares: B resamples with
// replacement, 2.5/97.5 percentile interval per channel. Replication r
// draws from a stream derived from (seed, r), so the result is identical
// for any thread count.
inline BootstrapInterval bootstrap_shares(const std::vector<Eigen::VectorXd>& link_shares,
                                          int B, uint64_t seed, int threads = 1) {
    if (B < 1) throw DomainError("bootstrap needs B >= 1");
    BootstrapInterval out;
    if (link_shares.size() < 2) {
        const Eigen::VectorXd point = aggregate_period_shares(link_shares);
        for (int c = 0; c < kNumChannels; ++c)
            out.ci[static_cast<size_t>(c)] = {point(c), point(c)};
        out.degenerate = true;
        return out;
    }
    const size_t n = link_shares.size();
    Eigen::MatrixXd draws(B, kNumChannels);
    parallel_for(static_cast<size_t>(B), threads, [&](size_t r) {
        std::mt19937_64 rng(derive_stream_seed(seed, r));
        Eigen::VectorXd sum = Eigen::VectorXd::Zero(kNumChannels);
        for (size_t k = 0; k < n; ++k) sum += link_shares[bounded_rand(rng, n)];
        Eigen::VectorXd mean = sum / static_cast<double>(n);
        const double total = mean.sum();
        if (total > 0.0) mean /= total;
        draws.row(static_cast<Eigen::Index>(r)) = mean;
    });
    for (int c = 0; c < kNumChannels; ++c) {
        Series col(draws.col(c).data(), draws.col(c).data() + B);
        out.ci[static_cast<size_t>(c)] = {quantile_type7(col, 0.025), quantile_type7(col, 0.975)};
    }
    return out;
}

} // namespace contagion
