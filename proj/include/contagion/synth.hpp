#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "contagion/csv.hpp"
#include "contagion/errors.hpp"
#include "contagion/ingest.hpp"
#include "contagion/series.hpp"

namespace contagion {

// Directed lead-lag coupling injected into the return panel: the target
// market loads on the source's trailing-window mean over the dyadic
// horizon of `scale`, which is what the scale-matched flow tensor sees.
struct SynthCoupling {
    int source = 0;
    int target = 1;
    double strength = 0.0;
    int scale = 1;
};

struct SynthConfig {
    int n_markets = 6;
    int T = 3000;
    uint64_t seed = 1;
    std::array<double, 5> channel_ar = {0.8, 0.8, 0.8, 0.8, 0.8};
    Eigen::MatrixXd loadings;  // n_markets x 5; empty derives sqrt-weight loadings
    std::array<double, 5> comovement_weights = {0.1, 0.8, 0.05, 0.025, 0.025};
    std::vector<SynthCoupling> coupling;
    double noise_sd = 1.0;
    bool heavy_tails = false;   // Student-t(5) idiosyncratic noise
    bool two_regime = false;    // channel innovation variance doubles mid-sample
};

struct SynthGroundTruth {
    std::array<double, 5> comovement_weights{};
    int dominant_channel = 0;
    std::vector<SynthCoupling> coupling;
};

struct SynthData {
    ReturnPanel returns;
    ChannelPanel channels;      // standardized, ready for stage 2
    Eigen::MatrixXd raw_channels;  // T x 5 pre-standardization AR paths
    SynthGroundTruth truth;
};

namespace synth_detail {

// Standard normal via Box-Muller on raw 64-bit draws; keeps generated
// panels independent of any library distribution implementation.
class NormalSource {
public:
    explicit NormalSource(uint64_t seed) : rng_(seed) {}

    double operator()() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        do { u1 = uniform(); } while (u1 <= 1e-300);
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * M_PI * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    double uniform() {
        return (static_cast<double>(rng_() >> 11)) * (1.0 / 9007199254740992.0);
    }

    // Centred chi-square(2) innovation, unit variance, skewness 2. The
    // third moment is what lets a linear regression of return products on
    // channel levels recover the configured weights.
    double skewed() {
        double s = 0.0;
        for (int i = 0; i < 2; ++i) {
            const double z = (*this)();
            s += z * z;
        }
        return (s - 2.0) / 2.0;
    }

    double student_t5() {
        double denom = 0.0;
        for (int i = 0; i < 5; ++i) {
            const double z = (*this)();
            denom += z * z;
        }
        const double t = (*this)() / std::sqrt(denom / 5.0);
        return t / std::sqrt(5.0 / 3.0);  // unit variance
    }

private:
    std::mt19937_64 rng_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

} // namespace synth_detail

// Simulate five AR(1) channel processes with skewed innovations and a
// return panel loading on them. With the default square-root-of-weight
// loading structure, the linear projection of any pairwise return product
// onto the channel levels has population coefficients proportional to
// `comovement_weights`.
inline SynthData gen_channel_dgp(const SynthConfig& cfg) {
    if (cfg.n_markets < 2) throw DomainError("need at least 2 markets");
    if (cfg.T < 100) throw DomainError("need T >= 100");
    for (double phi : cfg.channel_ar)
        if (!(phi > -1.0 && phi < 1.0)) throw DomainError("AR coefficient outside (-1,1)");

    synth_detail::NormalSource noise(derive_stream_seed(cfg.seed, 0));
    const Eigen::Index T = cfg.T;
    const int n = cfg.n_markets;

    // Channel AR(1) paths, stationary unit variance in the first regime.
    Eigen::MatrixXd raw(T, kNumChannels);
    for (int c = 0; c < kNumChannels; ++c) {
        const double phi = cfg.channel_ar[static_cast<size_t>(c)];
        const double innov_sd = std::sqrt(1.0 - phi * phi);
        double x = noise.skewed();
        for (Eigen::Index t = 0; t < T; ++t) {
            double scale = innov_sd;
            if (cfg.two_regime && t >= T / 2) scale *= std::sqrt(2.0);
            x = phi * x + scale * noise.skewed();
            raw(t, c) = x;
        }
    }

    Eigen::MatrixXd loadings = cfg.loadings;
    if (loadings.size() == 0) {
        loadings.resize(n, kNumChannels);
        double wsum = 0.0;
        for (double w : cfg.comovement_weights) {
            if (w < 0.0) throw DomainError("comovement weights must be nonnegative");
            wsum += w;
        }
        if (!(wsum > 0.0)) throw DomainError("comovement weights are all zero");
        for (int i = 0; i < n; ++i)
            for (int c = 0; c < kNumChannels; ++c)
                loadings(i, c) = std::sqrt(cfg.comovement_weights[static_cast<size_t>(c)] / wsum);
    }
    if (loadings.rows() != n || loadings.cols() != kNumChannels)
        throw DomainError("loadings must be n_markets x 5");

    Eigen::MatrixXd R(T, n);
    for (Eigen::Index t = 0; t < T; ++t)
        for (int i = 0; i < n; ++i) {
            const double common = loadings.row(i).dot(raw.row(t));
            const double eps = cfg.heavy_tails ? noise.student_t5() : noise();
            R(t, i) = 0.01 * (common + cfg.noise_sd * eps);
        }

    // Directed lead-lag couplings on the matching dyadic horizon.
    for (const auto& cp : cfg.coupling) {
        if (cp.source < 0 || cp.source >= n || cp.target < 0 || cp.target >= n ||
            cp.source == cp.target)
            throw DomainError("coupling indices out of range");
        if (cp.scale < 1 || cp.scale > 6) throw DomainError("coupling scale outside 1..6");
        const Eigen::Index lag_lo = 1 << (cp.scale - 1);
        const Eigen::Index lag_hi = (1 << cp.scale) - 1;
        Eigen::VectorXd add = Eigen::VectorXd::Zero(T);
        for (Eigen::Index t = lag_hi; t < T; ++t) {
            double s = 0.0;
            for (Eigen::Index l = lag_lo; l <= lag_hi; ++l) s += R(t - l, cp.source);
            add(t) = cp.strength * s / static_cast<double>(lag_hi - lag_lo + 1);
        }
        R.col(cp.target) += add;
    }

    SynthData out;
    out.raw_channels = raw;
    out.truth.comovement_weights = cfg.comovement_weights;
    out.truth.coupling = cfg.coupling;
    out.truth.dominant_channel = 0;
    for (int c = 1; c < kNumChannels; ++c)
        if (cfg.comovement_weights[static_cast<size_t>(c)] >
            cfg.comovement_weights[static_cast<size_t>(out.truth.dominant_channel)])
            out.truth.dominant_channel = c;

    out.returns.dates = make_trading_dates(static_cast<size_t>(T));
    out.returns.market_ids.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) out.returns.market_ids.push_back("M" + std::to_string(i));
    out.returns.market_class.resize(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i)
        out.returns.market_class[static_cast<size_t>(i)] =
            i < n / 2 ? MarketClass::advanced : MarketClass::emerging;
    out.returns.returns = R;

    out.channels.dates = out.returns.dates;
    out.channels.channels.resize(T, kNumChannels);
    for (int c = 0; c < kNumChannels; ++c) {
        Series col(raw.col(c).data(), raw.col(c).data() + T);
        const Series z = standardize(col);
        for (Eigen::Index t = 0; t < T; ++t) out.channels.channels(t, c) = z[static_cast<size_t>(t)];
    }
    // Behavioural is residualized on the financial composite (full-sample
    // window here), mirroring the composite builder's construction.
    {
        const Eigen::VectorXd fin = out.channels.channels.col(kFinancial);
        const Eigen::VectorXd beh = out.channels.channels.col(kBehavioural);
        const double mf = fin.mean(), mb = beh.mean();
        const double vf = (fin.array() - mf).square().sum();
        const double slope = vf > 0.0 ? ((fin.array() - mf) * (beh.array() - mb)).sum() / vf : 0.0;
        const double intercept = mb - slope * mf;
        Eigen::VectorXd resid = beh - (intercept + slope * fin.array()).matrix();
        Series rs(resid.data(), resid.data() + T);
        out.channels.channels.col(kBehavioural) = resid / stdev(rs);
    }
    out.channels.global_factor = R.rowwise().mean();
    return out;
}

// Write a generated panel in the exact ingest formats: a wide price CSV, a
// ten-column raw channel CSV the composite builder can consume, and the
// market-class sidecar. Prices compound from 100 so that log-differencing
// reproduces the generated returns.
struct FixturePaths {
    std::string prices;
    std::string channels;
    std::string classes;
};

inline FixturePaths write_fixture_csvs(const SynthData& data, const std::string& dir) {
    const Eigen::Index T = data.returns.rows();
    const int n = static_cast<int>(data.returns.n_markets());
    const std::vector<std::string> all_dates =
        make_trading_dates(static_cast<size_t>(T) + 1, 2009, 12, 28);

    FixturePaths paths;
    paths.prices = dir + "/prices.csv";
    paths.channels = dir + "/channels.csv";
    paths.classes = dir + "/classes.csv";

    {
        CsvWriter w(paths.prices);
        std::vector<std::string> header = {"date"};
        for (const auto& id : data.returns.market_ids) header.push_back(id);
        w.row(header);
        Eigen::VectorXd price = Eigen::VectorXd::Constant(n, 100.0);
        for (Eigen::Index t = 0; t <= T; ++t) {
            if (t > 0)
                for (int i = 0; i < n; ++i) price(i) *= std::exp(data.returns.returns(t - 1, i));
            std::vector<std::string> row = {all_dates[static_cast<size_t>(t)]};
            for (int i = 0; i < n; ++i) row.push_back(format_double(price(i)));
            w.row(row);
        }
    }
    {
        CsvWriter w(paths.channels);
        std::vector<std::string> header = {"date"};
        for (const auto& c : channel_source_columns()) header.push_back(c);
        w.row(header);
        double trade_level = 0.0, ffr_level = 0.0;
        for (Eigen::Index t = 0; t < T; ++t) {
            trade_level += 0.01 * data.raw_channels(t, kTrade);
            ffr_level += 0.01 * data.raw_channels(t, kMonetary);
            const double fin = data.raw_channels(t, kFinancial);
            const double geo = data.raw_channels(t, kGeopolitical);
            const double beh = data.raw_channels(t, kBehavioural);
            const double mon = data.raw_channels(t, kMonetary);
            w.row({all_dates[static_cast<size_t>(t) + 1],
                   format_double(fin), format_double(fin), format_double(fin),
                   format_double(std::exp(trade_level)),
                   format_double(geo), format_double(geo),
                   format_double(beh),
                   format_double(ffr_level), format_double(mon), format_double(mon)});
        }
    }
    {
        CsvWriter w(paths.classes);
        w.row({"market_id", "class"});
        for (int i = 0; i < n; ++i)
            w.row({data.returns.market_ids[static_cast<size_t>(i)],
                   market_class_name(data.returns.market_class[static_cast<size_t>(i)])});
    }
    return paths;
}

// Lag-one directed pair: y[t+1] = b * x[t] + noise with x an AR(1) path.
// The true information flow runs from x to y.
inline std::pair<Series, Series> gen_directional_pair(double strength, int T, uint64_t seed) {
    if (T < 500) throw DomainError("directional pair needs T >= 500");
    synth_detail::NormalSource noise(derive_stream_seed(seed, 1));
    const double phi = 0.5;
    const double innov_sd = std::sqrt(1.0 - phi * phi);
    Series x(static_cast<size_t>(T)), y(static_cast<size_t>(T));
    double xv = noise();
    y[0] = 0.5 * noise();
    for (int t = 0; t < T; ++t) {
        xv = phi * xv + innov_sd * noise();
        x[static_cast<size_t>(t)] = xv;
        if (t + 1 < T)
            y[static_cast<size_t>(t + 1)] = strength * xv + 0.5 * noise();
    }
    return {x, y};
}

} // namespace contagion
