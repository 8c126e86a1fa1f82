#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "contagion/errors.hpp"
#include "contagion/ingest.hpp"
#include "contagion/parallel.hpp"
#include "contagion/series.hpp"

namespace contagion {

// Orthonormal scaling filters, published coefficient values. The wavelet
// filter is derived by the quadrature-mirror relation h_l = (-1)^l g_{L-1-l}.
struct WaveletFilter {
    std::string id;
    std::vector<double> scaling;  // g, unit energy, sums to sqrt(2)

    std::vector<double> wavelet() const {
        const size_t L = scaling.size();
        std::vector<double> h(L);
        for (size_t l = 0; l < L; ++l)
            h[l] = (l % 2 == 0 ? 1.0 : -1.0) * scaling[L - 1 - l];
        return h;
    }
};

inline const WaveletFilter& wavelet_filter(const std::string& id = "LA8") {
    static const std::vector<WaveletFilter> registry = {
        {"LA8",
         {-0.07576571478927333, -0.02963552764599851, 0.49761866763201545,
          0.8037387518059161, 0.29785779560527736, -0.09921954357684722,
          -0.012603967262037833, 0.0322231006040427}},
        {"D4",
         {0.48296291314469025, 0.8365163037378079, 0.22414386804185735,
          -0.12940952255092145}},
        {"HAAR", {0.7071067811865476, 0.7071067811865476}},
    };
    for (const auto& f : registry)
        if (f.id == id) return f;
    throw ConfigError("unknown wavelet filter '" + id + "'");
}

// Per-scale additive components of one series: the input equals the sum of
// the six details plus the smooth, element by element.
struct WaveletDecomposition {
    std::vector<Series> details;  // levels entries, each length T
    Series smooth;                // length T
    std::string filter_id = "LA8";
    int levels = 6;
};

// Raw transform coefficients, exposed for energy accounting.
struct ModwtCoefficients {
    std::vector<Series> wavelet;  // W_1..W_J
    Series scaling;               // V_J
};

namespace wavelet_detail {

inline void check_input(const Series& x, int levels) {
    if (levels < 1) throw DomainError("levels must be >= 1");
    const size_t need = static_cast<size_t>(1) << levels;
    if (x.size() < need)
        throw InsufficientData("series length " + std::to_string(x.size()) +
                               " below 2^levels = " + std::to_string(need));
    for (double v : x)
        if (!std::isfinite(v)) throw DomainError("non-finite value in wavelet input");
}

// One circular filtering step at level j (stride 2^{j-1}).
inline void analysis_step(const Series& v_in, size_t stride,
                          const std::vector<double>& ht, const std::vector<double>& gt,
                          Series& w_out, Series& v_out) {
    const size_t T = v_in.size();
    const size_t L = ht.size();
    for (size_t t = 0; t < T; ++t) {
        double w = 0.0, v = 0.0;
        size_t idx = t;
        for (size_t l = 0; l < L; ++l) {
            w += ht[l] * v_in[idx];
            v += gt[l] * v_in[idx];
            idx = (idx >= stride) ? idx - stride : idx + T - stride;
        }
        w_out[t] = w;
        v_out[t] = v;
    }
}

inline void synthesis_step(const Series& w_in, const Series& v_in, size_t stride,
                           const std::vector<double>& ht, const std::vector<double>& gt,
                           Series& v_out) {
    const size_t T = v_out.size();
    const size_t L = ht.size();
    for (size_t t = 0; t < T; ++t) {
        double v = 0.0;
        size_t idx = t;
        for (size_t l = 0; l < L; ++l) {
            v += ht[l] * w_in[idx] + gt[l] * v_in[idx];
            idx += stride;
            if (idx >= T) idx -= T;
        }
        v_out[t] = v;
    }
}

} // namespace wavelet_detail

// Maximal-overlap transform with circular boundary handling.
inline ModwtCoefficients modwt_coefficients(const Series& x, int levels,
                                            const std::string& filter_id = "LA8") {
    wavelet_detail::check_input(x, levels);
    const WaveletFilter& f = wavelet_filter(filter_id);
    const size_t L = f.scaling.size();
    std::vector<double> gt(L), ht(L);
    const std::vector<double> h = f.wavelet();
    const double root2 = std::sqrt(2.0);
    for (size_t l = 0; l < L; ++l) {
        gt[l] = f.scaling[l] / root2;
        ht[l] = h[l] / root2;
    }

    ModwtCoefficients out;
    out.wavelet.resize(static_cast<size_t>(levels));
    Series v = x;
    Series v_next(x.size());
    for (int j = 1; j <= levels; ++j) {
        out.wavelet[static_cast<size_t>(j - 1)].resize(x.size());
        const size_t stride = static_cast<size_t>(1) << (j - 1);
        wavelet_detail::analysis_step(v, stride, ht, gt,
                                      out.wavelet[static_cast<size_t>(j - 1)], v_next);
        v.swap(v_next);
    }
    out.scaling = std::move(v);
    return out;
}

// Multiresolution analysis: detail s is the inverse transform of W_s alone,
// the smooth is the inverse of V_J alone. Scale s captures fluctuations on
// the dyadic horizon [2^s, 2^{s+1}] observations.
inline WaveletDecomposition modwt(const Series& x, int levels = 6,
                                  const std::string& filter_id = "LA8") {
    ModwtCoefficients coeffs = modwt_coefficients(x, levels, filter_id);
    const WaveletFilter& f = wavelet_filter(filter_id);
    const size_t L = f.scaling.size();
    std::vector<double> gt(L), ht(L);
    const std::vector<double> h = f.wavelet();
    const double root2 = std::sqrt(2.0);
    for (size_t l = 0; l < L; ++l) {
        gt[l] = f.scaling[l] / root2;
        ht[l] = h[l] / root2;
    }
    const size_t T = x.size();
    const Series zero(T, 0.0);

    auto cascade_down = [&](Series top_w, Series top_v, int from_level) {
        Series next(T);
        for (int j = from_level; j >= 1; --j) {
            const size_t stride = static_cast<size_t>(1) << (j - 1);
            wavelet_detail::synthesis_step(top_w, top_v, stride, ht, gt, next);
            top_v.swap(next);
            if (j > 1) top_w = zero;
        }
        return top_v;
    };

    WaveletDecomposition out;
    out.filter_id = filter_id;
    out.levels = levels;
    out.details.resize(static_cast<size_t>(levels));
    for (int j = 1; j <= levels; ++j)
        out.details[static_cast<size_t>(j - 1)] =
            cascade_down(coeffs.wavelet[static_cast<size_t>(j - 1)], zero, j);
    out.smooth = cascade_down(zero, coeffs.scaling, levels);
    return out;
}

// One decomposition per market, in panel column order.
inline std::vector<WaveletDecomposition> modwt_panel(const ReturnPanel& panel,
                                                     int levels = 6,
                                                     const std::string& filter_id = "LA8",
                                                     int threads = 1) {
    const size_t n = static_cast<size_t>(panel.n_markets());
    std::vector<WaveletDecomposition> out(n);
    parallel_for(n, threads, [&](size_t i) {
        const auto col = panel.returns.col(static_cast<Eigen::Index>(i));
        Series x(col.data(), col.data() + col.size());
        out[i] = modwt(x, levels, filter_id);
    });
    return out;
}

} // namespace contagion
