#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "contagion/errors.hpp"

namespace contagion {

using Series = std::vector<double>;

inline double nan_value() { return std::numeric_limits<double>::quiet_NaN(); }

inline double mean(const Series& x) {
    if (x.empty()) throw InsufficientData("mean of empty series");
    return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

// Sample standard deviation (n-1 denominator).
inline double stdev(const Series& x) {
    if (x.size() < 2) throw InsufficientData("stdev needs at least 2 observations");
    const double m = mean(x);
    double ss = 0.0;
    for (double v : x) ss += (v - m) * (v - m);
    return std::sqrt(ss / static_cast<double>(x.size() - 1));
}

// z-scores over the full series. A constant series has no scale and is
// rejected rather than silently inflated.
inline Series standardize(const Series& x) {
    if (x.size() < 2) throw InsufficientData("standardize needs at least 2 observations");
    const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
    if (*lo == *hi) throw DegenerateSeries("constant series cannot be standardized");
    const double m = mean(x);
    const double s = stdev(x);
    if (!(s > 0.0) || !std::isfinite(s)) throw DegenerateSeries("zero or non-finite sd");
    Series z(x.size());
    for (size_t i = 0; i < x.size(); ++i) z[i] = (x[i] - m) / s;
    return z;
}

// Linear-interpolation quantile between order statistics (the common
// "type 7" convention). q in [0,1].
inline double quantile_type7(Series values, double q) {
    if (values.empty()) throw InsufficientData("quantile of empty set");
    if (!(q >= 0.0 && q <= 1.0)) throw DomainError("quantile level outside [0,1]");
    std::sort(values.begin(), values.end());
    const double h = (static_cast<double>(values.size()) - 1.0) * q;
    const size_t lo = static_cast<size_t>(std::floor(h));
    if (lo + 1 >= values.size()) return values.back();
    const double frac = h - static_cast<double>(lo);
    return values[lo] + frac * (values[lo + 1] - values[lo]);
}

inline double median(const Series& values) { return quantile_type7(values, 0.5); }

// ---------------------------------------------------------------------------
// ISO-8601 calendar dates, kept as validated strings ("YYYY-MM-DD").
// Lexicographic order equals chronological order for this format.
// ---------------------------------------------------------------------------

inline bool is_leap_year(int y) {
    return (y % 4 == 0 && y % 100 != 0) || (y % 400 == 0);
}

inline bool is_valid_iso_date(const std::string& s) {
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') return false;
    for (size_t i : {0u, 1u, 2u, 3u, 5u, 6u, 8u, 9u})
        if (s[i] < '0' || s[i] > '9') return false;
    const int y = std::stoi(s.substr(0, 4));
    const int m = std::stoi(s.substr(5, 2));
    const int d = std::stoi(s.substr(8, 2));
    if (m < 1 || m > 12 || d < 1) return false;
    static const int dim[12] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    int max_d = dim[m - 1];
    if (m == 2 && is_leap_year(y)) max_d = 29;
    return d <= max_d;
}

inline std::string require_iso_date(const std::string& s, const std::string& context) {
    if (!is_valid_iso_date(s))
        throw ParseError("malformed date '" + s + "' in " + context);
    return s;
}

// Synthetic weekday calendar for generated panels.
inline std::vector<std::string> make_trading_dates(size_t count,
                                                   int start_year = 2010,
                                                   int start_month = 1,
                                                   int start_day = 4) {
    std::vector<std::string> out;
    out.reserve(count);
    int y = start_year, m = start_month, d = start_day;
    // Day-of-week via Sakamoto's method; 0 = Sunday.
    auto dow = [](int yy, int mm, int dd) {
        static const int t[] = {0, 3, 2, 5, 0, 3, 5, 1, 4, 6, 2, 4};
        if (mm < 3) yy -= 1;
        return (yy + yy / 4 - yy / 100 + yy / 400 + t[mm - 1] + dd) % 7;
    };
    auto days_in = [](int yy, int mm) {
        static const int dim[12] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
        if (mm == 2 && is_leap_year(yy)) return 29;
        return dim[mm - 1];
    };
    while (out.size() < count) {
        const int w = dow(y, m, d);
        if (w != 0 && w != 6) {
            char buf[32];
            std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", y, m, d);
            out.emplace_back(buf);
        }
        if (++d > days_in(y, m)) {
            d = 1;
            if (++m > 12) { m = 1; ++y; }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Deterministic RNG plumbing. Streams derived from (seed, index) are
// independent of evaluation order, so parallel fan-out stays reproducible.
// ---------------------------------------------------------------------------

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

inline uint64_t derive_stream_seed(uint64_t seed, uint64_t index) {
    return splitmix64(seed ^ splitmix64(index + 0x51ED2700A1B4CF6DULL));
}

// Unbiased bounded draw via rejection, independent of any library
// distribution implementation.
template <typename Rng>
uint64_t bounded_rand(Rng& rng, uint64_t n) {
    if (n == 0) throw DomainError("bounded_rand with n = 0");
    const uint64_t limit = std::numeric_limits<uint64_t>::max() -
                           (std::numeric_limits<uint64_t>::max() % n);
    uint64_t v = rng();
    while (v >= limit) v = rng();
    return v % n;
}

} // namespace contagion
