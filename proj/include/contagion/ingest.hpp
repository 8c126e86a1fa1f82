#pragma once

#include <Eigen/Dense>
#include <array>
#include <istream>
#include <map>
#include <string>
#include <vector>

#include "contagion/csv.hpp"
#include "contagion/errors.hpp"
#include "contagion/series.hpp"

namespace contagion {

enum class MarketClass { advanced, emerging };

inline MarketClass parse_market_class(const std::string& s) {
    if (s == "advanced") return MarketClass::advanced;
    if (s == "emerging") return MarketClass::emerging;
    throw ParseError("unknown market class '" + s + "' (expected advanced|emerging)");
}

inline std::string market_class_name(MarketClass c) {
    return c == MarketClass::advanced ? "advanced" : "emerging";
}

// Fixed channel order used everywhere downstream.
enum Channel : int {
    kTrade = 0,
    kFinancial = 1,
    kGeopolitical = 2,
    kBehavioural = 3,
    kMonetary = 4,
};
constexpr int kNumChannels = 5;

inline const std::array<std::string, kNumChannels>& channel_names() {
    static const std::array<std::string, kNumChannels> names = {
        "Trade", "Financial", "Geopolitical", "Behavioural", "Monetary"};
    return names;
}

struct PricePanel {
    std::vector<std::string> dates;       // strictly increasing ISO dates
    std::vector<std::string> market_ids;  // N labels
    std::vector<MarketClass> market_class;
    Eigen::MatrixXd prices;               // rows x N, all > 0

    Eigen::Index rows() const { return prices.rows(); }
    Eigen::Index n_markets() const { return prices.cols(); }
};

struct ReturnPanel {
    std::vector<std::string> dates;       // T dates (one fewer than prices)
    std::vector<std::string> market_ids;
    std::vector<MarketClass> market_class;
    Eigen::MatrixXd returns;              // T x N log-returns

    Eigen::Index rows() const { return returns.rows(); }
    Eigen::Index n_markets() const { return returns.cols(); }
};

struct SubPeriod {
    std::string name;
    std::string start;  // inclusive
    std::string end;    // inclusive
};

// Raw source columns expected in the channel CSV, in header order.
inline const std::vector<std::string>& channel_source_columns() {
    static const std::vector<std::string> cols = {
        "VIX", "HYOAS", "STLFSI", "DTWEXBGS", "GPR",
        "GEOEVENT", "UMCSENT", "FFR", "T10Y3M", "QE"};
    return cols;
}

struct ChannelSourceTable {
    std::vector<std::string> dates;
    Eigen::MatrixXd values;  // rows x 10, channel_source_columns order
};

struct ChannelPanel {
    std::vector<std::string> dates;
    Eigen::MatrixXd channels;       // T x 5, fixed Channel order, standardized
    Eigen::VectorXd global_factor;  // T, filled by the caller from returns
};

// ---------------------------------------------------------------------------
// Loaders
// ---------------------------------------------------------------------------

namespace detail {

inline void check_schedule(const std::vector<SubPeriod>& schedule) {
    for (const auto& p : schedule) {
        require_iso_date(p.start, "sub-period " + p.name);
        require_iso_date(p.end, "sub-period " + p.name);
        if (!(p.start < p.end))
            throw DomainError("sub-period " + p.name + " has start >= end");
    }
    for (size_t a = 0; a < schedule.size(); ++a)
        for (size_t b = a + 1; b < schedule.size(); ++b) {
            const auto& x = schedule[a];
            const auto& y = schedule[b];
            const bool disjoint = x.end < y.start || y.end < x.start;
            if (!disjoint)
                throw DomainError("sub-periods " + x.name + " and " + y.name + " overlap");
        }
}

// Forward-fill runs of at most `max_gap` missing cells per column; any row
// still missing a cell afterwards is dropped for all markets.
inline void apply_alignment_policy(Eigen::MatrixXd& m,
                                   std::vector<std::string>& dates,
                                   int max_gap) {
    const Eigen::Index rows = m.rows(), cols = m.cols();
    for (Eigen::Index c = 0; c < cols; ++c) {
        Eigen::Index r = 0;
        while (r < rows) {
            if (std::isnan(m(r, c))) {
                Eigen::Index run_end = r;
                while (run_end < rows && std::isnan(m(run_end, c))) ++run_end;
                const Eigen::Index run = run_end - r;
                if (r > 0 && run <= max_gap) {
                    for (Eigen::Index k = r; k < run_end; ++k) m(k, c) = m(r - 1, c);
                }
                r = run_end;
            } else {
                ++r;
            }
        }
    }
    std::vector<Eigen::Index> keep;
    keep.reserve(rows);
    for (Eigen::Index r = 0; r < rows; ++r) {
        bool ok = true;
        for (Eigen::Index c = 0; c < cols; ++c)
            if (std::isnan(m(r, c))) { ok = false; break; }
        if (ok) keep.push_back(r);
    }
    if (static_cast<Eigen::Index>(keep.size()) != rows) {
        Eigen::MatrixXd out(static_cast<Eigen::Index>(keep.size()), cols);
        std::vector<std::string> d;
        d.reserve(keep.size());
        for (size_t i = 0; i < keep.size(); ++i) {
            out.row(static_cast<Eigen::Index>(i)) = m.row(keep[i]);
            d.push_back(dates[static_cast<size_t>(keep[i])]);
        }
        m.swap(out);
        dates.swap(d);
    }
}

} // namespace detail

// Load the wide price CSV: header `date,<market_id>,...`. Rows are sorted
// by date; missing cells are forward-filled for gaps of at most five
// trading days, longer gaps drop the whole date row.
inline PricePanel load_price_csv(std::istream& in, int min_rows = 30) {
    CsvTable t = read_csv(in);
    if (t.header.empty() || trim(t.header[0]) != "date")
        throw SchemaError("price CSV must start with a 'date' column");
    const size_t n = t.header.size() - 1;
    if (n < 2) throw InsufficientData("price CSV needs at least 2 markets");

    std::vector<std::pair<std::string, std::vector<double>>> parsed;
    parsed.reserve(t.rows.size());
    for (const auto& row : t.rows) {
        if (row.size() != t.header.size())
            throw ParseError("price CSV row has " + std::to_string(row.size()) +
                             " cells, expected " + std::to_string(t.header.size()));
        const std::string date = require_iso_date(row[0], "price CSV");
        std::vector<double> cells(n, nan_value());
        for (size_t c = 0; c < n; ++c) {
            if (row[c + 1].empty()) continue;  // missing, handled by alignment
            const double v = parse_double(row[c + 1], "price CSV row " + date);
            if (!(v > 0.0) || !std::isfinite(v))
                throw DomainError("non-positive price " + row[c + 1] + " on " + date);
            cells[c] = v;
        }
        parsed.emplace_back(date, std::move(cells));
    }
    std::sort(parsed.begin(), parsed.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    for (size_t i = 1; i < parsed.size(); ++i)
        if (parsed[i].first == parsed[i - 1].first)
            throw ParseError("duplicate date " + parsed[i].first + " in price CSV");

    PricePanel panel;
    panel.market_ids.assign(t.header.begin() + 1, t.header.end());
    panel.market_class.assign(n, MarketClass::advanced);
    panel.dates.reserve(parsed.size());
    Eigen::MatrixXd m(static_cast<Eigen::Index>(parsed.size()), static_cast<Eigen::Index>(n));
    for (size_t r = 0; r < parsed.size(); ++r) {
        panel.dates.push_back(parsed[r].first);
        for (size_t c = 0; c < n; ++c) m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = parsed[r].second[c];
    }
    detail::apply_alignment_policy(m, panel.dates, 5);
    panel.prices = std::move(m);
    if (panel.rows() < min_rows)
        throw InsufficientData("price CSV has " + std::to_string(panel.rows()) +
                               " usable rows, need " + std::to_string(min_rows));
    return panel;
}

// Two-column sidecar `market_id,class`.
inline std::map<std::string, MarketClass> load_market_classes(std::istream& in) {
    CsvTable t = read_csv(in);
    if (t.header.size() != 2 || trim(t.header[0]) != "market_id" || trim(t.header[1]) != "class")
        throw SchemaError("class CSV must have header market_id,class");
    std::map<std::string, MarketClass> out;
    for (const auto& row : t.rows) {
        if (row.size() != 2) throw ParseError("class CSV row needs 2 cells");
        out[row[0]] = parse_market_class(row[1]);
    }
    return out;
}

inline void apply_market_classes(PricePanel& panel,
                                 const std::map<std::string, MarketClass>& classes) {
    for (size_t i = 0; i < panel.market_ids.size(); ++i) {
        auto it = classes.find(panel.market_ids[i]);
        if (it == classes.end())
            throw SchemaError("market " + panel.market_ids[i] + " missing from class CSV");
        panel.market_class[i] = it->second;
    }
}

// Channel source CSV: `date,VIX,HYOAS,...,QE`. Missing cells are
// forward-filled without a gap limit (several sources are monthly).
inline ChannelSourceTable load_channel_csv(std::istream& in) {
    CsvTable t = read_csv(in);
    const auto& want = channel_source_columns();
    if (t.header.empty() || trim(t.header[0]) != "date")
        throw SchemaError("channel CSV must start with a 'date' column");
    std::vector<Eigen::Index> col_of(want.size(), -1);
    for (size_t w = 0; w < want.size(); ++w) {
        for (size_t h = 1; h < t.header.size(); ++h)
            if (t.header[h] == want[w]) { col_of[w] = static_cast<Eigen::Index>(h); break; }
        if (col_of[w] < 0) throw SchemaError("channel CSV missing column " + want[w]);
    }

    std::vector<std::pair<std::string, std::vector<double>>> parsed;
    for (const auto& row : t.rows) {
        if (row.size() != t.header.size())
            throw ParseError("channel CSV row width mismatch");
        const std::string date = require_iso_date(row[0], "channel CSV");
        std::vector<double> cells(want.size(), nan_value());
        for (size_t w = 0; w < want.size(); ++w) {
            const std::string& cell = row[static_cast<size_t>(col_of[w])];
            if (!cell.empty()) cells[w] = parse_double(cell, "channel CSV row " + date);
        }
        parsed.emplace_back(date, std::move(cells));
    }
    std::sort(parsed.begin(), parsed.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    for (size_t i = 1; i < parsed.size(); ++i)
        if (parsed[i].first == parsed[i - 1].first)
            throw ParseError("duplicate date " + parsed[i].first + " in channel CSV");
    if (parsed.empty()) throw InsufficientData("channel CSV has no rows");

    ChannelSourceTable out;
    out.values.resize(static_cast<Eigen::Index>(parsed.size()),
                      static_cast<Eigen::Index>(want.size()));
    for (size_t r = 0; r < parsed.size(); ++r) {
        out.dates.push_back(parsed[r].first);
        for (size_t c = 0; c < want.size(); ++c)
            out.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = parsed[r].second[c];
    }
    // Forward-fill monthly and weekly sources to the daily grid.
    for (Eigen::Index c = 0; c < out.values.cols(); ++c) {
        double last = nan_value();
        for (Eigen::Index r = 0; r < out.values.rows(); ++r) {
            if (std::isnan(out.values(r, c))) out.values(r, c) = last;
            else last = out.values(r, c);
        }
    }
    return out;
}

// Restrict a source table to the return calendar, carrying the most recent
// observation forward across non-matching dates.
inline ChannelSourceTable align_channel_table(const ChannelSourceTable& raw,
                                              const std::vector<std::string>& return_dates) {
    ChannelSourceTable out;
    out.dates = return_dates;
    out.values.resize(static_cast<Eigen::Index>(return_dates.size()), raw.values.cols());
    size_t r = 0;
    Eigen::VectorXd last = Eigen::VectorXd::Constant(raw.values.cols(), nan_value());
    for (size_t i = 0; i < return_dates.size(); ++i) {
        while (r < raw.dates.size() && raw.dates[r] <= return_dates[i]) {
            last = raw.values.row(static_cast<Eigen::Index>(r));
            ++r;
        }
        if (last.hasNaN())
            throw InsufficientData("channel data starts after return date " + return_dates[i]);
        out.values.row(static_cast<Eigen::Index>(i)) = last;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

inline ReturnPanel compute_log_returns(const PricePanel& panel) {
    if (panel.rows() < 2) throw InsufficientData("need at least 2 price rows");
    ReturnPanel out;
    out.market_ids = panel.market_ids;
    out.market_class = panel.market_class;
    out.dates.assign(panel.dates.begin() + 1, panel.dates.end());
    out.returns.resize(panel.rows() - 1, panel.n_markets());
    for (Eigen::Index t = 0; t + 1 < panel.rows(); ++t)
        for (Eigen::Index i = 0; i < panel.n_markets(); ++i)
            out.returns(t, i) = std::log(panel.prices(t + 1, i)) - std::log(panel.prices(t, i));
    return out;
}

// Row index range [first, last) of dates inside the closed interval.
inline std::pair<size_t, size_t> period_row_range(const std::vector<std::string>& dates,
                                                  const SubPeriod& p) {
    const auto lo = std::lower_bound(dates.begin(), dates.end(), p.start);
    const auto hi = std::upper_bound(dates.begin(), dates.end(), p.end);
    return {static_cast<size_t>(lo - dates.begin()), static_cast<size_t>(hi - dates.begin())};
}

inline ReturnPanel slice_returns(const ReturnPanel& panel, size_t first, size_t last) {
    ReturnPanel out;
    out.market_ids = panel.market_ids;
    out.market_class = panel.market_class;
    out.dates.assign(panel.dates.begin() + static_cast<long>(first),
                     panel.dates.begin() + static_cast<long>(last));
    out.returns = panel.returns.middleRows(static_cast<Eigen::Index>(first),
                                           static_cast<Eigen::Index>(last - first));
    return out;
}

// Closed-interval slices in schedule order; rows outside every sub-period
// are dropped.
inline std::vector<std::pair<std::string, ReturnPanel>>
partition_subperiods(const ReturnPanel& panel, const std::vector<SubPeriod>& schedule) {
    detail::check_schedule(schedule);
    std::vector<std::pair<std::string, ReturnPanel>> out;
    for (const auto& p : schedule) {
        const auto [first, last] = period_row_range(panel.dates, p);
        if (first >= last)
            throw InsufficientData("sub-period " + p.name + " contains no observations");
        out.emplace_back(p.name, slice_returns(panel, first, last));
    }
    return out;
}

// Cross-sectional mean return at each date.
inline Eigen::VectorXd global_factor(const ReturnPanel& panel) {
    return panel.returns.rowwise().mean();
}

namespace detail {

inline Series eigen_to_series(const Eigen::VectorXd& v) {
    return Series(v.data(), v.data() + v.size());
}

inline Eigen::VectorXd series_to_eigen(const Series& s) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(s.size()));
    for (size_t i = 0; i < s.size(); ++i) v(static_cast<Eigen::Index>(i)) = s[i];
    return v;
}

inline Eigen::VectorXd standardize_col(const Eigen::VectorXd& x, const std::string& name) {
    Series s = eigen_to_series(x);
    const auto [lo, hi] = std::minmax_element(s.begin(), s.end());
    if (*lo == *hi) throw DegenerateSeries("channel source " + name + " is constant");
    return series_to_eigen(standardize(s));
}

// First difference with the opening row pinned to zero, keeping the
// calendar length unchanged.
inline Eigen::VectorXd first_difference(const Eigen::VectorXd& x) {
    Eigen::VectorXd d = Eigen::VectorXd::Zero(x.size());
    for (Eigen::Index t = 1; t < x.size(); ++t) d(t) = x(t) - x(t - 1);
    return d;
}

inline Eigen::VectorXd log_difference(const Eigen::VectorXd& x, const std::string& name) {
    for (Eigen::Index t = 0; t < x.size(); ++t)
        if (!(x(t) > 0.0)) throw DomainError(name + " must be positive for log-differencing");
    Eigen::VectorXd d = Eigen::VectorXd::Zero(x.size());
    for (Eigen::Index t = 1; t < x.size(); ++t) d(t) = std::log(x(t)) - std::log(x(t - 1));
    return d;
}

} // namespace detail

// Build the five standardized channel composites. The behavioural column is
// the within-sub-period OLS residual of standardized sentiment on the
// financial composite, rescaled to unit variance; rows outside every
// sub-period are residualized against the full-sample fit.
inline ChannelPanel build_channels(const ChannelSourceTable& table,
                                   const std::vector<SubPeriod>& schedule) {
    detail::check_schedule(schedule);
    const auto& cols = channel_source_columns();
    auto col = [&](const std::string& name) -> Eigen::VectorXd {
        for (size_t i = 0; i < cols.size(); ++i)
            if (cols[i] == name) return table.values.col(static_cast<Eigen::Index>(i));
        throw SchemaError("missing channel source column " + name);
    };
    const Eigen::Index T = table.values.rows();
    if (T < 2) throw InsufficientData("channel table needs at least 2 rows");

    using detail::standardize_col;
    const Eigen::VectorXd fin =
        standardize_col((standardize_col(col("VIX"), "VIX") +
                         standardize_col(col("HYOAS"), "HYOAS") +
                         standardize_col(col("STLFSI"), "STLFSI")) / 3.0,
                        "Financial composite");
    const Eigen::VectorXd trade =
        standardize_col(detail::log_difference(col("DTWEXBGS"), "DTWEXBGS"), "Trade composite");
    const Eigen::VectorXd geo =
        standardize_col((standardize_col(col("GPR"), "GPR") +
                         standardize_col(col("GEOEVENT"), "GEOEVENT")) / 2.0,
                        "Geopolitical composite");
    const Eigen::VectorXd mon =
        standardize_col((standardize_col(detail::first_difference(col("FFR")), "dFFR") +
                         standardize_col(col("T10Y3M"), "T10Y3M") +
                         standardize_col(col("QE"), "QE")) / 3.0,
                        "Monetary composite");

    // Behavioural: residualize sentiment on the financial composite within
    // each sub-period (simple OLS with intercept per slice).
    const Eigen::VectorXd sent = standardize_col(col("UMCSENT"), "UMCSENT");
    Eigen::VectorXd behav(T);
    std::vector<bool> covered(static_cast<size_t>(T), false);
    auto residualize = [&](size_t first, size_t last) {
        const Eigen::Index n = static_cast<Eigen::Index>(last - first);
        const Eigen::VectorXd f = fin.segment(static_cast<Eigen::Index>(first), n);
        const Eigen::VectorXd s = sent.segment(static_cast<Eigen::Index>(first), n);
        const double mf = f.mean(), ms = s.mean();
        const double vf = (f.array() - mf).square().sum();
        const double slope = vf > 0.0 ? ((f.array() - mf) * (s.array() - ms)).sum() / vf : 0.0;
        const double intercept = ms - slope * mf;
        behav.segment(static_cast<Eigen::Index>(first), n) =
            s.array() - intercept - slope * f.array();
    };
    for (const auto& p : schedule) {
        const auto [first, last] = period_row_range(table.dates, p);
        if (first >= last) continue;
        residualize(first, last);
        for (size_t r = first; r < last; ++r) covered[r] = true;
    }
    // Full-sample fit for any uncovered rows, demeaned as their own group so
    // the whole column keeps an exactly zero mean.
    {
        std::vector<Eigen::Index> uncovered;
        for (Eigen::Index t = 0; t < T; ++t)
            if (!covered[static_cast<size_t>(t)]) uncovered.push_back(t);
        if (!uncovered.empty()) {
            const double mf = fin.mean(), ms = sent.mean();
            const double vf = (fin.array() - mf).square().sum();
            const double slope = vf > 0.0 ? ((fin.array() - mf) * (sent.array() - ms)).sum() / vf : 0.0;
            const double intercept = ms - slope * mf;
            double group_sum = 0.0;
            for (Eigen::Index t : uncovered) {
                behav(t) = sent(t) - intercept - slope * fin(t);
                group_sum += behav(t);
            }
            const double group_mean = group_sum / static_cast<double>(uncovered.size());
            for (Eigen::Index t : uncovered) behav(t) -= group_mean;
        }
    }
    // Rescale without recentring: per-slice OLS residuals already have zero
    // mean, and shifting them would break the within-period orthogonality.
    {
        Series s = detail::eigen_to_series(behav);
        const auto [lo, hi] = std::minmax_element(s.begin(), s.end());
        if (*lo == *hi) throw DegenerateSeries("behavioural residual is constant");
        const double sd = stdev(s);
        behav /= sd;
    }

    ChannelPanel out;
    out.dates = table.dates;
    out.channels.resize(T, kNumChannels);
    out.channels.col(kTrade) = trade;
    out.channels.col(kFinancial) = fin;
    out.channels.col(kGeopolitical) = geo;
    out.channels.col(kBehavioural) = behav;
    out.channels.col(kMonetary) = mon;
    return out;
}

} // namespace contagion
