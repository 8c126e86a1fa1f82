#pragma once

#include <cctype>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <nlohmann/json.hpp>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "contagion/attribution.hpp"
#include "contagion/csv.hpp"
#include "contagion/detect.hpp"
#include "contagion/errors.hpp"
#include "contagion/ingest.hpp"
#include "contagion/network.hpp"
#include "contagion/parallel.hpp"
#include "contagion/synth.hpp"
#include "contagion/wavelet.hpp"

namespace contagion {

using json = nlohmann::json;

#ifndef CONTAGION_VERSION
#define CONTAGION_VERSION "0.0.0"
#endif

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

struct ThresholdSpec {
    enum class Mode { baseline_q75, fixed };
    Mode mode = Mode::baseline_q75;
    double value = 0.0;  // fixed mode only
};

struct PipelineConfig {
    std::string prices_path;
    std::string channels_path;
    std::string classes_path;
    std::string out_dir;

    std::vector<SubPeriod> schedule;
    std::vector<int> scales = {5};
    std::vector<double> quantiles = {0.05, 0.50, 0.95};
    int reporting_scale = 5;
    double reporting_quantile = 0.50;
    ThresholdSpec threshold;
    std::vector<int> horizons = {1, 5, 22};
    int bootstrap_replications = 300;
    uint64_t seed = 0;
    double sargan_gate = 0.50;
    bool force_rigobon = false;
    int regime_window = 22;
    int wavelet_levels = 6;
    std::string wavelet_filter = "LA8";
    bool dump_wavelets = false;
    bool rank_by_strength = false;
    int threads = 1;
    std::vector<std::string> period_filter;  // empty = all

    void validate() const {
        if (schedule.empty()) throw ConfigError("schedule is empty");
        if (scales.empty()) throw ConfigError("no scales configured");
        for (int s : scales)
            if (s < 1 || s > wavelet_levels) throw ConfigError("scale outside 1..levels");
        if (quantiles.empty()) throw ConfigError("no quantiles configured");
        for (double q : quantiles)
            if (!(q > 0.0 && q < 1.0)) throw ConfigError("quantile outside (0,1)");
        if (!(reporting_quantile > 0.0 && reporting_quantile < 1.0))
            throw ConfigError("reporting quantile outside (0,1)");
        if (std::find(scales.begin(), scales.end(), reporting_scale) == scales.end())
            throw ConfigError("reporting scale is not among the configured scales");
        bool found_q = false;
        for (double q : quantiles)
            if (q == reporting_quantile) found_q = true;
        if (!found_q) throw ConfigError("reporting quantile is not among the configured quantiles");
        if (bootstrap_replications < 1) throw ConfigError("bootstrap replications must be >= 1");
        if (horizons.empty()) throw ConfigError("no local-projection horizons configured");
        for (int h : horizons)
            if (h < 1) throw ConfigError("horizon must be >= 1");
        if (!(sargan_gate >= 0.0 && sargan_gate <= 1.0))
            throw ConfigError("sargan gate outside [0,1]");
        if (threads < 1) throw ConfigError("threads must be >= 1");
        if (threshold.mode == ThresholdSpec::Mode::fixed && !std::isfinite(threshold.value))
            throw ConfigError("fixed threshold must be finite");
    }
};

inline PipelineConfig config_from_json(const json& j) {
    PipelineConfig c;
    if (j.contains("paths")) {
        const auto& p = j.at("paths");
        if (p.contains("prices")) c.prices_path = p.at("prices").get<std::string>();
        if (p.contains("channels")) c.channels_path = p.at("channels").get<std::string>();
        if (p.contains("classes")) c.classes_path = p.at("classes").get<std::string>();
        if (p.contains("out")) c.out_dir = p.at("out").get<std::string>();
    }
    if (j.contains("schedule"))
        for (const auto& s : j.at("schedule"))
            c.schedule.push_back({s.at("name").get<std::string>(),
                                  s.at("start").get<std::string>(),
                                  s.at("end").get<std::string>()});
    if (j.contains("scales")) c.scales = j.at("scales").get<std::vector<int>>();
    if (j.contains("quantiles")) c.quantiles = j.at("quantiles").get<std::vector<double>>();
    if (j.contains("reporting_scale")) c.reporting_scale = j.at("reporting_scale").get<int>();
    if (j.contains("reporting_quantile"))
        c.reporting_quantile = j.at("reporting_quantile").get<double>();
    if (j.contains("threshold")) {
        const auto& t = j.at("threshold");
        const std::string mode = t.value("mode", "baseline-q75");
        if (mode == "baseline-q75") {
            c.threshold.mode = ThresholdSpec::Mode::baseline_q75;
        } else if (mode == "fixed") {
            c.threshold.mode = ThresholdSpec::Mode::fixed;
            c.threshold.value = t.at("value").get<double>();
        } else {
            throw ConfigError("unknown threshold mode '" + mode + "'");
        }
    }
    if (j.contains("horizons")) c.horizons = j.at("horizons").get<std::vector<int>>();
    if (j.contains("bootstrap_replications"))
        c.bootstrap_replications = j.at("bootstrap_replications").get<int>();
    if (j.contains("seed")) c.seed = j.at("seed").get<uint64_t>();
    if (j.contains("sargan_gate")) c.sargan_gate = j.at("sargan_gate").get<double>();
    if (j.contains("force_rigobon")) c.force_rigobon = j.at("force_rigobon").get<bool>();
    if (j.contains("regime_window")) c.regime_window = j.at("regime_window").get<int>();
    if (j.contains("wavelet_levels")) c.wavelet_levels = j.at("wavelet_levels").get<int>();
    if (j.contains("wavelet_filter")) c.wavelet_filter = j.at("wavelet_filter").get<std::string>();
    if (j.contains("dump_wavelets")) c.dump_wavelets = j.at("dump_wavelets").get<bool>();
    if (j.contains("rank_by_strength")) c.rank_by_strength = j.at("rank_by_strength").get<bool>();
    if (j.contains("threads")) c.threads = j.at("threads").get<int>();
    if (j.contains("periods")) c.period_filter = j.at("periods").get<std::vector<std::string>>();
    return c;
}

// Serialization used by the run manifest. Thread count and output location
// are execution detail, not part of the run's identity, and are left out so
// that reruns into different directories stay byte-identical.
inline json config_to_json(const PipelineConfig& c) {
    json j;
    j["paths"] = {{"prices", c.prices_path},
                  {"channels", c.channels_path},
                  {"classes", c.classes_path}};
    j["schedule"] = json::array();
    for (const auto& p : c.schedule)
        j["schedule"].push_back({{"name", p.name}, {"start", p.start}, {"end", p.end}});
    j["scales"] = c.scales;
    j["quantiles"] = c.quantiles;
    j["reporting_scale"] = c.reporting_scale;
    j["reporting_quantile"] = c.reporting_quantile;
    if (c.threshold.mode == ThresholdSpec::Mode::fixed)
        j["threshold"] = {{"mode", "fixed"}, {"value", c.threshold.value}};
    else
        j["threshold"] = {{"mode", "baseline-q75"}};
    j["horizons"] = c.horizons;
    j["bootstrap_replications"] = c.bootstrap_replications;
    j["seed"] = c.seed;
    j["sargan_gate"] = c.sargan_gate;
    j["force_rigobon"] = c.force_rigobon;
    j["regime_window"] = c.regime_window;
    j["wavelet_levels"] = c.wavelet_levels;
    j["wavelet_filter"] = c.wavelet_filter;
    j["dump_wavelets"] = c.dump_wavelets;
    j["rank_by_strength"] = c.rank_by_strength;
    if (!c.period_filter.empty()) j["periods"] = c.period_filter;
    return j;
}

inline SynthConfig synth_config_from_json(const json& j) {
    SynthConfig c;
    if (j.contains("n_markets")) c.n_markets = j.at("n_markets").get<int>();
    if (j.contains("T")) c.T = j.at("T").get<int>();
    if (j.contains("seed")) c.seed = j.at("seed").get<uint64_t>();
    if (j.contains("channel_ar")) {
        const auto v = j.at("channel_ar").get<std::vector<double>>();
        if (v.size() != 5) throw ConfigError("channel_ar needs 5 entries");
        std::copy(v.begin(), v.end(), c.channel_ar.begin());
    }
    if (j.contains("comovement_weights")) {
        const auto v = j.at("comovement_weights").get<std::vector<double>>();
        if (v.size() != 5) throw ConfigError("comovement_weights needs 5 entries");
        std::copy(v.begin(), v.end(), c.comovement_weights.begin());
    }
    if (j.contains("loadings")) {
        const auto rows = j.at("loadings").get<std::vector<std::vector<double>>>();
        c.loadings.resize(static_cast<Eigen::Index>(rows.size()), kNumChannels);
        for (size_t r = 0; r < rows.size(); ++r) {
            if (rows[r].size() != 5) throw ConfigError("each loadings row needs 5 entries");
            for (int ch = 0; ch < kNumChannels; ++ch)
                c.loadings(static_cast<Eigen::Index>(r), ch) = rows[r][static_cast<size_t>(ch)];
        }
    }
    if (j.contains("coupling"))
        for (const auto& cp : j.at("coupling"))
            c.coupling.push_back({cp.at("source").get<int>(), cp.at("target").get<int>(),
                                  cp.at("strength").get<double>(), cp.at("scale").get<int>()});
    if (j.contains("noise_sd")) c.noise_sd = j.at("noise_sd").get<double>();
    if (j.contains("heavy_tails")) c.heavy_tails = j.at("heavy_tails").get<bool>();
    if (j.contains("two_regime")) c.two_regime = j.at("two_regime").get<bool>();
    return c;
}

// Generate a panel and write it in the ingest formats, plus the ground
// truth for oracle checks.
inline FixturePaths emit_synth_fixture(const SynthConfig& cfg, const std::string& dir,
                                       bool write_ground_truth = true) {
    std::filesystem::create_directories(dir);
    const SynthData data = gen_channel_dgp(cfg);
    FixturePaths paths = write_fixture_csvs(data, dir);
    if (write_ground_truth) {
        json truth;
        truth["dominant_channel"] = data.truth.dominant_channel;
        truth["dominant_channel_name"] =
            channel_names()[static_cast<size_t>(data.truth.dominant_channel)];
        truth["comovement_weights"] = data.truth.comovement_weights;
        truth["coupling"] = json::array();
        for (const auto& cp : data.truth.coupling)
            truth["coupling"].push_back({{"source", cp.source},
                                         {"target", cp.target},
                                         {"strength", cp.strength},
                                         {"scale", cp.scale}});
        std::ofstream f(std::filesystem::path(dir) / "ground_truth.json", std::ios::binary);
        f << truth.dump(2) << "\n";
    }
    return paths;
}

// ---------------------------------------------------------------------------
// Identification status
// ---------------------------------------------------------------------------

struct IdentificationStatus {
    std::vector<std::string> dominants;  // per-method labels, method order
    bool robust = false;
    std::string robust_channel;
    int distinct = 0;

    std::string label() const {
        if (robust) return "Robust (" + robust_channel + ")";
        return "Fragile (" + std::to_string(distinct) + " distinct)";
    }
};

// Robust when some channel is dominant under at least two of the available
// methods; Fragile otherwise, reporting the count of distinct labels.
inline IdentificationStatus classify_identification(const std::vector<std::string>& dominants) {
    if (dominants.size() < 2)
        throw Unclassifiable("need at least two method labels to classify");
    IdentificationStatus st;
    st.dominants = dominants;
    std::map<std::string, int> counts;
    for (const auto& d : dominants) ++counts[d];
    for (const auto& [label, count] : counts)
        if (count >= 2) {
            st.robust = true;
            st.robust_channel = label;
        }
    st.distinct = static_cast<int>(counts.size());
    return st;
}

// ---------------------------------------------------------------------------
// Per-period results
// ---------------------------------------------------------------------------

struct MethodShares {
    bool available = false;
    Eigen::VectorXd shares;  // 5, normalized
    std::string dominant;
    int n_links = 0;  // links contributing to the aggregate
};

struct CellSummary {
    int scale = 0;
    double tau = 0.5;
    DetectionSummary summary;
};

struct PeriodReport {
    std::string period;
    double threshold = 0.0;
    std::vector<CellSummary> cells;      // one per configured (scale, tau)
    DetectionSummary summary;            // reporting cell
    ContagionNetwork network;            // reporting cell
    CommunityPartition communities;
    DegreeShares degree_shares;

    bool stage2_ran = false;
    int n_links = 0;       // edges at the reporting cell
    int skipped_links = 0; // links no method could estimate
    MethodShares iv;
    MethodShares lasso;
    std::map<int, MethodShares> lp;  // by horizon
    MethodShares rigobon;
    bool rigobon_run = false;
    BootstrapInterval iv_ci;
    std::array<double, 5> mean_first_stage_F{};
    double sargan_rejection_rate = nan_value();  // fraction in [0,1]
    double dwh_rejection_rate = nan_value();
    std::array<double, 5> mean_robustness{};
    std::optional<IdentificationStatus> status;
    std::vector<std::string> notices;
};

// ---------------------------------------------------------------------------
// Pipeline
// ---------------------------------------------------------------------------

namespace pipeline_detail {

struct LinkWork {
    int source = 0;
    int target = 0;
    bool iv_ok = false;
    StructuralEstimate iv_est;
    DiagnosticsRecord diag;
    Eigen::VectorXd iv_shares;
    bool lasso_ok = false;
    Eigen::VectorXd lasso_shares;
    std::map<int, Eigen::VectorXd> lp_shares;  // by horizon, present when ok
    bool rigobon_ok = false;
    Eigen::VectorXd rigobon_shares;
    std::string error;
};

inline std::string sanitize_filename(const std::string& name) {
    std::string out;
    for (char ch : name)
        out += (std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' || ch == '_') ? ch : '_';
    return out;
}

inline std::string channel_label(int c) { return channel_names()[static_cast<size_t>(c)]; }

inline Series column_series(const Eigen::MatrixXd& m, Eigen::Index col,
                            size_t first, size_t last) {
    Series out;
    out.reserve(last - first);
    for (size_t t = first; t < last; ++t)
        out.push_back(m(static_cast<Eigen::Index>(t), col));
    return out;
}

inline std::string fmt_pct(double fraction) { return format_fixed(100.0 * fraction, 2); }

inline std::string fmt_or_empty(double v, int decimals) {
    return std::isfinite(v) ? format_fixed(v, decimals) : std::string();
}

} // namespace pipeline_detail

struct PipelineArtifacts {
    bool stage1 = true;       // stage1_summary, edges, wavelet dumps
    bool network = true;      // communities, degree shares
    bool stage2 = true;       // shares, diagnostics, bootstrap, sensitivity, status
    bool manifest = true;     // run_manifest.json
};

inline std::vector<PeriodReport> run_pipeline(const PipelineConfig& config,
                                              const PipelineArtifacts& artifacts = {}) {
    config.validate();
    namespace fs = std::filesystem;
    namespace pd = pipeline_detail;
    if (config.out_dir.empty()) throw ConfigError("output directory not set");
    fs::create_directories(config.out_dir);

    // ---- ingest ---------------------------------------------------------
    std::ifstream pf(config.prices_path);
    if (!pf.is_open()) throw ConfigError("cannot open prices file " + config.prices_path);
    PricePanel prices = load_price_csv(pf);
    {
        std::ifstream clf(config.classes_path);
        if (!clf.is_open()) throw ConfigError("cannot open classes file " + config.classes_path);
        apply_market_classes(prices, load_market_classes(clf));
    }
    const ReturnPanel returns = compute_log_returns(prices);

    std::ifstream chf(config.channels_path);
    if (!chf.is_open()) throw ConfigError("cannot open channels file " + config.channels_path);
    ChannelPanel channels = build_channels(
        align_channel_table(load_channel_csv(chf), returns.dates), config.schedule);
    channels.global_factor = global_factor(returns);

    const auto periods = partition_subperiods(returns, config.schedule);

    const auto want_period = [&](const std::string& name) {
        if (config.period_filter.empty()) return true;
        return std::find(config.period_filter.begin(), config.period_filter.end(), name) !=
               config.period_filter.end();
    };

    // ---- stage 1 --------------------------------------------------------
    struct PeriodStage1 {
        std::string name;
        size_t first = 0, last = 0;  // rows on the return calendar
        std::vector<WaveletDecomposition> decomps;
        std::vector<std::pair<std::pair<int, double>, FlowTensor>> tensors;
        const FlowTensor* reporting = nullptr;
    };
    std::vector<PeriodStage1> stage1(periods.size());
    for (size_t p = 0; p < periods.size(); ++p) {
        auto& s1 = stage1[p];
        s1.name = periods[p].first;
        std::tie(s1.first, s1.last) = period_row_range(returns.dates, config.schedule[p]);
        if (!want_period(s1.name) && p != 0) continue;  // baseline always runs
        try {
            s1.decomps = modwt_panel(periods[p].second, config.wavelet_levels,
                                     config.wavelet_filter, config.threads);
        } catch (const Error& e) {
            throw InsufficientData("period " + s1.name + ": " + e.what());
        }
        for (int scale : config.scales)
            for (double tau : config.quantiles) {
                if (p != 0 && !want_period(s1.name)) continue;
                s1.tensors.emplace_back(
                    std::make_pair(scale, tau),
                    flow_matrix(s1.decomps, returns.market_ids, scale, tau, s1.name,
                                config.threads));
            }
        for (const auto& [key, tensor] : s1.tensors)
            if (key.first == config.reporting_scale && key.second == config.reporting_quantile)
                s1.reporting = &tensor;
    }

    double threshold = 0.0;
    if (config.threshold.mode == ThresholdSpec::Mode::fixed) {
        threshold = config.threshold.value;
    } else {
        if (!stage1[0].reporting)
            throw ConfigError("baseline period has no reporting-cell tensor");
        threshold = baseline_threshold(*stage1[0].reporting);
    }

    // ---- per-period stage 1 + stage 2 ------------------------------------
    std::vector<PeriodReport> reports;
    for (size_t p = 0; p < periods.size(); ++p) {
        if (!want_period(stage1[p].name)) continue;
        const auto& s1 = stage1[p];
        const ReturnPanel& rp = periods[p].second;

        PeriodReport rep;
        rep.period = s1.name;
        rep.threshold = threshold;
        for (const auto& [key, tensor] : s1.tensors) {
            CellSummary cell;
            cell.scale = key.first;
            cell.tau = key.second;
            cell.summary = summarize(threshold_network(tensor, threshold, rp.market_class),
                                     tensor,
                                     config.rank_by_strength ? NodeRanking::strength
                                                             : NodeRanking::out_degree);
            rep.cells.push_back(std::move(cell));
        }
        if (!s1.reporting) throw ConfigError("missing reporting cell for period " + s1.name);
        rep.network = threshold_network(*s1.reporting, threshold, rp.market_class);
        rep.summary = summarize(rep.network, *s1.reporting,
                                config.rank_by_strength ? NodeRanking::strength
                                                        : NodeRanking::out_degree);
        rep.communities = walktrap(symmetrize(rep.network));
        rep.degree_shares = degree_decomposition(rep.network, rp.market_class);
        rep.n_links = static_cast<int>(rep.network.edges.size());

        // ---- stage 2 ----
        if (rep.network.edges.empty()) {
            rep.notices.push_back("period " + rep.period +
                                  ": no edges above threshold; stage 2 skipped");
        } else if (artifacts.stage2) {
            const size_t n_links = rep.network.edges.size();
            std::vector<pd::LinkWork> work(n_links);
            const Eigen::VectorXd factor_slice =
                channels.global_factor.segment(static_cast<Eigen::Index>(s1.first),
                                               static_cast<Eigen::Index>(s1.last - s1.first));
            const Eigen::MatrixXd channel_slice =
                channels.channels.middleRows(static_cast<Eigen::Index>(s1.first),
                                             static_cast<Eigen::Index>(s1.last - s1.first));

            parallel_for(n_links, config.threads, [&](size_t k) {
                auto& w = work[k];
                const auto& e = rep.network.edges[k];
                w.source = e.source;
                w.target = e.target;
                try {
                    Series ri = pd::column_series(rp.returns, e.source, 0,
                                                  static_cast<size_t>(rp.rows()));
                    Series rj = pd::column_series(rp.returns, e.target, 0,
                                                  static_cast<size_t>(rp.rows()));
                    LinkSample sample =
                        build_link_sample(ri, rj, channel_slice, factor_slice, rep.period);
                    auto [est, diag] = fit_2sls(sample);
                    w.iv_est = est;
                    w.diag = diag;
                    w.iv_shares = shares(est);
                    w.iv_ok = true;
                    try {
                        w.lasso_shares = shares(fit_lasso_iv(sample).estimate);
                        w.lasso_ok = true;
                    } catch (const Error&) {
                    }
                    for (int h : config.horizons) {
                        try {
                            w.lp_shares[h] = shares(fit_local_projection(sample, h));
                        } catch (const Error&) {
                        }
                    }
                } catch (const Error& e2) {
                    w.error = e2.what();
                }
            });

            // diagnostics aggregate over links with a successful primary fit
            int iv_ok_count = 0, sargan_rej = 0, sargan_avail = 0, dwh_rej = 0;
            std::vector<Eigen::VectorXd> iv_shares, lasso_shares;
            std::map<int, std::vector<Eigen::VectorXd>> lp_shares;
            for (const auto& w : work) {
                if (!w.iv_ok) {
                    ++rep.skipped_links;
                    if (!w.error.empty())
                        rep.notices.push_back("link " +
                                              rep.network.node_ids[static_cast<size_t>(w.source)] +
                                              "->" +
                                              rep.network.node_ids[static_cast<size_t>(w.target)] +
                                              " skipped: " + w.error);
                    continue;
                }
                ++iv_ok_count;
                iv_shares.push_back(w.iv_shares);
                for (int c = 0; c < kNumChannels; ++c) {
                    rep.mean_first_stage_F[static_cast<size_t>(c)] +=
                        w.diag.first_stage_F[static_cast<size_t>(c)];
                    rep.mean_robustness[static_cast<size_t>(c)] +=
                        w.diag.robustness_value[static_cast<size_t>(c)];
                }
                if (w.diag.sargan_available) {
                    ++sargan_avail;
                    if (w.diag.sargan_p < 0.05) ++sargan_rej;
                }
                if (w.diag.dwh_p < 0.05) ++dwh_rej;
                if (w.lasso_ok) lasso_shares.push_back(w.lasso_shares);
                for (const auto& [h, sh] : w.lp_shares) lp_shares[h].push_back(sh);
            }

            if (iv_ok_count > 0) {
                rep.stage2_ran = true;
                for (int c = 0; c < kNumChannels; ++c) {
                    rep.mean_first_stage_F[static_cast<size_t>(c)] /= iv_ok_count;
                    rep.mean_robustness[static_cast<size_t>(c)] /= iv_ok_count;
                }
                rep.sargan_rejection_rate =
                    sargan_avail > 0 ? static_cast<double>(sargan_rej) / sargan_avail : nan_value();
                rep.dwh_rejection_rate = static_cast<double>(dwh_rej) / iv_ok_count;

                rep.iv.available = true;
                rep.iv.shares = aggregate_period_shares(iv_shares);
                rep.iv.dominant = pd::channel_label(dominant_channel(rep.iv.shares));
                rep.iv.n_links = iv_ok_count;
                rep.iv_ci = bootstrap_shares(iv_shares, config.bootstrap_replications,
                                             derive_stream_seed(config.seed, 1000 + p),
                                             config.threads);
                if (!lasso_shares.empty()) {
                    rep.lasso.available = true;
                    rep.lasso.shares = aggregate_period_shares(lasso_shares);
                    rep.lasso.dominant = pd::channel_label(dominant_channel(rep.lasso.shares));
                    rep.lasso.n_links = static_cast<int>(lasso_shares.size());
                }
                for (const auto& [h, vecs] : lp_shares) {
                    MethodShares ms;
                    ms.available = true;
                    ms.shares = aggregate_period_shares(vecs);
                    ms.dominant = pd::channel_label(dominant_channel(ms.shares));
                    ms.n_links = static_cast<int>(vecs.size());
                    rep.lp[h] = std::move(ms);
                }

                // Rigobon runs for Sargan-rejected windows (or when forced).
                const bool gate = std::isfinite(rep.sargan_rejection_rate) &&
                                  rep.sargan_rejection_rate > config.sargan_gate;
                if (config.force_rigobon || gate) {
                    rep.rigobon_run = true;
                    std::vector<Regime> regimes = regime_partition(rp, config.regime_window);
                    std::vector<Eigen::VectorXd> rig_shares;
                    std::vector<int> rig_ok(n_links, 0);
                    std::vector<Eigen::VectorXd> rig_vec(n_links);
                    parallel_for(n_links, config.threads, [&](size_t k) {
                        auto& w = work[k];
                        if (!w.iv_ok) return;
                        try {
                            Series ri = pd::column_series(rp.returns, w.source, 0,
                                                          static_cast<size_t>(rp.rows()));
                            Series rj = pd::column_series(rp.returns, w.target, 0,
                                                          static_cast<size_t>(rp.rows()));
                            LinkSample sample = build_link_sample(ri, rj, channel_slice,
                                                                  factor_slice, rep.period);
                            std::vector<Regime> trimmed(regimes.begin() + kLinkTrim,
                                                        regimes.end());
                            rig_vec[k] = shares(fit_rigobon(sample, trimmed));
                            rig_ok[k] = 1;
                        } catch (const Error&) {
                        }
                    });
                    for (size_t k = 0; k < n_links; ++k)
                        if (rig_ok[k]) rig_shares.push_back(rig_vec[k]);
                    if (!rig_shares.empty()) {
                        rep.rigobon.available = true;
                        rep.rigobon.shares = aggregate_period_shares(rig_shares);
                        rep.rigobon.dominant =
                            pd::channel_label(dominant_channel(rep.rigobon.shares));
                        rep.rigobon.n_links = static_cast<int>(rig_shares.size());
                    }
                }

                // Identification status from IV, LP (h=5 when configured,
                // otherwise the first configured horizon) and Rigobon.
                std::vector<std::string> dominants = {rep.iv.dominant};
                int status_h = config.horizons.front();
                if (std::find(config.horizons.begin(), config.horizons.end(), 5) !=
                    config.horizons.end())
                    status_h = 5;
                if (auto it = rep.lp.find(status_h); it != rep.lp.end() && it->second.available)
                    dominants.push_back(it->second.dominant);
                if (rep.rigobon.available) dominants.push_back(rep.rigobon.dominant);
                if (dominants.size() >= 2) rep.status = classify_identification(dominants);
            } else {
                rep.notices.push_back("period " + rep.period +
                                      ": no link could be estimated; stage 2 incomplete");
            }
        }

        // ---- wavelet dumps ----
        if (artifacts.stage1 && config.dump_wavelets) {
            const fs::path wdir = fs::path(config.out_dir) / "wavelets" /
                                  pd::sanitize_filename(rep.period);
            fs::create_directories(wdir);
            for (size_t i = 0; i < s1.decomps.size(); ++i) {
                CsvWriter w((wdir / (pd::sanitize_filename(returns.market_ids[i]) + ".csv"))
                                .string());
                std::vector<std::string> header = {"date"};
                for (int lev = 1; lev <= config.wavelet_levels; ++lev)
                    header.push_back("d" + std::to_string(lev));
                header.push_back("smooth");
                w.row(header);
                for (size_t t = 0; t < rp.dates.size(); ++t) {
                    std::vector<std::string> row = {rp.dates[t]};
                    for (int lev = 0; lev < config.wavelet_levels; ++lev)
                        row.push_back(format_double(
                            s1.decomps[i].details[static_cast<size_t>(lev)][t]));
                    row.push_back(format_double(s1.decomps[i].smooth[t]));
                    w.row(row);
                }
            }
        }

        for (const auto& n : rep.notices) std::cerr << "[contagion] " << n << "\n";
        reports.push_back(std::move(rep));
    }

    // ---- emission ---------------------------------------------------------
    const fs::path out(config.out_dir);
    if (artifacts.stage1) {
        CsvWriter w((out / "stage1_summary.csv").string());
        w.row({"period", "scale", "tau", "threshold", "mean_wqte", "max_wqte", "density_pct",
               "n_edges", "top_transmitter", "top_receiver"});
        for (const auto& rep : reports)
            for (const auto& cell : rep.cells)
                w.row({rep.period, std::to_string(cell.scale), format_fixed(cell.tau, 2),
                       format_fixed(rep.threshold, 6),
                       pd::fmt_or_empty(cell.summary.mean_wqte, 4),
                       pd::fmt_or_empty(cell.summary.max_wqte, 4),
                       format_fixed(cell.summary.density_pct, 2),
                       std::to_string(cell.summary.n_edges), cell.summary.top_transmitter,
                       cell.summary.top_receiver});
        for (const auto& rep : reports) {
            CsvWriter ew((out / ("edges_" + pd::sanitize_filename(rep.period) + ".csv")).string());
            ew.row({"source", "target", "wqte"});
            for (const auto& e : rep.network.edges)
                ew.row({rep.network.node_ids[static_cast<size_t>(e.source)],
                        rep.network.node_ids[static_cast<size_t>(e.target)],
                        format_fixed(e.weight, 6)});
        }
    }
    if (artifacts.network) {
        {
            CsvWriter w((out / "communities.csv").string());
            w.row({"period", "n_communities", "modularity"});
            for (const auto& rep : reports)
                w.row({rep.period, std::to_string(rep.communities.n_communities),
                       format_fixed(rep.communities.modularity, 4)});
        }
        {
            CsvWriter w((out / "degree_shares.csv").string());
            w.row({"period", "class", "out_degree_share_pct", "in_degree_share_pct"});
            for (const auto& rep : reports) {
                const auto& d = rep.degree_shares;
                if (d.empty) {
                    w.row({rep.period, "advanced", "", ""});
                    w.row({rep.period, "emerging", "", ""});
                } else {
                    w.row({rep.period, "advanced", pd::fmt_pct(d.advanced_out),
                           pd::fmt_pct(d.advanced_in)});
                    w.row({rep.period, "emerging", pd::fmt_pct(d.emerging_out),
                           pd::fmt_pct(d.emerging_in)});
                }
            }
        }
    }
    if (artifacts.stage2) {
        auto write_share_file = [&](const std::string& name, auto select) {
            CsvWriter w((out / name).string());
            w.row({"period", "trade_pct", "financial_pct", "geopolitical_pct",
                   "behavioural_pct", "monetary_pct", "dominant", "n_links"});
            for (const auto& rep : reports) {
                const MethodShares* ms = select(rep);
                if (!ms || !ms->available) continue;
                std::vector<std::string> row = {rep.period};
                for (int c = 0; c < kNumChannels; ++c) row.push_back(pd::fmt_pct(ms->shares(c)));
                row.push_back(ms->dominant);
                row.push_back(std::to_string(ms->n_links));
                w.row(row);
            }
        };
        write_share_file("shares_iv.csv",
                         [](const PeriodReport& r) { return r.iv.available ? &r.iv : nullptr; });
        write_share_file("shares_lasso.csv", [](const PeriodReport& r) {
            return r.lasso.available ? &r.lasso : nullptr;
        });
        for (int h : config.horizons)
            write_share_file("shares_lp_h" + std::to_string(h) + ".csv",
                             [h](const PeriodReport& r) -> const MethodShares* {
                                 auto it = r.lp.find(h);
                                 return it != r.lp.end() && it->second.available ? &it->second
                                                                                 : nullptr;
                             });
        write_share_file("shares_rigobon.csv", [](const PeriodReport& r) {
            return r.rigobon.available ? &r.rigobon : nullptr;
        });
        {
            CsvWriter w((out / "diagnostics.csv").string());
            w.row({"period", "n_links", "f_trade", "f_financial", "f_geopolitical",
                   "f_behavioural", "f_monetary", "sargan_rejection_pct", "dwh_rejection_pct"});
            for (const auto& rep : reports) {
                if (!rep.stage2_ran) {
                    w.row({rep.period, "0", "", "", "", "", "", "", ""});
                    continue;
                }
                std::vector<std::string> row = {rep.period, std::to_string(rep.iv.n_links)};
                for (int c = 0; c < kNumChannels; ++c)
                    row.push_back(format_fixed(rep.mean_first_stage_F[static_cast<size_t>(c)], 1));
                row.push_back(std::isfinite(rep.sargan_rejection_rate)
                                  ? format_fixed(100.0 * rep.sargan_rejection_rate, 1)
                                  : std::string());
                row.push_back(format_fixed(100.0 * rep.dwh_rejection_rate, 1));
                w.row(row);
            }
        }
        {
            CsvWriter w((out / "bootstrap_ci.csv").string());
            w.row({"period", "channel", "share_pct", "lo95_pct", "hi95_pct"});
            for (const auto& rep : reports) {
                if (!rep.iv.available) continue;
                for (int c = 0; c < kNumChannels; ++c)
                    w.row({rep.period, pd::channel_label(c), pd::fmt_pct(rep.iv.shares(c)),
                           pd::fmt_pct(rep.iv_ci.ci[static_cast<size_t>(c)].first),
                           pd::fmt_pct(rep.iv_ci.ci[static_cast<size_t>(c)].second)});
            }
        }
        {
            CsvWriter w((out / "sensitivity.csv").string());
            w.row({"period", "channel", "robustness_value"});
            for (const auto& rep : reports) {
                if (!rep.stage2_ran) continue;
                for (int c = 0; c < kNumChannels; ++c)
                    w.row({rep.period, pd::channel_label(c),
                           format_fixed(rep.mean_robustness[static_cast<size_t>(c)], 4)});
            }
        }
        {
            CsvWriter w((out / "identification_status.csv").string());
            w.row({"period", "iv_dominant", "lp_h5_dominant", "rigobon_dominant", "status"});
            for (const auto& rep : reports) {
                std::string lp_dom;
                if (auto it = rep.lp.find(5); it != rep.lp.end() && it->second.available)
                    lp_dom = it->second.dominant;
                w.row({rep.period, rep.iv.available ? rep.iv.dominant : "", lp_dom,
                       rep.rigobon.available ? rep.rigobon.dominant : "",
                       rep.status ? rep.status->label() : ""});
            }
        }
    }
    if (artifacts.manifest) {
        json manifest;
        manifest["config"] = config_to_json(config);
        manifest["seed"] = config.seed;
        manifest["threshold"] = threshold;
        manifest["versions"] = {{"contagion", CONTAGION_VERSION},
                                {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." +
                                              std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                              std::to_string(EIGEN_MINOR_VERSION)}};
        std::ofstream mf(out / "run_manifest.json", std::ios::binary);
        mf << manifest.dump(2) << "\n";
    }

    return reports;
}

} // namespace contagion
