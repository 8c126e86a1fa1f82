#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <map>

#include "contagion/pipeline.hpp"

using namespace contagion;
namespace fs = std::filesystem;

namespace {

std::map<std::string, std::string> read_dir_bytes(const fs::path& dir) {
    std::map<std::string, std::string> out;
    for (const auto& entry : fs::recursive_directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        std::ifstream f(entry.path(), std::ios::binary);
        std::string bytes((std::istreambuf_iterator<char>(f)),
                          std::istreambuf_iterator<char>());
        out[fs::relative(entry.path(), dir).string()] = std::move(bytes);
    }
    return out;
}

json fixture_json() {
    std::ifstream f(fs::path(TEST_FIXTURE_DIR) / "e2e_config.json");
    REQUIRE(f.is_open());
    json j;
    f >> j;
    return j;
}

struct E2ESetup {
    fs::path root;
    PipelineConfig config;
};

E2ESetup prepare_e2e(const std::string& tag) {
    const fs::path root = fs::temp_directory_path() / ("contagion_e2e_" + tag);
    fs::remove_all(root);
    fs::create_directories(root / "fixture");

    json j = fixture_json();
    SynthConfig scfg = synth_config_from_json(j.at("synth"));
    emit_synth_fixture(scfg, (root / "fixture").string());

    PipelineConfig cfg = config_from_json(j);
    cfg.prices_path = (root / "fixture" / "prices.csv").string();
    cfg.channels_path = (root / "fixture" / "channels.csv").string();
    cfg.classes_path = (root / "fixture" / "classes.csv").string();
    cfg.out_dir = (root / "out").string();
    return {root, cfg};
}

std::string first_cell(const std::vector<std::string>& row) { return row.empty() ? "" : row[0]; }

} // namespace

TEST_CASE("identification classifier reproduces the published status labels") {
    struct Case {
        std::vector<std::string> dominants;
        std::string expect;
    };
    const std::vector<Case> cases = {
        {{"Financial", "Financial"}, "Robust (Financial)"},
        {{"Trade", "Geopolitical", "Behavioural"}, "Fragile (3 distinct)"},
        {{"Financial", "Financial", "Financial"}, "Robust (Financial)"},
        {{"Monetary", "Financial"}, "Fragile (2 distinct)"},
        {{"Financial", "Behavioural"}, "Fragile (2 distinct)"},
        {{"Geopolitical", "Monetary", "Behavioural"}, "Fragile (3 distinct)"},
        {{"Monetary", "Financial"}, "Fragile (2 distinct)"},
        {{"Monetary", "Financial"}, "Fragile (2 distinct)"},
    };
    for (const auto& c : cases) {
        auto st = classify_identification(c.dominants);
        CHECK(st.label() == c.expect);
    }
    // status is robust exactly when some label has multiplicity >= 2
    auto st = classify_identification({"Trade", "Monetary", "Trade"});
    CHECK(st.robust);
    CHECK(st.robust_channel == "Trade");
    CHECK_THROWS_AS(classify_identification({"Trade"}), Unclassifiable);
}

TEST_CASE("pipeline config parsing and validation") {
    json j = fixture_json();
    PipelineConfig cfg = config_from_json(j);
    CHECK(cfg.schedule.size() == 2);
    CHECK(cfg.scales == std::vector<int>{5});
    CHECK(cfg.reporting_quantile == 0.5);
    CHECK(cfg.bootstrap_replications == 300);
    CHECK(cfg.threshold.mode == ThresholdSpec::Mode::baseline_q75);

    PipelineConfig bad = cfg;
    bad.quantiles = {1.5};
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.reporting_scale = 3;  // not among configured scales
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.schedule.clear();
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.bootstrap_replications = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);

    json fixed = json::parse(R"({"threshold": {"mode": "fixed", "value": 0.0331}})");
    PipelineConfig f = config_from_json(fixed);
    CHECK(f.threshold.mode == ThresholdSpec::Mode::fixed);
    CHECK(f.threshold.value == 0.0331);
    CHECK_THROWS_AS(config_from_json(json::parse(R"({"threshold": {"mode": "nope"}})")),
                    ConfigError);

    // manifest serialization round-trips the substantive fields
    PipelineConfig back = config_from_json(config_to_json(cfg));
    CHECK(back.schedule.size() == cfg.schedule.size());
    CHECK(back.seed == cfg.seed);
    CHECK(back.sargan_gate == cfg.sargan_gate);
}

TEST_CASE("synth config parsing") {
    json j = fixture_json().at("synth");
    SynthConfig cfg = synth_config_from_json(j);
    CHECK(cfg.n_markets == 6);
    CHECK(cfg.T == 3000);
    CHECK(cfg.comovement_weights[1] == 0.8);
    REQUIRE(cfg.coupling.size() == 3);
    CHECK(cfg.coupling[0].scale == 5);
    CHECK_THROWS_AS(synth_config_from_json(json::parse(R"({"channel_ar": [0.5]})")),
                    ConfigError);
}

TEST_CASE("full pipeline run on the bundled fixture") {
    auto setup = prepare_e2e("main");
    setup.config.threads = 2;
    setup.config.dump_wavelets = true;
    const auto reports = run_pipeline(setup.config);
    REQUIRE(reports.size() == 2);

    // the baseline threshold is computed once and reused everywhere
    for (const auto& rep : reports) CHECK(rep.threshold == reports[0].threshold);

    for (const auto& rep : reports) {
        CHECK(rep.summary.n_edges >= 2);
        CHECK(rep.stage2_ran);
        REQUIRE(rep.iv.available);
        // the generated dominant channel shows up in the attribution tables
        CHECK(rep.iv.dominant == "Financial");
        REQUIRE(rep.lp.count(1) == 1);
        CHECK(rep.lp.at(1).dominant == "Financial");
        CHECK(rep.iv.shares.sum() == Catch::Approx(1.0).margin(1e-12));
        CHECK(rep.status.has_value());
        // bootstrap intervals bracket the point estimate
        for (int c = 0; c < kNumChannels; ++c) {
            CHECK(rep.iv_ci.ci[static_cast<size_t>(c)].first <=
                  rep.iv.shares(c) + 1e-12);
            CHECK(rep.iv_ci.ci[static_cast<size_t>(c)].second >=
                  rep.iv.shares(c) - 1e-12);
        }
    }

    // emitted files and exact headers
    const fs::path out(setup.config.out_dir);
    const std::map<std::string, std::string> expected_headers = {
        {"stage1_summary.csv",
         "period,scale,tau,threshold,mean_wqte,max_wqte,density_pct,n_edges,top_transmitter,"
         "top_receiver"},
        {"edges_Calm.csv", "source,target,wqte"},
        {"edges_Stress.csv", "source,target,wqte"},
        {"shares_iv.csv",
         "period,trade_pct,financial_pct,geopolitical_pct,behavioural_pct,monetary_pct,dominant,"
         "n_links"},
        {"shares_lasso.csv",
         "period,trade_pct,financial_pct,geopolitical_pct,behavioural_pct,monetary_pct,dominant,"
         "n_links"},
        {"shares_lp_h1.csv",
         "period,trade_pct,financial_pct,geopolitical_pct,behavioural_pct,monetary_pct,dominant,"
         "n_links"},
        {"shares_lp_h5.csv",
         "period,trade_pct,financial_pct,geopolitical_pct,behavioural_pct,monetary_pct,dominant,"
         "n_links"},
        {"shares_lp_h22.csv",
         "period,trade_pct,financial_pct,geopolitical_pct,behavioural_pct,monetary_pct,dominant,"
         "n_links"},
        {"shares_rigobon.csv",
         "period,trade_pct,financial_pct,geopolitical_pct,behavioural_pct,monetary_pct,dominant,"
         "n_links"},
        {"diagnostics.csv",
         "period,n_links,f_trade,f_financial,f_geopolitical,f_behavioural,f_monetary,"
         "sargan_rejection_pct,dwh_rejection_pct"},
        {"bootstrap_ci.csv", "period,channel,share_pct,lo95_pct,hi95_pct"},
        {"sensitivity.csv", "period,channel,robustness_value"},
        {"communities.csv", "period,n_communities,modularity"},
        {"degree_shares.csv", "period,class,out_degree_share_pct,in_degree_share_pct"},
        {"identification_status.csv",
         "period,iv_dominant,lp_h5_dominant,rigobon_dominant,status"},
    };
    for (const auto& [file, header] : expected_headers) {
        INFO(file);
        REQUIRE(fs::exists(out / file));
        std::ifstream f(out / file);
        std::string first;
        std::getline(f, first);
        CHECK(trim(first) == header);
    }
    {
        REQUIRE(fs::exists(out / "run_manifest.json"));
        std::ifstream mf(out / "run_manifest.json");
        json manifest;
        mf >> manifest;
        CHECK(manifest.at("seed").get<uint64_t>() == setup.config.seed);
        CHECK(manifest.at("versions").contains("contagion"));
        CHECK(manifest.at("config").at("schedule").size() == 2);
    }
    {
        // optional per-market decomposition dump
        const fs::path wf = out / "wavelets" / "Calm" / "M0.csv";
        REQUIRE(fs::exists(wf));
        std::ifstream f(wf);
        std::string header;
        std::getline(f, header);
        CHECK(trim(header) == "date,d1,d2,d3,d4,d5,d6,smooth");
    }

    // stage1_summary carries one row per (period, scale, tau) cell with a
    // single shared threshold column
    auto summary = read_csv_file((out / "stage1_summary.csv").string());
    CHECK(summary.rows.size() == 2 * 3);  // 2 periods x 1 scale x 3 quantiles
    std::string threshold_cell = summary.rows[0][3];
    for (const auto& row : summary.rows) CHECK(row[3] == threshold_cell);

    // shares_iv rows match the in-memory reports
    auto iv_table = read_csv_file((out / "shares_iv.csv").string());
    REQUIRE(iv_table.rows.size() == 2);
    CHECK(first_cell(iv_table.rows[0]) == "Calm");
    CHECK(iv_table.rows[0][6] == "Financial");
    CHECK(iv_table.rows[1][6] == "Financial");

    // determinism: a rerun into a fresh directory is byte-identical
    PipelineConfig rerun = setup.config;
    rerun.out_dir = (setup.root / "out2").string();
    run_pipeline(rerun);
    auto a = read_dir_bytes(out);
    auto b = read_dir_bytes(setup.root / "out2");
    REQUIRE(a.size() == b.size());
    for (const auto& [name, bytes] : a) {
        INFO(name);
        REQUIRE(b.count(name) == 1);
        CHECK(bytes == b.at(name));
    }
    fs::remove_all(setup.root);
}

TEST_CASE("an unreachable fixed threshold skips stage 2 with notice") {
    auto setup = prepare_e2e("skip");
    setup.config.threshold.mode = ThresholdSpec::Mode::fixed;
    setup.config.threshold.value = 1e9;
    const auto reports = run_pipeline(setup.config);
    REQUIRE(reports.size() == 2);
    for (const auto& rep : reports) {
        CHECK(rep.summary.n_edges == 0);
        CHECK_FALSE(rep.stage2_ran);
        CHECK_FALSE(rep.iv.available);
        REQUIRE_FALSE(rep.notices.empty());
        CHECK(rep.notices[0].find("stage 2 skipped") != std::string::npos);
    }
    // emitted stage-2 tables exist but carry no data rows for the periods
    auto iv_table = read_csv_file(
        (fs::path(setup.config.out_dir) / "shares_iv.csv").string());
    CHECK(iv_table.rows.empty());
    auto diag = read_csv_file(
        (fs::path(setup.config.out_dir) / "diagnostics.csv").string());
    REQUIRE(diag.rows.size() == 2);
    CHECK(diag.rows[0][2].empty());  // missing statistics stay empty cells
    fs::remove_all(setup.root);
}

TEST_CASE("the bundled schedule template parses and validates") {
    std::ifstream f(fs::path(TEST_FIXTURE_DIR) / ".." / ".." / "configs" / "g20_periods.json");
    REQUIRE(f.is_open());
    json j;
    f >> j;
    PipelineConfig cfg = config_from_json(j);
    CHECK(cfg.schedule.size() == 8);
    CHECK(cfg.schedule.front().name == "Pre-Crisis");
    CHECK(cfg.schedule.front().start == "2006-01-12");
    CHECK(cfg.schedule.back().end == "2026-03-18");
    CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("period filter restricts the run but keeps the baseline threshold") {
    auto setup = prepare_e2e("filter");
    setup.config.period_filter = {"Stress"};
    const auto reports = run_pipeline(setup.config);
    REQUIRE(reports.size() == 1);
    CHECK(reports[0].period == "Stress");

    auto full = prepare_e2e("filterfull");
    const auto all_reports = run_pipeline(full.config);
    CHECK(reports[0].threshold == all_reports[1].threshold);
    fs::remove_all(setup.root);
    fs::remove_all(full.root);
}
