// Command-line front end for the contagion detection-and-attribution
// pipeline. Subcommands mirror the stages: ingest / detect / attribute run
// parts of the flow, pipeline runs everything, synth generates fixture
// data, report pretty-prints a finished run.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>

#include "contagion/pipeline.hpp"

namespace fs = std::filesystem;
using namespace contagion;

namespace {

struct CommonOptions {
    std::string config_path;
    std::string out_dir;
    std::string periods;
    uint64_t seed = 0;
    bool seed_set = false;
    int threads = 0;
};

void add_common(CLI::App* cmd, CommonOptions& opt, bool config_required = true) {
    auto* c = cmd->add_option("--config", opt.config_path, "pipeline config JSON");
    if (config_required) c->required()->check(CLI::ExistingFile);
    cmd->add_option("--out", opt.out_dir, "output directory (overrides config)");
    cmd->add_option("--periods", opt.periods, "comma-separated sub-period names to run");
    cmd->add_option("--seed", opt.seed, "RNG seed (overrides config)")
        ->each([&](const std::string&) { opt.seed_set = true; });
    cmd->add_option("--threads", opt.threads, "worker threads (overrides config)");
}

json load_json(const std::string& path) {
    std::ifstream f(path);
    if (!f.is_open()) throw ConfigError("cannot open config " + path);
    json j;
    f >> j;
    return j;
}

std::vector<std::string> split_names(const std::string& csv) {
    std::vector<std::string> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const std::string t = trim(item);
        if (!t.empty()) out.push_back(t);
    }
    return out;
}

PipelineConfig resolve_config(const CommonOptions& opt, const json& j) {
    PipelineConfig cfg = config_from_json(j);
    if (!opt.out_dir.empty()) cfg.out_dir = opt.out_dir;
    if (opt.seed_set) cfg.seed = opt.seed;
    if (opt.threads > 0) cfg.threads = opt.threads;
    if (!opt.periods.empty()) cfg.period_filter = split_names(opt.periods);
    return cfg;
}

int run_ingest(const CommonOptions& opt) {
    const json j = load_json(opt.config_path);
    PipelineConfig cfg = resolve_config(opt, j);
    cfg.validate();
    fs::create_directories(cfg.out_dir);

    std::ifstream pf(cfg.prices_path);
    if (!pf.is_open()) throw ConfigError("cannot open prices file " + cfg.prices_path);
    PricePanel prices = load_price_csv(pf);
    std::ifstream clf(cfg.classes_path);
    if (!clf.is_open()) throw ConfigError("cannot open classes file " + cfg.classes_path);
    apply_market_classes(prices, load_market_classes(clf));
    const ReturnPanel returns = compute_log_returns(prices);

    std::ifstream chf(cfg.channels_path);
    if (!chf.is_open()) throw ConfigError("cannot open channels file " + cfg.channels_path);
    ChannelPanel channels = build_channels(
        align_channel_table(load_channel_csv(chf), returns.dates), cfg.schedule);
    const Eigen::VectorXd factor = global_factor(returns);

    {
        CsvWriter w((fs::path(cfg.out_dir) / "returns.csv").string());
        std::vector<std::string> header = {"date"};
        for (const auto& id : returns.market_ids) header.push_back(id);
        w.row(header);
        for (Eigen::Index t = 0; t < returns.rows(); ++t) {
            std::vector<std::string> row = {returns.dates[static_cast<size_t>(t)]};
            for (Eigen::Index i = 0; i < returns.n_markets(); ++i)
                row.push_back(format_double(returns.returns(t, i)));
            w.row(row);
        }
    }
    {
        CsvWriter w((fs::path(cfg.out_dir) / "channels_built.csv").string());
        std::vector<std::string> header = {"date"};
        for (const auto& name : channel_names()) header.push_back(name);
        w.row(header);
        for (Eigen::Index t = 0; t < channels.channels.rows(); ++t) {
            std::vector<std::string> row = {channels.dates[static_cast<size_t>(t)]};
            for (int c = 0; c < kNumChannels; ++c)
                row.push_back(format_double(channels.channels(t, c)));
            w.row(row);
        }
    }
    {
        CsvWriter w((fs::path(cfg.out_dir) / "global_factor.csv").string());
        w.row({"date", "global_factor"});
        for (Eigen::Index t = 0; t < factor.size(); ++t)
            w.row({returns.dates[static_cast<size_t>(t)], format_double(factor(t))});
    }
    std::cout << "ingest: " << returns.rows() << " return rows, " << returns.n_markets()
              << " markets -> " << cfg.out_dir << "\n";
    return 0;
}

int run_stage(const CommonOptions& opt, const PipelineArtifacts& artifacts,
              const std::string& what) {
    const json j = load_json(opt.config_path);
    PipelineConfig cfg = resolve_config(opt, j);
    const auto reports = run_pipeline(cfg, artifacts);
    std::cout << what << ": " << reports.size() << " sub-period(s) -> " << cfg.out_dir << "\n";
    for (const auto& rep : reports) {
        std::cout << "  " << rep.period << ": " << rep.summary.n_edges << " edges";
        if (rep.status) std::cout << ", " << rep.status->label();
        std::cout << "\n";
    }
    return 0;
}

int run_synth(const CommonOptions& opt) {
    const json j = load_json(opt.config_path);
    if (!j.contains("synth")) throw ConfigError("config has no 'synth' block");
    SynthConfig cfg = synth_config_from_json(j.at("synth"));
    if (opt.seed_set) cfg.seed = opt.seed;
    std::string out = opt.out_dir;
    if (out.empty() && j.contains("paths") && j.at("paths").contains("out"))
        out = j.at("paths").at("out").get<std::string>();
    if (out.empty()) throw ConfigError("no output directory given");
    const auto paths = emit_synth_fixture(cfg, out);
    std::cout << "synth: wrote " << paths.prices << ", " << paths.channels << ", "
              << paths.classes << "\n";
    return 0;
}

void print_table(const std::string& title, const CsvTable& t) {
    std::cout << "\n== " << title << " ==\n";
    std::vector<size_t> width(t.header.size(), 0);
    for (size_t c = 0; c < t.header.size(); ++c) width[c] = t.header[c].size();
    for (const auto& row : t.rows)
        for (size_t c = 0; c < row.size() && c < width.size(); ++c)
            width[c] = std::max(width[c], row[c].size());
    auto put = [&](const std::vector<std::string>& row) {
        for (size_t c = 0; c < row.size(); ++c)
            std::cout << std::left << std::setw(static_cast<int>(width[c]) + 2) << row[c];
        std::cout << "\n";
    };
    put(t.header);
    for (const auto& row : t.rows) put(row);
}

int run_report(const CommonOptions& opt) {
    std::string dir = opt.out_dir;
    if (dir.empty() && !opt.config_path.empty()) {
        const json j = load_json(opt.config_path);
        if (j.contains("paths") && j.at("paths").contains("out"))
            dir = j.at("paths").at("out").get<std::string>();
    }
    if (dir.empty()) throw ConfigError("report needs --out or a config with paths.out");
    const std::vector<std::pair<std::string, std::string>> files = {
        {"Stage 1 detection", "stage1_summary.csv"},
        {"Channel shares (IV/2SLS)", "shares_iv.csv"},
        {"Diagnostics", "diagnostics.csv"},
        {"Identification status", "identification_status.csv"},
        {"Communities", "communities.csv"},
    };
    for (const auto& [title, file] : files) {
        const fs::path p = fs::path(dir) / file;
        if (!fs::exists(p)) continue;
        print_table(title, read_csv_file(p.string()));
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"wavelet-quantile contagion detection and channel attribution"};
    app.require_subcommand(1);

    CommonOptions ingest_opt, detect_opt, attr_opt, pipe_opt, synth_opt, report_opt;
    auto* c_ingest = app.add_subcommand("ingest", "load inputs, emit aligned panels");
    add_common(c_ingest, ingest_opt);
    auto* c_detect = app.add_subcommand("detect", "stage-1 detection artifacts");
    add_common(c_detect, detect_opt);
    auto* c_attr = app.add_subcommand("attribute", "stage-2 attribution artifacts");
    add_common(c_attr, attr_opt);
    auto* c_pipe = app.add_subcommand("pipeline", "full two-stage run");
    add_common(c_pipe, pipe_opt);
    auto* c_synth = app.add_subcommand("synth", "generate a synthetic fixture");
    add_common(c_synth, synth_opt);
    auto* c_report = app.add_subcommand("report", "print tables from a finished run");
    add_common(c_report, report_opt, /*config_required=*/false);

    CLI11_PARSE(app, argc, argv);

    try {
        if (c_ingest->parsed()) return run_ingest(ingest_opt);
        if (c_detect->parsed()) {
            PipelineArtifacts a;
            a.stage2 = false;
            a.manifest = false;
            return run_stage(detect_opt, a, "detect");
        }
        if (c_attr->parsed()) {
            PipelineArtifacts a;
            a.stage1 = false;
            a.network = false;
            a.manifest = false;
            return run_stage(attr_opt, a, "attribute");
        }
        if (c_pipe->parsed()) return run_stage(pipe_opt, PipelineArtifacts{}, "pipeline");
        if (c_synth->parsed()) return run_synth(synth_opt);
        if (c_report->parsed()) return run_report(report_opt);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
