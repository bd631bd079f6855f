// Command line front end: grid searches, single-theta evaluation, percentile
// aggregation across runs, position-map export and candidate enumeration.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "poseng/config.hpp"
#include "poseng/map_io.hpp"
#include "poseng/percentile.hpp"
#include "poseng/pipeline.hpp"
#include "poseng/score_cache.hpp"
#include "poseng/search.hpp"
#include "poseng/synthetic.hpp"
#include "poseng/tokenizer.hpp"

namespace {

using namespace poseng;

GapVector parse_theta(const std::string& text) {
    GapVector theta;
    std::stringstream stream(text);
    std::string part;
    while (std::getline(stream, part, ',')) {
        const std::size_t eq = part.find('=');
        if (eq == std::string::npos) {
            throw std::invalid_argument("theta entries look like gap_A=1900, got '" +
                                        part + "'");
        }
        theta.entries.emplace_back(part.substr(0, eq),
                                   std::stoll(part.substr(eq + 1)));
    }
    theta.check();
    if (theta.entries.empty()) {
        throw std::invalid_argument("empty theta; pass e.g. gap_A=1900,gap_B=400");
    }
    return theta;
}

struct CommonOptions {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    int workers = 1;
    std::string out_dir = "poseng-out";
    std::string cache_path;
};

void add_common(CLI::App* cmd, CommonOptions& opts, bool needs_config = true) {
    auto* config = cmd->add_option("--config", opts.config_path,
                                   "run configuration file (JSON)");
    if (needs_config) config->required();
    cmd->add_option("--seed", opts.seed,
                    "override the dataset and model seeds from the config");
    cmd->add_option("--workers", opts.workers, "evaluation worker threads")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--out", opts.out_dir, "output directory");
    cmd->add_option("--cache", opts.cache_path, "score cache journal path");
}

RunConfig load_config(const CommonOptions& opts) {
    RunConfig cfg = load_run_config(opts.config_path);
    if (opts.seed) {
        cfg.dataset.seed = *opts.seed;
        cfg.model.seed = *opts.seed;
    }
    return cfg;
}

std::filesystem::path prepare_out(const CommonOptions& opts) {
    std::filesystem::path dir(opts.out_dir);
    std::filesystem::create_directories(dir);
    return dir;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

int cmd_search(const CommonOptions& opts) {
    const RunConfig cfg = load_config(opts);
    std::unique_ptr<JournalScoreCache> cache;
    if (!opts.cache_path.empty()) {
        cache = std::make_unique<JournalScoreCache>(opts.cache_path,
                                                    space_signature(cfg.space));
    }
    const RunReport report = run_pipeline(cfg, opts.workers, cache.get());
    const auto dir = prepare_out(opts);
    write_text(dir / "report.json", report.to_string());

    std::cout << "setting:        " << report.setting.id() << "\n"
              << "candidates:     " << report.train_table.rows.size() << "\n"
              << "best theta:     " << report.best_theta.to_string() << "\n"
              << "train score:    " << report.best_train_score << " (baseline "
              << report.baseline_train_score << ")\n"
              << "test score:     " << report.best_test_score << " (baseline "
              << report.baseline_test_score << ")\n"
              << "improvement:    " << report.absolute_improvement << "\n"
              << "report:         " << (dir / "report.json").string() << "\n";
    std::size_t invalid = 0;
    for (const ScoreRow& row : report.train_table.rows) invalid += row.valid ? 0 : 1;
    if (invalid > 0) {
        std::cout << "invalid:        " << invalid
                  << " candidate(s), see the failures field\n";
    }
    return 0;
}

int cmd_eval(const CommonOptions& opts, const std::string& theta_text,
             const std::string& split) {
    const RunConfig cfg = load_config(opts);
    const GapVector theta = parse_theta(theta_text);
    const PipelineData data = load_pipeline_data(cfg);
    const TaskDataset& dataset = split == "test" ? data.test : data.train;
    const std::vector<Sample> samples =
        render_dataset(dataset, ByteTokenizer::fn(), cfg.icl_style);
    const ToyModel model = build_model(cfg.model);
    const ToyModelEvaluator evaluator(model, cfg.model.max_new_tokens,
                                      cfg.model.context_window);
    const double mean = mean_score(evaluator, samples, theta);

    nlohmann::json out{{"theta", theta_to_json(theta)},
                       {"split", split},
                       {"samples", samples.size()},
                       {"mean_score", mean}};
    const auto dir = prepare_out(opts);
    write_text(dir / "eval.json", out.dump(2) + "\n");
    std::cout << "theta:      " << theta.to_string() << "\n"
              << "split:      " << split << " (" << samples.size() << " samples)\n"
              << "mean score: " << mean << "\n";
    return 0;
}

int cmd_enumerate(const CommonOptions& opts, bool count_only) {
    const RunConfig cfg = load_config(opts);
    const std::vector<GapVector> candidates = enumerate(cfg.space);
    if (!count_only) {
        for (const GapVector& theta : candidates) {
            std::cout << theta.to_string() << "\n";
        }
    }
    std::cout << candidates.size() << " candidate(s)\n";
    return 0;
}

int cmd_aggregate(const CommonOptions& opts, const std::vector<std::string>& inputs,
                  bool want_heatmap) {
    std::vector<std::pair<ExperimentSetting, ScoreTable>> tables;
    for (const std::string& input : inputs) {
        std::ifstream in(input);
        if (!in) throw std::runtime_error("cannot open report: " + input);
        nlohmann::json j;
        in >> j;
        const RunReport report = RunReport::from_json(j);
        tables.push_back({report.setting, report.train_table});
    }
    const PercentileReport report = average_percentiles(tables);
    const GapVector universal = universal_config(report);

    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t i = 0; i < report.thetas.size(); ++i) {
        rows.push_back({{"theta", theta_to_json(report.thetas[i])},
                        {"average_percentile", report.average[i]}});
    }
    nlohmann::json settings = nlohmann::json::array();
    for (const ExperimentSetting& s : report.settings) settings.push_back(s.id());
    const nlohmann::json out{{"settings", settings},
                             {"universal_theta", theta_to_json(universal)},
                             {"percentiles", rows}};

    const auto dir = prepare_out(opts);
    write_text(dir / "percentile_report.json", out.dump(2) + "\n");
    std::cout << "settings:        " << tables.size() << "\n"
              << "universal theta: " << universal.to_string() << "\n"
              << "report:          " << (dir / "percentile_report.json").string()
              << "\n";
    if (want_heatmap) {
        const std::vector<HeatmapCell> cells = heatmap_export(report);
        write_heatmap_csv(cells, dir / "heatmap.csv");
        std::cout << "heatmap:         " << (dir / "heatmap.csv").string() << "\n";
    }
    return 0;
}

int cmd_export(const CommonOptions& opts, const std::string& theta_text,
               const std::string& split, std::size_t sample_index) {
    const RunConfig cfg = load_config(opts);
    const GapVector theta = parse_theta(theta_text);
    const PipelineData data = load_pipeline_data(cfg);
    const TaskDataset& dataset = split == "test" ? data.test : data.train;
    const std::vector<Sample> samples =
        render_dataset(dataset, ByteTokenizer::fn(), cfg.icl_style);
    if (sample_index >= samples.size()) {
        throw std::invalid_argument("sample index " + std::to_string(sample_index) +
                                    " out of range; split has " +
                                    std::to_string(samples.size()) + " samples");
    }
    const Sample& sample = samples[sample_index];
    const PositionMap map = gaps_to_position_map(sample.prompt, theta);
    const auto dir = prepare_out(opts);
    const auto path = dir / "position_map.json";
    export_position_map(sample.prompt, map, path);
    std::cout << "sample:   " << sample.id << " (" << sample.prompt.total_tokens()
              << " tokens)\n"
              << "theta:    " << theta.to_string() << "\n"
              << "max pos:  " << max_position(map) << "\n"
              << "written:  " << path.string() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"position engineering toolkit"};
    app.require_subcommand(1);

    CommonOptions search_opts;
    CLI::App* search = app.add_subcommand("search", "grid search over gap widths");
    add_common(search, search_opts);

    CommonOptions eval_opts;
    std::string eval_theta;
    std::string eval_split = "test";
    CLI::App* eval = app.add_subcommand("eval", "score one theta on a split");
    add_common(eval, eval_opts);
    eval->add_option("--theta", eval_theta, "gap widths, e.g. gap_A=1900,gap_B=400")
        ->required();
    eval->add_option("--split", eval_split, "train or test")
        ->check(CLI::IsMember({"train", "test"}));

    CommonOptions enum_opts;
    bool count_only = false;
    CLI::App* enumerate = app.add_subcommand("enumerate", "list search candidates");
    add_common(enumerate, enum_opts);
    enumerate->add_flag("--count", count_only, "print only the candidate count");

    CommonOptions agg_opts;
    std::vector<std::string> agg_inputs;
    bool heatmap = false;
    CLI::App* aggregate =
        app.add_subcommand("aggregate", "percentile report across run reports");
    add_common(aggregate, agg_opts, /*needs_config=*/false);
    aggregate->add_option("reports", agg_inputs, "report.json files from searches")
        ->required();
    aggregate->add_flag("--heatmap", heatmap,
                        "also write heatmap.csv (gap_A/gap_B spaces)");

    CommonOptions export_opts;
    std::string export_theta;
    std::string export_split = "train";
    std::size_t export_sample = 0;
    CLI::App* exporter =
        app.add_subcommand("export", "write a position-map interchange file");
    add_common(exporter, export_opts);
    exporter->add_option("--theta", export_theta, "gap widths to apply")->required();
    exporter->add_option("--split", export_split, "train or test")
        ->check(CLI::IsMember({"train", "test"}));
    exporter->add_option("--sample", export_sample, "sample index within the split");

    CLI11_PARSE(app, argc, argv);

    try {
        if (search->parsed()) return cmd_search(search_opts);
        if (eval->parsed()) return cmd_eval(eval_opts, eval_theta, eval_split);
        if (enumerate->parsed()) return cmd_enumerate(enum_opts, count_only);
        if (aggregate->parsed()) return cmd_aggregate(agg_opts, agg_inputs, heatmap);
        if (exporter->parsed()) return cmd_export(export_opts, export_theta,
                                                  export_split, export_sample);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
