#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "poseng/config.hpp"
#include "poseng/dataset.hpp"
#include "poseng/percentile.hpp"
#include "poseng/scoring.hpp"
#include "poseng/search.hpp"
#include "poseng/synthetic.hpp"
#include "poseng/tokenizer.hpp"
#include "poseng/toy_model.hpp"

namespace poseng {

// Greedy-decodes the toy model under a position map and scores the output by
// exact match. Candidates whose edited positions reach the context window are
// rejected with a diagnostic the search surfaces.
class ToyModelEvaluator : public Evaluator {
public:
    ToyModelEvaluator(const ToyModel& model, int max_new_tokens,
                      std::int64_t context_window)
        : model_(model),
          max_new_tokens_(max_new_tokens),
          context_window_(context_window) {}

    double score(const Sample& sample, const PositionMap& map) const override {
        const std::int64_t last = max_position(map);
        if (last >= context_window_) {
            throw std::runtime_error(
                "context overflow: edited position " + std::to_string(last) +
                " reaches the context window of " + std::to_string(context_window_));
        }
        const std::vector<TokenId> generated =
            model_.generate(sample.prompt.all_tokens(), map, max_new_tokens_);
        const std::string text = ByteTokenizer::decode(generated);
        return static_cast<double>(exact_match_score(text, sample.answers));
    }

private:
    const ToyModel& model_;
    int max_new_tokens_;
    std::int64_t context_window_;
};

inline nlohmann::json theta_to_json(const GapVector& theta) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& [label, width] : theta.entries) {
        out.push_back(nlohmann::json::array({label, width}));
    }
    return out;
}

inline GapVector theta_from_json(const nlohmann::json& j) {
    GapVector theta;
    for (const nlohmann::json& entry : j) {
        theta.entries.emplace_back(entry.at(0).get<std::string>(),
                                   entry.at(1).get<std::int64_t>());
    }
    theta.check();
    return theta;
}

inline nlohmann::json table_to_json(const ScoreTable& table) {
    nlohmann::json rows = nlohmann::json::array();
    for (const ScoreRow& row : table.rows) {
        nlohmann::json failures = nlohmann::json::array();
        for (const auto& [sample, error] : row.failures) {
            failures.push_back(nlohmann::json::array({sample, error}));
        }
        rows.push_back({{"theta", theta_to_json(row.theta)},
                        {"mean", row.mean},
                        {"count", row.count},
                        {"valid", row.valid},
                        {"failures", failures}});
    }
    return rows;
}

inline ScoreTable table_from_json(const nlohmann::json& rows) {
    ScoreTable table;
    for (const nlohmann::json& r : rows) {
        ScoreRow row;
        row.theta = theta_from_json(r.at("theta"));
        row.mean = r.at("mean").get<double>();
        row.count = r.at("count").get<std::size_t>();
        row.valid = r.at("valid").get<bool>();
        for (const nlohmann::json& f : r.at("failures")) {
            row.failures.emplace_back(f.at(0).get<std::string>(),
                                      f.at(1).get<std::string>());
        }
        table.rows.push_back(std::move(row));
    }
    return table;
}

struct RunReport {
    ExperimentSetting setting;
    GapVector baseline_theta;
    GapVector best_theta;
    double baseline_train_score = 0.0;
    double best_train_score = 0.0;
    double baseline_test_score = 0.0;
    double best_test_score = 0.0;
    double absolute_improvement = 0.0;
    std::size_t train_samples = 0;
    std::size_t test_samples = 0;
    ScoreTable train_table;

    nlohmann::json to_json() const {
        return {{"setting", {{"dataset", setting.dataset}, {"units", setting.units}}},
                {"baseline_theta", theta_to_json(baseline_theta)},
                {"best_theta", theta_to_json(best_theta)},
                {"baseline_train_score", baseline_train_score},
                {"best_train_score", best_train_score},
                {"baseline_test_score", baseline_test_score},
                {"best_test_score", best_test_score},
                {"absolute_improvement", absolute_improvement},
                {"train_samples", train_samples},
                {"test_samples", test_samples},
                {"train_table", table_to_json(train_table)}};
    }

    std::string to_string() const { return to_json().dump(2) + "\n"; }

    static RunReport from_json(const nlohmann::json& j) {
        RunReport report;
        report.setting.dataset = j.at("setting").at("dataset").get<std::string>();
        report.setting.units = j.at("setting").at("units").get<int>();
        report.baseline_theta = theta_from_json(j.at("baseline_theta"));
        report.best_theta = theta_from_json(j.at("best_theta"));
        report.baseline_train_score = j.at("baseline_train_score").get<double>();
        report.best_train_score = j.at("best_train_score").get<double>();
        report.baseline_test_score = j.at("baseline_test_score").get<double>();
        report.best_test_score = j.at("best_test_score").get<double>();
        report.absolute_improvement = j.at("absolute_improvement").get<double>();
        report.train_samples = j.at("train_samples").get<std::size_t>();
        report.test_samples = j.at("test_samples").get<std::size_t>();
        report.train_table = table_from_json(j.at("train_table"));
        return report;
    }
};

inline GapVector baseline_theta_of(const SearchSpace& space) {
    GapVector theta;
    for (const SearchAxis& axis : space.axes) {
        theta.entries.emplace_back(axis.label, 0);
    }
    return theta;
}

inline double mean_score(const Evaluator& evaluator, std::span<const Sample> samples,
                         const GapVector& theta) {
    if (samples.empty()) {
        throw std::invalid_argument("mean_score: empty sample list");
    }
    double sum = 0.0;
    for (const Sample& sample : samples) {
        sum += evaluator.score(sample, gaps_to_position_map(sample.prompt, theta));
    }
    return sum / static_cast<double>(samples.size());
}

struct PipelineData {
    TaskDataset train;
    TaskDataset test;
};

inline PipelineData load_pipeline_data(const RunConfig& cfg) {
    PipelineData data;
    if (cfg.dataset.kind == "synthetic_retrieval") {
        data.train = synthetic_retrieval_task(cfg.dataset.seed,
                                              cfg.dataset.train_samples,
                                              cfg.dataset.distractor_count, "train");
        data.test = synthetic_retrieval_task(cfg.dataset.seed + 1,
                                             cfg.dataset.test_samples,
                                             cfg.dataset.distractor_count, "test");
    } else {
        data.train =
            load_dataset_jsonl(cfg.dataset.train_path, cfg.template_kind, "train");
        data.test =
            load_dataset_jsonl(cfg.dataset.test_path, cfg.template_kind, "test");
    }
    return data;
}

inline int setting_units(const TaskDataset& dataset) {
    const SampleSlots& slots = dataset.samples.front().slots;
    if (const RagSlots* rag = std::get_if<RagSlots>(&slots)) {
        return static_cast<int>(rag->documents.size());
    }
    return static_cast<int>(std::get<IclSlots>(slots).examples.size());
}

// Grid search on the train split, then the winning configuration and the
// baseline are applied to the test split.
inline RunReport run_pipeline(const RunConfig& cfg, int workers = 1,
                              ScoreCache* cache = nullptr) {
    const PipelineData data = load_pipeline_data(cfg);
    const TokenizerFn tokenize = ByteTokenizer::fn();
    const std::vector<Sample> train =
        render_dataset(data.train, tokenize, cfg.icl_style);
    const std::vector<Sample> test = render_dataset(data.test, tokenize, cfg.icl_style);

    const ToyModel model = build_model(cfg.model);
    const ToyModelEvaluator evaluator(model, cfg.model.max_new_tokens,
                                      cfg.model.context_window);

    const SearchResult result = grid_search(cfg.space, evaluator, train, workers, cache);

    RunReport report;
    report.setting.dataset = cfg.setting_id;
    report.setting.units = setting_units(data.train);
    report.train_samples = train.size();
    report.test_samples = test.size();
    report.train_table = result.table;
    report.best_theta = result.best;
    report.baseline_theta = baseline_theta_of(cfg.space);

    if (const ScoreRow* row = result.table.find(report.baseline_theta)) {
        report.baseline_train_score = row->mean;
    } else {
        report.baseline_train_score =
            mean_score(evaluator, train, report.baseline_theta);
    }
    if (const ScoreRow* row = result.table.find(report.best_theta)) {
        report.best_train_score = row->mean;
    }
    report.baseline_test_score = mean_score(evaluator, test, report.baseline_theta);
    report.best_test_score = mean_score(evaluator, test, report.best_theta);
    report.absolute_improvement =
        report.best_test_score - report.baseline_test_score;
    return report;
}

inline void write_heatmap_csv(std::span<const HeatmapCell> cells,
                              const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot open heatmap file for writing: " +
                                 path.string());
    }
    out << "theta_a,theta_b,percentile\n";
    for (const HeatmapCell& cell : cells) {
        out << cell.theta_a << ',' << cell.theta_b << ','
            << nlohmann::json(cell.percentile).dump() << '\n';
    }
    if (!out) {
        throw std::runtime_error("failed writing heatmap file: " + path.string());
    }
}

}  // namespace poseng
