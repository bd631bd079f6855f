#pragma once

#include <cstdint>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "poseng/position_map.hpp"
#include "poseng/search.hpp"

namespace poseng {

// One dataset paired with a document (or example) count.
struct ExperimentSetting {
    std::string dataset;
    int units = 0;

    std::string id() const { return dataset + "/" + std::to_string(units); }
    bool operator==(const ExperimentSetting&) const = default;
};

// Rank of s inside the multiset, scaled to [0, 100]:
// 100 * (count below + 0.5 * count of other equal elements) / (n - 1).
inline double percentile_rank(std::span<const double> scores, double s) {
    if (scores.size() < 2) {
        throw std::domain_error("percentile_rank: need at least two scores");
    }
    std::size_t below = 0;
    std::size_t equal = 0;
    for (double x : scores) {
        if (x < s) ++below;
        else if (x == s) ++equal;
    }
    if (equal == 0) {
        throw std::domain_error("percentile_rank: s is not a member of the scores");
    }
    const double tied_others = static_cast<double>(equal - 1);
    return 100.0 * (static_cast<double>(below) + 0.5 * tied_others) /
           static_cast<double>(scores.size() - 1);
}

struct PercentileReport {
    std::vector<GapVector> thetas;
    std::vector<double> average;  // parallel to thetas, in [0, 100]
    std::vector<ExperimentSetting> settings;
};

// Per-setting percentile of each theta's mean score, averaged across settings.
// Every table must cover the identical theta set.
inline PercentileReport average_percentiles(
    std::span<const std::pair<ExperimentSetting, ScoreTable>> tables) {
    if (tables.empty()) {
        throw std::invalid_argument("average_percentiles: no experiment settings");
    }
    {
        std::set<std::string> ids;
        for (const auto& [setting, table] : tables) {
            if (!ids.insert(setting.id()).second) {
                throw std::invalid_argument("duplicate experiment setting '" +
                                            setting.id() + "'");
            }
        }
    }

    const ScoreTable& reference = tables.front().second;
    std::set<std::string> reference_set;
    for (const ScoreRow& row : reference.rows) {
        reference_set.insert(row.theta.to_string());
    }
    for (const auto& [setting, table] : tables) {
        std::set<std::string> this_set;
        for (const ScoreRow& row : table.rows) this_set.insert(row.theta.to_string());
        if (this_set == reference_set) continue;
        std::string message =
            "theta sets differ between settings; '" + setting.id() + "'";
        std::string missing, extra;
        for (const std::string& t : reference_set) {
            if (!this_set.count(t)) missing += (missing.empty() ? "" : " ") + t;
        }
        for (const std::string& t : this_set) {
            if (!reference_set.count(t)) extra += (extra.empty() ? "" : " ") + t;
        }
        if (!missing.empty()) message += " lacks " + missing;
        if (!extra.empty()) message += (missing.empty() ? " adds " : ", adds ") + extra;
        throw std::invalid_argument(message);
    }

    PercentileReport report;
    for (const ScoreRow& row : reference.rows) report.thetas.push_back(row.theta);
    report.average.assign(report.thetas.size(), 0.0);
    for (const auto& [setting, table] : tables) {
        report.settings.push_back(setting);
        std::vector<double> means;
        means.reserve(table.rows.size());
        for (const ScoreRow& row : table.rows) means.push_back(row.mean);
        for (std::size_t i = 0; i < report.thetas.size(); ++i) {
            const ScoreRow* row = table.find(report.thetas[i]);
            report.average[i] += percentile_rank(means, row->mean);
        }
    }
    for (double& avg : report.average) {
        avg /= static_cast<double>(tables.size());
    }
    return report;
}

// Highest average percentile, ties broken by lexicographically smallest theta.
inline GapVector universal_config(const PercentileReport& report) {
    if (report.thetas.empty()) {
        throw std::domain_error("universal_config: empty percentile report");
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < report.thetas.size(); ++i) {
        if (report.average[i] > report.average[best] ||
            (report.average[i] == report.average[best] &&
             lexicographic_less(report.thetas[i], report.thetas[best]))) {
            best = i;
        }
    }
    return report.thetas[best];
}

struct HeatmapCell {
    std::int64_t theta_a = 0;
    std::int64_t theta_b = 0;
    double percentile = 0.0;
};

// Grid rows for a two-label (gap_A, gap_B) report; constraint-excluded points
// are simply absent.
inline std::vector<HeatmapCell> heatmap_export(const PercentileReport& report) {
    std::vector<HeatmapCell> cells;
    cells.reserve(report.thetas.size());
    for (std::size_t i = 0; i < report.thetas.size(); ++i) {
        const GapVector& theta = report.thetas[i];
        const std::int64_t* a = theta.find(kGapA);
        const std::int64_t* b = theta.find(kGapB);
        if (theta.entries.size() != 2 || a == nullptr || b == nullptr) {
            throw std::invalid_argument(
                "heatmap_export: theta labels must be exactly gap_A and gap_B, got " +
                theta.to_string());
        }
        cells.push_back({*a, *b, report.average[i]});
    }
    return cells;
}

}  // namespace poseng
