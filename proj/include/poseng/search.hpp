#pragma once

#include <atomic>
#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "poseng/position_map.hpp"
#include "poseng/prompt.hpp"

namespace poseng {

struct SearchAxis {
    std::string label;
    std::vector<std::int64_t> values;  // non-empty, non-negative, ascending
};

inline SearchAxis arithmetic_axis(std::string label, std::int64_t start,
                                  std::int64_t step, std::int64_t stop) {
    if (step <= 0 || stop < start || start < 0) {
        throw std::invalid_argument("arithmetic_axis: need 0 <= start <= stop, step > 0");
    }
    SearchAxis axis{std::move(label), {}};
    for (std::int64_t v = start; v <= stop; v += step) axis.values.push_back(v);
    return axis;
}

struct SumConstraint {
    std::vector<std::string> labels;
    std::int64_t bound = 0;
};

struct SearchSpace {
    std::vector<SearchAxis> axes;
    std::optional<SumConstraint> constraint;
};

inline void validate(const SearchSpace& space) {
    if (space.axes.empty()) {
        throw std::invalid_argument("search space has no axes");
    }
    std::set<std::string> seen;
    for (const SearchAxis& axis : space.axes) {
        if (!seen.insert(axis.label).second) {
            throw std::invalid_argument("duplicate search axis '" + axis.label + "'");
        }
        if (axis.values.empty()) {
            throw std::invalid_argument("empty candidate list for '" + axis.label + "'");
        }
        for (std::size_t i = 0; i < axis.values.size(); ++i) {
            if (axis.values[i] < 0 ||
                (i > 0 && axis.values[i] <= axis.values[i - 1])) {
                throw std::invalid_argument("candidate values for '" + axis.label +
                                            "' must be ascending and non-negative");
            }
        }
    }
    if (space.constraint) {
        for (const std::string& label : space.constraint->labels) {
            if (!seen.count(label)) {
                throw std::invalid_argument("constraint references unknown label '" +
                                            label + "'");
            }
        }
    }
}

// All candidates in lexicographic order over the axes in declaration order,
// with constraint-violating points excluded. The all-minimum point comes first.
inline std::vector<GapVector> enumerate(const SearchSpace& space) {
    validate(space);
    std::vector<GapVector> out;
    std::vector<std::size_t> idx(space.axes.size(), 0);
    for (;;) {
        GapVector theta;
        for (std::size_t a = 0; a < space.axes.size(); ++a) {
            theta.entries.emplace_back(space.axes[a].label,
                                       space.axes[a].values[idx[a]]);
        }
        bool keep = true;
        if (space.constraint) {
            std::int64_t sum = 0;
            for (const std::string& label : space.constraint->labels) {
                sum += theta.at(label);
            }
            keep = sum <= space.constraint->bound;
        }
        if (keep) out.push_back(std::move(theta));

        // odometer step, last axis fastest
        std::size_t a = space.axes.size();
        while (a > 0) {
            --a;
            if (++idx[a] < space.axes[a].values.size()) break;
            idx[a] = 0;
            if (a == 0) return out;
        }
    }
}

struct Sample {
    std::string id;
    SegmentedPrompt prompt;
    std::vector<std::string> answers;
};

// Scores one rendered sample under a position map; deterministic for fixed
// inputs. Implementations must be callable from several workers unless
// thread_safe() says otherwise, in which case the search runs serially.
class Evaluator {
public:
    virtual ~Evaluator() = default;
    virtual double score(const Sample& sample, const PositionMap& map) const = 0;
    virtual bool thread_safe() const { return true; }
};

// Optional score store keyed by (theta, sample id). Implementations serialize
// their own writes.
class ScoreCache {
public:
    virtual ~ScoreCache() = default;
    virtual std::optional<double> lookup(const GapVector& theta,
                                         const std::string& sample_id) = 0;
    virtual void store(const GapVector& theta, const std::string& sample_id,
                       double score) = 0;
};

struct ScoreRow {
    GapVector theta;
    double mean = 0.0;   // over successfully scored samples
    std::size_t count = 0;
    bool valid = true;
    std::vector<std::pair<std::string, std::string>> failures;  // sample id, error
};

struct ScoreTable {
    std::vector<ScoreRow> rows;

    const ScoreRow* find(const GapVector& theta) const {
        for (const ScoreRow& row : rows) {
            if (row.theta == theta) return &row;
        }
        return nullptr;
    }
};

// Highest mean among valid rows, ties broken by the lexicographically
// smallest theta.
inline GapVector best_config(const ScoreTable& table) {
    const ScoreRow* best = nullptr;
    for (const ScoreRow& row : table.rows) {
        if (!row.valid) continue;
        if (best == nullptr || row.mean > best->mean ||
            (row.mean == best->mean && lexicographic_less(row.theta, best->theta))) {
            best = &row;
        }
    }
    if (best == nullptr) {
        throw std::domain_error("best_config: no valid candidates in score table");
    }
    return best->theta;
}

struct SearchResult {
    ScoreTable table;
    GapVector best;
};

// Brute-force optimization: every candidate is scored on every sample and the
// argmax of the mean wins. Evaluator failures mark the candidate invalid and
// are surfaced in the table. The result does not depend on evaluation order
// or worker count.
inline SearchResult grid_search(const SearchSpace& space, const Evaluator& evaluator,
                                std::span<const Sample> samples, int workers = 1,
                                ScoreCache* cache = nullptr) {
    if (samples.empty()) {
        throw std::invalid_argument("grid_search: empty dataset");
    }
    const std::vector<GapVector> candidates = enumerate(space);
    for (const Sample& sample : samples) {
        for (const std::string& label : sample.prompt.boundary_labels) {
            bool known = false;
            for (const SearchAxis& axis : space.axes) known |= axis.label == label;
            if (!known) {
                throw std::invalid_argument(
                    "grid_search: prompt boundary '" + label +
                    "' is not an axis of the search space");
            }
        }
    }

    const std::size_t jobs = candidates.size() * samples.size();
    std::vector<double> scores(jobs, 0.0);
    std::vector<std::string> errors(jobs);

    auto run_job = [&](std::size_t job) {
        const std::size_t c = job / samples.size();
        const std::size_t s = job % samples.size();
        const GapVector& theta = candidates[c];
        const Sample& sample = samples[s];
        try {
            if (cache != nullptr) {
                if (std::optional<double> hit = cache->lookup(theta, sample.id)) {
                    scores[job] = *hit;
                    return;
                }
            }
            const PositionMap map = gaps_to_position_map(sample.prompt, theta);
            const double score = evaluator.score(sample, map);
            if (!(score >= 0.0 && score <= 1.0)) {
                throw std::runtime_error("score outside [0, 1]");
            }
            scores[job] = score;
            if (cache != nullptr) cache->store(theta, sample.id, score);
        } catch (const std::exception& e) {
            errors[job] = e.what();
            if (errors[job].empty()) errors[job] = "unknown evaluator error";
        }
    };

    int n_workers = evaluator.thread_safe() ? workers : 1;
    n_workers = std::max(1, std::min<int>(n_workers, static_cast<int>(jobs)));
    if (n_workers == 1) {
        for (std::size_t job = 0; job < jobs; ++job) run_job(job);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        pool.reserve(n_workers);
        for (int w = 0; w < n_workers; ++w) {
            pool.emplace_back([&] {
                for (;;) {
                    const std::size_t job = next.fetch_add(1);
                    if (job >= jobs) return;
                    run_job(job);
                }
            });
        }
        for (std::thread& t : pool) t.join();
    }

    SearchResult result;
    result.table.rows.reserve(candidates.size());
    for (std::size_t c = 0; c < candidates.size(); ++c) {
        ScoreRow row;
        row.theta = candidates[c];
        double sum = 0.0;
        std::size_t ok = 0;
        for (std::size_t s = 0; s < samples.size(); ++s) {
            const std::size_t job = c * samples.size() + s;
            if (errors[job].empty()) {
                sum += scores[job];
                ++ok;
            } else {
                row.failures.emplace_back(samples[s].id, errors[job]);
            }
        }
        row.valid = row.failures.empty();
        row.count = ok;
        row.mean = ok > 0 ? sum / static_cast<double>(ok) : 0.0;
        result.table.rows.push_back(std::move(row));
    }
    result.best = best_config(result.table);
    return result;
}

}  // namespace poseng
