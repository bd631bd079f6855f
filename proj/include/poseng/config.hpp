#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "poseng/dataset.hpp"
#include "poseng/search.hpp"
#include "poseng/synthetic.hpp"
#include "poseng/toy_model.hpp"

namespace poseng {

struct DatasetConfig {
    std::string kind;  // synthetic_retrieval | file
    std::uint64_t seed = 7;
    int train_samples = 12;
    int test_samples = 8;
    int distractor_count = 2;
    std::filesystem::path train_path;
    std::filesystem::path test_path;
};

struct ModelConfig {
    std::string init = "copying";  // copying | random
    int dim = 64;
    int heads = 1;
    int layers = 1;
    PositionalScheme scheme = PositionalScheme::LinearBias;
    double rope_base = 10000.0;
    std::vector<double> slopes;
    std::uint64_t seed = 1;
    std::int64_t context_window = 4096;
    int max_new_tokens = 1;
};

struct RunConfig {
    std::string setting_id;
    TemplateKind template_kind = TemplateKind::Rag;
    IclStyle icl_style;
    DatasetConfig dataset;
    SearchSpace space;
    ModelConfig model;
};

namespace detail {

inline PositionalScheme scheme_from_string(const std::string& s) {
    if (s == "sinusoidal") return PositionalScheme::SinusoidalAbsolute;
    if (s == "rotary") return PositionalScheme::Rotary;
    if (s == "linear_bias") return PositionalScheme::LinearBias;
    throw std::invalid_argument("unknown positional scheme '" + s + "'");
}

inline SearchSpace space_from_json(const nlohmann::json& j) {
    reject_unknown_keys(j, {"axes", "sum_constraint"}, "search_space");
    SearchSpace space;
    for (const nlohmann::json& a : j.at("axes")) {
        reject_unknown_keys(a, {"label", "start", "step", "stop", "values"},
                            "search_space.axes");
        if (a.contains("values")) {
            space.axes.push_back({a.at("label").get<std::string>(),
                                  a.at("values").get<std::vector<std::int64_t>>()});
        } else {
            space.axes.push_back(arithmetic_axis(
                a.at("label").get<std::string>(), a.at("start").get<std::int64_t>(),
                a.at("step").get<std::int64_t>(), a.at("stop").get<std::int64_t>()));
        }
    }
    if (j.contains("sum_constraint")) {
        const nlohmann::json& c = j.at("sum_constraint");
        reject_unknown_keys(c, {"labels", "bound"}, "search_space.sum_constraint");
        space.constraint = SumConstraint{c.at("labels").get<std::vector<std::string>>(),
                                         c.at("bound").get<std::int64_t>()};
    }
    validate(space);
    return space;
}

}  // namespace detail

inline RunConfig run_config_from_json(const nlohmann::json& j) {
    detail::reject_unknown_keys(
        j, {"setting_id", "template", "icl_style", "dataset", "search_space", "model"},
        "run config");
    RunConfig cfg;
    cfg.template_kind = template_kind_from_string(j.at("template").get<std::string>());
    if (j.contains("icl_style")) {
        const nlohmann::json& s = j.at("icl_style");
        detail::reject_unknown_keys(s, {"item", "category"}, "icl_style");
        if (s.contains("item")) cfg.icl_style.item = s.at("item").get<std::string>();
        if (s.contains("category")) {
            cfg.icl_style.category = s.at("category").get<std::string>();
        }
    }

    const nlohmann::json& d = j.at("dataset");
    detail::reject_unknown_keys(d,
                                {"kind", "seed", "train_samples", "test_samples",
                                 "distractor_count", "train_path", "test_path"},
                                "dataset");
    cfg.dataset.kind = d.at("kind").get<std::string>();
    if (cfg.dataset.kind == "synthetic_retrieval") {
        if (cfg.template_kind != TemplateKind::Rag) {
            throw std::invalid_argument(
                "synthetic_retrieval generates RAG slots; set template to 'rag'");
        }
        if (d.contains("seed")) cfg.dataset.seed = d.at("seed").get<std::uint64_t>();
        if (d.contains("train_samples")) {
            cfg.dataset.train_samples = d.at("train_samples").get<int>();
        }
        if (d.contains("test_samples")) {
            cfg.dataset.test_samples = d.at("test_samples").get<int>();
        }
        if (d.contains("distractor_count")) {
            cfg.dataset.distractor_count = d.at("distractor_count").get<int>();
        }
    } else if (cfg.dataset.kind == "file") {
        cfg.dataset.train_path = d.at("train_path").get<std::string>();
        cfg.dataset.test_path = d.at("test_path").get<std::string>();
    } else {
        throw std::invalid_argument("unknown dataset kind '" + cfg.dataset.kind + "'");
    }

    cfg.space = detail::space_from_json(j.at("search_space"));

    const nlohmann::json& m = j.at("model");
    detail::reject_unknown_keys(m,
                                {"init", "dim", "heads", "layers", "scheme",
                                 "rope_base", "slopes", "seed", "context_window",
                                 "max_new_tokens"},
                                "model");
    if (m.contains("init")) cfg.model.init = m.at("init").get<std::string>();
    if (cfg.model.init != "copying" && cfg.model.init != "random") {
        throw std::invalid_argument("model init must be 'copying' or 'random'");
    }
    if (m.contains("dim")) cfg.model.dim = m.at("dim").get<int>();
    if (m.contains("heads")) cfg.model.heads = m.at("heads").get<int>();
    if (m.contains("layers")) cfg.model.layers = m.at("layers").get<int>();
    cfg.model.scheme = detail::scheme_from_string(m.at("scheme").get<std::string>());
    if (m.contains("rope_base")) cfg.model.rope_base = m.at("rope_base").get<double>();
    if (m.contains("slopes")) {
        cfg.model.slopes = m.at("slopes").get<std::vector<double>>();
    }
    if (m.contains("seed")) cfg.model.seed = m.at("seed").get<std::uint64_t>();
    if (m.contains("context_window")) {
        cfg.model.context_window = m.at("context_window").get<std::int64_t>();
    }
    if (m.contains("max_new_tokens")) {
        cfg.model.max_new_tokens = m.at("max_new_tokens").get<int>();
    }

    cfg.setting_id = j.contains("setting_id") ? j.at("setting_id").get<std::string>()
                                              : cfg.dataset.kind;
    return cfg;
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open config file: " + path.string());
    }
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw std::runtime_error("malformed config " + path.string() + ": " + e.what());
    }
    try {
        return run_config_from_json(j);
    } catch (const std::exception& e) {
        throw std::runtime_error("bad config " + path.string() + ": " + e.what());
    }
}

inline ToyModel build_model(const ModelConfig& cfg) {
    ToyModelConfig tm;
    tm.dim = cfg.dim;
    tm.heads = cfg.heads;
    tm.layers = cfg.layers;
    tm.scheme = cfg.scheme;
    tm.rope_base = cfg.rope_base;
    tm.slopes = cfg.slopes;
    tm.seed = cfg.seed;
    if (cfg.init == "copying") {
        const std::vector<unsigned char> tracked = synthetic_tracked_bytes();
        return ToyModel::copying(tm, tracked);
    }
    return ToyModel::random(tm);
}

}  // namespace poseng
