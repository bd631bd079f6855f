#pragma once

#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "poseng/prompt.hpp"
#include "poseng/search.hpp"

namespace poseng {

enum class TemplateKind { Rag, Icl };

inline TemplateKind template_kind_from_string(const std::string& s) {
    if (s == "rag") return TemplateKind::Rag;
    if (s == "icl") return TemplateKind::Icl;
    throw std::invalid_argument("unknown template kind '" + s + "'");
}

struct RagSlots {
    std::string instruction;
    std::vector<DocumentSlot> documents;
    std::string question;
};

struct IclSlots {
    std::string instruction;
    std::vector<ExampleSlot> examples;
    std::string final_query;
};

using SampleSlots = std::variant<RagSlots, IclSlots>;

inline TemplateKind kind_of(const SampleSlots& slots) {
    return std::holds_alternative<RagSlots>(slots) ? TemplateKind::Rag
                                                   : TemplateKind::Icl;
}

struct SampleRecord {
    std::string id;
    SampleSlots slots;
    std::vector<std::string> answers;
};

struct TaskDataset {
    std::vector<SampleRecord> samples;
    std::string split;       // train | test
    std::string provenance;  // generator description or file path

    void check() const {
        if (samples.empty()) throw std::invalid_argument("dataset is empty");
        for (const SampleRecord& s : samples) {
            if (s.answers.empty()) {
                throw std::invalid_argument("sample '" + s.id + "' has no answers");
            }
        }
    }
};

inline SegmentedPrompt render_slots(const SampleSlots& slots,
                                    const TokenizerFn& tokenize,
                                    const IclStyle& style = {}) {
    if (const RagSlots* rag = std::get_if<RagSlots>(&slots)) {
        return render_rag(rag->instruction, rag->documents, rag->question, tokenize);
    }
    const IclSlots& icl = std::get<IclSlots>(slots);
    return render_icl(icl.instruction, icl.examples, icl.final_query, tokenize, style);
}

inline std::vector<Sample> render_dataset(const TaskDataset& dataset,
                                          const TokenizerFn& tokenize,
                                          const IclStyle& style = {}) {
    dataset.check();
    std::vector<Sample> out;
    out.reserve(dataset.samples.size());
    for (const SampleRecord& record : dataset.samples) {
        out.push_back(
            {record.id, render_slots(record.slots, tokenize, style), record.answers});
    }
    return out;
}

namespace detail {

inline void reject_unknown_keys(const nlohmann::json& obj,
                                std::initializer_list<const char*> allowed,
                                const std::string& where) {
    for (const auto& [key, value] : obj.items()) {
        bool known = false;
        for (const char* a : allowed) known |= key == a;
        if (!known) {
            throw std::invalid_argument("unknown key '" + key + "' in " + where);
        }
    }
}

inline SampleSlots slots_from_json(const nlohmann::json& j, TemplateKind kind,
                                   const std::string& where) {
    if (kind == TemplateKind::Rag) {
        reject_unknown_keys(j, {"instruction", "documents", "question"}, where);
        RagSlots slots;
        slots.instruction = j.at("instruction").get<std::string>();
        for (const nlohmann::json& d : j.at("documents")) {
            reject_unknown_keys(d, {"title", "passage"}, where + ".documents");
            slots.documents.push_back({d.at("title").get<std::string>(),
                                       d.at("passage").get<std::string>()});
        }
        slots.question = j.at("question").get<std::string>();
        return slots;
    }
    reject_unknown_keys(j, {"instruction", "examples", "query"}, where);
    IclSlots slots;
    slots.instruction = j.at("instruction").get<std::string>();
    for (const nlohmann::json& e : j.at("examples")) {
        reject_unknown_keys(e, {"query", "label"}, where + ".examples");
        slots.examples.push_back(
            {e.at("query").get<std::string>(), e.at("label").get<std::string>()});
    }
    slots.final_query = j.at("query").get<std::string>();
    return slots;
}

}  // namespace detail

// JSON Lines, one sample per line: {"slots": {...}, "answers": [...]}.
inline TaskDataset load_dataset_jsonl(const std::filesystem::path& path,
                                      TemplateKind kind, const std::string& split) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open dataset file: " + path.string());
    }
    TaskDataset dataset;
    dataset.split = split;
    dataset.provenance = path.string();
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const std::exception& e) {
            throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                                     ": " + e.what());
        }
        const std::string where =
            path.filename().string() + ":" + std::to_string(line_no);
        detail::reject_unknown_keys(j, {"id", "slots", "answers"}, where);
        SampleRecord record;
        record.id = j.contains("id") ? j.at("id").get<std::string>()
                                     : split + "-" + std::to_string(line_no);
        record.slots = detail::slots_from_json(j.at("slots"), kind, where);
        record.answers = j.at("answers").get<std::vector<std::string>>();
        dataset.samples.push_back(std::move(record));
    }
    dataset.check();
    return dataset;
}

}  // namespace poseng
