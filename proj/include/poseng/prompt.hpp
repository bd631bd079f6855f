#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "poseng/position_map.hpp"

namespace poseng {

using TokenId = int;
using TokenizerFn = std::function<std::vector<TokenId>(std::string_view)>;

enum class SegmentRole { Instruction, Document, Question, Example, Query };

inline const char* role_name(SegmentRole r) {
    switch (r) {
        case SegmentRole::Instruction: return "instruction";
        case SegmentRole::Document: return "document";
        case SegmentRole::Question: return "question";
        case SegmentRole::Example: return "example";
        case SegmentRole::Query: return "query";
    }
    return "?";
}

struct Segment {
    SegmentRole role;
    std::string text;
    std::vector<TokenId> tokens;
};

// Gap labels name the boundary between adjacent segments; a label may repeat
// (every inter-example boundary shares one label and therefore one width).
struct SegmentedPrompt {
    std::vector<Segment> segments;
    std::vector<std::string> boundary_labels;  // size = segments - 1

    std::size_t total_tokens() const {
        std::size_t n = 0;
        for (const Segment& s : segments) n += s.tokens.size();
        return n;
    }

    std::vector<std::size_t> segment_lengths() const {
        std::vector<std::size_t> lengths;
        lengths.reserve(segments.size());
        for (const Segment& s : segments) lengths.push_back(s.tokens.size());
        return lengths;
    }

    std::string full_text() const {
        std::string text;
        for (const Segment& s : segments) text += s.text;
        return text;
    }

    std::vector<TokenId> all_tokens() const {
        std::vector<TokenId> tokens;
        tokens.reserve(total_tokens());
        for (const Segment& s : segments) {
            tokens.insert(tokens.end(), s.tokens.begin(), s.tokens.end());
        }
        return tokens;
    }
};

struct DocumentSlot {
    std::string title;
    std::string passage;
};

struct ExampleSlot {
    std::string query;
    std::string label;
};

// Field labels of the in-context template ("Review"/"Sentiment" style).
struct IclStyle {
    std::string item = "Review";
    std::string category = "Sentiment";
};

inline constexpr const char* kGapA = "gap_A";
inline constexpr const char* kGapMid = "gap_mid";
inline constexpr const char* kGapB = "gap_B";

namespace detail {

inline Segment make_segment(SegmentRole role, std::string text,
                            const TokenizerFn& tokenize) {
    Segment seg{role, std::move(text), {}};
    seg.tokens = tokenize(seg.text);
    return seg;
}

}  // namespace detail

// Three segments: instruction / documents / question. The question segment
// repeats the instruction. Boundaries carry gap_A and gap_B. A boundary sits
// immediately after the last token of the earlier segment, so inter-segment
// separators belong to the following segment.
inline SegmentedPrompt render_rag(const std::string& instruction,
                                  std::span<const DocumentSlot> documents,
                                  const std::string& question,
                                  const TokenizerFn& tokenize) {
    if (documents.empty()) {
        throw std::invalid_argument("render_rag: need at least one document");
    }
    SegmentedPrompt prompt;
    prompt.segments.push_back(
        detail::make_segment(SegmentRole::Instruction, instruction, tokenize));

    std::string doc_text;
    for (const DocumentSlot& doc : documents) {
        doc_text += "\n\nDocument (Title: " + doc.title + ") " + doc.passage;
    }
    prompt.segments.push_back(
        detail::make_segment(SegmentRole::Document, std::move(doc_text), tokenize));

    std::string question_text =
        "\n\n" + instruction + "\nQuestion: " + question + "\nAnswer:";
    prompt.segments.push_back(detail::make_segment(
        SegmentRole::Question, std::move(question_text), tokenize));

    prompt.boundary_labels = {kGapA, kGapB};
    return prompt;
}

// Segments: instruction / example_1 .. example_k / query. The boundary before
// example_1 is gap_A, every inter-example boundary is gap_mid, and the
// boundary before the query is gap_B.
inline SegmentedPrompt render_icl(const std::string& instruction,
                                  std::span<const ExampleSlot> examples,
                                  const std::string& final_query,
                                  const TokenizerFn& tokenize,
                                  const IclStyle& style = {}) {
    if (examples.empty()) {
        throw std::invalid_argument("render_icl: need at least one example");
    }
    SegmentedPrompt prompt;
    prompt.segments.push_back(
        detail::make_segment(SegmentRole::Instruction, instruction, tokenize));

    for (const ExampleSlot& ex : examples) {
        std::string text = "\n\n" + style.item + ": " + ex.query + "\n" +
                           style.category + ": " + ex.label;
        prompt.segments.push_back(
            detail::make_segment(SegmentRole::Example, std::move(text), tokenize));
    }

    std::string query_text = "\n\nNow, you are given the following " + style.item +
                             ".\n" + style.item + ": " + final_query +
                             "\nPlease output its " + style.category +
                             " according to the examples. Only output its " +
                             style.category +
                             " without outputing anything else.\n" + style.category +
                             ":";
    prompt.segments.push_back(
        detail::make_segment(SegmentRole::Query, std::move(query_text), tokenize));

    prompt.boundary_labels.assign(prompt.segments.size() - 1, kGapMid);
    prompt.boundary_labels.front() = kGapA;
    prompt.boundary_labels.back() = kGapB;
    return prompt;
}

// Expands the per-label widths over the prompt's boundaries and builds the
// position map. Every boundary label must have a width in theta.
inline PositionMap gaps_to_position_map(const SegmentedPrompt& prompt,
                                        const GapVector& theta) {
    theta.check();
    std::vector<std::int64_t> widths;
    widths.reserve(prompt.boundary_labels.size());
    for (const std::string& label : prompt.boundary_labels) {
        const std::int64_t* w = theta.find(label);
        if (w == nullptr) {
            throw std::invalid_argument("gaps_to_position_map: no width for label '" +
                                        label + "'");
        }
        widths.push_back(*w);
    }
    return from_gaps(prompt.segment_lengths(), widths);
}

}  // namespace poseng
