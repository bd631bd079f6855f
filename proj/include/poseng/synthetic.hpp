#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "poseng/dataset.hpp"

namespace poseng {

// Uppercase letters that never occur in the fixed template text, so a
// tracked-byte readout cannot be confused by "Document", "Question" etc.
inline const std::string& synthetic_alphabet() {
    static const std::string alphabet = "BCEFGHIJKLMUVWXYZ";
    return alphabet;
}

inline std::vector<unsigned char> synthetic_tracked_bytes() {
    const std::string& alphabet = synthetic_alphabet();
    return {alphabet.begin(), alphabet.end()};
}

namespace detail {

inline std::string lowercase_filler(std::mt19937_64& rng, int words) {
    std::uniform_int_distribution<int> word_len(3, 7);
    std::uniform_int_distribution<int> letter(0, 25);
    std::string text;
    for (int w = 0; w < words; ++w) {
        if (w) text.push_back(' ');
        const int len = word_len(rng);
        for (int i = 0; i < len; ++i) {
            text.push_back(static_cast<char>('a' + letter(rng)));
        }
    }
    return text;
}

}  // namespace detail

// Key-value retrieval at desk scale: one fact document carries the answer (a
// run of a single tracked letter keyed by another letter) and the remaining
// documents are lowercase distractor passages. The question names the key.
// Regeneration from the same arguments is bit-identical.
inline TaskDataset synthetic_retrieval_task(std::uint64_t seed, int n_samples,
                                            int distractor_count,
                                            const std::string& split = "train") {
    if (n_samples < 1) {
        throw std::invalid_argument("synthetic_retrieval_task: need n_samples >= 1");
    }
    if (distractor_count < 0) {
        throw std::invalid_argument("synthetic_retrieval_task: negative distractors");
    }
    const std::string& alphabet = synthetic_alphabet();
    constexpr int kValueRun = 24;

    std::mt19937_64 rng(seed);
    TaskDataset dataset;
    dataset.split = split;
    dataset.provenance = "synthetic_retrieval(seed=" + std::to_string(seed) +
                         ", n=" + std::to_string(n_samples) +
                         ", distractors=" + std::to_string(distractor_count) + ")";
    for (int s = 0; s < n_samples; ++s) {
        std::string letters = alphabet;
        std::shuffle(letters.begin(), letters.end(), rng);
        const char key = letters[0];
        const char value = letters[1];

        RagSlots slots;
        slots.instruction =
            "read the documents and answer with the special letter only.";
        DocumentSlot fact;
        fact.title = "facts";
        fact.passage = std::string("the key ") + key + " holds " +
                       std::string(kValueRun, value) + " and nothing else";
        std::vector<DocumentSlot> docs(1, fact);
        for (int d = 0; d < distractor_count; ++d) {
            docs.push_back({"notes", detail::lowercase_filler(rng, 7)});
        }
        std::shuffle(docs.begin(), docs.end(), rng);
        slots.documents = std::move(docs);
        slots.question = std::string("which letter does the key ") + key + " hold?";

        SampleRecord record;
        record.id = "synthetic-" + std::to_string(s);
        record.slots = std::move(slots);
        record.answers = {std::string(1, value)};
        dataset.samples.push_back(std::move(record));
    }
    return dataset;
}

}  // namespace poseng
