#pragma once

#include <cctype>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace poseng {

// Lowercase, collapse whitespace runs to single spaces, and strip leading and
// trailing punctuation (and the whitespace that stripping exposes).
inline std::string normalize_answer_text(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    bool pending_space = false;
    for (unsigned char c : text) {
        if (std::isspace(c)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        out.push_back(static_cast<char>(std::tolower(c)));
    }
    std::size_t begin = 0;
    std::size_t end = out.size();
    auto strippable = [&](unsigned char c) { return std::ispunct(c) || c == ' '; };
    while (begin < end && strippable(static_cast<unsigned char>(out[begin]))) ++begin;
    while (end > begin && strippable(static_cast<unsigned char>(out[end - 1]))) --end;
    return out.substr(begin, end - begin);
}

// 1 iff any normalized answer is a substring of the normalized output.
inline int exact_match_score(std::string_view model_output,
                             std::span<const std::string> answers) {
    if (answers.empty()) {
        throw std::invalid_argument("exact_match_score: no acceptable answers");
    }
    const std::string output = normalize_answer_text(model_output);
    for (const std::string& answer : answers) {
        const std::string needle = normalize_answer_text(answer);
        if (!needle.empty() && output.find(needle) != std::string::npos) return 1;
    }
    return 0;
}

}  // namespace poseng
