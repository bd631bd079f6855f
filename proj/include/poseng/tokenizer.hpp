#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "poseng/prompt.hpp"

namespace poseng {

// Byte-level tokenizer: one token per byte, ids 0..255, plus an end-of-text
// special. Fully deterministic, no external assets.
struct ByteTokenizer {
    static constexpr TokenId kEndOfText = 256;
    static constexpr int kVocabSize = 257;

    static std::vector<TokenId> encode(std::string_view text) {
        std::vector<TokenId> ids;
        ids.reserve(text.size());
        for (unsigned char c : text) ids.push_back(static_cast<TokenId>(c));
        return ids;
    }

    // Specials decode to nothing.
    static std::string decode(std::span<const TokenId> ids) {
        std::string text;
        text.reserve(ids.size());
        for (TokenId id : ids) {
            if (id >= 0 && id < 256) text.push_back(static_cast<char>(id));
        }
        return text;
    }

    static TokenizerFn fn() {
        return [](std::string_view text) { return encode(text); };
    }
};

}  // namespace poseng
