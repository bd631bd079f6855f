#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "poseng/position_map.hpp"
#include "poseng/prompt.hpp"

namespace poseng {

struct PositionMapFile {
    std::vector<TokenId> tokens;
    PositionMap map;

    bool operator==(const PositionMapFile&) const = default;
};

// Wire format, version 1:
//   {"version":1, "tokens":[...], "position_ids":[...],
//    "placeholder_gaps":[{"after_index":i,"count":c}, ...]}
// position_ids are strictly increasing; after_index -1 is the gap before the
// first token. Gaps of width zero are omitted.
inline void export_position_map(const SegmentedPrompt& prompt, const PositionMap& map,
                                const std::filesystem::path& path) {
    if (prompt.total_tokens() != map.size()) {
        throw std::invalid_argument("export_position_map: map length (" +
                                    std::to_string(map.size()) +
                                    ") does not match prompt token count (" +
                                    std::to_string(prompt.total_tokens()) + ")");
    }
    require_valid(map);
    const PlaceholderCounts counts = to_placeholder_counts(map);
    nlohmann::json gaps = nlohmann::json::array();
    for (std::size_t i = 0; i < counts.counts.size(); ++i) {
        if (counts.counts[i] == 0) continue;
        gaps.push_back({{"after_index", static_cast<std::int64_t>(i) - 1},
                        {"count", counts.counts[i]}});
    }
    nlohmann::json j{{"version", 1},
                     {"tokens", prompt.all_tokens()},
                     {"position_ids", map.edited},
                     {"placeholder_gaps", gaps}};

    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot open position map file for writing: " +
                                 path.string());
    }
    out << j.dump(2) << '\n';
    if (!out) {
        throw std::runtime_error("failed writing position map file: " + path.string());
    }
}

inline PositionMapFile import_position_map(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open position map file: " + path.string());
    }
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw std::runtime_error("malformed position map file " + path.string() +
                                 ": " + e.what());
    }
    if (!j.contains("version") || j.at("version").get<int>() != 1) {
        throw std::runtime_error("unsupported position map file version in " +
                                 path.string());
    }
    PositionMapFile file;
    file.tokens = j.at("tokens").get<std::vector<TokenId>>();
    file.map.edited = j.at("position_ids").get<std::vector<std::int64_t>>();
    if (file.tokens.size() != file.map.size()) {
        throw std::runtime_error("position map file " + path.string() +
                                 ": tokens and position_ids lengths differ");
    }
    if (MapViolation v = validate(file.map); !v.ok) {
        throw std::runtime_error("position map file " + path.string() + ": " +
                                 v.message);
    }
    if (j.contains("placeholder_gaps")) {
        const PlaceholderCounts expected = to_placeholder_counts(file.map);
        PlaceholderCounts declared;
        declared.counts.assign(expected.counts.size(), 0);
        for (const nlohmann::json& gap : j.at("placeholder_gaps")) {
            const std::int64_t after = gap.at("after_index").get<std::int64_t>();
            if (after < -1 ||
                after + 1 >= static_cast<std::int64_t>(declared.counts.size())) {
                throw std::runtime_error("position map file " + path.string() +
                                         ": gap after_index out of range");
            }
            declared.counts[after + 1] = gap.at("count").get<std::int64_t>();
        }
        if (!(declared == expected)) {
            throw std::runtime_error("position map file " + path.string() +
                                     ": placeholder_gaps disagree with position_ids");
        }
    }
    return file;
}

}  // namespace poseng
