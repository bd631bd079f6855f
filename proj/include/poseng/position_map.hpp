#pragma once

#include <algorithm>
#include <cstdint>
#include <cstddef>
#include <numeric>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace poseng {

// Strictly increasing map from original token index to edited position index.
// edited[0] equals the number of placeholder positions before the first token.
struct PositionMap {
    std::vector<std::int64_t> edited;

    std::size_t size() const { return edited.size(); }
    bool empty() const { return edited.empty(); }
    std::int64_t operator[](std::size_t i) const { return edited[i]; }

    bool operator==(const PositionMap&) const = default;
};

// Named non-negative gap widths at segment boundaries, in declaration order.
struct GapVector {
    std::vector<std::pair<std::string, std::int64_t>> entries;

    GapVector() = default;
    GapVector(std::initializer_list<std::pair<std::string, std::int64_t>> init)
        : entries(init) {
        check();
    }

    void check() const {
        for (std::size_t i = 0; i < entries.size(); ++i) {
            if (entries[i].second < 0) {
                throw std::invalid_argument("gap width for '" + entries[i].first +
                                            "' is negative");
            }
            for (std::size_t j = i + 1; j < entries.size(); ++j) {
                if (entries[i].first == entries[j].first) {
                    throw std::invalid_argument("duplicate gap label '" +
                                                entries[i].first + "'");
                }
            }
        }
    }

    std::size_t size() const { return entries.size(); }

    const std::int64_t* find(const std::string& label) const {
        for (const auto& [name, width] : entries) {
            if (name == label) return &width;
        }
        return nullptr;
    }

    std::int64_t at(const std::string& label) const {
        if (const std::int64_t* w = find(label)) return *w;
        throw std::invalid_argument("no gap width for label '" + label + "'");
    }

    std::vector<std::int64_t> widths() const {
        std::vector<std::int64_t> out;
        out.reserve(entries.size());
        for (const auto& e : entries) out.push_back(e.second);
        return out;
    }

    bool operator==(const GapVector&) const = default;

    std::string to_string() const {
        std::ostringstream os;
        os << '(';
        for (std::size_t i = 0; i < entries.size(); ++i) {
            if (i) os << ", ";
            os << entries[i].first << '=' << entries[i].second;
        }
        os << ')';
        return os.str();
    }
};

// Orders gap vectors by width sequence in label declaration order.
inline bool lexicographic_less(const GapVector& a, const GapVector& b) {
    const std::size_t n = std::min(a.entries.size(), b.entries.size());
    for (std::size_t i = 0; i < n; ++i) {
        if (a.entries[i].second != b.entries[i].second) {
            return a.entries[i].second < b.entries[i].second;
        }
    }
    return a.entries.size() < b.entries.size();
}

// counts[0] placeholders precede token 0; counts[i+1] follow token i.
struct PlaceholderCounts {
    std::vector<std::int64_t> counts;

    bool operator==(const PlaceholderCounts&) const = default;
};

struct MapViolation {
    bool ok = true;
    std::size_t first = 0;   // offending index pair, valid when !ok
    std::size_t second = 0;
    std::string message;
};

inline MapViolation validate(const PositionMap& map) {
    if (!map.edited.empty() && map.edited[0] < 0) {
        return {false, 0, 0, "edited index 0 is negative"};
    }
    for (std::size_t i = 1; i < map.edited.size(); ++i) {
        if (map.edited[i] <= map.edited[i - 1]) {
            std::ostringstream os;
            os << "edited indices not strictly increasing at (" << i - 1 << ", "
               << i << "): " << map.edited[i - 1] << " -> " << map.edited[i];
            return {false, i - 1, i, os.str()};
        }
    }
    return {};
}

inline void require_valid(const PositionMap& map) {
    if (MapViolation v = validate(map); !v.ok) {
        throw std::invalid_argument("invalid position map: " + v.message);
    }
}

inline PositionMap identity_map(std::size_t n) {
    PositionMap map;
    map.edited.resize(n);
    std::iota(map.edited.begin(), map.edited.end(), std::int64_t{0});
    return map;
}

// Tokens of segment k are offset by the total gap width at boundaries before k.
// Relative positions within a segment are unchanged.
inline PositionMap from_gaps(std::span<const std::size_t> segment_lengths,
                             std::span<const std::int64_t> boundary_gaps) {
    if (segment_lengths.empty()) {
        throw std::invalid_argument("from_gaps: need at least one segment");
    }
    if (boundary_gaps.size() != segment_lengths.size() - 1) {
        std::ostringstream os;
        os << "from_gaps: " << segment_lengths.size() << " segments need "
           << segment_lengths.size() - 1 << " boundary gaps, got "
           << boundary_gaps.size();
        throw std::invalid_argument(os.str());
    }
    PositionMap map;
    std::int64_t next = 0;
    for (std::size_t k = 0; k < segment_lengths.size(); ++k) {
        if (k > 0) {
            if (boundary_gaps[k - 1] < 0) {
                throw std::invalid_argument("from_gaps: negative gap width");
            }
            next += boundary_gaps[k - 1];
        }
        for (std::size_t i = 0; i < segment_lengths[k]; ++i) {
            map.edited.push_back(next++);
        }
    }
    return map;
}

inline PositionMap from_gaps(std::span<const std::size_t> segment_lengths,
                             const GapVector& gaps) {
    gaps.check();
    const std::vector<std::int64_t> widths = gaps.widths();
    return from_gaps(segment_lengths, widths);
}

// counts[0] = tau(0); counts[i+1] = tau(i+1) - tau(i) - 1; trailing count is 0.
inline PlaceholderCounts to_placeholder_counts(const PositionMap& map) {
    require_valid(map);
    PlaceholderCounts out;
    out.counts.resize(map.size() + 1, 0);
    if (map.empty()) return out;
    out.counts[0] = map.edited[0];
    for (std::size_t i = 0; i + 1 < map.size(); ++i) {
        out.counts[i + 1] = map.edited[i + 1] - map.edited[i] - 1;
    }
    return out;
}

inline PositionMap from_placeholder_counts(const PlaceholderCounts& counts) {
    for (std::int64_t c : counts.counts) {
        if (c < 0) throw std::invalid_argument("placeholder count is negative");
    }
    PositionMap map;
    if (counts.counts.empty()) return map;
    const std::size_t n = counts.counts.size() - 1;
    map.edited.reserve(n);
    std::int64_t pos = 0;
    for (std::size_t i = 0; i < n; ++i) {
        pos += counts.counts[i];
        map.edited.push_back(pos);
        ++pos;
    }
    return map;
}

// Largest edited index; callers compare against the model context window.
inline std::int64_t max_position(const PositionMap& map) {
    if (map.empty()) {
        throw std::domain_error("max_position: empty position map");
    }
    return map.edited.back();
}

}  // namespace poseng
