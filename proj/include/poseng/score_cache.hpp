#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>

#include <json.hpp>

#include "poseng/search.hpp"

namespace poseng {

inline std::uint64_t fnv1a64(std::string_view text) {
    std::uint64_t hash = 0xcbf29ce484222325ull;
    for (unsigned char c : text) {
        hash ^= c;
        hash *= 0x100000001b3ull;
    }
    return hash;
}

// Stable identifier of a search space (axes, values and constraint).
inline std::string space_signature(const SearchSpace& space) {
    std::ostringstream os;
    for (const SearchAxis& axis : space.axes) {
        os << axis.label << ':';
        for (std::int64_t v : axis.values) os << v << ',';
        os << ';';
    }
    if (space.constraint) {
        os << "sum(";
        for (const std::string& label : space.constraint->labels) os << label << ',';
        os << ")<=" << space.constraint->bound;
    }
    std::ostringstream hex;
    hex << std::hex << fnv1a64(os.str());
    return hex.str();
}

// Append-only JSON Lines journal of (space, theta, sample) -> score. Opening
// replays any existing journal, so an interrupted search resumes from disk.
class JournalScoreCache : public ScoreCache {
public:
    JournalScoreCache(std::filesystem::path path, std::string space_key)
        : path_(std::move(path)), space_key_(std::move(space_key)) {
        if (path_.has_parent_path()) {
            std::filesystem::create_directories(path_.parent_path());
        }
        std::ifstream in(path_);
        if (in) {
            std::string line;
            std::size_t line_no = 0;
            while (std::getline(in, line)) {
                ++line_no;
                if (line.empty()) continue;
                nlohmann::json j;
                try {
                    j = nlohmann::json::parse(line);
                    if (j.at("space").get<std::string>() != space_key_) continue;
                    entries_[key_of(j.at("theta").get<std::string>(),
                                    j.at("sample").get<std::string>())] =
                        j.at("score").get<double>();
                } catch (const std::exception& e) {
                    throw std::runtime_error("corrupt score cache " + path_.string() +
                                             ":" + std::to_string(line_no) + ": " +
                                             e.what());
                }
            }
        }
        out_.open(path_, std::ios::app);
        if (!out_) {
            throw std::runtime_error("cannot open score cache for append: " +
                                     path_.string());
        }
    }

    std::optional<double> lookup(const GapVector& theta,
                                 const std::string& sample_id) override {
        std::lock_guard<std::mutex> lock(mutex_);
        auto it = entries_.find(key_of(theta.to_string(), sample_id));
        if (it == entries_.end()) return std::nullopt;
        ++hits_;
        return it->second;
    }

    void store(const GapVector& theta, const std::string& sample_id,
               double score) override {
        std::lock_guard<std::mutex> lock(mutex_);
        const std::string key = key_of(theta.to_string(), sample_id);
        if (!entries_.emplace(key, score).second) return;
        nlohmann::json j{{"space", space_key_},
                         {"theta", theta.to_string()},
                         {"sample", sample_id},
                         {"score", score}};
        out_ << j.dump() << '\n';
        out_.flush();
    }

    std::size_t size() const { return entries_.size(); }
    std::size_t hits() const { return hits_; }

private:
    static std::string key_of(const std::string& theta, const std::string& sample) {
        return theta + "|" + sample;
    }

    std::filesystem::path path_;
    std::string space_key_;
    std::unordered_map<std::string, double> entries_;
    std::ofstream out_;
    std::mutex mutex_;
    std::size_t hits_ = 0;
};

}  // namespace poseng
