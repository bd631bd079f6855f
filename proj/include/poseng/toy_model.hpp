#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "poseng/attention.hpp"
#include "poseng/matrix.hpp"
#include "poseng/position_map.hpp"
#include "poseng/tokenizer.hpp"

namespace poseng {

struct ToyModelConfig {
    int vocab = ByteTokenizer::kVocabSize;
    int dim = 64;
    int heads = 1;
    int layers = 1;
    PositionalScheme scheme = PositionalScheme::LinearBias;
    double rope_base = 10000.0;
    std::vector<double> slopes;  // empty => default geometric sequence
    std::uint64_t seed = 0;
};

// Desk-scale causal transformer: an embedding table, a stack of attention
// layers and an output projection. Weights are fixed at construction; the
// same seed always yields the same weights.
class ToyModel {
public:
    static ToyModel random(const ToyModelConfig& cfg) {
        ToyModel model(cfg);
        std::mt19937_64 rng(cfg.seed);
        std::normal_distribution<double> unit(0.0, 1.0);
        const double w_scale = 1.0 / std::sqrt(static_cast<double>(cfg.dim));
        for (double& x : model.embedding_.data()) x = unit(rng);
        for (double& x : model.unembed_.data()) x = unit(rng) * w_scale;
        for (AttentionSpec& layer : model.layers_) {
            for (Matrix* w : {&layer.w_q, &layer.w_k, &layer.w_v}) {
                for (double& x : w->data()) x = unit(rng) * w_scale;
            }
        }
        return model;
    }

    // Attention-mass readout: the tracked bytes get exactly orthonormal
    // embeddings, everything else lives in the orthogonal complement and is
    // zeroed by the value projection. With zero query/key weights the logit of
    // a tracked byte equals its total attention mass from the final position,
    // so greedy decoding emits the most-attended tracked byte.
    static ToyModel copying(const ToyModelConfig& cfg, std::span<const unsigned char> tracked_bytes) {
        if (tracked_bytes.empty()) {
            throw std::invalid_argument("copying model needs a tracked byte set");
        }
        const std::size_t k = tracked_bytes.size();
        if (static_cast<std::size_t>(cfg.dim) < k + 1) {
            throw std::invalid_argument("copying model dim must exceed tracked set size");
        }
        ToyModel model(cfg);
        std::mt19937_64 rng(cfg.seed);
        std::normal_distribution<double> unit(0.0, 1.0);
        std::vector<bool> is_tracked(cfg.vocab, false);
        std::size_t next_axis = 0;
        for (unsigned char b : tracked_bytes) {
            if (b >= cfg.vocab || is_tracked[b]) {
                throw std::invalid_argument("tracked byte set must be unique token ids");
            }
            is_tracked[b] = true;
            model.embedding_(b, next_axis++) = 1.0;
        }
        for (int t = 0; t < cfg.vocab; ++t) {
            if (is_tracked[t]) continue;
            double norm = 0.0;
            for (std::size_t c = k; c < static_cast<std::size_t>(cfg.dim); ++c) {
                const double x = unit(rng);
                model.embedding_(t, c) = x;
                norm += x * x;
            }
            norm = std::sqrt(norm);
            for (std::size_t c = k; c < static_cast<std::size_t>(cfg.dim); ++c) {
                model.embedding_(t, c) /= norm;
            }
        }
        for (int t = 0; t < cfg.vocab; ++t) {
            for (int c = 0; c < cfg.dim; ++c) {
                model.unembed_(t, c) = model.embedding_(t, c);
            }
        }
        for (AttentionSpec& layer : model.layers_) {
            for (std::size_t c = 0; c < k; ++c) layer.w_v(c, c) = 1.0;
        }
        return model;
    }

    const ToyModelConfig& config() const { return cfg_; }
    const Matrix& embedding() const { return embedding_; }
    const std::vector<AttentionSpec>& layers() const { return layers_; }

    // Logits for the token following the last fed position.
    std::vector<double> next_logits(std::span<const TokenId> tokens,
                                    std::span<const std::int64_t> positions) const {
        if (tokens.empty() || tokens.size() != positions.size()) {
            throw std::invalid_argument("next_logits: bad token/position lengths");
        }
        TokenSequence seq;
        seq.embeddings = Matrix(tokens.size(), cfg_.dim);
        for (std::size_t i = 0; i < tokens.size(); ++i) {
            const TokenId id = tokens[i];
            if (id < 0 || id >= cfg_.vocab) {
                throw std::invalid_argument("next_logits: token id " +
                                            std::to_string(id) + " outside vocabulary");
            }
            for (int c = 0; c < cfg_.dim; ++c) {
                seq.embeddings(i, c) = embedding_(id, c);
            }
        }
        seq.positions.assign(positions.begin(), positions.end());
        seq.placeholder.assign(tokens.size(), false);
        for (const AttentionSpec& layer : layers_) {
            seq.embeddings = attention_forward(seq, layer);
        }
        std::span<const double> last = seq.embeddings.row(tokens.size() - 1);
        std::vector<double> logits(cfg_.vocab);
        for (int t = 0; t < cfg_.vocab; ++t) {
            logits[t] = dot(unembed_.row(t), last);
        }
        return logits;
    }

    // Greedy argmax with lowest-token-id tie break.
    static TokenId argmax_token(std::span<const double> logits) {
        TokenId best = 0;
        for (std::size_t t = 1; t < logits.size(); ++t) {
            if (logits[t] > logits[best]) best = static_cast<TokenId>(t);
        }
        return best;
    }

    // Greedy decoding under a position map. Generated tokens continue at
    // max_position + 1, + 2, ... and decoding stops at end-of-text.
    std::vector<TokenId> generate(std::span<const TokenId> prompt,
                                  const PositionMap& map, int max_new_tokens) const {
        if (prompt.size() != map.size()) {
            throw std::invalid_argument("generate: position map length mismatch");
        }
        require_valid(map);
        std::vector<TokenId> tokens(prompt.begin(), prompt.end());
        std::vector<std::int64_t> positions = map.edited;
        std::vector<TokenId> generated;
        for (int step = 0; step < max_new_tokens; ++step) {
            if (tokens.empty()) break;
            const std::vector<double> logits = next_logits(tokens, positions);
            const TokenId next = argmax_token(logits);
            if (next == ByteTokenizer::kEndOfText) break;
            generated.push_back(next);
            tokens.push_back(next);
            positions.push_back(positions.back() + 1);
        }
        return generated;
    }

private:
    explicit ToyModel(const ToyModelConfig& cfg)
        : cfg_(cfg),
          embedding_(cfg.vocab, cfg.dim),
          unembed_(cfg.vocab, cfg.dim) {
        if (cfg.vocab < 2) throw std::invalid_argument("toy model vocab too small");
        if (cfg.layers < 1 || cfg.layers > 4) {
            throw std::invalid_argument("toy model supports 1 to 4 layers");
        }
        AttentionSpec layer;
        layer.dim = cfg.dim;
        layer.heads = cfg.heads;
        layer.scheme = cfg.scheme;
        layer.rope_base = cfg.rope_base;
        layer.slopes = cfg.slopes.empty() ? default_alibi_slopes(cfg.heads)
                                          : cfg.slopes;
        layer.w_q = Matrix(cfg.dim, cfg.dim);
        layer.w_k = Matrix(cfg.dim, cfg.dim);
        layer.w_v = Matrix(cfg.dim, cfg.dim);
        layers_.assign(cfg.layers, layer);
        validate(layers_.front());
    }

    ToyModelConfig cfg_;
    Matrix embedding_;
    Matrix unembed_;  // vocab x dim
    std::vector<AttentionSpec> layers_;
};

}  // namespace poseng
