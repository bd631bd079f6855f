#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "poseng/matrix.hpp"
#include "poseng/position_map.hpp"

namespace poseng {

enum class PositionalScheme {
    SinusoidalAbsolute,  // embedding added before projection
    Rotary,              // q/k pair rotation, relative by construction
    LinearBias,          // fixed distance-proportional logit bias
};

inline const char* scheme_name(PositionalScheme s) {
    switch (s) {
        case PositionalScheme::SinusoidalAbsolute: return "sinusoidal";
        case PositionalScheme::Rotary: return "rotary";
        case PositionalScheme::LinearBias: return "linear_bias";
    }
    return "?";
}

// Geometric slope sequence 2^(-8k/h), k = 1..h.
inline std::vector<double> default_alibi_slopes(int heads) {
    std::vector<double> slopes(heads);
    for (int k = 1; k <= heads; ++k) {
        slopes[k - 1] = std::pow(2.0, -8.0 * k / heads);
    }
    return slopes;
}

struct AttentionSpec {
    int dim = 0;    // even, >= 2
    int heads = 1;
    PositionalScheme scheme = PositionalScheme::Rotary;
    double rope_base = 10000.0;
    std::vector<double> slopes;  // one per head, LinearBias only
    Matrix w_q, w_k, w_v;        // each dim x dim, partitioned per head

    int head_dim() const { return dim / heads; }
};

inline void validate(const AttentionSpec& spec) {
    if (spec.dim < 2 || spec.dim % 2 != 0) {
        throw std::invalid_argument("attention dim must be even and >= 2");
    }
    if (spec.heads < 1 || spec.dim % spec.heads != 0) {
        throw std::invalid_argument("attention dim must be divisible by head count");
    }
    if (spec.scheme == PositionalScheme::Rotary && spec.dim % (2 * spec.heads) != 0) {
        throw std::invalid_argument("rotary needs an even per-head dim");
    }
    if (spec.scheme == PositionalScheme::LinearBias &&
        spec.slopes.size() != static_cast<std::size_t>(spec.heads)) {
        throw std::invalid_argument("linear bias needs one slope per head");
    }
    for (const Matrix* w : {&spec.w_q, &spec.w_k, &spec.w_v}) {
        if (w->rows() != static_cast<std::size_t>(spec.dim) ||
            w->cols() != static_cast<std::size_t>(spec.dim)) {
            throw std::invalid_argument("projection weights must be dim x dim");
        }
    }
    if (spec.rope_base <= 0.0) {
        throw std::invalid_argument("rope base must be positive");
    }
}

// Entry 2i = sin(pos / 10000^(2i/d)), entry 2i+1 = cos of the same angle.
inline std::vector<double> sinusoidal_embedding(std::int64_t pos, int dim) {
    if (dim <= 0 || dim % 2 != 0) {
        throw std::invalid_argument("sinusoidal embedding dim must be even");
    }
    std::vector<double> p(dim);
    for (int i = 0; 2 * i < dim; ++i) {
        const double angle =
            static_cast<double>(pos) * std::pow(10000.0, -2.0 * i / dim);
        p[2 * i] = std::sin(angle);
        p[2 * i + 1] = std::cos(angle);
    }
    return p;
}

// Rotates each adjacent pair (v[2i], v[2i+1]) by pos / base^(2i/d).
inline std::vector<double> rope_rotate(std::span<const double> v, std::int64_t pos,
                                       double base) {
    if (v.size() % 2 != 0) {
        throw std::invalid_argument("rope_rotate needs an even-length vector");
    }
    const double d = static_cast<double>(v.size());
    std::vector<double> out(v.size());
    for (std::size_t i = 0; 2 * i < v.size(); ++i) {
        const double angle = static_cast<double>(pos) * std::pow(base, -2.0 * i / d);
        const double c = std::cos(angle);
        const double s = std::sin(angle);
        out[2 * i] = v[2 * i] * c - v[2 * i + 1] * s;
        out[2 * i + 1] = v[2 * i] * s + v[2 * i + 1] * c;
    }
    return out;
}

// Pre-softmax bias -slope * (m - n), defined for causal pairs only.
inline double alibi_bias(std::int64_t m, std::int64_t n, double slope) {
    if (n > m) {
        throw std::domain_error("alibi_bias: key position after query position");
    }
    return -slope * static_cast<double>(m - n);
}

struct TokenSequence {
    Matrix embeddings;                    // N x dim
    std::vector<std::int64_t> positions;  // strictly increasing
    std::vector<bool> placeholder;        // true => excluded from attention

    std::size_t size() const { return positions.size(); }
};

inline void validate(const TokenSequence& seq, const AttentionSpec& spec) {
    const std::size_t n = seq.positions.size();
    if (seq.embeddings.rows() != n || seq.placeholder.size() != n) {
        throw std::invalid_argument("token sequence field lengths disagree");
    }
    if (n > 0 && seq.embeddings.cols() != static_cast<std::size_t>(spec.dim)) {
        throw std::invalid_argument("embedding dim does not match attention dim");
    }
    for (std::size_t i = 1; i < n; ++i) {
        if (seq.positions[i] <= seq.positions[i - 1]) {
            throw std::invalid_argument("token positions must be strictly increasing");
        }
    }
    if (n > 0 && seq.positions[0] < 0) {
        throw std::invalid_argument("token positions must be non-negative");
    }
}

namespace detail {

struct Projection {
    Matrix q, k, v;  // each N x dim
};

inline Projection project_qkv(const TokenSequence& seq, const AttentionSpec& spec) {
    const std::size_t n = seq.size();
    const std::size_t d = static_cast<std::size_t>(spec.dim);
    Projection out{Matrix(n, d), Matrix(n, d), Matrix(n, d)};
    std::vector<double> x(d);
    for (std::size_t i = 0; i < n; ++i) {
        std::span<const double> e = seq.embeddings.row(i);
        std::vector<double> q, k, v;
        switch (spec.scheme) {
            case PositionalScheme::SinusoidalAbsolute: {
                const std::vector<double> p =
                    sinusoidal_embedding(seq.positions[i], spec.dim);
                for (std::size_t c = 0; c < d; ++c) x[c] = e[c] + p[c];
                q = matvec(spec.w_q, x);
                k = matvec(spec.w_k, x);
                v = matvec(spec.w_v, x);
                break;
            }
            case PositionalScheme::Rotary: {
                q = matvec(spec.w_q, e);
                k = matvec(spec.w_k, e);
                v = matvec(spec.w_v, e);
                const std::size_t hd = static_cast<std::size_t>(spec.head_dim());
                for (int h = 0; h < spec.heads; ++h) {
                    std::span<double> qh{q.data() + h * hd, hd};
                    std::span<double> kh{k.data() + h * hd, hd};
                    const std::vector<double> qr =
                        rope_rotate(qh, seq.positions[i], spec.rope_base);
                    const std::vector<double> kr =
                        rope_rotate(kh, seq.positions[i], spec.rope_base);
                    std::copy(qr.begin(), qr.end(), qh.begin());
                    std::copy(kr.begin(), kr.end(), kh.begin());
                }
                break;
            }
            case PositionalScheme::LinearBias: {
                q = matvec(spec.w_q, e);
                k = matvec(spec.w_k, e);
                v = matvec(spec.w_v, e);
                break;
            }
        }
        std::copy(q.begin(), q.end(), out.q.row(i).begin());
        std::copy(k.begin(), k.end(), out.k.row(i).begin());
        std::copy(v.begin(), v.end(), out.v.row(i).begin());
    }
    return out;
}

}  // namespace detail

// Per-head N x N score matrices. Entry (m, n) is zero when n > m or either
// token is a placeholder; each remaining row softmaxes to 1 over its visible
// keys.
inline std::vector<Matrix> attention_scores(const TokenSequence& seq,
                                            const AttentionSpec& spec) {
    validate(spec);
    validate(seq, spec);
    const std::size_t n = seq.size();
    const std::size_t hd = static_cast<std::size_t>(spec.head_dim());
    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(hd));
    const detail::Projection proj = detail::project_qkv(seq, spec);

    std::vector<Matrix> scores(spec.heads, Matrix(n, n));
    std::vector<double> logits(n);
    for (int h = 0; h < spec.heads; ++h) {
        for (std::size_t m = 0; m < n; ++m) {
            if (seq.placeholder[m]) continue;  // row stays zero
            std::span<const double> qh = proj.q.row(m).subspan(h * hd, hd);
            double max_logit = -std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j <= m; ++j) {
                if (seq.placeholder[j]) continue;
                std::span<const double> kh = proj.k.row(j).subspan(h * hd, hd);
                double logit = dot(qh, kh) * inv_sqrt_d;
                if (spec.scheme == PositionalScheme::LinearBias) {
                    logit += alibi_bias(seq.positions[m], seq.positions[j],
                                        spec.slopes[h]);
                }
                logits[j] = logit;
                max_logit = std::max(max_logit, logit);
            }
            double denom = 0.0;
            for (std::size_t j = 0; j <= m; ++j) {
                if (seq.placeholder[j]) continue;
                denom += std::exp(logits[j] - max_logit);
            }
            for (std::size_t j = 0; j <= m; ++j) {
                if (seq.placeholder[j]) continue;
                scores[h](m, j) = std::exp(logits[j] - max_logit) / denom;
            }
        }
    }
    return scores;
}

// o_m = sum over visible keys of a_{m,n} v_n, heads concatenated.
// Placeholder rows are zero vectors.
inline Matrix attention_forward(const TokenSequence& seq, const AttentionSpec& spec) {
    const std::vector<Matrix> scores = attention_scores(seq, spec);
    const detail::Projection proj = detail::project_qkv(seq, spec);
    const std::size_t n = seq.size();
    const std::size_t hd = static_cast<std::size_t>(spec.head_dim());
    Matrix out(n, static_cast<std::size_t>(spec.dim));
    for (int h = 0; h < spec.heads; ++h) {
        for (std::size_t m = 0; m < n; ++m) {
            if (seq.placeholder[m]) continue;
            for (std::size_t j = 0; j <= m; ++j) {
                const double a = scores[h](m, j);
                if (a == 0.0) continue;
                std::span<const double> vh = proj.v.row(j).subspan(h * hd, hd);
                for (std::size_t c = 0; c < hd; ++c) out(m, h * hd + c) += a * vh[c];
            }
        }
    }
    return out;
}

// Position-edited attention: same as attention_forward on a sequence whose
// positions are the map's edited indices and which has no placeholders.
inline Matrix forward_with_position_map(const Matrix& embeddings,
                                        const PositionMap& map,
                                        const AttentionSpec& spec) {
    if (embeddings.rows() != map.size()) {
        throw std::invalid_argument("position map length must match token count");
    }
    require_valid(map);
    TokenSequence seq;
    seq.embeddings = embeddings;
    seq.positions = map.edited;
    seq.placeholder.assign(map.size(), false);
    return attention_forward(seq, spec);
}

}  // namespace poseng
