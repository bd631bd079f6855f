// Prints how much attention mass crosses a widening segment gap under each
// positional scheme. Two random segments of eight tokens each; the mass is
// summed over queries in the second segment attending into the first.

#include <cstdio>
#include <random>
#include <vector>

#include "poseng/attention.hpp"
#include "poseng/position_map.hpp"

using namespace poseng;

namespace {

Matrix random_matrix(std::mt19937_64& rng, std::size_t rows, std::size_t cols,
                     double scale) {
    std::normal_distribution<double> unit(0.0, 1.0);
    Matrix m(rows, cols);
    for (double& x : m.data()) x = unit(rng) * scale;
    return m;
}

double cross_gap_mass(const Matrix& embeddings, const AttentionSpec& spec,
                      std::int64_t gap) {
    const std::vector<std::size_t> lengths{8, 8};
    TokenSequence seq;
    seq.embeddings = embeddings;
    seq.positions = from_gaps(lengths, GapVector{{"gap_A", gap}}).edited;
    seq.placeholder.assign(16, false);
    const std::vector<Matrix> scores = attention_scores(seq, spec);
    double mass = 0.0;
    for (std::size_t m = 8; m < 16; ++m) {
        for (std::size_t n = 0; n < 8; ++n) mass += scores[0](m, n);
    }
    return mass / 8.0;  // average over the eight queries
}

}  // namespace

int main() {
    std::mt19937_64 rng(2024);
    const int dim = 16;
    const Matrix embeddings = random_matrix(rng, 16, dim, 1.0);

    AttentionSpec sinusoidal;
    AttentionSpec rotary;
    AttentionSpec bias;
    for (AttentionSpec* spec : {&sinusoidal, &rotary, &bias}) {
        spec->dim = dim;
        spec->heads = 1;
        const double scale = 1.0 / std::sqrt(static_cast<double>(dim));
        spec->w_q = random_matrix(rng, dim, dim, scale);
        spec->w_k = random_matrix(rng, dim, dim, scale);
        spec->w_v = random_matrix(rng, dim, dim, scale);
    }
    sinusoidal.scheme = PositionalScheme::SinusoidalAbsolute;
    rotary.scheme = PositionalScheme::Rotary;
    bias.scheme = PositionalScheme::LinearBias;
    bias.slopes = {0.02};

    std::printf("%8s  %12s  %12s  %12s\n", "gap", "sinusoidal", "rotary",
                "linear_bias");
    for (std::int64_t gap : {0, 16, 32, 64, 128, 256, 512}) {
        std::printf("%8lld  %12.6f  %12.6f  %12.6f\n", static_cast<long long>(gap),
                    cross_gap_mass(embeddings, sinusoidal, gap),
                    cross_gap_mass(embeddings, rotary, gap),
                    cross_gap_mass(embeddings, bias, gap));
    }
    std::printf("\nmass under linear bias shrinks monotonically as the gap grows;\n"
                "the rotary column wanders and the absolute column depends on the\n"
                "exact indices rather than the distance.\n");
    return 0;
}
