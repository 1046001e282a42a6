// 2-D analysis instruments: exact t-SNE, a PCA fallback, the band-0 scatter
// augmentation, and the per-class sampling protocol.  This module returns
// coordinates only; plot files are written elsewhere.
#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "shdebias/skin_tone.hpp"

namespace shdebias {

struct TsneConfig {
    double perplexity = 30.0;         // requires n > 3 * perplexity
    int iterations = 1000;
    double learning_rate = 200.0;
    double early_exaggeration = 12.0;  // applied for the first 250 iterations
    int exaggeration_iters = 250;      // also the momentum switch point
    double momentum_initial = 0.5;
    double momentum_final = 0.8;
    std::uint64_t seed = 0;
};

using Coords2 = std::vector<std::array<double, 2>>;

// Exact O(n^2) t-SNE.  Per-point bandwidths are found by bisection (at most
// 50 steps) until the conditional distribution's entropy matches
// log(perplexity) within 1e-5; affinities are symmetrized to sum to 1.
// Gradient descent runs the configured schedule with gain adaptation and
// per-iteration recentering, from a seeded Gaussian init of std 1e-4.
// Deterministic given the seed.
Coords2 tsne(const std::vector<std::vector<double>>& points, const TsneConfig& cfg);

// Realized perplexity exp(H) of each point's conditional distribution after
// the bandwidth search; diagnostic for the search tolerance.
std::vector<double> tsne_row_perplexities(const std::vector<std::vector<double>>& points,
                                          const TsneConfig& cfg);

// Projection onto the top-2 principal components of the mean-centered data.
// Sign convention: each component's largest-magnitude loading is positive.
Coords2 pca2(const std::vector<std::vector<double>>& points);

// x = value, y = seeded uniform [0,1) jitter; the 1-D-to-2-D trick for
// scatter-plotting a single coefficient.
Coords2 band0_scatter(const std::vector<double>& values, std::uint64_t seed);

// Seeded uniform sample without replacement of per_class items from every
// class; returns the selected indices in ascending order.  Sampling the
// whole of a class keeps its original order.
std::vector<std::size_t> analysis_protocol(const std::vector<SkinTone>& labels, int per_class,
                                           std::uint64_t seed);

}  // namespace shdebias
