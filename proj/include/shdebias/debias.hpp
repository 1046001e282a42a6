// Core mitigation: DC normalization, per-group corpus statistics, the
// standardize-restandardize alignment map for dark-class lights, and the
// separability diagnostic used to judge whether the mitigation worked.
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include "shdebias/sh.hpp"
#include "shdebias/skin_tone.hpp"

namespace shdebias {

inline constexpr double kSigmaFloor = 1e-8;

// Coefficients scaled so the DC term is exactly 1.
struct NormalizedCoeffs {
    ShCoeffs c{1.0, 0, 0, 0, 0, 0, 0, 0, 0};
};

// Normalized coefficients after statistical alignment.
struct AlignedCoeffs {
    ShCoeffs c{1.0, 0, 0, 0, 0, 0, 0, 0, 0};
};

// Mean and population standard deviation of normalized coefficients 1-8 for
// the dark group and the pooled non-dark (fair, medium, tan) group.
struct AlignmentStats {
    std::array<double, 8> mu_d{}, sigma_d{}, mu_nd{}, sigma_nd{};
    std::int64_t n_d = 0, n_nd = 0;
};

// Throws unless sigmas are >= kSigmaFloor and both counts are >= 2.
void validate_stats(const AlignmentStats& stats, const char* what);

bool is_dark(SkinTone tone);

// l / l[0]; the DC term is set to exactly 1.  |l[0]| <= 1e-9 is degenerate.
NormalizedCoeffs normalize_dc(const ShCoeffs& l);

// Per-index mean and population (1/n) std over indices 1-8 for each group;
// sigma clamped below by kSigmaFloor.  Needs >= 2 items in each group.
AlignmentStats compute_alignment_stats(
    const std::vector<std::pair<NormalizedCoeffs, SkinTone>>& corpus);

// Dark items are standardized under the dark statistics and re-expressed
// under the non-dark statistics at indices 1-8:
//   out[i] = (in[i] - mu_d[i]) / sigma_d[i] * sigma_nd[i] + mu_nd[i].
// Non-dark items pass through unchanged.  Index 0 stays 1.
AlignedCoeffs align(const NormalizedCoeffs& ln, SkinTone tone, const AlignmentStats& stats);

// Exact inverse of align for dark items (identity for non-dark).
NormalizedCoeffs align_inverse(const AlignedCoeffs& la, SkinTone tone,
                               const AlignmentStats& stats);

struct Separability {
    double centroid_gap = 0.0;  // centroid distance over mean pooled per-index std
    double nc_accuracy = 0.0;   // leave-one-out nearest-centroid accuracy in [0,1]
};

// Dark-vs-non-dark separability of coefficient vectors at indices 1-8.
//
// nc_accuracy is leave-one-out nearest-centroid accuracy with a tie deadband:
// excluding a point from its own centroid inflates the own-group squared
// distance by about 2/(n-1) even when the two groups are identical, which
// would score perfectly aligned corpora as 0 instead of chance.  A point
// whose two squared distances differ by at most 4/(n_own - 1) times the
// other-group distance therefore counts as half right.
Separability separability(const std::vector<std::pair<ShCoeffs, SkinTone>>& corpus);

// JSON round trip (schema "v1").
void write_alignment_stats(const std::filesystem::path& path, const AlignmentStats& stats);
AlignmentStats read_alignment_stats(const std::filesystem::path& path);

}  // namespace shdebias
