// Skin-tone classification via the Individual Typology Angle (ITA) over
// masked facial pixels, soft class scores, a cosine consistency score,
// categorical KL divergence, and external label ingestion.
#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "shdebias/error.hpp"
#include "shdebias/image.hpp"

namespace shdebias {

enum class SkinTone : int { Fair = 0, Medium = 1, Tan = 2, Dark = 3 };

inline constexpr int kToneCount = 4;

constexpr std::array<SkinTone, kToneCount> all_tones() {
    return {SkinTone::Fair, SkinTone::Medium, SkinTone::Tan, SkinTone::Dark};
}

// Lowercase canonical names: fair, medium, tan, dark.
const std::string& tone_name(SkinTone tone);
// Throws UnknownClassError for anything else.
SkinTone tone_from_name(const std::string& name);

// Four non-negative similarity scores in fixed order (fair, medium, tan, dark).
struct SkinToneScore {
    std::array<double, kToneCount> scores{};
};

// Probability vector over the four classes.
struct ToneDistribution {
    std::array<double, kToneCount> p{};
};

// Throws unless p is non-negative and sums to 1 within 1e-9.
void require_distribution(const ToneDistribution& d, const char* what);

// CIELAB (D65 white) coordinates.
struct Lab {
    double L = 0.0, a = 0.0, b = 0.0;
};

// Linear RGB (Rec. 709 primaries, D65) to CIELAB.
Lab lab_from_linear_rgb(double r, double g, double b);

struct SkinToneResult {
    SkinTone tone = SkinTone::Fair;
    double ita_deg = 0.0;
    SkinToneScore soft;
};

// Classify the masked region of a gamma-encoded RGB image.
//
// The masked-pixel mean is taken per channel in the encoded domain, then
// linearized with the image's exponent and converted to CIELAB;
// ITA = atan2(L* - 50, b*) in degrees.  Hard class by thresholds
// fair > 41, medium (19, 41], tan (-30, 19], dark <= -30; soft scores are
// softmax of -|ITA - prototype| / 10 with prototypes (55, 30, 0, -45).
SkinToneResult classify_ita(const RgbImage& img, const FaceMask& mask);

// Cosine similarity of two score vectors; throws on an all-zero vector.
double consistency_score(const SkinToneScore& a, const SkinToneScore& b);

// KL(p || q) in nats, with additive smoothing eps = 1e-6 applied to both
// arguments and each renormalized before the sum.
double kl_divergence(const ToneDistribution& p, const ToneDistribution& q);

// Read a label CSV with header `id,class`.  Duplicate ids and unknown class
// names are errors.
std::map<std::string, SkinTone> ingest_labels(const std::filesystem::path& path);

// Write the same format, rows in the given order.
void write_labels(const std::filesystem::path& path,
                  const std::vector<std::pair<std::string, SkinTone>>& rows);

}  // namespace shdebias
