// Seeded synthetic corpus: per-class albedo sampling, random SH environments,
// sphere-proxy renders with masks, and the on-disk corpus layout
// (images/*.png, masks/*.png, truth.json, labels.csv).
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "shdebias/image.hpp"
#include "shdebias/light_estimation.hpp"
#include "shdebias/sh.hpp"
#include "shdebias/skin_tone.hpp"

namespace shdebias {

// Class-conditional linear reflectance: truncated Gaussian around the class
// mean, plus a fixed RGB tint per class.  The tints were solved against the
// ITA thresholds (with chroma margin for lighting-induced brightness swings)
// so classification recovers the generating class from rendered pixels.
struct ClassAlbedoModel {
    std::array<double, kToneCount> mean = {0.60, 0.45, 0.32, 0.18};
    double rel_std = 0.08;            // std = rel_std * mean
    double lo = 0.02, hi = 0.95;      // truncation interval (open)
    std::array<std::array<double, 3>, kToneCount> tint = {{
        {1.387494, 0.878178, 0.663784},   // fair
        {1.782817, 0.936928, 0.375720},   // medium
        {1.041642, 0.474688, 0.177251},   // tan
        {0.650938, 0.341994, 0.228501},   // dark
    }};
};

// Lighting environment distribution; independent of skin tone by
// construction (class is not an input to sampling).
struct LightPrior {
    double dc_lo = 0.8, dc_hi = 1.2;          // ambient DC ~ U[dc_lo, dc_hi]
    double band1_lo = 0.2, band1_hi = 0.6;    // band-1 strength ~ U[...] * DC
    double band2_rel_std = 0.05;              // band-2 ~ N(0, (rel_std * DC)^2)
};

// Seeded draw: DC, then a uniform dominant direction with the band-1
// strength, then independent Gaussian band-2 terms.
ShCoeffs sample_light(const LightPrior& prior, std::uint64_t seed);

// Seeded truncated-Gaussian reflectance draw for one class.
double sample_albedo(SkinTone tone, const ClassAlbedoModel& model, std::uint64_t seed);

struct CorpusItem {
    std::string id;
    SkinTone tone = SkinTone::Fair;
    double albedo = 0.0;                 // scalar linear reflectance
    std::array<double, 3> tint{};        // RGB albedo = albedo * tint, clamped
    ShCoeffs light{};                    // ground-truth environment
    RgbImage image;                      // captured (gamma-encoded) render
    FaceMask mask;                       // shading above its 25th percentile
};

struct CorpusConfig {
    int per_class = 100;
    int resolution = 64;   // >= 32
    std::uint64_t master_seed = 0;
    SensorModel sensor;    // bit depth / noise; its seed field is ignored here
    LightPrior light_prior;
    ClassAlbedoModel albedo_model;
    int threads = 1;
};

// Fully deterministic: every item derives its own streams from
// (master_seed, class, item, purpose), so output is identical at any thread
// count.  Items are ordered fair, medium, tan, dark, each class by index.
std::vector<CorpusItem> generate_corpus(const CorpusConfig& cfg);

// `<class>_<index>` with the index zero-padded to 3 digits.
std::string corpus_item_id(SkinTone tone, int index);

// Writes images/<id>.png, masks/<id>.png, truth.json, labels.csv.
void write_corpus(const std::filesystem::path& dir, const std::vector<CorpusItem>& items);

// Ground truth for one item as stored in truth.json.
struct TruthRecord {
    SkinTone tone = SkinTone::Fair;
    double albedo = 0.0;
    std::array<double, 3> tint{};
    ShCoeffs light{};
};

std::map<std::string, TruthRecord> read_truth(const std::filesystem::path& file);

}  // namespace shdebias
