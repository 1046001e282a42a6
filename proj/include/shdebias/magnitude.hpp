// Illumination magnitude: masked mean brightness of encoded images, per-class
// reference means, scale factors against those means, and gamma-domain image
// scaling.
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include "shdebias/image.hpp"
#include "shdebias/skin_tone.hpp"

namespace shdebias {

// Mean of masked pixel values, taken on the gamma-encoded image as stored
// (the scaling equation separately handles the linear domain).
double illum_magnitude(const ImagePlane& img, const FaceMask& mask);

// RGB variant: mean of the three per-channel magnitudes.
double illum_magnitude(const RgbImage& img, const FaceMask& mask);

struct MagnitudeSample {
    double m = 0.0;
    SkinTone tone = SkinTone::Fair;
};

// Per-class mean magnitude over a reference corpus.  Classes with no items
// are absent; looking one up is an error.
struct ClassMagnitudes {
    std::array<double, kToneCount> mean_m{};
    std::array<std::int64_t, kToneCount> count{};

    bool has(SkinTone tone) const { return count[static_cast<int>(tone)] > 0; }
    double mean_for(SkinTone tone) const;  // throws when the class is absent
};

ClassMagnitudes class_magnitude_means(const std::vector<MagnitudeSample>& samples);

// s = m(img) / class mean.  Over the corpus that defined the means, the
// per-class mean of s is 1 by construction.
double scale_factor(double magnitude, SkinTone tone, const ClassMagnitudes& cm);
double scale_factor(const ImagePlane& img, const FaceMask& mask, SkinTone tone,
                    const ClassMagnitudes& cm);

// Gamma-domain relight scaling: v' = (v^g * s)^(1/g) = v * s^(1/g), clamped
// to [0,1].  Encoding (and its exponent g) is taken from the image.
ImagePlane apply_scale(const ImagePlane& img, double s);
RgbImage apply_scale(const RgbImage& img, double s);

// Exact magnitude division: encoded v -> v / s, clamped to [0,1].  This is
// apply_scale with s^(-g); an image whose magnitude is m lands exactly on
// magnitude m / s when nothing clamps.
ImagePlane divide_magnitude(const ImagePlane& img, double s);
RgbImage divide_magnitude(const RgbImage& img, double s);

// Population standard deviation of a set of magnitudes (>= 2 items).
double magnitude_std(const std::vector<double>& magnitudes);

// JSON round trip (schema "v1"): per-class mean and count.
void write_class_magnitudes(const std::filesystem::path& path, const ClassMagnitudes& cm);
ClassMagnitudes read_class_magnitudes(const std::filesystem::path& path);

}  // namespace shdebias
