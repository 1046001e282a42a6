// Inverse lighting: exact least-squares SH fits, ridge-regularized fits, a
// seeded sensor simulation, and a deliberately miscalibrated estimator that
// reproduces the skin-tone/lighting correlation on synthetic captures.
#pragma once

#include <cstdint>
#include <vector>

#include "shdebias/image.hpp"
#include "shdebias/sh.hpp"

namespace shdebias {

// One estimation row: observed linear radiance at a known surface normal.
struct ShadedSample {
    UnitNormal normal;
    double intensity = 0.0;  // >= 0
    double weight = 1.0;     // > 0
};

// Camera response applied between rendering and estimation.
struct SensorModel {
    int bit_depth = 8;          // quantization to 2^bit_depth - 1 steps
    double noise_sigma = 0.01;  // additive Gaussian noise in the encoded domain
    std::uint64_t seed = 0;     // noise stream seed
};

// A bright, softly frontal studio light; the anchor the biased estimator
// leans toward when the data under-constrains it.
const ShCoeffs& default_light_prior();

struct EstimatorConfig {
    double ridge_lambda = 1e-3;
    double reference_albedo = 0.7;  // in (0,1]; the estimator's built-in skin prior
    SensorModel sensor;
    ShCoeffs prior_light = default_light_prior();
    double prior_gain = 100.0;  // relative pull toward prior_light (0 = plain ridge)
};

// The per-sample design row A_i * Y_i(n): shading(n) = row(n) . l.
ShCoeffs design_row(const UnitNormal& n);

// arg min_l  sum_j w_j (intensity_j / albedo - row(n_j) . l)^2.
// Needs >= 9 samples and a full-rank design; solved by column-pivoted QR.
ShCoeffs fit_sh_least_squares(const std::vector<ShadedSample>& samples, double albedo);

// Same objective plus lambda * |l|^2.  lambda = 0 reduces exactly to
// fit_sh_least_squares (including its rank requirement).
ShCoeffs fit_sh_ridge(const std::vector<ShadedSample>& samples, double albedo, double lambda);

// Prior-anchored ridge on the mean-squared objective:
//   (1/W) sum_j w_j (b_j - row_j . l)^2 + lambda (|l|^2 + gain |l - prior|^2),
// W = sum_j w_j.  gain = 0 is a plain (mean-scaled) ridge; lambda = 0 reduces
// exactly to fit_sh_least_squares.
ShCoeffs fit_sh_ridge_anchored(const std::vector<ShadedSample>& samples, double albedo,
                               double lambda, double gain, const ShCoeffs& prior);

// Linear scene radiance -> what the camera stores: gamma-compress with
// exponent 1/2.2, add seeded Gaussian noise (skipped entirely when sigma = 0),
// clamp to [0,1], quantize to 2^bit_depth - 1 uniform steps.
ImagePlane simulate_capture(const ImagePlane& linear, const SensorModel& sensor);

// Rec. 709 luma weights applied to linear RGB.
double linear_luma(double r, double g, double b);

// Estimate lighting from a gamma-encoded capture the way a miscalibrated
// production estimator would: decode to linear, divide by the fixed
// reference albedo (not the subject's true albedo), and anchored-ridge-fit
// over silhouette pixels with positive response.  Subjects darker than the
// reference get a proportionally smaller DC term, and the prior pull plus
// noise and quantization make the DC-normalized bands class-dependent.
ShCoeffs biased_estimate(const ImagePlane& img, const NormalMap& normals,
                         const EstimatorConfig& cfg);

// RGB variant: estimates from the linear luma of the decoded channels.
ShCoeffs biased_estimate(const RgbImage& img, const NormalMap& normals,
                         const EstimatorConfig& cfg);

}  // namespace shdebias
