#include "shdebias/light_estimation.hpp"

#include <cmath>

#include <Eigen/Dense>

#include "shdebias/image_io.hpp"
#include "shdebias/rng.hpp"

namespace shdebias {

namespace {

void require_samples(const std::vector<ShadedSample>& samples, double albedo,
                     const char* what) {
    if (!(albedo > 0.0) || !std::isfinite(albedo))
        throw PreconditionError(std::string(what) + ": albedo must be positive");
    if (samples.size() < static_cast<std::size_t>(kShCount))
        throw PreconditionError(std::string(what) + ": need at least 9 samples");
    for (const ShadedSample& s : samples) {
        if (!std::isfinite(s.intensity) || s.intensity < 0.0)
            throw PreconditionError(std::string(what) + ": intensities must be finite and >= 0");
        if (!std::isfinite(s.weight) || s.weight <= 0.0)
            throw PreconditionError(std::string(what) + ": weights must be finite and > 0");
    }
}

// Rows scaled by sqrt(weight) so plain QR minimizes the weighted objective.
void fill_system(const std::vector<ShadedSample>& samples, double albedo,
                 Eigen::MatrixXd& a, Eigen::VectorXd& b) {
    const auto n = static_cast<Eigen::Index>(samples.size());
    a.resize(n, kShCount);
    b.resize(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        const ShadedSample& s = samples[j];
        const ShCoeffs row = design_row(s.normal);
        const double sw = std::sqrt(s.weight);
        for (int i = 0; i < kShCount; ++i) a(j, i) = sw * row[i];
        b(j) = sw * s.intensity / albedo;
    }
}

ShCoeffs to_coeffs(const Eigen::VectorXd& v) {
    ShCoeffs out{};
    for (int i = 0; i < kShCount; ++i) out[i] = v(i);
    return out;
}

}  // namespace

const ShCoeffs& default_light_prior() {
    static const ShCoeffs p = {0.8, 0.0, 0.35, 0.10, 0.0, 0.0, 0.12, 0.0, 0.05};
    return p;
}

ShCoeffs design_row(const UnitNormal& n) {
    ShCoeffs row = sh_basis(n);
    const ShCoeffs& w = irradiance_weights();
    for (int i = 0; i < kShCount; ++i) row[i] *= w[i];
    return row;
}

ShCoeffs fit_sh_least_squares(const std::vector<ShadedSample>& samples, double albedo) {
    require_samples(samples, albedo, "fit_sh_least_squares");
    Eigen::MatrixXd a;
    Eigen::VectorXd b;
    fill_system(samples, albedo, a, b);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
    if (qr.rank() < kShCount)
        throw SingularFitError("fit_sh_least_squares: design matrix is rank-deficient");
    return to_coeffs(qr.solve(b));
}

ShCoeffs fit_sh_ridge(const std::vector<ShadedSample>& samples, double albedo, double lambda) {
    if (!(lambda >= 0.0) || !std::isfinite(lambda))
        throw PreconditionError("fit_sh_ridge: lambda must be finite and >= 0");
    if (lambda == 0.0) return fit_sh_least_squares(samples, albedo);
    require_samples(samples, albedo, "fit_sh_ridge");
    Eigen::MatrixXd a;
    Eigen::VectorXd b;
    fill_system(samples, albedo, a, b);
    const auto n = a.rows();
    Eigen::MatrixXd aug = Eigen::MatrixXd::Zero(n + kShCount, kShCount);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + kShCount);
    aug.topRows(n) = a;
    aug.bottomRows(kShCount) = std::sqrt(lambda) * Eigen::MatrixXd::Identity(kShCount, kShCount);
    rhs.head(n) = b;
    return to_coeffs(Eigen::HouseholderQR<Eigen::MatrixXd>(aug).solve(rhs));
}

ShCoeffs fit_sh_ridge_anchored(const std::vector<ShadedSample>& samples, double albedo,
                               double lambda, double gain, const ShCoeffs& prior) {
    if (!(lambda >= 0.0) || !std::isfinite(lambda))
        throw PreconditionError("fit_sh_ridge_anchored: lambda must be finite and >= 0");
    if (!(gain >= 0.0) || !std::isfinite(gain))
        throw PreconditionError("fit_sh_ridge_anchored: gain must be finite and >= 0");
    for (double p : prior)
        if (!std::isfinite(p))
            throw PreconditionError("fit_sh_ridge_anchored: prior must be finite");
    if (lambda == 0.0) return fit_sh_least_squares(samples, albedo);
    require_samples(samples, albedo, "fit_sh_ridge_anchored");

    Eigen::Matrix<double, kShCount, kShCount> m;
    m.setZero();
    Eigen::Matrix<double, kShCount, 1> atb;
    atb.setZero();
    double wsum = 0.0;
    for (const ShadedSample& s : samples) {
        const ShCoeffs row = design_row(s.normal);
        Eigen::Map<const Eigen::Matrix<double, kShCount, 1>> r(row.data());
        const double b = s.intensity / albedo;
        m.noalias() += s.weight * r * r.transpose();
        atb.noalias() += s.weight * b * r;
        wsum += s.weight;
    }
    m /= wsum;
    atb /= wsum;
    m.diagonal().array() += lambda * (1.0 + gain);
    Eigen::Map<const Eigen::Matrix<double, kShCount, 1>> pv(prior.data());
    atb.noalias() += lambda * gain * pv;
    return to_coeffs(m.ldlt().solve(atb));
}

ImagePlane simulate_capture(const ImagePlane& linear, const SensorModel& sensor) {
    if (!linear.encoding.is_linear())
        throw PreconditionError("simulate_capture: input must be linear");
    if (sensor.bit_depth < 1 || sensor.bit_depth > 16)
        throw PreconditionError("simulate_capture: bit depth must be in [1,16]");
    if (!(sensor.noise_sigma >= 0.0) || !std::isfinite(sensor.noise_sigma))
        throw PreconditionError("simulate_capture: noise sigma must be finite and >= 0");

    ImagePlane out(linear.width, linear.height, Encoding::gamma_encoded());
    Rng rng(sensor.seed);
    const double levels = static_cast<double>((1u << sensor.bit_depth) - 1u);
    for (std::size_t i = 0; i < linear.size(); ++i) {
        const double v = linear.pixels[i];
        if (!std::isfinite(v) || v < 0.0)
            throw PreconditionError("simulate_capture: pixel values must be finite and >= 0");
        double t = std::pow(v, 1.0 / kDefaultGamma);
        if (sensor.noise_sigma > 0.0) t += rng.gaussian(0.0, sensor.noise_sigma);
        t = std::clamp(t, 0.0, 1.0);
        out.pixels[i] = std::round(t * levels) / levels;
    }
    return out;
}

double linear_luma(double r, double g, double b) {
    return 0.2126729 * r + 0.7151522 * g + 0.0721750 * b;
}

namespace {

ShCoeffs estimate_from_values(const std::vector<double>& linear_values, const NormalMap& normals,
                              const EstimatorConfig& cfg, const char* what) {
    if (!(cfg.reference_albedo > 0.0) || cfg.reference_albedo > 1.0)
        throw PreconditionError(std::string(what) + ": reference albedo must be in (0,1]");
    std::vector<ShadedSample> samples;
    samples.reserve(linear_values.size());
    const std::size_t n = linear_values.size();
    for (std::size_t i = 0; i < n; ++i) {
        const auto& nm = normals.normals[i];
        if (!nm || !(linear_values[i] > 0.0)) continue;
        samples.push_back({*nm, linear_values[i], 1.0});
    }
    return fit_sh_ridge_anchored(samples, cfg.reference_albedo, cfg.ridge_lambda,
                                 cfg.prior_gain, cfg.prior_light);
}

}  // namespace

ShCoeffs biased_estimate(const ImagePlane& img, const NormalMap& normals,
                         const EstimatorConfig& cfg) {
    if (img.width != normals.width || img.height != normals.height)
        throw PreconditionError("biased_estimate: image/normal-map shape mismatch");
    const ImagePlane lin = decode_gamma(img);
    return estimate_from_values(lin.pixels, normals, cfg, "biased_estimate");
}

ShCoeffs biased_estimate(const RgbImage& img, const NormalMap& normals,
                         const EstimatorConfig& cfg) {
    require_coherent(img, "biased_estimate");
    if (img.width() != normals.width || img.height() != normals.height)
        throw PreconditionError("biased_estimate: image/normal-map shape mismatch");
    const RgbImage lin = decode_gamma(img);
    std::vector<double> luma(lin.r.size());
    for (std::size_t i = 0; i < luma.size(); ++i)
        luma[i] = linear_luma(lin.r.pixels[i], lin.g.pixels[i], lin.b.pixels[i]);
    return estimate_from_values(luma, normals, cfg, "biased_estimate");
}

}  // namespace shdebias
