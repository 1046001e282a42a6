#include "shdebias/magnitude.hpp"

#include <cmath>
#include <fstream>
#include <string>

#include <json.hpp>

#include "shdebias/error.hpp"

namespace shdebias {

namespace {
using nlohmann::json;
}

double illum_magnitude(const ImagePlane& img, const FaceMask& mask) {
    require_same_shape(img, mask, "illum_magnitude");
    if (!img.encoding.is_gamma())
        throw PreconditionError("illum_magnitude: image must be gamma-encoded");
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < img.size(); ++i) {
        if (!mask.on[i]) continue;
        sum += img.pixels[i];
        ++n;
    }
    if (n == 0) throw PreconditionError("illum_magnitude: mask selects no pixels");
    return sum / static_cast<double>(n);
}

double illum_magnitude(const RgbImage& img, const FaceMask& mask) {
    require_coherent(img, "illum_magnitude");
    return (illum_magnitude(img.r, mask) + illum_magnitude(img.g, mask) +
            illum_magnitude(img.b, mask)) /
           3.0;
}

double ClassMagnitudes::mean_for(SkinTone tone) const {
    if (!has(tone))
        throw PreconditionError("no reference magnitudes for class '" + tone_name(tone) + "'");
    return mean_m[static_cast<int>(tone)];
}

ClassMagnitudes class_magnitude_means(const std::vector<MagnitudeSample>& samples) {
    ClassMagnitudes cm;
    std::array<double, kToneCount> sum{};
    for (const MagnitudeSample& s : samples) {
        if (!std::isfinite(s.m) || s.m < 0.0)
            throw PreconditionError("class_magnitude_means: magnitudes must be finite and >= 0");
        sum[static_cast<int>(s.tone)] += s.m;
        cm.count[static_cast<int>(s.tone)] += 1;
    }
    for (int t = 0; t < kToneCount; ++t)
        if (cm.count[t] > 0) cm.mean_m[t] = sum[t] / static_cast<double>(cm.count[t]);
    return cm;
}

double scale_factor(double magnitude, SkinTone tone, const ClassMagnitudes& cm) {
    if (!std::isfinite(magnitude) || magnitude < 0.0)
        throw PreconditionError("scale_factor: magnitude must be finite and >= 0");
    const double mean = cm.mean_for(tone);
    if (!(mean > 0.0))
        throw PreconditionError("scale_factor: class mean magnitude must be positive");
    return magnitude / mean;
}

double scale_factor(const ImagePlane& img, const FaceMask& mask, SkinTone tone,
                    const ClassMagnitudes& cm) {
    return scale_factor(illum_magnitude(img, mask), tone, cm);
}

namespace {

ImagePlane scale_encoded(const ImagePlane& img, double factor, const char* what) {
    if (!img.encoding.is_gamma())
        throw PreconditionError(std::string(what) + ": image must be gamma-encoded");
    ImagePlane out(img.width, img.height, img.encoding);
    for (std::size_t i = 0; i < img.size(); ++i) {
        const double v = img.pixels[i];
        if (!std::isfinite(v) || v < 0.0 || v > 1.0)
            throw PreconditionError(std::string(what) + ": pixel values must lie in [0,1]");
        out.pixels[i] = std::clamp(v * factor, 0.0, 1.0);
    }
    return out;
}

}  // namespace

ImagePlane apply_scale(const ImagePlane& img, double s) {
    if (!(s > 0.0) || !std::isfinite(s)) throw PreconditionError("apply_scale: s must be > 0");
    return scale_encoded(img, std::pow(s, 1.0 / img.encoding.gamma), "apply_scale");
}

RgbImage apply_scale(const RgbImage& img, double s) {
    require_coherent(img, "apply_scale");
    return {apply_scale(img.r, s), apply_scale(img.g, s), apply_scale(img.b, s)};
}

ImagePlane divide_magnitude(const ImagePlane& img, double s) {
    if (!(s > 0.0) || !std::isfinite(s))
        throw PreconditionError("divide_magnitude: s must be > 0");
    return scale_encoded(img, 1.0 / s, "divide_magnitude");
}

RgbImage divide_magnitude(const RgbImage& img, double s) {
    require_coherent(img, "divide_magnitude");
    return {divide_magnitude(img.r, s), divide_magnitude(img.g, s), divide_magnitude(img.b, s)};
}

double magnitude_std(const std::vector<double>& magnitudes) {
    if (magnitudes.size() < 2)
        throw PreconditionError("magnitude_std: need at least 2 magnitudes");
    double mean = 0.0;
    for (double m : magnitudes) {
        if (!std::isfinite(m)) throw PreconditionError("magnitude_std: non-finite magnitude");
        mean += m;
    }
    mean /= static_cast<double>(magnitudes.size());
    double var = 0.0;
    for (double m : magnitudes) var += (m - mean) * (m - mean);
    return std::sqrt(var / static_cast<double>(magnitudes.size()));
}

void write_class_magnitudes(const std::filesystem::path& path, const ClassMagnitudes& cm) {
    json classes;
    for (SkinTone tone : all_tones()) {
        const int t = static_cast<int>(tone);
        json entry;
        entry["count"] = cm.count[t];
        if (cm.count[t] > 0) entry["mean"] = cm.mean_m[t];
        classes[tone_name(tone)] = std::move(entry);
    }
    json doc;
    doc["schema"] = "v1";
    doc["classes"] = std::move(classes);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write class magnitudes " + path.string());
    out << doc.dump(2) << '\n';
    if (!out) throw IoError("failed writing class magnitudes " + path.string());
}

ClassMagnitudes read_class_magnitudes(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open class magnitudes " + path.string());
    ClassMagnitudes cm;
    try {
        const json doc = json::parse(in);
        if (!doc.is_object() || doc.value("schema", "") != "v1")
            throw FormatError("class magnitudes must carry schema \"v1\": " + path.string());
        const json& classes = doc.at("classes");
        for (SkinTone tone : all_tones()) {
            const int t = static_cast<int>(tone);
            const json& entry = classes.at(tone_name(tone));
            cm.count[t] = entry.at("count").get<std::int64_t>();
            if (cm.count[t] > 0) {
                cm.mean_m[t] = entry.at("mean").get<double>();
                if (!std::isfinite(cm.mean_m[t]) || cm.mean_m[t] <= 0.0)
                    throw FormatError("class magnitudes: mean for '" + tone_name(tone) +
                                      "' must be positive");
            }
        }
    } catch (const json::exception& e) {
        throw FormatError("bad class magnitudes JSON in " + path.string() + ": " + e.what());
    }
    return cm;
}

}  // namespace shdebias
