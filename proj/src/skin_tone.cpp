#include "shdebias/skin_tone.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace shdebias {

namespace {

const std::array<std::string, kToneCount> kToneNames = {"fair", "medium", "tan", "dark"};

// Rec. 709 / sRGB primaries, D65 white.
constexpr double kRgbToXyz[3][3] = {
    {0.4124564, 0.3575761, 0.1804375},
    {0.2126729, 0.7151522, 0.0721750},
    {0.0193339, 0.1191920, 0.9503041},
};
constexpr double kWhiteX = 0.95047, kWhiteY = 1.0, kWhiteZ = 1.08883;

double lab_f(double t) {
    constexpr double kDelta = 6.0 / 29.0;
    if (t > kDelta * kDelta * kDelta) return std::cbrt(t);
    return t / (3.0 * kDelta * kDelta) + 4.0 / 29.0;
}

constexpr double kPiLocal = 3.14159265358979323846;

constexpr std::array<double, kToneCount> kItaPrototypes = {55.0, 30.0, 0.0, -45.0};

SkinTone tone_from_ita(double ita) {
    if (ita > 41.0) return SkinTone::Fair;
    if (ita > 19.0) return SkinTone::Medium;
    if (ita > -30.0) return SkinTone::Tan;
    return SkinTone::Dark;
}

}  // namespace

const std::string& tone_name(SkinTone tone) {
    return kToneNames[static_cast<int>(tone)];
}

SkinTone tone_from_name(const std::string& name) {
    for (int i = 0; i < kToneCount; ++i)
        if (name == kToneNames[i]) return static_cast<SkinTone>(i);
    throw UnknownClassError("unknown skin-tone class '" + name + "'");
}

void require_distribution(const ToneDistribution& d, const char* what) {
    double sum = 0.0;
    for (double v : d.p) {
        if (!(v >= 0.0) || !std::isfinite(v))
            throw PreconditionError(std::string(what) + ": distribution entries must be >= 0");
        sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw PreconditionError(std::string(what) + ": distribution must sum to 1");
}

Lab lab_from_linear_rgb(double r, double g, double b) {
    const double x = kRgbToXyz[0][0] * r + kRgbToXyz[0][1] * g + kRgbToXyz[0][2] * b;
    const double y = kRgbToXyz[1][0] * r + kRgbToXyz[1][1] * g + kRgbToXyz[1][2] * b;
    const double z = kRgbToXyz[2][0] * r + kRgbToXyz[2][1] * g + kRgbToXyz[2][2] * b;
    const double fx = lab_f(x / kWhiteX);
    const double fy = lab_f(y / kWhiteY);
    const double fz = lab_f(z / kWhiteZ);
    return {116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

SkinToneResult classify_ita(const RgbImage& img, const FaceMask& mask) {
    require_coherent(img, "classify_ita");
    require_same_shape(img.r, mask, "classify_ita");
    if (!img.r.encoding.is_gamma())
        throw PreconditionError("classify_ita: image must be gamma-encoded");

    double mr = 0.0, mg = 0.0, mb = 0.0;
    std::size_t n = 0;
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            if (!mask.at(x, y)) continue;
            mr += img.r.at(x, y);
            mg += img.g.at(x, y);
            mb += img.b.at(x, y);
            ++n;
        }
    }
    if (n == 0) throw PreconditionError("classify_ita: mask selects no pixels");
    mr /= static_cast<double>(n);
    mg /= static_cast<double>(n);
    mb /= static_cast<double>(n);

    const double gamma = img.r.encoding.gamma;
    const Lab lab = lab_from_linear_rgb(std::pow(mr, gamma), std::pow(mg, gamma),
                                        std::pow(mb, gamma));
    const double ita = std::atan2(lab.L - 50.0, lab.b) * 180.0 / kPiLocal;

    SkinToneResult res;
    res.ita_deg = ita;
    res.tone = tone_from_ita(ita);
    double sum = 0.0;
    for (int i = 0; i < kToneCount; ++i) {
        res.soft.scores[i] = std::exp(-std::abs(ita - kItaPrototypes[i]) / 10.0);
        sum += res.soft.scores[i];
    }
    for (double& s : res.soft.scores) s /= sum;
    return res;
}

double consistency_score(const SkinToneScore& a, const SkinToneScore& b) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (int i = 0; i < kToneCount; ++i) {
        if (!std::isfinite(a.scores[i]) || !std::isfinite(b.scores[i]) ||
            a.scores[i] < 0.0 || b.scores[i] < 0.0)
            throw PreconditionError("consistency_score: scores must be finite and >= 0");
        dot += a.scores[i] * b.scores[i];
        na += a.scores[i] * a.scores[i];
        nb += b.scores[i] * b.scores[i];
    }
    if (na == 0.0 || nb == 0.0)
        throw PreconditionError("consistency_score: zero score vector");
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

double kl_divergence(const ToneDistribution& p, const ToneDistribution& q) {
    require_distribution(p, "kl_divergence");
    require_distribution(q, "kl_divergence");
    constexpr double kEps = 1e-6;
    std::array<double, kToneCount> ps{}, qs{};
    double psum = 0.0, qsum = 0.0;
    for (int i = 0; i < kToneCount; ++i) {
        ps[i] = p.p[i] + kEps;
        qs[i] = q.p[i] + kEps;
        psum += ps[i];
        qsum += qs[i];
    }
    double kl = 0.0;
    for (int i = 0; i < kToneCount; ++i)
        kl += (ps[i] / psum) * std::log((ps[i] / psum) / (qs[i] / qsum));
    return kl;
}

std::map<std::string, SkinTone> ingest_labels(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open label file " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw FormatError("label file is empty: " + path.string());
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "id,class")
        throw FormatError("label file must start with header 'id,class': " + path.string());

    std::map<std::string, SkinTone> out;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos)
            throw FormatError("label row " + std::to_string(row) + ": expected exactly 2 fields");
        const std::string id = line.substr(0, comma);
        const std::string cls = line.substr(comma + 1);
        if (id.empty()) throw FormatError("label row " + std::to_string(row) + ": empty id");
        const SkinTone tone = tone_from_name(cls);
        if (!out.emplace(id, tone).second)
            throw FormatError("duplicate label id '" + id + "'");
    }
    return out;
}

void write_labels(const std::filesystem::path& path,
                  const std::vector<std::pair<std::string, SkinTone>>& rows) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write label file " + path.string());
    out << "id,class\n";
    for (const auto& [id, tone] : rows) out << id << ',' << tone_name(tone) << '\n';
    if (!out) throw IoError("failed writing label file " + path.string());
}

}  // namespace shdebias
