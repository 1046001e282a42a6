#include "shdebias/debias.hpp"

#include <cmath>
#include <fstream>
#include <string>

#include <json.hpp>

#include "shdebias/error.hpp"

namespace shdebias {

namespace {
using nlohmann::json;

void require_normalized(const ShCoeffs& c, const char* what) {
    if (c[0] != 1.0)
        throw PreconditionError(std::string(what) + ": DC term must be exactly 1");
    for (double v : c)
        if (!std::isfinite(v))
            throw PreconditionError(std::string(what) + ": coefficients must be finite");
}
}  // namespace

void validate_stats(const AlignmentStats& stats, const char* what) {
    if (stats.n_d < 2 || stats.n_nd < 2)
        throw PreconditionError(std::string(what) + ": each group needs at least 2 items");
    for (int i = 0; i < 8; ++i) {
        if (!std::isfinite(stats.mu_d[i]) || !std::isfinite(stats.mu_nd[i]))
            throw PreconditionError(std::string(what) + ": non-finite mean");
        if (!(stats.sigma_d[i] >= kSigmaFloor) || !(stats.sigma_nd[i] >= kSigmaFloor))
            throw PreconditionError(std::string(what) + ": sigma below floor");
    }
}

bool is_dark(SkinTone tone) { return tone == SkinTone::Dark; }

NormalizedCoeffs normalize_dc(const ShCoeffs& l) {
    for (double v : l)
        if (!std::isfinite(v))
            throw PreconditionError("normalize_dc: coefficients must be finite");
    if (std::abs(l[0]) <= 1e-9)
        throw DegenerateLightError("normalize_dc: DC term is (near) zero");
    NormalizedCoeffs out;
    out.c[0] = 1.0;
    for (int i = 1; i < kShCount; ++i) out.c[i] = l[i] / l[0];
    return out;
}

AlignmentStats compute_alignment_stats(
    const std::vector<std::pair<NormalizedCoeffs, SkinTone>>& corpus) {
    AlignmentStats stats;
    std::array<double, 8> sum_d{}, sum_nd{};
    for (const auto& [ln, tone] : corpus) {
        require_normalized(ln.c, "compute_alignment_stats");
        auto& sum = is_dark(tone) ? sum_d : sum_nd;
        auto& n = is_dark(tone) ? stats.n_d : stats.n_nd;
        for (int i = 0; i < 8; ++i) sum[i] += ln.c[i + 1];
        ++n;
    }
    if (stats.n_d < 2 || stats.n_nd < 2)
        throw PreconditionError("compute_alignment_stats: each group needs at least 2 items");
    for (int i = 0; i < 8; ++i) {
        stats.mu_d[i] = sum_d[i] / static_cast<double>(stats.n_d);
        stats.mu_nd[i] = sum_nd[i] / static_cast<double>(stats.n_nd);
    }
    std::array<double, 8> var_d{}, var_nd{};
    for (const auto& [ln, tone] : corpus) {
        auto& var = is_dark(tone) ? var_d : var_nd;
        const auto& mu = is_dark(tone) ? stats.mu_d : stats.mu_nd;
        for (int i = 0; i < 8; ++i) {
            const double dev = ln.c[i + 1] - mu[i];
            var[i] += dev * dev;
        }
    }
    for (int i = 0; i < 8; ++i) {
        stats.sigma_d[i] =
            std::max(std::sqrt(var_d[i] / static_cast<double>(stats.n_d)), kSigmaFloor);
        stats.sigma_nd[i] =
            std::max(std::sqrt(var_nd[i] / static_cast<double>(stats.n_nd)), kSigmaFloor);
    }
    return stats;
}

AlignedCoeffs align(const NormalizedCoeffs& ln, SkinTone tone, const AlignmentStats& stats) {
    require_normalized(ln.c, "align");
    validate_stats(stats, "align");
    AlignedCoeffs out;
    out.c = ln.c;
    if (!is_dark(tone)) return out;
    for (int i = 0; i < 8; ++i)
        out.c[i + 1] =
            (ln.c[i + 1] - stats.mu_d[i]) / stats.sigma_d[i] * stats.sigma_nd[i] + stats.mu_nd[i];
    return out;
}

NormalizedCoeffs align_inverse(const AlignedCoeffs& la, SkinTone tone,
                               const AlignmentStats& stats) {
    require_normalized(la.c, "align_inverse");
    validate_stats(stats, "align_inverse");
    NormalizedCoeffs out;
    out.c = la.c;
    if (!is_dark(tone)) return out;
    for (int i = 0; i < 8; ++i)
        out.c[i + 1] =
            (la.c[i + 1] - stats.mu_nd[i]) / stats.sigma_nd[i] * stats.sigma_d[i] + stats.mu_d[i];
    return out;
}

Separability separability(const std::vector<std::pair<ShCoeffs, SkinTone>>& corpus) {
    std::array<double, 8> sum_d{}, sum_nd{};
    std::int64_t n_d = 0, n_nd = 0;
    for (const auto& [c, tone] : corpus) {
        for (double v : c)
            if (!std::isfinite(v))
                throw PreconditionError("separability: coefficients must be finite");
        auto& sum = is_dark(tone) ? sum_d : sum_nd;
        for (int i = 0; i < 8; ++i) sum[i] += c[i + 1];
        (is_dark(tone) ? n_d : n_nd) += 1;
    }
    if (n_d < 2 || n_nd < 2)
        throw PreconditionError("separability: each group needs at least 2 items");

    std::array<double, 8> mu_d{}, mu_nd{};
    for (int i = 0; i < 8; ++i) {
        mu_d[i] = sum_d[i] / static_cast<double>(n_d);
        mu_nd[i] = sum_nd[i] / static_cast<double>(n_nd);
    }
    std::array<double, 8> var_d{}, var_nd{};
    for (const auto& [c, tone] : corpus) {
        auto& var = is_dark(tone) ? var_d : var_nd;
        const auto& mu = is_dark(tone) ? mu_d : mu_nd;
        for (int i = 0; i < 8; ++i) {
            const double dev = c[i + 1] - mu[i];
            var[i] += dev * dev;
        }
    }

    Separability out;
    double gap2 = 0.0, pooled = 0.0;
    for (int i = 0; i < 8; ++i) {
        const double d = mu_d[i] - mu_nd[i];
        gap2 += d * d;
        pooled += std::sqrt((var_d[i] + var_nd[i]) / static_cast<double>(n_d + n_nd));
    }
    pooled = std::max(pooled / 8.0, kSigmaFloor);
    out.centroid_gap = std::sqrt(gap2) / pooled;

    double score = 0.0;
    for (const auto& [c, tone] : corpus) {
        const bool dark = is_dark(tone);
        const auto& sum_own = dark ? sum_d : sum_nd;
        const auto& mu_oth = dark ? mu_nd : mu_d;
        const double n_own = static_cast<double>(dark ? n_d : n_nd);
        double d_own = 0.0, d_oth = 0.0;
        for (int i = 0; i < 8; ++i) {
            const double own_c = (sum_own[i] - c[i + 1]) / (n_own - 1.0);
            const double dev_own = c[i + 1] - own_c;
            const double dev_oth = c[i + 1] - mu_oth[i];
            d_own += dev_own * dev_own;
            d_oth += dev_oth * dev_oth;
        }
        const double deadband = 4.0 / (n_own - 1.0) * d_oth;
        if (std::abs(d_own - d_oth) <= deadband)
            score += 0.5;
        else if (d_own < d_oth)
            score += 1.0;
    }
    out.nc_accuracy = score / static_cast<double>(corpus.size());
    return out;
}

void write_alignment_stats(const std::filesystem::path& path, const AlignmentStats& stats) {
    validate_stats(stats, "write_alignment_stats");
    json doc;
    doc["schema"] = "v1";
    doc["mu_d"] = stats.mu_d;
    doc["sigma_d"] = stats.sigma_d;
    doc["mu_nd"] = stats.mu_nd;
    doc["sigma_nd"] = stats.sigma_nd;
    doc["n_d"] = stats.n_d;
    doc["n_nd"] = stats.n_nd;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write alignment stats " + path.string());
    out << doc.dump(2) << '\n';
    if (!out) throw IoError("failed writing alignment stats " + path.string());
}

AlignmentStats read_alignment_stats(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open alignment stats " + path.string());
    AlignmentStats stats;
    try {
        const json doc = json::parse(in);
        if (!doc.is_object() || doc.value("schema", "") != "v1")
            throw FormatError("alignment stats must carry schema \"v1\": " + path.string());
        auto arr8 = [&](const char* key, std::array<double, 8>& dst) {
            const json& a = doc.at(key);
            if (!a.is_array() || a.size() != 8)
                throw FormatError(std::string("alignment stats field '") + key +
                                  "' must have 8 entries");
            for (int i = 0; i < 8; ++i) dst[i] = a[i].get<double>();
        };
        arr8("mu_d", stats.mu_d);
        arr8("sigma_d", stats.sigma_d);
        arr8("mu_nd", stats.mu_nd);
        arr8("sigma_nd", stats.sigma_nd);
        stats.n_d = doc.at("n_d").get<std::int64_t>();
        stats.n_nd = doc.at("n_nd").get<std::int64_t>();
    } catch (const json::exception& e) {
        throw FormatError("bad alignment stats JSON in " + path.string() + ": " + e.what());
    }
    try {
        validate_stats(stats, "read_alignment_stats");
    } catch (const PreconditionError& e) {
        throw FormatError(e.what());
    }
    return stats;
}

}  // namespace shdebias
