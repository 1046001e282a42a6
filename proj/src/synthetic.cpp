#include "shdebias/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "shdebias/image_io.hpp"
#include "shdebias/parallel.hpp"
#include "shdebias/rng.hpp"

namespace shdebias {

namespace {

using nlohmann::json;

// Stream purposes within one item.
enum : std::uint64_t { kPurposeLight = 0, kPurposeAlbedo = 1, kPurposeChannelNoise = 2 };

// Linear-interpolation quantile of an unsorted sample (q in [0,1]).
double quantile(std::vector<double> values, double q) {
    std::sort(values.begin(), values.end());
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(pos);
    if (lo + 1 >= values.size()) return values.back();
    const double frac = pos - static_cast<double>(lo);
    return values[lo] + frac * (values[lo + 1] - values[lo]);
}

}  // namespace

ShCoeffs sample_light(const LightPrior& prior, std::uint64_t seed) {
    if (!(prior.dc_lo > 0.0) || !(prior.dc_lo < prior.dc_hi) ||
        !(prior.band1_lo <= prior.band1_hi) || !(prior.band2_rel_std >= 0.0))
        throw PreconditionError("sample_light: invalid prior");
    Rng rng(seed);
    ShCoeffs l{};
    const double dc = rng.uniform(prior.dc_lo, prior.dc_hi);
    const double strength = rng.uniform(prior.band1_lo, prior.band1_hi) * dc;
    const auto dir = rng.unit_vector();  // (x, y, z)
    l[0] = dc;
    l[1] = strength * dir[1];
    l[2] = strength * dir[2];
    l[3] = strength * dir[0];
    for (int i = 4; i < kShCount; ++i) l[i] = rng.gaussian(0.0, prior.band2_rel_std * dc);
    return l;
}

double sample_albedo(SkinTone tone, const ClassAlbedoModel& model, std::uint64_t seed) {
    const double mean = model.mean[static_cast<int>(tone)];
    if (!(mean > model.lo) || !(mean < model.hi) || !(model.rel_std > 0.0))
        throw PreconditionError("sample_albedo: invalid model");
    Rng rng(seed);
    return rng.truncated_gaussian(mean, model.rel_std * mean, model.lo, model.hi);
}

std::string corpus_item_id(SkinTone tone, int index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%03d", index);
    return tone_name(tone) + "_" + buf;
}

std::vector<CorpusItem> generate_corpus(const CorpusConfig& cfg) {
    if (cfg.per_class < 1)
        throw PreconditionError("generate_corpus: per_class must be >= 1");
    if (cfg.resolution < 32)
        throw PreconditionError("generate_corpus: resolution must be >= 32");

    const NormalMap normals = sphere_normal_map(cfg.resolution);
    const std::size_t total = static_cast<std::size_t>(cfg.per_class) * kToneCount;
    std::vector<CorpusItem> items(total);

    parallel_for(total, cfg.threads, [&](std::size_t k) {
        const auto cls = static_cast<std::uint64_t>(k / cfg.per_class);
        const auto idx = static_cast<std::uint64_t>(k % cfg.per_class);
        const SkinTone tone = static_cast<SkinTone>(cls);

        CorpusItem item;
        item.id = corpus_item_id(tone, static_cast<int>(idx));
        item.tone = tone;
        item.light =
            sample_light(cfg.light_prior, derive_seed(cfg.master_seed, {cls, idx, kPurposeLight}));
        item.albedo = sample_albedo(tone, cfg.albedo_model,
                                    derive_seed(cfg.master_seed, {cls, idx, kPurposeAlbedo}));
        item.tint = cfg.albedo_model.tint[static_cast<int>(tone)];

        // Clamped-cosine shading over the sphere, and the mask rule:
        // silhouette pixels whose shading exceeds its 25th percentile.
        ImagePlane shading(cfg.resolution, cfg.resolution, Encoding::linear());
        std::vector<double> on_disc;
        on_disc.reserve(shading.size());
        for (std::size_t p = 0; p < shading.size(); ++p) {
            const auto& n = normals.normals[p];
            if (!n) continue;
            shading.pixels[p] = std::max(0.0, irradiance_shading(item.light, *n));
            on_disc.push_back(shading.pixels[p]);
        }
        const double q25 = quantile(on_disc, 0.25);
        item.mask = FaceMask(cfg.resolution, cfg.resolution);
        for (std::size_t p = 0; p < shading.size(); ++p)
            if (normals.normals[p] && shading.pixels[p] > q25) item.mask.on[p] = 1;

        ImagePlane* channels[3] = {nullptr, nullptr, nullptr};
        item.image = RgbImage{ImagePlane(cfg.resolution, cfg.resolution, Encoding::linear()),
                              ImagePlane(cfg.resolution, cfg.resolution, Encoding::linear()),
                              ImagePlane(cfg.resolution, cfg.resolution, Encoding::linear())};
        channels[0] = &item.image.r;
        channels[1] = &item.image.g;
        channels[2] = &item.image.b;
        for (int c = 0; c < 3; ++c) {
            const double reflectance = std::clamp(item.albedo * item.tint[c], 0.0, 0.999);
            ImagePlane lin(cfg.resolution, cfg.resolution, Encoding::linear());
            for (std::size_t p = 0; p < lin.size(); ++p)
                lin.pixels[p] = reflectance * shading.pixels[p];
            SensorModel sensor = cfg.sensor;
            sensor.seed = derive_seed(cfg.master_seed,
                                      {cls, idx, kPurposeChannelNoise + static_cast<std::uint64_t>(c)});
            *channels[c] = simulate_capture(lin, sensor);
        }
        items[k] = std::move(item);
    });
    return items;
}

void write_corpus(const std::filesystem::path& dir, const std::vector<CorpusItem>& items) {
    if (items.empty()) throw PreconditionError("write_corpus: no items");
    std::filesystem::create_directories(dir / "images");
    std::filesystem::create_directories(dir / "masks");

    json truth_items = json::array();
    std::vector<std::pair<std::string, SkinTone>> labels;
    labels.reserve(items.size());
    for (const CorpusItem& item : items) {
        write_png(dir / "images" / (item.id + ".png"), item.image);
        write_mask_png(dir / "masks" / (item.id + ".png"), item.mask);
        json j;
        j["id"] = item.id;
        j["class"] = tone_name(item.tone);
        j["albedo"] = item.albedo;
        j["tint"] = item.tint;
        j["light"] = item.light;
        truth_items.push_back(std::move(j));
        labels.emplace_back(item.id, item.tone);
    }
    json truth;
    truth["schema"] = "v1";
    truth["items"] = std::move(truth_items);
    std::ofstream out(dir / "truth.json", std::ios::binary);
    if (!out) throw IoError("cannot write " + (dir / "truth.json").string());
    out << truth.dump(2) << '\n';
    if (!out) throw IoError("failed writing " + (dir / "truth.json").string());

    write_labels(dir / "labels.csv", labels);
}

std::map<std::string, TruthRecord> read_truth(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw IoError("cannot open " + file.string());
    std::map<std::string, TruthRecord> out;
    try {
        const json doc = json::parse(in);
        if (!doc.is_object() || doc.value("schema", "") != "v1")
            throw FormatError("truth file must carry schema \"v1\": " + file.string());
        for (const json& j : doc.at("items")) {
            TruthRecord rec;
            const auto id = j.at("id").get<std::string>();
            rec.tone = tone_from_name(j.at("class").get<std::string>());
            rec.albedo = j.at("albedo").get<double>();
            const json& tint = j.at("tint");
            const json& light = j.at("light");
            if (!tint.is_array() || tint.size() != 3 || !light.is_array() ||
                light.size() != kShCount)
                throw FormatError("truth record '" + id + "' has bad arity");
            for (int i = 0; i < 3; ++i) rec.tint[i] = tint[i].get<double>();
            for (int i = 0; i < kShCount; ++i) rec.light[i] = light[i].get<double>();
            if (!out.emplace(id, rec).second)
                throw FormatError("duplicate truth id '" + id + "'");
        }
    } catch (const json::exception& e) {
        throw FormatError("bad truth JSON in " + file.string() + ": " + e.what());
    }
    return out;
}

}  // namespace shdebias
