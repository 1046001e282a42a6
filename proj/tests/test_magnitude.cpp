#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "shdebias/magnitude.hpp"
#include "shdebias/rng.hpp"
#include "testutil.hpp"

using namespace shdebias;
using testutil::TempDir;

namespace {

ImagePlane encoded_plane(int w, int h, double fill) {
    return ImagePlane(w, h, Encoding::gamma_encoded(), fill);
}

FaceMask full_mask(int w, int h) {
    FaceMask mask(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) mask.set(x, y, true);
    return mask;
}

RgbImage encoded_rgb(int w, int h, double r, double g, double b) {
    RgbImage img;
    img.r = encoded_plane(w, h, r);
    img.g = encoded_plane(w, h, g);
    img.b = encoded_plane(w, h, b);
    return img;
}

}  // namespace

TEST_CASE("magnitude is the masked mean of encoded pixels") {
    const ImagePlane img = encoded_plane(4, 4, 0.5);
    CHECK(illum_magnitude(img, full_mask(4, 4)) == doctest::Approx(0.5).epsilon(1e-15));

    // Half mask over a split image isolates the selected half.
    ImagePlane split = encoded_plane(4, 2, 0.2);
    for (int y = 0; y < 2; ++y)
        for (int x = 2; x < 4; ++x) split.at(x, y) = 0.8;
    FaceMask right(4, 2);
    for (int y = 0; y < 2; ++y)
        for (int x = 2; x < 4; ++x) right.set(x, y, true);
    CHECK(illum_magnitude(split, right) == doctest::Approx(0.8).epsilon(1e-15));
}

TEST_CASE("rgb magnitude averages the three channel magnitudes") {
    const RgbImage img = encoded_rgb(3, 3, 0.3, 0.6, 0.9);
    CHECK(illum_magnitude(img, full_mask(3, 3)) == doctest::Approx(0.6).epsilon(1e-14));
}

TEST_CASE("magnitude rejects bad inputs") {
    CHECK_THROWS_AS(illum_magnitude(encoded_plane(4, 4, 0.5), FaceMask(4, 4)),
                    PreconditionError);  // empty mask
    ImagePlane linear(4, 4, Encoding::linear(), 0.5);
    CHECK_THROWS_AS(illum_magnitude(linear, full_mask(4, 4)), PreconditionError);
    CHECK_THROWS_AS(illum_magnitude(encoded_plane(4, 4, 0.5), full_mask(5, 4)),
                    PreconditionError);  // shape mismatch
}

TEST_CASE("class means partition the samples") {
    std::vector<MagnitudeSample> samples = {
        {0.4, SkinTone::Dark}, {0.6, SkinTone::Dark},   {0.5, SkinTone::Fair},
        {0.7, SkinTone::Fair}, {0.9, SkinTone::Medium},
    };
    const ClassMagnitudes cm = class_magnitude_means(samples);
    CHECK(cm.mean_for(SkinTone::Dark) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(cm.mean_for(SkinTone::Fair) == doctest::Approx(0.6).epsilon(1e-15));
    CHECK(cm.mean_for(SkinTone::Medium) == doctest::Approx(0.9).epsilon(1e-15));
    CHECK(cm.count[static_cast<int>(SkinTone::Dark)] == 2);
    CHECK(!cm.has(SkinTone::Tan));
    CHECK_THROWS_AS(cm.mean_for(SkinTone::Tan), PreconditionError);

    const ClassMagnitudes empty = class_magnitude_means({});
    for (SkinTone tone : all_tones()) CHECK(!empty.has(tone));
}

TEST_CASE("scale factors are magnitude over class mean, averaging to one") {
    std::vector<MagnitudeSample> samples;
    Rng rng(401);
    for (int i = 0; i < 50; ++i) samples.push_back({rng.uniform(0.2, 0.9), SkinTone::Tan});
    const ClassMagnitudes cm = class_magnitude_means(samples);
    CHECK(scale_factor(0.4, SkinTone::Tan, cm) ==
          doctest::Approx(0.4 / cm.mean_for(SkinTone::Tan)).epsilon(1e-15));

    double mean_s = 0.0;
    for (const auto& s : samples) mean_s += scale_factor(s.m, s.tone, cm);
    mean_s /= static_cast<double>(samples.size());
    CHECK(std::abs(mean_s - 1.0) < 1e-12);

    CHECK_THROWS_AS(scale_factor(0.4, SkinTone::Dark, cm), PreconditionError);
}

TEST_CASE("hand-checked scale factor") {
    std::vector<MagnitudeSample> two = {{0.4, SkinTone::Dark}, {0.6, SkinTone::Dark},
                                        {0.5, SkinTone::Fair}, {0.5, SkinTone::Fair}};
    const ClassMagnitudes cm = class_magnitude_means(two);
    CHECK(scale_factor(0.4, SkinTone::Dark, cm) == doctest::Approx(0.8).epsilon(1e-15));
}

TEST_CASE("apply_scale multiplies in the linear domain") {
    const ImagePlane img = encoded_plane(2, 2, 0.5);
    SUBCASE("identity at s = 1") {
        const ImagePlane out = apply_scale(img, 1.0);
        CHECK(out.pixels == img.pixels);
    }
    SUBCASE("frozen doubling value") {
        const ImagePlane out = apply_scale(img, 2.0);
        // 0.5 * 2^(1/2.2), computed independently.
        CHECK(out.pixels[0] == doctest::Approx(0.6851754923600618).epsilon(1e-15));
    }
    SUBCASE("zero stays zero and results clamp to one") {
        ImagePlane z = encoded_plane(2, 1, 0.0);
        z.pixels[1] = 0.9;
        const ImagePlane out = apply_scale(z, 50.0);
        CHECK(out.pixels[0] == 0.0);
        CHECK(out.pixels[1] == 1.0);
    }
    SUBCASE("monotone in s") {
        const ImagePlane lo = apply_scale(img, 0.7);
        const ImagePlane hi = apply_scale(img, 1.3);
        CHECK(lo.pixels[0] < img.pixels[0]);
        CHECK(hi.pixels[0] > img.pixels[0]);
    }
    SUBCASE("invalid scales are rejected") {
        CHECK_THROWS_AS(apply_scale(img, 0.0), PreconditionError);
        CHECK_THROWS_AS(apply_scale(img, -2.0), PreconditionError);
        ImagePlane linear(2, 2, Encoding::linear(), 0.5);
        CHECK_THROWS_AS(apply_scale(linear, 1.5), PreconditionError);
    }
}

TEST_CASE("apply_scale composes multiplicatively below the clamp") {
    Rng rng(409);
    ImagePlane img(8, 8, Encoding::gamma_encoded());
    for (auto& v : img.pixels) v = rng.uniform(0.05, 0.45);  // headroom for s1*s2 < 2.2
    const ImagePlane ab = apply_scale(apply_scale(img, 1.3), 1.6);
    const ImagePlane once = apply_scale(img, 1.3 * 1.6);
    for (std::size_t i = 0; i < img.pixels.size(); ++i)
        CHECK(ab.pixels[i] == doctest::Approx(once.pixels[i]).epsilon(1e-9));
}

TEST_CASE("divide_magnitude divides encoded values directly") {
    ImagePlane img = encoded_plane(2, 2, 0.6);
    const ImagePlane out = divide_magnitude(img, 1.5);
    CHECK(out.pixels[0] == doctest::Approx(0.4).epsilon(1e-15));

    // Equivalent to apply_scale with s^(-gamma).
    const ImagePlane via_scale = apply_scale(img, std::pow(1.5, -2.2));
    for (std::size_t i = 0; i < out.pixels.size(); ++i)
        CHECK(out.pixels[i] == doctest::Approx(via_scale.pixels[i]).epsilon(1e-12));

    // Exact magnitude collapse: dividing by m/target moves the mean to target.
    Rng rng(419);
    ImagePlane noisy(6, 6, Encoding::gamma_encoded());
    for (auto& v : noisy.pixels) v = rng.uniform(0.1, 0.7);
    const FaceMask mask = full_mask(6, 6);
    const double m = illum_magnitude(noisy, mask);
    const double target = 0.45;
    const ImagePlane moved = divide_magnitude(noisy, m / target);
    CHECK(illum_magnitude(moved, mask) == doctest::Approx(target).epsilon(1e-12));
}

TEST_CASE("rgb scaling variants act per channel") {
    const RgbImage img = encoded_rgb(2, 2, 0.2, 0.4, 0.6);
    const RgbImage scaled = apply_scale(img, 2.0);
    CHECK(scaled.r.pixels[0] == doctest::Approx(0.2 * std::pow(2.0, 1.0 / 2.2)).epsilon(1e-15));
    const RgbImage divided = divide_magnitude(img, 2.0);
    CHECK(divided.g.pixels[0] == doctest::Approx(0.2).epsilon(1e-15));
}

TEST_CASE("magnitude std is the population deviation") {
    CHECK(magnitude_std({0.4, 0.6}) == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(magnitude_std({0.5, 0.5, 0.5}) == doctest::Approx(0.0).scale(1.0).epsilon(1e-15));
    CHECK_THROWS_AS(magnitude_std({0.5}), PreconditionError);
}

TEST_CASE("per-class normalization collapses within-class spread") {
    // The mechanism the relight pipeline relies on: after dividing by s,
    // every image in a class sits at the class mean magnitude.
    Rng rng(421);
    const FaceMask mask = full_mask(8, 8);
    std::vector<ImagePlane> images;
    std::vector<MagnitudeSample> samples;
    for (int i = 0; i < 30; ++i) {
        ImagePlane img(8, 8, Encoding::gamma_encoded());
        const double level = rng.uniform(0.15, 0.75);
        for (auto& v : img.pixels) v = level * rng.uniform(0.9, 1.1);
        images.push_back(img);
        samples.push_back({illum_magnitude(img, mask), SkinTone::Medium});
    }
    const ClassMagnitudes cm = class_magnitude_means(samples);
    std::vector<double> before, after;
    for (int i = 0; i < 30; ++i) {
        before.push_back(samples[i].m);
        const double s = scale_factor(samples[i].m, SkinTone::Medium, cm);
        after.push_back(illum_magnitude(divide_magnitude(images[i], s), mask));
    }
    CHECK(magnitude_std(before) > 0.05);
    CHECK(magnitude_std(after) < 1e-12);
    CHECK(magnitude_std(after) <= 0.5 * magnitude_std(before));
}

TEST_CASE("class magnitudes survive a JSON round trip") {
    TempDir dir("mags");
    std::vector<MagnitudeSample> samples = {
        {0.41, SkinTone::Dark}, {0.62, SkinTone::Dark}, {0.55, SkinTone::Fair},
        {0.75, SkinTone::Fair}, {0.68, SkinTone::Tan},
    };
    const ClassMagnitudes cm = class_magnitude_means(samples);
    write_class_magnitudes(dir / "m.json", cm);
    const ClassMagnitudes back = read_class_magnitudes(dir / "m.json");
    for (SkinTone tone : all_tones()) {
        CHECK(back.count[static_cast<int>(tone)] == cm.count[static_cast<int>(tone)]);
        if (cm.has(tone)) CHECK(back.mean_for(tone) == cm.mean_for(tone));
    }
    CHECK(!back.has(SkinTone::Medium));

    testutil::write_text(dir / "bad.json", "{\"schema\":\"v1\"}");
    CHECK_THROWS_AS(read_class_magnitudes(dir / "bad.json"), FormatError);
}
