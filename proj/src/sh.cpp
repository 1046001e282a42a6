#include "shdebias/sh.hpp"

namespace shdebias {

namespace {
constexpr double kC0 = 0.282095;  // Y00
constexpr double kC1 = 0.488603;  // band 1
constexpr double kC2 = 1.092548;  // band 2, off-diagonal terms
constexpr double kC3 = 0.315392;  // Y20
constexpr double kC4 = 0.546274;  // Y22
}  // namespace

ShCoeffs sh_basis(const UnitNormal& n) {
    const double x = n.x, y = n.y, z = n.z;
    return {
        kC0,
        kC1 * y,
        kC1 * z,
        kC1 * x,
        kC2 * x * y,
        kC2 * y * z,
        kC3 * (3.0 * z * z - 1.0),
        kC2 * x * z,
        kC4 * (x * x - y * y),
    };
}

const ShCoeffs& irradiance_weights() {
    static const ShCoeffs w = {
        kPi,
        2.0 * kPi / 3.0, 2.0 * kPi / 3.0, 2.0 * kPi / 3.0,
        kPi / 4.0, kPi / 4.0, kPi / 4.0, kPi / 4.0, kPi / 4.0,
    };
    return w;
}

double irradiance_shading(const ShCoeffs& light, const UnitNormal& n) {
    const ShCoeffs basis = sh_basis(n);
    const ShCoeffs& w = irradiance_weights();
    double s = 0.0;
    for (int i = 0; i < kShCount; ++i) s += w[i] * light[i] * basis[i];
    return s;
}

NormalMap sphere_normal_map(int res) {
    if (res <= 0) throw PreconditionError("sphere_normal_map: resolution must be positive");
    NormalMap map(res, res);
    for (int i = 0; i < res; ++i) {
        const double y = 1.0 - (i + 0.5) / res * 2.0;  // top row has y near +1
        for (int j = 0; j < res; ++j) {
            const double x = (j + 0.5) / res * 2.0 - 1.0;
            const double r2 = x * x + y * y;
            if (r2 < 1.0) {
                const double z = std::sqrt(1.0 - r2);
                map.at(j, i) = UnitNormal(x, y, z);
            }
        }
    }
    return map;
}

ImagePlane render(const ImagePlane& albedo, const NormalMap& normals, const ShCoeffs& light) {
    if (!albedo.encoding.is_linear())
        throw PreconditionError("render: albedo must be linear-encoded");
    if (albedo.width != normals.width || albedo.height != normals.height)
        throw PreconditionError("render: albedo/normal-map shape mismatch");
    ImagePlane out(albedo.width, albedo.height, Encoding::linear());
    for (int y = 0; y < albedo.height; ++y) {
        for (int x = 0; x < albedo.width; ++x) {
            const auto& n = normals.at(x, y);
            if (!n) continue;
            const double s = irradiance_shading(light, *n);
            out.at(x, y) = albedo.at(x, y) * std::max(0.0, s);
        }
    }
    return out;
}

RgbImage render_rgb(const RgbImage& albedo, const NormalMap& normals, const ShCoeffs& light) {
    require_coherent(albedo, "render_rgb");
    return {render(albedo.r, normals, light),
            render(albedo.g, normals, light),
            render(albedo.b, normals, light)};
}

}  // namespace shdebias
