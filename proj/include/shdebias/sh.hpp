// Real spherical harmonics through band 2, plus Lambertian shading and the
// orthographic sphere geometry used by the synthetic renderer.
//
// Coefficient order everywhere: (Y00, Y1-1, Y10, Y11, Y2-2, Y2-1, Y20, Y21, Y22).
#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

#include "shdebias/error.hpp"
#include "shdebias/image.hpp"

namespace shdebias {

using ShCoeffs = std::array<double, 9>;

inline constexpr int kShCount = 9;
inline constexpr double kPi = 3.14159265358979323846;

// Direction on the unit sphere; construction enforces |n|^2 within 1e-9 of 1.
struct UnitNormal {
    double x = 0.0, y = 0.0, z = 1.0;

    UnitNormal() = default;
    UnitNormal(double nx, double ny, double nz) : x(nx), y(ny), z(nz) {
        const double sq = nx * nx + ny * ny + nz * nz;
        if (std::abs(sq - 1.0) > 1e-9)
            throw PreconditionError("UnitNormal: vector is not unit length");
    }
};

// Basis values at a direction, using the conventional real-SH constants.
ShCoeffs sh_basis(const UnitNormal& n);

// Per-coefficient premultipliers of the clamped-cosine convolution:
// pi for band 0, 2*pi/3 for band 1, pi/4 for band 2.
const ShCoeffs& irradiance_weights();

// Irradiance at a surface normal: sum_i A_i * light[i] * Y_i(n).
double irradiance_shading(const ShCoeffs& light, const UnitNormal& n);

// Per-pixel surface orientation; pixels without geometry are disengaged.
struct NormalMap {
    int width = 0;
    int height = 0;
    std::vector<std::optional<UnitNormal>> normals;  // row major

    NormalMap() = default;
    NormalMap(int w, int h) : width(w), height(h) {
        if (w <= 0 || h <= 0) throw PreconditionError("NormalMap: dimensions must be positive");
        normals.assign(static_cast<std::size_t>(w) * h, std::nullopt);
    }

    const std::optional<UnitNormal>& at(int x, int y) const {
        return normals[static_cast<std::size_t>(y) * width + x];
    }
    std::optional<UnitNormal>& at(int x, int y) {
        return normals[static_cast<std::size_t>(y) * width + x];
    }
};

// Front half of a unit sphere under orthographic projection on a res x res
// grid.  Pixel centres map to x in [-1,1] left to right and y in [-1,1]
// bottom to top; points with x^2 + y^2 >= 1 carry no normal.
NormalMap sphere_normal_map(int res);

// Linear-light Lambertian render: albedo * max(0, shading) per pixel.
// Albedo must be linear-encoded and share the normal map's shape.
// Pixels without geometry render as 0.
ImagePlane render(const ImagePlane& albedo, const NormalMap& normals, const ShCoeffs& light);

// Convenience: render three albedo channels under one light.
RgbImage render_rgb(const RgbImage& albedo, const NormalMap& normals, const ShCoeffs& light);

}  // namespace shdebias
