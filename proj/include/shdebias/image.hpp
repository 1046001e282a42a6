// Core raster types: single-channel image planes, RGB triplets, face masks.
//
// Pixels are stored row major as doubles.  Every plane carries its transfer
// encoding (linear radiometric values or gamma-compressed display values) so
// operations can reject inputs in the wrong domain instead of silently
// producing nonsense.
#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "shdebias/error.hpp"

namespace shdebias {

inline constexpr double kDefaultGamma = 2.2;

enum class TransferKind : std::uint8_t { Linear, Gamma };

struct Encoding {
    TransferKind kind = TransferKind::Linear;
    double gamma = kDefaultGamma;  // exponent, meaningful when kind == Gamma

    static Encoding linear() { return {TransferKind::Linear, kDefaultGamma}; }
    static Encoding gamma_encoded(double g = kDefaultGamma) { return {TransferKind::Gamma, g}; }

    bool is_linear() const { return kind == TransferKind::Linear; }
    bool is_gamma() const { return kind == TransferKind::Gamma; }
};

struct ImagePlane {
    int width = 0;
    int height = 0;
    Encoding encoding = Encoding::linear();
    std::vector<double> pixels;  // row major, size width * height

    ImagePlane() = default;
    ImagePlane(int w, int h, Encoding enc, double fill = 0.0)
        : width(w), height(h), encoding(enc) {
        if (w <= 0 || h <= 0) throw PreconditionError("ImagePlane: dimensions must be positive");
        pixels.assign(static_cast<std::size_t>(w) * h, fill);
    }

    std::size_t size() const { return pixels.size(); }
    double& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
    double at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
};

struct RgbImage {
    ImagePlane r, g, b;

    int width() const { return r.width; }
    int height() const { return r.height; }
};

// Throws unless all three channels agree in shape and encoding kind.
void require_coherent(const RgbImage& img, const char* what);

// Binary pixel mask over an image grid.
struct FaceMask {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> on;  // row major, 0 or 1

    FaceMask() = default;
    FaceMask(int w, int h) : width(w), height(h) {
        if (w <= 0 || h <= 0) throw PreconditionError("FaceMask: dimensions must be positive");
        on.assign(static_cast<std::size_t>(w) * h, 0);
    }

    std::size_t count() const;
    bool at(int x, int y) const { return on[static_cast<std::size_t>(y) * width + x] != 0; }
    void set(int x, int y, bool v) { on[static_cast<std::size_t>(y) * width + x] = v ? 1 : 0; }
};

// Throws unless the mask and plane share dimensions.
void require_same_shape(const ImagePlane& img, const FaceMask& mask, const char* what);

}  // namespace shdebias
