// Bit-exact serialization: 8-bit PNG read/write, the pure power-law gamma
// transfer, coefficient record CSV/JSON formats, and scatter plot emission.
//
// All writers are deterministic (same value -> same bytes); all readers
// reject malformed input instead of coercing it.
#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "shdebias/error.hpp"
#include "shdebias/image.hpp"
#include "shdebias/sh.hpp"
#include "shdebias/skin_tone.hpp"

namespace shdebias {

// ---- PNG ----
// 8-bit grayscale or RGB input; anything else (16-bit, palette, alpha) is a
// format error.  Bytes map to [0,1] by /255; planes come back gamma-encoded
// with exponent 2.2.  Grayscale files replicate into all three channels.
RgbImage read_png(const std::filesystem::path& path);

// Gamma-encoded values in [0,1]; quantizes by round(v * 255).  Writes RGB,
// or grayscale when all three channels are identical buffers.
void write_png(const std::filesystem::path& path, const RgbImage& img);

// Masks are 1-bit grayscale or 8-bit grayscale restricted to {0, 255}.
FaceMask read_mask_png(const std::filesystem::path& path);
void write_mask_png(const std::filesystem::path& path, const FaceMask& mask);

// ---- transfer ----
// Pure power law, never the piecewise sRGB curve: decode is v^g (encoded ->
// linear), encode is v^(1/g) with a clamp of the linear input to [0,1].
ImagePlane decode_gamma(const ImagePlane& img);
ImagePlane encode_gamma(const ImagePlane& img, double gamma = kDefaultGamma);
RgbImage decode_gamma(const RgbImage& img);
RgbImage encode_gamma(const RgbImage& img, double gamma = kDefaultGamma);

// ---- coefficient records ----
enum class CoeffKind : int { Raw = 0, Normalized = 1, Aligned = 2 };

const std::string& coeff_kind_name(CoeffKind kind);
CoeffKind coeff_kind_from_name(const std::string& name);

struct CoeffRecord {
    std::string id;
    ShCoeffs coeffs{};
    std::optional<SkinTone> tone;
    std::optional<CoeffKind> kind;
};

// Finite values; normalized/aligned records must have coeffs[0] == 1.
void validate_record(const CoeffRecord& rec);

// Format chosen by extension: .csv (header `id,c0..c8[,class][,kind]`) or
// .json (object with a schema marker; a bare array of records is also
// accepted on read).  Reals carry 17 significant digits in CSV.
std::vector<CoeffRecord> read_coeffs(const std::filesystem::path& path);
void write_coeffs(const std::filesystem::path& path, const std::vector<CoeffRecord>& records);

// ---- scatter emission ----
struct EmbedPoint {
    std::string id;
    double x = 0.0, y = 0.0;
    SkinTone tone = SkinTone::Fair;
};

// Writes `<stem>.csv` (header `id,x,y,class`) and `<stem>.svg` with one fixed
// color per class, rows and markers ordered by id so output is byte-stable.
// Empty input is an error.
void emit_scatter(const std::vector<EmbedPoint>& points, const std::filesystem::path& stem,
                  const std::string& title = "");

// ---- real formatting ----
// 17-significant-digit decimal (lossless for 64-bit floats).
std::string format_real(double v);
// Strict: full-string parse, finite values only.
double parse_real(const std::string& s);

}  // namespace shdebias
