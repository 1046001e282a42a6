#include "shdebias/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace shdebias {

namespace {

using nlohmann::json;

// ---- libpng plumbing ----

// Quiet error handlers: capture the message for the exception text instead of
// letting libpng print to stderr, then unwind via the active setjmp guard.
thread_local std::string g_png_error;

extern "C" void png_error_capture(png_structp png, png_const_charp msg) {
    g_png_error = msg ? msg : "unknown";
    png_longjmp(png, 1);
}

extern "C" void png_warning_ignore(png_structp, png_const_charp) {}

std::string png_error_detail() {
    return g_png_error.empty() ? std::string("unknown") : g_png_error;
}

struct FileHandle {
    std::FILE* fp = nullptr;
    explicit FileHandle(const std::filesystem::path& path, const char* mode)
        : fp(std::fopen(path.string().c_str(), mode)) {}
    ~FileHandle() {
        if (fp) std::fclose(fp);
    }
    FileHandle(const FileHandle&) = delete;
    FileHandle& operator=(const FileHandle&) = delete;
};

struct PngReader {
    png_structp png = nullptr;
    png_infop info = nullptr;
    PngReader() {
        png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_capture,
                                     png_warning_ignore);
        if (png) info = png_create_info_struct(png);
    }
    ~PngReader() { png_destroy_read_struct(&png, &info, nullptr); }
    PngReader(const PngReader&) = delete;
    PngReader& operator=(const PngReader&) = delete;
};

struct PngWriter {
    png_structp png = nullptr;
    png_infop info = nullptr;
    PngWriter() {
        png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_capture,
                                      png_warning_ignore);
        if (png) info = png_create_info_struct(png);
    }
    ~PngWriter() { png_destroy_write_struct(&png, &info); }
    PngWriter(const PngWriter&) = delete;
    PngWriter& operator=(const PngWriter&) = delete;
};

struct DecodedPng {
    int width = 0;
    int height = 0;
    int channels = 0;  // 1 (gray) or 3 (rgb)
    std::vector<std::uint8_t> bytes;
};

// Reads an 8-bit gray or RGB PNG (1-bit gray masks are expanded to 8).
DecodedPng decode_png_file(const std::filesystem::path& path) {
    FileHandle file(path, "rb");
    if (!file.fp) throw IoError("cannot open PNG " + path.string());
    PngReader ctx;
    if (!ctx.png || !ctx.info) throw IoError("libpng allocation failure");

    // Guard A: header parsing.  No C++ objects are created inside the region.
    if (setjmp(png_jmpbuf(ctx.png)))
        throw FormatError("libpng failed reading " + path.string() + ": " + png_error_detail());
    png_init_io(ctx.png, file.fp);
    png_read_info(ctx.png, ctx.info);

    const png_uint_32 w = png_get_image_width(ctx.png, ctx.info);
    const png_uint_32 h = png_get_image_height(ctx.png, ctx.info);
    const int bit_depth = png_get_bit_depth(ctx.png, ctx.info);
    const int color_type = png_get_color_type(ctx.png, ctx.info);

    if (bit_depth == 16)
        throw FormatError("16-bit PNG is unsupported: " + path.string());
    if (color_type != PNG_COLOR_TYPE_GRAY && color_type != PNG_COLOR_TYPE_RGB)
        throw FormatError("unsupported PNG color type (need 8-bit gray or RGB): " +
                          path.string());
    if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8)
        png_set_expand_gray_1_2_4_to_8(ctx.png);
    else if (bit_depth != 8)
        throw FormatError("unsupported PNG bit depth: " + path.string());

    if (setjmp(png_jmpbuf(ctx.png)))
        throw FormatError("libpng failed reading " + path.string() + ": " + png_error_detail());
    png_set_interlace_handling(ctx.png);
    png_read_update_info(ctx.png, ctx.info);

    DecodedPng out;
    out.width = static_cast<int>(w);
    out.height = static_cast<int>(h);
    out.channels = (color_type == PNG_COLOR_TYPE_GRAY) ? 1 : 3;
    const std::size_t stride = png_get_rowbytes(ctx.png, ctx.info);
    out.bytes.assign(stride * h, 0);
    std::vector<png_bytep> rows(h);
    for (png_uint_32 i = 0; i < h; ++i) rows[i] = out.bytes.data() + stride * i;

    // Guard B: pixel decode, buffers already allocated above.
    if (setjmp(png_jmpbuf(ctx.png)))
        throw FormatError("libpng failed reading " + path.string() + ": " + png_error_detail());
    png_read_image(ctx.png, rows.data());
    png_read_end(ctx.png, nullptr);
    return out;
}

void encode_png_file(const std::filesystem::path& path, int width, int height, int channels,
                     const std::vector<std::uint8_t>& bytes) {
    FileHandle file(path, "wb");
    if (!file.fp) throw IoError("cannot create PNG " + path.string());
    PngWriter ctx;
    if (!ctx.png || !ctx.info) throw IoError("libpng allocation failure");

    const std::size_t stride = static_cast<std::size_t>(width) * channels;
    std::vector<png_bytep> rows(height);
    for (int i = 0; i < height; ++i)
        rows[i] = const_cast<png_bytep>(bytes.data() + stride * i);

    if (setjmp(png_jmpbuf(ctx.png)))
        throw IoError("libpng failed writing " + path.string() + ": " + png_error_detail());
    png_init_io(ctx.png, file.fp);
    // Canonical encoder settings so equal pixels always give equal bytes.
    png_set_compression_level(ctx.png, 6);
    png_set_filter(ctx.png, 0, PNG_FILTER_NONE);
    png_set_IHDR(ctx.png, ctx.info, width, height, 8,
                 channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(ctx.png, ctx.info);
    png_write_image(ctx.png, rows.data());
    png_write_end(ctx.png, nullptr);
}

std::uint8_t quantize_byte(double v, const char* what) {
    if (!std::isfinite(v) || v < 0.0 || v > 1.0)
        throw PreconditionError(std::string(what) + ": pixel values must lie in [0,1]");
    return static_cast<std::uint8_t>(std::lround(v * 255.0));
}

// ---- CSV helpers ----

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    fields.push_back(cur);
    return fields;
}

std::string chomp(std::string line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
}

}  // namespace

// ---- PNG ----

RgbImage read_png(const std::filesystem::path& path) {
    const DecodedPng raw = decode_png_file(path);
    const Encoding enc = Encoding::gamma_encoded();
    RgbImage img{ImagePlane(raw.width, raw.height, enc), ImagePlane(raw.width, raw.height, enc),
                 ImagePlane(raw.width, raw.height, enc)};
    const std::size_t n = static_cast<std::size_t>(raw.width) * raw.height;
    for (std::size_t i = 0; i < n; ++i) {
        if (raw.channels == 1) {
            const double v = raw.bytes[i] / 255.0;
            img.r.pixels[i] = img.g.pixels[i] = img.b.pixels[i] = v;
        } else {
            img.r.pixels[i] = raw.bytes[3 * i + 0] / 255.0;
            img.g.pixels[i] = raw.bytes[3 * i + 1] / 255.0;
            img.b.pixels[i] = raw.bytes[3 * i + 2] / 255.0;
        }
    }
    return img;
}

void write_png(const std::filesystem::path& path, const RgbImage& img) {
    require_coherent(img, "write_png");
    if (!img.r.encoding.is_gamma())
        throw PreconditionError("write_png: image must be gamma-encoded");
    const bool gray = img.r.pixels == img.g.pixels && img.r.pixels == img.b.pixels;
    const std::size_t n = img.r.size();
    std::vector<std::uint8_t> bytes(n * (gray ? 1 : 3));
    for (std::size_t i = 0; i < n; ++i) {
        if (gray) {
            bytes[i] = quantize_byte(img.r.pixels[i], "write_png");
        } else {
            bytes[3 * i + 0] = quantize_byte(img.r.pixels[i], "write_png");
            bytes[3 * i + 1] = quantize_byte(img.g.pixels[i], "write_png");
            bytes[3 * i + 2] = quantize_byte(img.b.pixels[i], "write_png");
        }
    }
    encode_png_file(path, img.width(), img.height(), gray ? 1 : 3, bytes);
}

FaceMask read_mask_png(const std::filesystem::path& path) {
    const DecodedPng raw = decode_png_file(path);
    if (raw.channels != 1)
        throw FormatError("mask PNG must be grayscale: " + path.string());
    FaceMask mask(raw.width, raw.height);
    for (std::size_t i = 0; i < raw.bytes.size(); ++i) {
        if (raw.bytes[i] != 0 && raw.bytes[i] != 255)
            throw FormatError("mask PNG has a value outside {0,255}: " + path.string());
        mask.on[i] = raw.bytes[i] ? 1 : 0;
    }
    return mask;
}

void write_mask_png(const std::filesystem::path& path, const FaceMask& mask) {
    if (mask.width <= 0 || mask.height <= 0)
        throw PreconditionError("write_mask_png: empty mask");
    std::vector<std::uint8_t> bytes(mask.on.size());
    for (std::size_t i = 0; i < bytes.size(); ++i) bytes[i] = mask.on[i] ? 255 : 0;
    encode_png_file(path, mask.width, mask.height, 1, bytes);
}

// ---- transfer ----

ImagePlane decode_gamma(const ImagePlane& img) {
    if (!img.encoding.is_gamma())
        throw PreconditionError("decode_gamma: input must be gamma-encoded");
    ImagePlane out(img.width, img.height, Encoding::linear());
    const double g = img.encoding.gamma;
    for (std::size_t i = 0; i < img.size(); ++i) {
        const double v = img.pixels[i];
        if (!std::isfinite(v) || v < 0.0 || v > 1.0)
            throw PreconditionError("decode_gamma: values must lie in [0,1]");
        out.pixels[i] = std::pow(v, g);
    }
    return out;
}

ImagePlane encode_gamma(const ImagePlane& img, double gamma) {
    if (!img.encoding.is_linear())
        throw PreconditionError("encode_gamma: input must be linear");
    if (!(gamma > 0.0)) throw PreconditionError("encode_gamma: gamma must be positive");
    ImagePlane out(img.width, img.height, Encoding::gamma_encoded(gamma));
    for (std::size_t i = 0; i < img.size(); ++i) {
        const double v = std::clamp(img.pixels[i], 0.0, 1.0);
        out.pixels[i] = std::pow(v, 1.0 / gamma);
    }
    return out;
}

RgbImage decode_gamma(const RgbImage& img) {
    require_coherent(img, "decode_gamma");
    return {decode_gamma(img.r), decode_gamma(img.g), decode_gamma(img.b)};
}

RgbImage encode_gamma(const RgbImage& img, double gamma) {
    require_coherent(img, "encode_gamma");
    return {encode_gamma(img.r, gamma), encode_gamma(img.g, gamma), encode_gamma(img.b, gamma)};
}

// ---- coefficient records ----

namespace {
const std::array<std::string, 3> kKindNames = {"raw", "normalized", "aligned"};
}

const std::string& coeff_kind_name(CoeffKind kind) {
    return kKindNames[static_cast<int>(kind)];
}

CoeffKind coeff_kind_from_name(const std::string& name) {
    for (int i = 0; i < 3; ++i)
        if (name == kKindNames[i]) return static_cast<CoeffKind>(i);
    throw FormatError("unknown coefficient kind '" + name + "'");
}

void validate_record(const CoeffRecord& rec) {
    if (rec.id.empty()) throw FormatError("coefficient record has an empty id");
    for (double c : rec.coeffs)
        if (!std::isfinite(c))
            throw FormatError("coefficient record '" + rec.id + "' has a non-finite value");
    if (rec.kind && *rec.kind != CoeffKind::Raw && rec.coeffs[0] != 1.0)
        throw FormatError("record '" + rec.id + "' is " + coeff_kind_name(*rec.kind) +
                          " but its DC term is not 1");
}

namespace {

std::vector<CoeffRecord> read_coeffs_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open coefficient file " + path.string());
    std::string line;
    if (!std::getline(in, line))
        throw FormatError("coefficient file is empty: " + path.string());
    const std::vector<std::string> header = split_csv(chomp(line));

    std::vector<std::string> expect = {"id", "c0", "c1", "c2", "c3", "c4",
                                       "c5", "c6", "c7", "c8"};
    bool has_class = false, has_kind = false;
    std::size_t i = 0;
    for (; i < expect.size(); ++i)
        if (i >= header.size() || header[i] != expect[i])
            throw FormatError("coefficient CSV header must start with id,c0..c8: " +
                              path.string());
    if (i < header.size() && header[i] == "class") {
        has_class = true;
        ++i;
    }
    if (i < header.size() && header[i] == "kind") {
        has_kind = true;
        ++i;
    }
    if (i != header.size())
        throw FormatError("coefficient CSV has an unknown column '" + header[i] + "'");

    const std::size_t arity = 10 + (has_class ? 1 : 0) + (has_kind ? 1 : 0);
    std::vector<CoeffRecord> out;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        line = chomp(line);
        if (line.empty()) continue;
        const std::vector<std::string> fields = split_csv(line);
        if (fields.size() != arity)
            throw FormatError("coefficient CSV row " + std::to_string(row) + ": expected " +
                              std::to_string(arity) + " fields, got " +
                              std::to_string(fields.size()));
        CoeffRecord rec;
        rec.id = fields[0];
        for (int c = 0; c < kShCount; ++c) {
            try {
                rec.coeffs[c] = parse_real(fields[1 + c]);
            } catch (const Error&) {
                throw FormatError("coefficient CSV row " + std::to_string(row) +
                                  ": bad real '" + fields[1 + c] + "'");
            }
        }
        std::size_t f = 10;
        if (has_class) rec.tone = tone_from_name(fields[f++]);
        if (has_kind) rec.kind = coeff_kind_from_name(fields[f++]);
        validate_record(rec);
        out.push_back(std::move(rec));
    }
    return out;
}

void write_coeffs_csv(const std::filesystem::path& path,
                      const std::vector<CoeffRecord>& records, bool has_class, bool has_kind) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write coefficient file " + path.string());
    out << "id,c0,c1,c2,c3,c4,c5,c6,c7,c8";
    if (has_class) out << ",class";
    if (has_kind) out << ",kind";
    out << '\n';
    for (const CoeffRecord& rec : records) {
        out << rec.id;
        for (double c : rec.coeffs) out << ',' << format_real(c);
        if (has_class) out << ',' << tone_name(*rec.tone);
        if (has_kind) out << ',' << coeff_kind_name(*rec.kind);
        out << '\n';
    }
    if (!out) throw IoError("failed writing coefficient file " + path.string());
}

CoeffRecord record_from_json(const json& j) {
    if (!j.is_object()) throw FormatError("coefficient JSON record must be an object");
    CoeffRecord rec;
    for (const auto& [key, value] : j.items()) {
        if (key == "id") {
            rec.id = value.get<std::string>();
        } else if (key == "coeffs") {
            if (!value.is_array() || value.size() != kShCount)
                throw FormatError("coefficient JSON record needs 9 coeffs");
            for (int i = 0; i < kShCount; ++i) rec.coeffs[i] = value[i].get<double>();
        } else if (key == "class") {
            rec.tone = tone_from_name(value.get<std::string>());
        } else if (key == "kind") {
            rec.kind = coeff_kind_from_name(value.get<std::string>());
        } else {
            throw FormatError("coefficient JSON record has an unknown key '" + key + "'");
        }
    }
    validate_record(rec);
    return rec;
}

std::vector<CoeffRecord> read_coeffs_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open coefficient file " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw FormatError("bad JSON in " + path.string() + ": " + e.what());
    }
    const json* records = nullptr;
    if (doc.is_array()) {
        records = &doc;
    } else if (doc.is_object() && doc.contains("records")) {
        if (!doc.contains("schema") || doc["schema"] != "v1")
            throw FormatError("coefficient JSON must carry schema \"v1\": " + path.string());
        records = &doc["records"];
    } else {
        throw FormatError("coefficient JSON must be an array or a v1 object: " + path.string());
    }
    std::vector<CoeffRecord> out;
    try {
        for (const json& j : *records) out.push_back(record_from_json(j));
    } catch (const json::exception& e) {
        throw FormatError("bad coefficient JSON in " + path.string() + ": " + e.what());
    }
    return out;
}

void write_coeffs_json(const std::filesystem::path& path,
                       const std::vector<CoeffRecord>& records, bool has_class, bool has_kind) {
    json arr = json::array();
    for (const CoeffRecord& rec : records) {
        json j;
        j["id"] = rec.id;
        j["coeffs"] = rec.coeffs;
        if (has_class) j["class"] = tone_name(*rec.tone);
        if (has_kind) j["kind"] = coeff_kind_name(*rec.kind);
        arr.push_back(std::move(j));
    }
    json doc;
    doc["schema"] = "v1";
    doc["records"] = std::move(arr);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write coefficient file " + path.string());
    out << doc.dump(2) << '\n';
    if (!out) throw IoError("failed writing coefficient file " + path.string());
}

}  // namespace

std::vector<CoeffRecord> read_coeffs(const std::filesystem::path& path) {
    const std::string ext = path.extension().string();
    if (ext == ".csv") return read_coeffs_csv(path);
    if (ext == ".json") return read_coeffs_json(path);
    throw FormatError("coefficient file must be .csv or .json: " + path.string());
}

void write_coeffs(const std::filesystem::path& path, const std::vector<CoeffRecord>& records) {
    bool has_class = false, has_kind = false;
    for (const CoeffRecord& rec : records) {
        validate_record(rec);
        has_class = has_class || rec.tone.has_value();
        has_kind = has_kind || rec.kind.has_value();
    }
    for (const CoeffRecord& rec : records) {
        if (has_class && !rec.tone)
            throw PreconditionError("write_coeffs: record '" + rec.id + "' is missing class");
        if (has_kind && !rec.kind)
            throw PreconditionError("write_coeffs: record '" + rec.id + "' is missing kind");
    }
    const std::string ext = path.extension().string();
    if (ext == ".csv") return write_coeffs_csv(path, records, has_class, has_kind);
    if (ext == ".json") return write_coeffs_json(path, records, has_class, has_kind);
    throw FormatError("coefficient file must be .csv or .json: " + path.string());
}

// ---- scatter emission ----

namespace {
const std::array<std::string, kToneCount> kToneColors = {"#e8c4a0", "#c68642", "#8d5524",
                                                         "#3b2219"};

std::string fixed2(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}
}  // namespace

void emit_scatter(const std::vector<EmbedPoint>& points, const std::filesystem::path& stem,
                  const std::string& title) {
    if (points.empty()) throw PreconditionError("emit_scatter: no points");
    std::vector<EmbedPoint> sorted = points;
    std::sort(sorted.begin(), sorted.end(),
              [](const EmbedPoint& a, const EmbedPoint& b) { return a.id < b.id; });

    std::filesystem::path csv_path = stem;
    csv_path += ".csv";
    std::ofstream csv(csv_path, std::ios::binary);
    if (!csv) throw IoError("cannot write " + csv_path.string());
    csv << "id,x,y,class\n";
    for (const EmbedPoint& p : sorted)
        csv << p.id << ',' << format_real(p.x) << ',' << format_real(p.y) << ','
            << tone_name(p.tone) << '\n';
    if (!csv) throw IoError("failed writing " + csv_path.string());

    double xmin = sorted[0].x, xmax = sorted[0].x, ymin = sorted[0].y, ymax = sorted[0].y;
    for (const EmbedPoint& p : sorted) {
        xmin = std::min(xmin, p.x);
        xmax = std::max(xmax, p.x);
        ymin = std::min(ymin, p.y);
        ymax = std::max(ymax, p.y);
    }
    if (xmax - xmin < 1e-12) {
        xmin -= 0.5;
        xmax += 0.5;
    }
    if (ymax - ymin < 1e-12) {
        ymin -= 0.5;
        ymax += 0.5;
    }
    constexpr double kSize = 560.0, kMargin = 48.0;
    const double span = kSize - 2.0 * kMargin;
    auto sx = [&](double x) { return kMargin + (x - xmin) / (xmax - xmin) * span; };
    auto sy = [&](double y) { return kSize - kMargin - (y - ymin) / (ymax - ymin) * span; };

    std::filesystem::path svg_path = stem;
    svg_path += ".svg";
    std::ofstream svg(svg_path, std::ios::binary);
    if (!svg) throw IoError("cannot write " + svg_path.string());
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"560\" height=\"560\" "
           "viewBox=\"0 0 560 560\">\n"
        << "<rect width=\"560\" height=\"560\" fill=\"#ffffff\"/>\n";
    if (!title.empty())
        svg << "<text x=\"16\" y=\"24\" font-family=\"sans-serif\" font-size=\"14\">" << title
            << "</text>\n";
    for (int t = 0; t < kToneCount; ++t) {
        const double ly = 20.0 + 16.0 * t;
        svg << "<rect x=\"470\" y=\"" << fixed2(ly) << "\" width=\"10\" height=\"10\" fill=\""
            << kToneColors[t] << "\"/>\n"
            << "<text x=\"484\" y=\"" << fixed2(ly + 9.0)
            << "\" font-family=\"sans-serif\" font-size=\"11\">"
            << tone_name(static_cast<SkinTone>(t)) << "</text>\n";
    }
    for (const EmbedPoint& p : sorted)
        svg << "<circle cx=\"" << fixed2(sx(p.x)) << "\" cy=\"" << fixed2(sy(p.y))
            << "\" r=\"3\" fill=\"" << kToneColors[static_cast<int>(p.tone)]
            << "\" fill-opacity=\"0.8\"/>\n";
    svg << "</svg>\n";
    if (!svg) throw IoError("failed writing " + svg_path.string());
}

// ---- real formatting ----

std::string format_real(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double parse_real(const std::string& s) {
    double v = 0.0;
    const char* begin = s.data();
    const char* end = begin + s.size();
    const auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc() || ptr != end || !std::isfinite(v))
        throw FormatError("bad real value '" + s + "'");
    return v;
}

}  // namespace shdebias
