#include "outcrop/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cstring>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>

#include <json.hpp>

#include "outcrop/errors.hpp"

namespace outcrop::io {

namespace {

using json = nlohmann::json;

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const fs::path& path, const char* mode) {
    FilePtr f(std::fopen(path.c_str(), mode));
    if (!f) throw IoError("cannot open " + path.string());
    return f;
}

[[noreturn]] void png_error_fn(png_structp, png_const_charp msg) { throw IoError(std::string("png: ") + msg); }
void png_warning_fn(png_structp, png_const_charp) {}

class PngWriter {
public:
    explicit PngWriter(const fs::path& path) : file_(open_file(path, "wb")), path_(path) {
        png_ = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_fn, png_warning_fn);
        if (!png_) throw IoError("png_create_write_struct failed");
        info_ = png_create_info_struct(png_);
        if (!info_) {
            png_destroy_write_struct(&png_, nullptr);
            throw IoError("png_create_info_struct failed");
        }
        png_init_io(png_, file_.get());
    }
    ~PngWriter() { png_destroy_write_struct(&png_, &info_); }
    PngWriter(const PngWriter&) = delete;
    PngWriter& operator=(const PngWriter&) = delete;

    png_structp png() { return png_; }
    png_infop info() { return info_; }

    void write_rows(std::vector<png_bytep>& rows) {
        png_write_info(png_, info_);
        png_write_image(png_, rows.data());
        png_write_end(png_, nullptr);
    }

private:
    FilePtr file_;
    fs::path path_;
    png_structp png_ = nullptr;
    png_infop info_ = nullptr;
};

class PngReader {
public:
    explicit PngReader(const fs::path& path) : file_(open_file(path, "rb")) {
        png_byte sig[8];
        if (std::fread(sig, 1, 8, file_.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
            throw IoError("not a PNG file: " + path.string());
        }
        png_ = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_fn, png_warning_fn);
        if (!png_) throw IoError("png_create_read_struct failed");
        info_ = png_create_info_struct(png_);
        if (!info_) {
            png_destroy_read_struct(&png_, nullptr, nullptr);
            throw IoError("png_create_info_struct failed");
        }
        png_init_io(png_, file_.get());
        png_set_sig_bytes(png_, 8);
        png_read_info(png_, info_);
    }
    ~PngReader() { png_destroy_read_struct(&png_, &info_, nullptr); }
    PngReader(const PngReader&) = delete;
    PngReader& operator=(const PngReader&) = delete;

    png_structp png() { return png_; }
    png_infop info() { return info_; }
    int width() { return static_cast<int>(png_get_image_width(png_, info_)); }
    int height() { return static_cast<int>(png_get_image_height(png_, info_)); }
    int color_type() { return png_get_color_type(png_, info_); }
    int bit_depth() { return png_get_bit_depth(png_, info_); }

    std::vector<png_byte> read_all() {
        png_read_update_info(png_, info_);
        const auto stride = png_get_rowbytes(png_, info_);
        std::vector<png_byte> buf(stride * static_cast<std::size_t>(height()));
        std::vector<png_bytep> rows(static_cast<std::size_t>(height()));
        for (int y = 0; y < height(); ++y) rows[static_cast<std::size_t>(y)] = buf.data() + stride * static_cast<std::size_t>(y);
        png_read_image(png_, rows.data());
        png_read_end(png_, nullptr);
        return buf;
    }

private:
    FilePtr file_;
    png_structp png_ = nullptr;
    png_infop info_ = nullptr;
};

}  // namespace

RgbImage read_png(const fs::path& path) {
    PngReader r(path);
    const int ct = r.color_type();
    if (r.bit_depth() == 16) png_set_strip_16(r.png());
    if (ct == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(r.png());
    if (ct == PNG_COLOR_TYPE_GRAY || ct == PNG_COLOR_TYPE_GRAY_ALPHA) {
        if (r.bit_depth() < 8) png_set_expand_gray_1_2_4_to_8(r.png());
        png_set_gray_to_rgb(r.png());
    }
    if (png_get_valid(r.png(), r.info(), PNG_INFO_tRNS)) png_set_tRNS_to_alpha(r.png());
    if (ct & PNG_COLOR_MASK_ALPHA || png_get_valid(r.png(), r.info(), PNG_INFO_tRNS)) png_set_strip_alpha(r.png());
    const int w = r.width();
    const int h = r.height();
    const auto buf = r.read_all();
    std::vector<Rgb> px(static_cast<std::size_t>(w) * static_cast<std::size_t>(h));
    for (std::size_t k = 0; k < px.size(); ++k) px[k] = {buf[3 * k], buf[3 * k + 1], buf[3 * k + 2]};
    return RgbImage(w, h, std::move(px));
}

void write_png(const RgbImage& img, const fs::path& path) {
    PngWriter w(path);
    png_set_IHDR(w.png(), w.info(), static_cast<png_uint_32>(img.width()), static_cast<png_uint_32>(img.height()), 8,
                 PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    std::vector<png_byte> buf;
    buf.reserve(img.pixels().size() * 3);
    for (const Rgb& p : img.pixels()) {
        buf.push_back(p.r);
        buf.push_back(p.g);
        buf.push_back(p.b);
    }
    std::vector<png_bytep> rows(static_cast<std::size_t>(img.height()));
    for (int y = 0; y < img.height(); ++y) {
        rows[static_cast<std::size_t>(y)] = buf.data() + static_cast<std::size_t>(y) * static_cast<std::size_t>(img.width()) * 3;
    }
    w.write_rows(rows);
}

namespace {

// Skips whitespace and '#' comments in a PNM header.
int read_pnm_int(std::istream& in) {
    while (true) {
        const int c = in.peek();
        if (c == '#') {
            std::string line;
            std::getline(in, line);
        } else if (std::isspace(c)) {
            in.get();
        } else {
            break;
        }
    }
    int v = -1;
    in >> v;
    if (!in) throw IoError("malformed PPM header");
    return v;
}

}  // namespace

RgbImage read_ppm(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::string magic(2, '\0');
    in.read(magic.data(), 2);
    if (magic != "P6") throw IoError("not a binary PPM (P6): " + path.string());
    const int w = read_pnm_int(in);
    const int h = read_pnm_int(in);
    const int maxval = read_pnm_int(in);
    if (maxval != 255) throw IoError("only 8-bit PPM is supported");
    in.get();
    if (w < 1 || h < 1) throw IoError("bad PPM dimensions");
    std::vector<char> buf(static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * 3);
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!in) throw IoError("truncated PPM: " + path.string());
    std::vector<Rgb> px(static_cast<std::size_t>(w) * static_cast<std::size_t>(h));
    for (std::size_t k = 0; k < px.size(); ++k) {
        px[k] = {static_cast<std::uint8_t>(buf[3 * k]), static_cast<std::uint8_t>(buf[3 * k + 1]),
                 static_cast<std::uint8_t>(buf[3 * k + 2])};
    }
    return RgbImage(w, h, std::move(px));
}

void write_ppm(const RgbImage& img, const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string());
    out << "P6\n" << img.width() << ' ' << img.height() << "\n255\n";
    for (const Rgb& p : img.pixels()) {
        const char b[3] = {static_cast<char>(p.r), static_cast<char>(p.g), static_cast<char>(p.b)};
        out.write(b, 3);
    }
    if (!out) throw IoError("write failed: " + path.string());
}

RgbImage read_image(const fs::path& path) {
    if (!fs::exists(path)) throw IoError("no such file: " + path.string());
    auto ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".ppm") return read_ppm(path);
    return read_png(path);
}

void write_gray16_png(const Gray16& img, const fs::path& path) {
    PngWriter w(path);
    png_set_IHDR(w.png(), w.info(), static_cast<png_uint_32>(img.width), static_cast<png_uint_32>(img.height), 16,
                 PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    std::vector<png_byte> buf(img.data.size() * 2);
    for (std::size_t k = 0; k < img.data.size(); ++k) {
        buf[2 * k] = static_cast<png_byte>(img.data[k] >> 8);
        buf[2 * k + 1] = static_cast<png_byte>(img.data[k] & 0xff);
    }
    std::vector<png_bytep> rows(static_cast<std::size_t>(img.height));
    for (int y = 0; y < img.height; ++y) {
        rows[static_cast<std::size_t>(y)] = buf.data() + static_cast<std::size_t>(y) * static_cast<std::size_t>(img.width) * 2;
    }
    w.write_rows(rows);
}

Gray16 read_gray16_png(const fs::path& path) {
    PngReader r(path);
    if (r.color_type() != PNG_COLOR_TYPE_GRAY || r.bit_depth() != 16) {
        throw IoError("expected 16-bit grayscale PNG: " + path.string());
    }
    Gray16 out{r.width(), r.height(), {}};
    const auto buf = r.read_all();
    out.data.resize(static_cast<std::size_t>(out.width) * static_cast<std::size_t>(out.height));
    for (std::size_t k = 0; k < out.data.size(); ++k) {
        out.data[k] = static_cast<std::uint16_t>((buf[2 * k] << 8) | buf[2 * k + 1]);
    }
    return out;
}

void write_indexed_png(int width, int height, std::span<const std::uint8_t> indices, std::span<const Rgb> palette,
                       const fs::path& path) {
    if (indices.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
        throw InvalidArgument("index buffer does not match dimensions");
    }
    if (palette.empty() || palette.size() > 256) throw InvalidArgument("palette must have 1..256 entries");
    for (auto i : indices) {
        if (i >= palette.size()) throw InvalidArgument("palette index out of range");
    }
    PngWriter w(path);
    png_set_IHDR(w.png(), w.info(), static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8,
                 PNG_COLOR_TYPE_PALETTE, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    std::vector<png_color> pal;
    for (const Rgb& c : palette) pal.push_back({c.r, c.g, c.b});
    png_set_PLTE(w.png(), w.info(), pal.data(), static_cast<int>(pal.size()));
    std::vector<png_byte> buf(indices.begin(), indices.end());
    std::vector<png_bytep> rows(static_cast<std::size_t>(height));
    for (int y = 0; y < height; ++y) {
        rows[static_cast<std::size_t>(y)] = buf.data() + static_cast<std::size_t>(y) * static_cast<std::size_t>(width);
    }
    w.write_rows(rows);
}

Indexed read_indexed_png(const fs::path& path) {
    PngReader r(path);
    if (r.color_type() != PNG_COLOR_TYPE_PALETTE) throw IoError("expected palette PNG: " + path.string());
    Indexed out{r.width(), r.height(), {}, {}};
    png_colorp pal = nullptr;
    int n = 0;
    png_get_PLTE(r.png(), r.info(), &pal, &n);
    for (int k = 0; k < n; ++k) out.palette.push_back({pal[k].red, pal[k].green, pal[k].blue});
    if (r.bit_depth() < 8) png_set_packing(r.png());
    const auto buf = r.read_all();
    out.indices.assign(buf.begin(), buf.end());
    return out;
}

fs::path sidecar_path(const fs::path& png_path) {
    auto p = png_path;
    p.replace_extension(".json");
    return p;
}

fs::path exact_path(const fs::path& png_path) {
    auto p = png_path;
    p.replace_extension(".f64");
    return p;
}

void write_plane(const Plane& p, const fs::path& png_path, std::optional<std::pair<double, double>> range,
                 bool integer, bool exact) {
    Gray16 g{p.width(), p.height(), std::vector<std::uint16_t>(p.size())};
    PlaneSidecar meta;
    const auto vals = p.values();
    if (p.quantized()) {
        meta.levels = p.levels();
        meta.min = 0;
        meta.max = *p.levels() - 1;
        meta.integer = true;
        if (*p.levels() > 65536) throw InvalidArgument("too many levels for 16-bit storage");
        for (std::size_t k = 0; k < vals.size(); ++k) g.data[k] = static_cast<std::uint16_t>(vals[k]);
    } else {
        const auto [lo_it, hi_it] = std::minmax_element(vals.begin(), vals.end());
        meta.min = range ? range->first : *lo_it;
        meta.max = range ? range->second : *hi_it;
        meta.integer = integer;
        const double span = meta.max - meta.min;
        for (std::size_t k = 0; k < vals.size(); ++k) {
            const double t = span > 0 ? (vals[k] - meta.min) / span : 0.0;
            g.data[k] = static_cast<std::uint16_t>(std::clamp<long>(std::lround(t * 65535.0), 0, 65535));
        }
    }
    write_gray16_png(g, png_path);
    json j;
    j["levels"] = meta.levels ? json(*meta.levels) : json(nullptr);
    j["min"] = meta.min;
    j["max"] = meta.max;
    j["integer"] = meta.integer;
    j["encoding"] = meta.levels ? "levels" : "linear16";
    j["width"] = p.width();
    j["height"] = p.height();
    if (exact) {
        // Little-endian IEEE doubles, row-major.
        std::vector<std::uint8_t> raw(vals.size() * sizeof(double));
        std::memcpy(raw.data(), vals.data(), raw.size());
        write_bytes(exact_path(png_path), raw);
        j["exact"] = exact_path(png_path).filename().string();
    }
    write_text(sidecar_path(png_path), j.dump(2) + "\n");
}

Plane read_plane(const fs::path& png_path) {
    const auto g = read_gray16_png(png_path);
    const auto j = json::parse(read_text(sidecar_path(png_path)));
    std::vector<double> data(g.data.size());
    if (!j.at("levels").is_null()) {
        const int levels = j.at("levels").get<int>();
        for (std::size_t k = 0; k < data.size(); ++k) data[k] = g.data[k];
        return Plane(g.width, g.height, std::move(data), levels);
    }
    if (j.contains("exact")) {
        const auto raw = read_bytes(png_path.parent_path() / j.at("exact").get<std::string>());
        if (raw.size() != data.size() * sizeof(double)) throw IoError("exact plane data has the wrong size");
        std::memcpy(data.data(), raw.data(), raw.size());
        return Plane(g.width, g.height, std::move(data));
    }
    const double lo = j.at("min").get<double>();
    const double hi = j.at("max").get<double>();
    const bool integer = j.value("integer", false);
    for (std::size_t k = 0; k < data.size(); ++k) {
        const double v = lo + (hi - lo) * (g.data[k] / 65535.0);
        data[k] = integer ? std::round(v) : v;
    }
    return Plane(g.width, g.height, std::move(data));
}

std::vector<std::uint8_t> read_bytes(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const fs::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed: " + path.string());
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string());
    out << text;
    if (!out) throw IoError("write failed: " + path.string());
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace outcrop::io
