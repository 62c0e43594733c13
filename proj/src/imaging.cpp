#include "outcrop/imaging.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "outcrop/errors.hpp"

namespace outcrop {

namespace {

void check_dims(int width, int height, std::size_t n) {
    if (width < 1 || height < 1) {
        throw InvalidArgument("raster dimensions must be >= 1, got " + std::to_string(width) + "x" +
                              std::to_string(height));
    }
    if (n != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
        throw InvalidArgument("raster data length does not match width*height");
    }
}

// Overlap weights of [a, b) with the unit cells [u, u+1).
struct Footprint {
    int first = 0;
    std::vector<double> weights;
    double total = 0.0;
};

std::vector<Footprint> footprints(double origin, double extent, int count) {
    std::vector<Footprint> out(static_cast<std::size_t>(count));
    const double step = extent / count;
    for (int j = 0; j < count; ++j) {
        const double a = origin + j * step;
        const double b = origin + (j + 1) * step;
        auto& fp = out[static_cast<std::size_t>(j)];
        fp.first = static_cast<int>(std::floor(a));
        const int last = static_cast<int>(std::ceil(b));
        for (int u = fp.first; u < last; ++u) {
            const double w = std::min(b, u + 1.0) - std::max(a, static_cast<double>(u));
            fp.weights.push_back(std::max(w, 0.0));
        }
        fp.total = std::accumulate(fp.weights.begin(), fp.weights.end(), 0.0);
    }
    return out;
}

int quantize_linear(double v, int levels) {
    const auto q = static_cast<int>(std::lround(v * (levels - 1)));
    return std::clamp(q, 0, levels - 1);
}

}  // namespace

RgbImage::RgbImage(int width, int height, Rgb fill)
    : width_(width), height_(height),
      data_(static_cast<std::size_t>(std::max(width, 0)) * static_cast<std::size_t>(std::max(height, 0)), fill) {
    check_dims(width, height, data_.size());
}

RgbImage::RgbImage(int width, int height, std::vector<Rgb> data)
    : width_(width), height_(height), data_(std::move(data)) {
    check_dims(width, height, data_.size());
}

Plane::Plane(int width, int height, double fill, std::optional<int> levels)
    : width_(width), height_(height),
      data_(static_cast<std::size_t>(std::max(width, 0)) * static_cast<std::size_t>(std::max(height, 0)), fill),
      levels_(levels) {
    check_dims(width, height, data_.size());
}

Plane::Plane(int width, int height, std::vector<double> data, std::optional<int> levels)
    : width_(width), height_(height), data_(std::move(data)), levels_(levels) {
    check_dims(width, height, data_.size());
    if (levels_) {
        if (*levels_ < 2) throw InvalidArgument("quantized plane needs at least 2 levels");
        for (double v : data_) {
            if (v < 0 || v >= *levels_ || v != std::floor(v)) {
                throw InvalidArgument("quantized plane value outside [0, levels-1]");
            }
        }
    }
}

double Plane::mean() const {
    return std::accumulate(data_.begin(), data_.end(), 0.0) / static_cast<double>(data_.size());
}

const char* channel_suffix(Channel c) {
    switch (c) {
        case Channel::hue: return "h";
        case Channel::saturation: return "s";
        case Channel::intensity: return "i";
    }
    return "?";
}

void MosaicSpec::validate() const {
    if (cols < 1 || rows < 1) throw InvalidArgument("mosaic needs at least one row and one column");
    if (sub_width < 1 || sub_height < 1) throw InvalidArgument("mosaic tile size must be >= 1");
}

HsiValue hsi_of(Rgb px) {
    const double r = px.r / 255.0;
    const double g = px.g / 255.0;
    const double b = px.b / 255.0;
    const double intensity = (r + g + b) / 3.0;
    const double lo = std::min({r, g, b});
    const double saturation = intensity > 0.0 ? 1.0 - lo / intensity : 0.0;
    double hue = 0.0;
    const double den = std::sqrt((r - g) * (r - g) + (r - b) * (g - b));
    if (saturation > 0.0 && den > 0.0) {
        const double c = std::clamp(0.5 * ((r - g) + (r - b)) / den, -1.0, 1.0);
        hue = std::acos(c) * 180.0 / std::numbers::pi;
        if (b > g) hue = 360.0 - hue;
        if (hue >= 360.0) hue -= 360.0;
    }
    return {hue, saturation, intensity};
}

HsiImage rgb_to_hsi(const RgbImage& img, int levels) {
    if (levels < 2) throw InvalidArgument("HSI quantization needs at least 2 levels");
    const int w = img.width();
    const int h = img.height();
    HsiImage out{Plane(w, h, 0.0, levels), Plane(w, h, 0.0, levels), Plane(w, h, 0.0, levels)};
    auto hs = out.h.values();
    auto ss = out.s.values();
    auto is = out.i.values();
    const auto px = img.pixels();
    for (std::size_t k = 0; k < px.size(); ++k) {
        const HsiValue v = hsi_of(px[k]);
        const int s_level = quantize_linear(v.saturation, levels);
        int h_level = 0;
        if (s_level > 0) {
            h_level = static_cast<int>(std::lround(v.hue_deg / 360.0 * levels)) % levels;
        }
        hs[k] = h_level;
        ss[k] = s_level;
        is[k] = quantize_linear(v.intensity, levels);
    }
    return out;
}

namespace {

// Area-weighted resampling shared by scalar and color rasters. `get(u, v, out)` reads
// N channel values of an in-bounds source pixel; `put(x, y, vals)` stores one output pixel.
template <int N, typename Get, typename Put>
void resample_core(int src_w, int src_h, Get get, double x0, double y0, double w, double h, int out_w, int out_h,
                   const std::array<double, N>& outside, Put put) {
    if (out_w < 1 || out_h < 1) throw InvalidArgument("resample target dimensions must be >= 1");
    if (!(w > 0.0) || !(h > 0.0)) throw InvalidArgument("resample source extent must be positive");

    const auto cols = footprints(x0, w, out_w);
    const auto rows = footprints(y0, h, out_h);
    const int ulo = cols.front().first;
    const int uhi = cols.back().first + static_cast<int>(cols.back().weights.size());
    const auto span = static_cast<std::size_t>(uhi - ulo);

    std::vector<double> acc(span * N);
    std::array<double, N> px{};
    for (int i = 0; i < out_h; ++i) {
        std::fill(acc.begin(), acc.end(), 0.0);
        const auto& fy = rows[static_cast<std::size_t>(i)];
        for (std::size_t dv = 0; dv < fy.weights.size(); ++dv) {
            const int v = fy.first + static_cast<int>(dv);
            const double wy = fy.weights[dv];
            if (wy == 0.0) continue;
            const bool row_in = v >= 0 && v < src_h;
            for (int u = ulo; u < uhi; ++u) {
                const bool in = row_in && u >= 0 && u < src_w;
                if (in) {
                    get(u, v, px);
                } else {
                    px = outside;
                }
                double* a = &acc[static_cast<std::size_t>(u - ulo) * N];
                for (int c = 0; c < N; ++c) a[c] += wy * px[static_cast<std::size_t>(c)];
            }
        }
        for (int j = 0; j < out_w; ++j) {
            const auto& fx = cols[static_cast<std::size_t>(j)];
            std::array<double, N> sum{};
            for (std::size_t du = 0; du < fx.weights.size(); ++du) {
                const double* a = &acc[static_cast<std::size_t>(fx.first + static_cast<int>(du) - ulo) * N];
                for (int c = 0; c < N; ++c) sum[static_cast<std::size_t>(c)] += fx.weights[du] * a[c];
            }
            const double norm = fx.total * fy.total;
            for (double& s : sum) s /= norm;
            put(j, i, sum);
        }
    }
}

}  // namespace

Plane resample_area(const Plane& src, double x0, double y0, double w, double h, int out_w, int out_h,
                    double outside) {
    Plane out(std::max(out_w, 1), std::max(out_h, 1));
    resample_core<1>(
        src.width(), src.height(), [&](int u, int v, std::array<double, 1>& px) { px[0] = src.at(u, v); }, x0, y0, w,
        h, out_w, out_h, {outside}, [&](int x, int y, const std::array<double, 1>& v) { out.at(x, y) = v[0]; });
    return out;
}

RgbImage resample_area(const RgbImage& src, double x0, double y0, double w, double h, int out_w, int out_h,
                       Rgb outside) {
    RgbImage out(std::max(out_w, 1), std::max(out_h, 1));
    auto to8 = [](double v) { return static_cast<std::uint8_t>(std::clamp<long>(std::lround(v), 0, 255)); };
    resample_core<3>(
        src.width(), src.height(),
        [&](int u, int v, std::array<double, 3>& px) {
            const Rgb& p = src.at(u, v);
            px = {static_cast<double>(p.r), static_cast<double>(p.g), static_cast<double>(p.b)};
        },
        x0, y0, w, h, out_w, out_h, {static_cast<double>(outside.r), static_cast<double>(outside.g), static_cast<double>(outside.b)},
        [&](int x, int y, const std::array<double, 3>& v) { out.at(x, y) = {to8(v[0]), to8(v[1]), to8(v[2])}; });
    return out;
}

Plane downsample(const Plane& p, int out_w, int out_h) {
    if (out_w < 1 || out_h < 1) throw InvalidArgument("downsample target dimensions must be >= 1");
    if (out_w > p.width() || out_h > p.height()) {
        throw InvalidArgument("downsample target larger than source");
    }
    return resample_area(p, 0.0, 0.0, p.width(), p.height(), out_w, out_h);
}

Plane butt_mosaic(std::span<const Plane> tiles, const MosaicSpec& spec) {
    spec.validate();
    if (tiles.size() != static_cast<std::size_t>(spec.rows) * static_cast<std::size_t>(spec.cols)) {
        throw InvalidArgument("mosaic grid shape mismatch: expected " + std::to_string(spec.rows * spec.cols) +
                              " tiles, got " + std::to_string(tiles.size()));
    }
    const auto levels = tiles.front().levels();
    Plane out(spec.width(), spec.height(), 0.0);
    for (int r = 0; r < spec.rows; ++r) {
        for (int c = 0; c < spec.cols; ++c) {
            const Plane& t = tiles[static_cast<std::size_t>(r * spec.cols + c)];
            if (t.width() != spec.sub_width || t.height() != spec.sub_height) {
                throw InvalidArgument("mosaic tile (" + std::to_string(r) + "," + std::to_string(c) + ") is " +
                                      std::to_string(t.width()) + "x" + std::to_string(t.height()) +
                                      ", expected " + std::to_string(spec.sub_width) + "x" +
                                      std::to_string(spec.sub_height));
            }
            if (t.levels() != levels) throw InvalidArgument("mosaic tiles disagree on quantization");
            for (int y = 0; y < t.height(); ++y) {
                for (int x = 0; x < t.width(); ++x) {
                    out.at(c * spec.sub_width + x, r * spec.sub_height + y) = t.at(x, y);
                }
            }
        }
    }
    if (!levels) return out;
    std::vector<double> data(out.values().begin(), out.values().end());
    return Plane(out.width(), out.height(), std::move(data), levels);
}

RgbImage butt_mosaic(std::span<const RgbImage> tiles, const MosaicSpec& spec) {
    spec.validate();
    if (tiles.size() != static_cast<std::size_t>(spec.rows) * static_cast<std::size_t>(spec.cols)) {
        throw InvalidArgument("mosaic grid shape mismatch");
    }
    RgbImage out(spec.width(), spec.height());
    for (int r = 0; r < spec.rows; ++r) {
        for (int c = 0; c < spec.cols; ++c) {
            const RgbImage& t = tiles[static_cast<std::size_t>(r * spec.cols + c)];
            if (t.width() != spec.sub_width || t.height() != spec.sub_height) {
                throw InvalidArgument("mosaic tile size mismatch");
            }
            for (int y = 0; y < t.height(); ++y) {
                for (int x = 0; x < t.width(); ++x) {
                    out.at(c * spec.sub_width + x, r * spec.sub_height + y) = t.at(x, y);
                }
            }
        }
    }
    return out;
}

Plane extract_block(const Plane& p, int x0, int y0, int w, int h) {
    if (x0 < 0 || y0 < 0 || w < 1 || h < 1 || x0 + w > p.width() || y0 + h > p.height()) {
        throw InvalidArgument("block outside plane");
    }
    std::vector<double> data;
    data.reserve(static_cast<std::size_t>(w) * static_cast<std::size_t>(h));
    for (int y = y0; y < y0 + h; ++y) {
        for (int x = x0; x < x0 + w; ++x) data.push_back(p.at(x, y));
    }
    return Plane(w, h, std::move(data), p.levels());
}

std::vector<Plane> split_rgb(const RgbImage& img) {
    std::vector<Plane> out(3, Plane(img.width(), img.height()));
    const auto px = img.pixels();
    for (std::size_t k = 0; k < px.size(); ++k) {
        out[0].values()[k] = px[k].r;
        out[1].values()[k] = px[k].g;
        out[2].values()[k] = px[k].b;
    }
    return out;
}

RgbImage merge_rgb(const Plane& r, const Plane& g, const Plane& b) {
    if (r.width() != g.width() || r.width() != b.width() || r.height() != g.height() || r.height() != b.height()) {
        throw InvalidArgument("channel planes differ in size");
    }
    auto to8 = [](double v) { return static_cast<std::uint8_t>(std::clamp<long>(std::lround(v), 0, 255)); };
    RgbImage out(r.width(), r.height());
    auto px = out.pixels();
    for (std::size_t k = 0; k < px.size(); ++k) {
        px[k] = {to8(r.values()[k]), to8(g.values()[k]), to8(b.values()[k])};
    }
    return out;
}

RgbImage downsample(const RgbImage& img, int out_w, int out_h) {
    if (out_w < 1 || out_h < 1) throw InvalidArgument("downsample target dimensions must be >= 1");
    if (out_w > img.width() || out_h > img.height()) throw InvalidArgument("downsample target larger than source");
    return resample_area(img, 0.0, 0.0, img.width(), img.height(), out_w, out_h);
}

}  // namespace outcrop
