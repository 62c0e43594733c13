#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace outcrop {

struct Rgb {
    std::uint8_t r = 0;
    std::uint8_t g = 0;
    std::uint8_t b = 0;

    friend bool operator==(const Rgb&, const Rgb&) = default;
};

/// 8-bit color raster, row-major.
class RgbImage {
public:
    RgbImage() = default;
    RgbImage(int width, int height, Rgb fill = {});
    RgbImage(int width, int height, std::vector<Rgb> data);

    int width() const { return width_; }
    int height() const { return height_; }
    bool empty() const { return data_.empty(); }

    Rgb& at(int x, int y) { return data_[index(x, y)]; }
    const Rgb& at(int x, int y) const { return data_[index(x, y)]; }

    std::span<const Rgb> pixels() const { return data_; }
    std::span<Rgb> pixels() { return data_; }

    friend bool operator==(const RgbImage&, const RgbImage&) = default;

private:
    std::size_t index(int x, int y) const {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<Rgb> data_;
};

/// Scalar raster. Either real-valued, or quantized to integer levels in [0, levels-1]
/// when `levels()` is set.
class Plane {
public:
    Plane() = default;
    Plane(int width, int height, double fill = 0.0, std::optional<int> levels = std::nullopt);
    Plane(int width, int height, std::vector<double> data, std::optional<int> levels = std::nullopt);

    int width() const { return width_; }
    int height() const { return height_; }
    std::size_t size() const { return data_.size(); }

    std::optional<int> levels() const { return levels_; }
    bool quantized() const { return levels_.has_value(); }

    double& at(int x, int y) { return data_[index(x, y)]; }
    double at(int x, int y) const { return data_[index(x, y)]; }
    int level(int x, int y) const { return static_cast<int>(data_[index(x, y)]); }

    std::span<const double> values() const { return data_; }
    std::span<double> values() { return data_; }

    double mean() const;

    friend bool operator==(const Plane&, const Plane&) = default;

private:
    std::size_t index(int x, int y) const {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<double> data_;
    std::optional<int> levels_;
};

struct HsiImage {
    Plane h;
    Plane s;
    Plane i;
};

enum class Channel { hue, saturation, intensity };

inline constexpr Channel kChannels[] = {Channel::hue, Channel::saturation, Channel::intensity};

const char* channel_suffix(Channel c);  // "h", "s", "i"

/// Mosaic grid: `cols` tiles across, `rows` tiles down, each tile sub_width x sub_height.
struct MosaicSpec {
    int cols = 1;
    int rows = 1;
    int sub_width = 48;
    int sub_height = 36;

    int width() const { return cols * sub_width; }
    int height() const { return rows * sub_height; }
    void validate() const;
};

/// Bi-conic HSI: I = (r+g+b)/3, S = 1 - min/I, H = arccos hue angle.
/// H is quantized cyclically to `levels` bins (level 0 = 0 degrees), S and I linearly to
/// [0, levels-1]. Achromatic pixels get S = 0 and H level 0.
HsiImage rgb_to_hsi(const RgbImage& img, int levels);

/// Continuous hue/saturation/intensity of one pixel; hue in degrees [0, 360).
struct HsiValue {
    double hue_deg;
    double saturation;
    double intensity;
};
HsiValue hsi_of(Rgb px);

/// Area-weighted resampling of the source rectangle [x0, x0+w) x [y0, y0+h) (in source
/// pixel units) onto an out_w x out_h grid. Source pixels outside the plane read as
/// `outside`. Result is real-valued.
Plane resample_area(const Plane& src, double x0, double y0, double w, double h, int out_w, int out_h,
                    double outside = 0.0);

/// Color variant of resample_area; channels are rounded back to 8 bits.
RgbImage resample_area(const RgbImage& src, double x0, double y0, double w, double h, int out_w, int out_h,
                       Rgb outside = {});

/// Area-averaging downsample of the whole plane. The result is real-valued.
Plane downsample(const Plane& p, int out_w, int out_h);

/// Tiles are row-major: tiles[r * spec.cols + c].
Plane butt_mosaic(std::span<const Plane> tiles, const MosaicSpec& spec);
RgbImage butt_mosaic(std::span<const RgbImage> tiles, const MosaicSpec& spec);

Plane extract_block(const Plane& p, int x0, int y0, int w, int h);

/// Splits a color image into real-valued r, g, b planes in [0, 255].
std::vector<Plane> split_rgb(const RgbImage& img);
RgbImage merge_rgb(const Plane& r, const Plane& g, const Plane& b);

/// Area-averaging downsample of a color image, channel by channel.
RgbImage downsample(const RgbImage& img, int out_w, int out_h);

}  // namespace outcrop
