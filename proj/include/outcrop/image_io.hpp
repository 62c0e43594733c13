#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "outcrop/imaging.hpp"

namespace outcrop::io {

namespace fs = std::filesystem;

RgbImage read_png(const fs::path& path);
void write_png(const RgbImage& img, const fs::path& path);

RgbImage read_ppm(const fs::path& path);
void write_ppm(const RgbImage& img, const fs::path& path);

/// Dispatches on extension (.png, .ppm).
RgbImage read_image(const fs::path& path);

struct Gray16 {
    int width = 0;
    int height = 0;
    std::vector<std::uint16_t> data;
};

void write_gray16_png(const Gray16& img, const fs::path& path);
Gray16 read_gray16_png(const fs::path& path);

/// Indexed-color PNG; `indices` must be < palette.size().
void write_indexed_png(int width, int height, std::span<const std::uint8_t> indices, std::span<const Rgb> palette,
                       const fs::path& path);
struct Indexed {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> indices;
    std::vector<Rgb> palette;
};
Indexed read_indexed_png(const fs::path& path);

/// Sidecar describing how a plane's 16-bit samples map back to values.
struct PlaneSidecar {
    std::optional<int> levels;  // quantized planes store levels verbatim
    double min = 0.0;
    double max = 0.0;
    bool integer = false;  // integer-valued maps are rounded on reload
};

/// Writes `<stem>.png` (16-bit grayscale) and `<stem>.json` (sidecar). Quantized planes keep
/// their levels verbatim; other planes are linearly scaled from [min, max] to [0, 65535].
/// If `range` is given it overrides the data range (used to pin integer maps to a fixed scale).
/// With `exact`, the raw doubles also go to `<stem>.f64` and read_plane restores them bit-exactly.
void write_plane(const Plane& p, const fs::path& png_path, std::optional<std::pair<double, double>> range = {},
                 bool integer = false, bool exact = false);
Plane read_plane(const fs::path& png_path);
fs::path sidecar_path(const fs::path& png_path);
fs::path exact_path(const fs::path& png_path);

std::vector<std::uint8_t> read_bytes(const fs::path& path);
void write_bytes(const fs::path& path, std::span<const std::uint8_t> bytes);
void write_text(const fs::path& path, const std::string& text);
std::string read_text(const fs::path& path);

}  // namespace outcrop::io
