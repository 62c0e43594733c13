#include "outcrop/scenes.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "outcrop/errors.hpp"

namespace outcrop::scenes {

NestedRegions nested_regions(int width, int height, int small_side) {
    if (width < 8 || height < 8) throw InvalidArgument("nested regions need at least 8x8 pixels");
    if (small_side < 1) throw InvalidArgument("small region side must be >= 1");
    NestedRegions out;
    out.image = RgbImage(width, height, Rgb{70, 70, 70});
    // The mid rectangle covers the right third; the small square sits inside it.
    const int mx0 = width - width / 3;
    const int my0 = height / 4;
    const int my1 = height - height / 4;
    const int sx0 = mx0 + (width - mx0 - small_side) / 2;
    const int sy0 = (my0 + my1 - small_side) / 2;
    if (sx0 < mx0 || sy0 < my0 || sy0 + small_side > my1) throw InvalidArgument("small region does not fit");
    for (int y = my0; y < my1; ++y) {
        for (int x = mx0; x < width; ++x) out.image.at(x, y) = Rgb{150, 150, 150};
    }
    for (int y = sy0; y < sy0 + small_side; ++y) {
        for (int x = sx0; x < sx0 + small_side; ++x) out.image.at(x, y) = Rgb{235, 235, 235};
    }
    const auto small = static_cast<std::size_t>(small_side) * static_cast<std::size_t>(small_side);
    const auto mid = static_cast<std::size_t>(width - mx0) * static_cast<std::size_t>(my1 - my0) - small;
    out.areas[0] = static_cast<std::size_t>(width) * static_cast<std::size_t>(height) - mid - small;
    out.areas[1] = mid;
    out.areas[2] = small;
    out.small_cx = sx0 + small_side / 2.0;
    out.small_cy = sy0 + small_side / 2.0;
    return out;
}

SourceScene tan_cliff(const CliffParams& p) {
    if (!(p.width_m > 0 && p.height_m > 0 && p.px_per_m > 0)) throw InvalidArgument("cliff dimensions must be positive");
    const int w = static_cast<int>(std::lround(p.width_m * p.px_per_m));
    const int h = static_cast<int>(std::lround(p.height_m * p.px_per_m));
    std::mt19937_64 rng(p.seed);
    std::normal_distribution<double> noise(0.0, p.noise_sigma);

    SourceScene scene;
    scene.name = "tan_cliff";
    scene.physical_width = w / p.px_per_m;
    scene.image = RgbImage(w, h);
    const auto to8 = [](double v) { return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L)); };
    for (int y = 0; y < h; ++y) {
        const double ym = (y + 0.5) / p.px_per_m;
        const double layer = p.layer_amplitude * std::sin(2.0 * std::numbers::pi * ym / p.layer_period_m);
        for (int x = 0; x < w; ++x) {
            const double xm = (x + 0.5) / p.px_per_m;
            Rgb c = p.base;
            for (const auto& f : p.features) {
                const double d = std::hypot(xm - f.center.x, ym - f.center.y);
                if (d <= f.core_radius) {
                    c = f.core_color;
                } else if (d <= f.radius) {
                    c = f.color;
                }
            }
            // Brightness noise shared by the three channels keeps hue stable.
            const double n = noise(rng) + layer;
            scene.image.at(x, y) = Rgb{to8(c.r + n), to8(c.g + n * c.g / std::max<double>(c.r, 1)),
                                       to8(c.b + n * c.b / std::max<double>(c.r, 1))};
        }
    }
    return scene;
}

CliffParams demo_cliff(std::uint64_t seed) {
    CliffParams p;
    p.width_m = 180.0;
    p.height_m = 125.0;
    p.px_per_m = 12.0;
    p.seed = seed;
    p.features = {
        {{118.0, 52.0}, 11.0, {96, 76, 56}, 2.5, {62, 48, 36}},
        {{118.6, 52.3}, 0.6, {30, 24, 20}},
        {{52.0, 84.0}, 6.0, {110, 88, 64}},
    };
    return p;
}

}  // namespace outcrop::scenes
