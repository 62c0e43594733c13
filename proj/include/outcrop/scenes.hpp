#pragma once

#include <cstdint>
#include <vector>

#include "outcrop/imaging.hpp"
#include "outcrop/vcam.hpp"

namespace outcrop::scenes {

/// Three gray regions: background, a mid-sized rectangle, and a small square.
struct NestedRegions {
    RgbImage image;
    double small_cx = 0.0;  // centroid of the small square, pixel units
    double small_cy = 0.0;
    std::size_t areas[3] = {};  // background, mid, small
};

NestedRegions nested_regions(int width = 192, int height = 108, int small_side = 24);

/// Disk-shaped dark feature on the cliff, optionally with a darker core.
struct Feature {
    ScenePoint center;  // meters
    double radius = 1.0;
    Rgb color{90, 70, 52};
    double core_radius = 0.0;
    Rgb core_color{55, 42, 32};
};

struct CliffParams {
    double width_m = 40.0;
    double height_m = 25.0;
    double px_per_m = 12.0;
    Rgb base{196, 164, 122};
    double layer_amplitude = 6.0;  // brightness swing of horizontal bedding
    double layer_period_m = 3.0;
    double noise_sigma = 4.0;
    std::uint64_t seed = 1;
    std::vector<Feature> features;
};

/// Tan cliff face with faint bedding, sensor noise and dark wet features. Later features
/// paint over earlier ones.
SourceScene tan_cliff(const CliffParams& params);

/// 180 m x 125 m cliff (2160 x 1500 px) for the 300/60/10 m protocol: a large wet stain with a
/// darker core and a small spot inside the core, plus a second smaller stain.
CliffParams demo_cliff(std::uint64_t seed = 1);

}  // namespace outcrop::scenes
