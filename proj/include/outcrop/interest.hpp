#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "outcrop/cooccur_seg.hpp"
#include "outcrop/imaging.hpp"

namespace outcrop {

/// Per-pixel uncommonness: 1 for the largest class up to n for the smallest, 0 for unsegmented.
struct UncommonMap {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> values;

    std::uint8_t at(int x, int y) const {
        return values[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)];
    }
};

struct InterestMap {
    int width = 0;
    int height = 0;
    std::vector<double> values;

    InterestMap() = default;
    InterestMap(int w, int h, double fill = 0.0)
        : width(w), height(h), values(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill) {}

    double& at(int x, int y) {
        return values[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)];
    }
    double at(int x, int y) const {
        return values[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)];
    }
    double total() const;
};

struct InterestPoint {
    int x = 0;
    int y = 0;
    int rank = 0;
    double score = 0.0;
};

/// Marker colors by rank: green, blue, red for 1, 2, 3.
std::string rank_color(int rank);

UncommonMap uncommon_map(const SegmentationMap& m);

/// Unweighted pointwise sum of the three channel maps.
InterestMap interest_sum(const UncommonMap& uh, const UncommonMap& us, const UncommonMap& ui);

/// Separable normalized Gaussian, sigma = width / 2, support radius 2 * width, half-sample
/// symmetric borders.
InterestMap blur_interest(const InterestMap& m, int width = 10);

/// Greedy peak picking: take the global maximum (ties: smallest y, then x), suppress a disk of
/// radius `min_separation` around it, repeat. Stops at k points or when the remaining maximum is 0.
std::vector<InterestPoint> top_interest_points(const InterestMap& m, int k = 3, double min_separation = 20.0);

/// Pointwise product with a weight plane of the same size.
InterestMap apply_mask(const InterestMap& m, const Plane& weights);

Plane to_plane(const UncommonMap& m);
Plane to_plane(const InterestMap& m);
InterestMap interest_from_plane(const Plane& p);

}  // namespace outcrop
