#pragma once

#include <array>
#include <optional>
#include <vector>

#include "outcrop/cooccur_seg.hpp"
#include "outcrop/imaging.hpp"
#include "outcrop/interest.hpp"

namespace outcrop {

struct PipelineParams {
    int levels = 64;
    int blur = 10;
    int top_k = 3;
    std::optional<double> min_separation;  // defaults to 2 * blur
    SegParams seg;
    bool parallel = true;  // segment the three channels concurrently

    double separation() const { return min_separation.value_or(2.0 * blur); }
    void validate() const;
};

/// Everything derived from one HSI mosaic.
struct PipelineResult {
    std::array<SegmentationMap, 3> seg;  // h, s, i
    std::array<UncommonMap, 3> uncommon;
    InterestMap interest_raw;
    std::optional<Plane> mask;
    InterestMap interest_blur;  // blur of the (masked) raw map
    std::vector<InterestPoint> points;
};

/// segment x3 -> uncommon x3 -> sum -> optional mask -> blur -> top-k.
PipelineResult run_pipeline(const HsiImage& mosaic, const PipelineParams& params,
                            const std::optional<Plane>& mask = std::nullopt);

}  // namespace outcrop
