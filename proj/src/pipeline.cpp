#include "outcrop/pipeline.hpp"

#include <future>

#include "outcrop/errors.hpp"

namespace outcrop {

void PipelineParams::validate() const {
    if (levels < 2) throw InvalidArgument("levels must be >= 2");
    if (blur < 1) throw InvalidArgument("blur width must be >= 1");
    if (top_k < 1) throw InvalidArgument("top k must be >= 1");
    if (min_separation && *min_separation < 0) throw InvalidArgument("min separation must be >= 0");
}

PipelineResult run_pipeline(const HsiImage& mosaic, const PipelineParams& params, const std::optional<Plane>& mask) {
    params.validate();
    const Plane* planes[3] = {&mosaic.h, &mosaic.s, &mosaic.i};
    const auto seg_params = [&](int c) {
        SegParams p = params.seg;
        p.cyclic = c == 0;
        return p;
    };

    PipelineResult r;
    if (params.parallel) {
        std::array<std::future<SegmentationMap>, 3> jobs;
        for (int c = 0; c < 3; ++c) {
            jobs[static_cast<std::size_t>(c)] =
                std::async(std::launch::async, [&, c] { return segment_plane(*planes[c], seg_params(c)); });
        }
        for (std::size_t c = 0; c < 3; ++c) r.seg[c] = jobs[c].get();
    } else {
        for (int c = 0; c < 3; ++c) r.seg[static_cast<std::size_t>(c)] = segment_plane(*planes[c], seg_params(c));
    }
    for (std::size_t c = 0; c < 3; ++c) r.uncommon[c] = uncommon_map(r.seg[c]);
    r.interest_raw = interest_sum(r.uncommon[0], r.uncommon[1], r.uncommon[2]);
    r.mask = mask;
    r.interest_blur = blur_interest(mask ? apply_mask(r.interest_raw, *mask) : r.interest_raw, params.blur);
    r.points = top_interest_points(r.interest_blur, params.top_k, params.separation());
    return r;
}

}  // namespace outcrop
