#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "outcrop/imaging.hpp"

namespace outcrop {

inline constexpr int kMaxClasses = 8;

/// Symmetric G x G count of level pairs over 4-connected neighbours.
class CooccurrenceHistogram {
public:
    explicit CooccurrenceHistogram(int levels);
    /// Row-major G x G counts; throws InvalidArgument unless square and symmetric.
    CooccurrenceHistogram(int levels, std::vector<std::uint64_t> counts);

    int levels() const { return levels_; }
    std::uint64_t at(int a, int b) const { return counts_[index(a, b)]; }
    std::uint64_t total() const;
    std::span<const std::uint64_t> counts() const { return counts_; }

    /// Adds the unordered pair (a, b): counts[a][b] and counts[b][a] each gain one.
    void add_pair(int a, int b) {
        ++counts_[index(a, b)];
        ++counts_[index(b, a)];
    }

    friend bool operator==(const CooccurrenceHistogram&, const CooccurrenceHistogram&) = default;

private:
    std::size_t index(int a, int b) const {
        return static_cast<std::size_t>(a) * static_cast<std::size_t>(levels_) + static_cast<std::size_t>(b);
    }

    int levels_;
    std::vector<std::uint64_t> counts_;
};

/// G lines of G comma-separated counts, row a = first level of the pair.
std::string to_csv(const CooccurrenceHistogram& h);
CooccurrenceHistogram histogram_from_csv(const std::string& text);

struct SegParams {
    double smoothing_sigma = 1.5;      // histogram smoothing, in bins
    int smoothing_radius = 4;          // truncation radius, in bins
    double peak_fraction = 0.001;      // minimum smoothed count relative to the histogram total
    int max_classes = kMaxClasses;
    bool cyclic = false;               // hue: bin adjacency wraps at G
};

/// Per-pixel class ids in 0..=8, 0 meaning unsegmented.
struct SegmentationMap {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> labels;
    std::array<std::size_t, kMaxClasses + 1> class_areas{};  // [0] counts unsegmented pixels
    std::vector<int> rank;                                   // class ids by descending area

    std::uint8_t label(int x, int y) const {
        return labels[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)];
    }
    int class_count() const { return static_cast<int>(rank.size()); }

    /// Recomputes class_areas and rank from labels.
    void refresh();
};

CooccurrenceHistogram build_cooccurrence(const Plane& p);

/// Gaussian-smoothed copy of the histogram (row-major G x G).
std::vector<double> smooth_histogram(const CooccurrenceHistogram& h, const SegParams& params);

/// Bins assigned to each kept peak by steepest ascent. Entry is 0 for unassigned bins,
/// otherwise the 1-based peak slot (slots ordered by smoothed peak height).
struct BinAssignment {
    int levels = 0;
    std::vector<std::uint8_t> slot;
    std::vector<int> peaks;  // bin index of each slot's peak
};
BinAssignment assign_bins(const CooccurrenceHistogram& h, const SegParams& params);

/// Co-occurrence histogram segmentation. Class ids are renumbered so that id == rank
/// (1 = largest area); classes that win no pixels are dropped.
SegmentationMap segment_plane(const Plane& p, const SegParams& params = {});

/// Class ids with nonzero area in strict descending-area order, ties by lower id.
std::vector<int> rank_classes(const SegmentationMap& m);

}  // namespace outcrop
