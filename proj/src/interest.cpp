#include "outcrop/interest.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "outcrop/errors.hpp"

namespace outcrop {

double InterestMap::total() const { return std::accumulate(values.begin(), values.end(), 0.0); }

std::string rank_color(int rank) {
    switch (rank) {
        case 1: return "green";
        case 2: return "blue";
        case 3: return "red";
        default: return "white";
    }
}

UncommonMap uncommon_map(const SegmentationMap& m) {
    const auto order = rank_classes(m);
    // Largest class is most common (1); smallest of n classes is most uncommon (n).
    std::array<std::uint8_t, kMaxClasses + 1> value{};
    for (std::size_t r = 0; r < order.size(); ++r) value[static_cast<std::size_t>(order[r])] = static_cast<std::uint8_t>(r + 1);
    UncommonMap out{m.width, m.height, std::vector<std::uint8_t>(m.labels.size())};
    for (std::size_t k = 0; k < m.labels.size(); ++k) out.values[k] = value[m.labels[k]];
    return out;
}

InterestMap interest_sum(const UncommonMap& uh, const UncommonMap& us, const UncommonMap& ui) {
    if (uh.width != us.width || uh.width != ui.width || uh.height != us.height || uh.height != ui.height) {
        throw InvalidArgument("uncommon maps differ in size");
    }
    InterestMap out(uh.width, uh.height);
    for (std::size_t k = 0; k < out.values.size(); ++k) {
        out.values[k] = static_cast<double>(uh.values[k] + us.values[k] + ui.values[k]);
    }
    return out;
}

namespace {

// Half-sample symmetric extension: ... 1 0 | 0 1 2 ... n-1 | n-1 n-2 ...
int reflect(int i, int n) {
    const int period = 2 * n;
    i %= period;
    if (i < 0) i += period;
    return i < n ? i : period - 1 - i;
}

}  // namespace

InterestMap blur_interest(const InterestMap& m, int width) {
    if (width < 1) throw InvalidArgument("blur width must be >= 1");
    const double sigma = width / 2.0;
    const int radius = 2 * width;
    std::vector<double> w(static_cast<std::size_t>(2 * radius + 1));
    for (int k = -radius; k <= radius; ++k) w[static_cast<std::size_t>(k + radius)] = std::exp(-(k * k) / (2 * sigma * sigma));
    const double s = std::accumulate(w.begin(), w.end(), 0.0);
    for (double& v : w) v /= s;

    InterestMap tmp(m.width, m.height);
    for (int y = 0; y < m.height; ++y) {
        for (int x = 0; x < m.width; ++x) {
            double acc = 0.0;
            for (int k = -radius; k <= radius; ++k) acc += w[static_cast<std::size_t>(k + radius)] * m.at(reflect(x + k, m.width), y);
            tmp.at(x, y) = acc;
        }
    }
    InterestMap out(m.width, m.height);
    for (int y = 0; y < m.height; ++y) {
        for (int x = 0; x < m.width; ++x) {
            double acc = 0.0;
            for (int k = -radius; k <= radius; ++k) acc += w[static_cast<std::size_t>(k + radius)] * tmp.at(x, reflect(y + k, m.height));
            out.at(x, y) = std::max(acc, 0.0);
        }
    }
    return out;
}

std::vector<InterestPoint> top_interest_points(const InterestMap& m, int k, double min_separation) {
    if (k < 1) throw InvalidArgument("k must be >= 1");
    std::vector<InterestPoint> out;
    std::vector<bool> suppressed(m.values.size(), false);
    const double r2 = min_separation * min_separation;
    while (static_cast<int>(out.size()) < k) {
        double best = 0.0;
        int bx = -1;
        int by = -1;
        for (int y = 0; y < m.height; ++y) {
            for (int x = 0; x < m.width; ++x) {
                const auto idx = static_cast<std::size_t>(y) * static_cast<std::size_t>(m.width) + static_cast<std::size_t>(x);
                if (!suppressed[idx] && m.values[idx] > best) {
                    best = m.values[idx];
                    bx = x;
                    by = y;
                }
            }
        }
        if (bx < 0) break;
        out.push_back({bx, by, static_cast<int>(out.size()) + 1, best});
        const int rad = static_cast<int>(std::ceil(min_separation));
        for (int y = std::max(0, by - rad); y <= std::min(m.height - 1, by + rad); ++y) {
            for (int x = std::max(0, bx - rad); x <= std::min(m.width - 1, bx + rad); ++x) {
                const double d2 = static_cast<double>((x - bx) * (x - bx) + (y - by) * (y - by));
                if (d2 < r2) suppressed[static_cast<std::size_t>(y) * static_cast<std::size_t>(m.width) + static_cast<std::size_t>(x)] = true;
            }
        }
    }
    return out;
}

InterestMap apply_mask(const InterestMap& m, const Plane& weights) {
    if (weights.width() != m.width || weights.height() != m.height) throw InvalidArgument("mask size mismatch");
    InterestMap out = m;
    for (std::size_t k = 0; k < out.values.size(); ++k) out.values[k] *= weights.values()[k];
    return out;
}

Plane to_plane(const UncommonMap& m) {
    std::vector<double> v(m.values.begin(), m.values.end());
    return Plane(m.width, m.height, std::move(v));
}

Plane to_plane(const InterestMap& m) { return Plane(m.width, m.height, m.values); }

InterestMap interest_from_plane(const Plane& p) {
    InterestMap out(p.width(), p.height());
    std::copy(p.values().begin(), p.values().end(), out.values.begin());
    return out;
}

}  // namespace outcrop
