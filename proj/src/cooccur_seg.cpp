#include "outcrop/cooccur_seg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "outcrop/errors.hpp"

namespace outcrop {

CooccurrenceHistogram::CooccurrenceHistogram(int levels)
    : levels_(levels), counts_(static_cast<std::size_t>(levels) * static_cast<std::size_t>(std::max(levels, 0))) {
    if (levels < 1) throw InvalidArgument("histogram needs at least one level");
}

CooccurrenceHistogram::CooccurrenceHistogram(int levels, std::vector<std::uint64_t> counts) : CooccurrenceHistogram(levels) {
    if (counts.size() != counts_.size()) throw InvalidArgument("histogram counts must be levels x levels");
    counts_ = std::move(counts);
    for (int a = 0; a < levels; ++a)
        for (int b = a + 1; b < levels; ++b)
            if (at(a, b) != at(b, a)) throw InvalidArgument("histogram counts must be symmetric");
}

std::uint64_t CooccurrenceHistogram::total() const {
    return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0});
}

std::string to_csv(const CooccurrenceHistogram& h) {
    std::string out;
    for (int a = 0; a < h.levels(); ++a) {
        for (int b = 0; b < h.levels(); ++b) {
            if (b) out += ',';
            out += std::to_string(h.at(a, b));
        }
        out += '\n';
    }
    return out;
}

CooccurrenceHistogram histogram_from_csv(const std::string& text) {
    std::vector<std::uint64_t> counts;
    std::istringstream in(text);
    std::string line;
    int rows = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        ++rows;
        std::istringstream cells(line);
        std::string cell;
        while (std::getline(cells, cell, ',')) {
            std::size_t used = 0;
            try {
                counts.push_back(std::stoull(cell, &used));
            } catch (const std::logic_error&) {
                used = 0;
            }
            if (used == 0 || used != cell.size() || cell.find('-') != std::string::npos) {
                throw InvalidArgument("histogram CSV holds a non-count cell: " + cell);
            }
        }
    }
    if (rows == 0) throw InvalidArgument("empty histogram CSV");
    return CooccurrenceHistogram(rows, std::move(counts));
}

CooccurrenceHistogram build_cooccurrence(const Plane& p) {
    if (!p.quantized()) throw InvalidArgument("co-occurrence needs a quantized plane");
    CooccurrenceHistogram h(*p.levels());
    for (int y = 0; y < p.height(); ++y) {
        for (int x = 0; x < p.width(); ++x) {
            const int a = p.level(x, y);
            if (x + 1 < p.width()) h.add_pair(a, p.level(x + 1, y));
            if (y + 1 < p.height()) h.add_pair(a, p.level(x, y + 1));
        }
    }
    return h;
}

namespace {

std::vector<double> gaussian_weights(double sigma, int radius) {
    std::vector<double> w(static_cast<std::size_t>(2 * radius + 1));
    for (int k = -radius; k <= radius; ++k) {
        w[static_cast<std::size_t>(k + radius)] = std::exp(-(k * k) / (2.0 * sigma * sigma));
    }
    const double s = std::accumulate(w.begin(), w.end(), 0.0);
    for (double& v : w) v /= s;
    return w;
}

// One axis of the separable smoothing. `stride` selects rows (G) or columns (1).
void smooth_axis(const std::vector<double>& in, std::vector<double>& out, int g, bool along_cols,
                 const std::vector<double>& w, int radius, bool cyclic) {
    for (int a = 0; a < g; ++a) {
        for (int b = 0; b < g; ++b) {
            double acc = 0.0;
            double norm = 0.0;
            for (int k = -radius; k <= radius; ++k) {
                int t = (along_cols ? b : a) + k;
                if (cyclic) {
                    t = ((t % g) + g) % g;
                } else if (t < 0 || t >= g) {
                    continue;
                }
                const int ia = along_cols ? a : t;
                const int ib = along_cols ? t : b;
                const double wk = w[static_cast<std::size_t>(k + radius)];
                acc += wk * in[static_cast<std::size_t>(ia * g + ib)];
                norm += wk;
            }
            out[static_cast<std::size_t>(a * g + b)] = acc / norm;
        }
    }
}

// Strict total order on bins: higher smoothed value wins, ties go to the lower bin index.
bool beats(const std::vector<double>& s, int u, int v) {
    const double su = s[static_cast<std::size_t>(u)];
    const double sv = s[static_cast<std::size_t>(v)];
    return su > sv || (su == sv && u < v);
}

template <typename F>
void for_each_neighbor(int bin, int g, bool cyclic, F&& f) {
    const int a = bin / g;
    const int b = bin % g;
    for (int da = -1; da <= 1; ++da) {
        for (int db = -1; db <= 1; ++db) {
            if (da == 0 && db == 0) continue;
            int na = a + da;
            int nb = b + db;
            if (cyclic) {
                na = (na + g) % g;
                nb = (nb + g) % g;
            } else if (na < 0 || na >= g || nb < 0 || nb >= g) {
                continue;
            }
            const int n = na * g + nb;
            if (n != bin) f(n);
        }
    }
}

int uphill(const std::vector<double>& s, int bin, int g, bool cyclic) {
    int best = bin;
    for_each_neighbor(bin, g, cyclic, [&](int n) {
        if (beats(s, n, best)) best = n;
    });
    return best;
}

}  // namespace

std::vector<double> smooth_histogram(const CooccurrenceHistogram& h, const SegParams& params) {
    if (params.smoothing_radius < 0 || !(params.smoothing_sigma > 0)) {
        throw InvalidArgument("invalid histogram smoothing parameters");
    }
    const int g = h.levels();
    std::vector<double> in(h.counts().begin(), h.counts().end());
    std::vector<double> mid(in.size());
    std::vector<double> out(in.size());
    const auto w = gaussian_weights(params.smoothing_sigma, params.smoothing_radius);
    smooth_axis(in, mid, g, true, w, params.smoothing_radius, params.cyclic);
    smooth_axis(mid, out, g, false, w, params.smoothing_radius, params.cyclic);
    return out;
}

BinAssignment assign_bins(const CooccurrenceHistogram& h, const SegParams& params) {
    if (params.max_classes < 1 || params.max_classes > kMaxClasses) {
        throw InvalidArgument("max_classes must be in 1..8");
    }
    const int g = h.levels();
    const int nbins = g * g;
    const auto s = smooth_histogram(h, params);
    const double threshold = params.peak_fraction * static_cast<double>(h.total());

    std::vector<int> peaks;
    for (int bin = 0; bin < nbins; ++bin) {
        const double v = s[static_cast<std::size_t>(bin)];
        if (v <= 0.0 || v < threshold) continue;
        if (uphill(s, bin, g, params.cyclic) == bin) peaks.push_back(bin);
    }
    std::sort(peaks.begin(), peaks.end(), [&](int u, int v) { return beats(s, u, v); });
    if (peaks.size() > static_cast<std::size_t>(params.max_classes)) {
        peaks.resize(static_cast<std::size_t>(params.max_classes));
    }

    BinAssignment out;
    out.levels = g;
    out.peaks = peaks;
    out.slot.assign(static_cast<std::size_t>(nbins), 0);

    std::vector<std::uint8_t> peak_slot(static_cast<std::size_t>(nbins), 0);
    for (std::size_t k = 0; k < peaks.size(); ++k) {
        peak_slot[static_cast<std::size_t>(peaks[k])] = static_cast<std::uint8_t>(k + 1);
    }

    // Steepest ascent, memoised: summit[bin] is the local maximum reached from bin.
    std::vector<int> summit(static_cast<std::size_t>(nbins), -1);
    std::vector<int> path;
    for (int bin = 0; bin < nbins; ++bin) {
        if (h.counts()[static_cast<std::size_t>(bin)] == 0) continue;
        int cur = bin;
        path.clear();
        while (summit[static_cast<std::size_t>(cur)] < 0) {
            path.push_back(cur);
            const int next = uphill(s, cur, g, params.cyclic);
            if (next == cur) {
                summit[static_cast<std::size_t>(cur)] = cur;
                break;
            }
            cur = next;
        }
        const int top = summit[static_cast<std::size_t>(cur)];
        for (int b : path) summit[static_cast<std::size_t>(b)] = top;
        out.slot[static_cast<std::size_t>(bin)] = peak_slot[static_cast<std::size_t>(top)];
    }
    return out;
}

void SegmentationMap::refresh() {
    class_areas.fill(0);
    for (auto l : labels) {
        if (l > kMaxClasses) throw InvalidArgument("segmentation label out of range");
        ++class_areas[l];
    }
    rank = rank_classes(*this);
}

std::vector<int> rank_classes(const SegmentationMap& m) {
    std::vector<int> ids;
    for (int id = 1; id <= kMaxClasses; ++id) {
        if (m.class_areas[static_cast<std::size_t>(id)] > 0) ids.push_back(id);
    }
    std::stable_sort(ids.begin(), ids.end(), [&](int a, int b) {
        return m.class_areas[static_cast<std::size_t>(a)] > m.class_areas[static_cast<std::size_t>(b)];
    });
    return ids;
}

SegmentationMap segment_plane(const Plane& p, const SegParams& params) {
    const auto hist = build_cooccurrence(p);
    const auto assign = assign_bins(hist, params);
    const int g = hist.levels();
    const int w = p.width();
    const int h = p.height();

    auto slot_of = [&](int a, int b) { return assign.slot[static_cast<std::size_t>(a * g + b)]; };

    std::vector<std::uint8_t> raw(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), 0);
    constexpr int dx[] = {1, -1, 0, 0};
    constexpr int dy[] = {0, 0, 1, -1};
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            std::array<int, kMaxClasses + 1> votes{};
            const int a = p.level(x, y);
            for (int k = 0; k < 4; ++k) {
                const int nx = x + dx[k];
                const int ny = y + dy[k];
                if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
                ++votes[slot_of(a, p.level(nx, ny))];
            }
            // Plurality over assigned pairs; a tie for first place leaves the pixel unsegmented.
            int best = 0;
            int best_votes = 0;
            bool tie = false;
            for (int s = 1; s <= kMaxClasses; ++s) {
                if (votes[static_cast<std::size_t>(s)] > best_votes) {
                    best = s;
                    best_votes = votes[static_cast<std::size_t>(s)];
                    tie = false;
                } else if (votes[static_cast<std::size_t>(s)] == best_votes && best_votes > 0) {
                    tie = true;
                }
            }
            raw[static_cast<std::size_t>(y) * static_cast<std::size_t>(w) + static_cast<std::size_t>(x)] =
                static_cast<std::uint8_t>(tie ? 0 : best);
        }
    }

    // Renumber slots so that class id == area rank.
    SegmentationMap m;
    m.width = w;
    m.height = h;
    m.labels = std::move(raw);
    m.refresh();
    std::array<std::uint8_t, kMaxClasses + 1> remap{};
    for (std::size_t r = 0; r < m.rank.size(); ++r) remap[static_cast<std::size_t>(m.rank[r])] = static_cast<std::uint8_t>(r + 1);
    for (auto& l : m.labels) l = remap[l];
    m.refresh();
    return m;
}

}  // namespace outcrop
