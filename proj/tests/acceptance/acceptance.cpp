// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <string>

#include "oracles.hpp"
#include "outcrop/archive.hpp"
#include "outcrop/image_io.hpp"
#include "outcrop/pipeline.hpp"
#include "outcrop/scenes.hpp"
#include "outcrop/session.hpp"
#include "test_util.hpp"

using namespace outcrop;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

HsiImage mosaic_of(const MosaicAcquisition& a, const MosaicSpec& s) {
    return {butt_mosaic(a.h_tiles, s), butt_mosaic(a.s_tiles, s), butt_mosaic(a.i_tiles, s)};
}

// ---------------------------------------------------------------------------------------------

Outcome nested_regions_check() {
    const auto n = scenes::nested_regions();
    const auto t0 = Clock::now();
    const auto hsi = rgb_to_hsi(n.image, 64);
    const auto r = run_pipeline(hsi, {});
    const double dt = seconds_since(t0);

    // Region interiors (one pixel in from every boundary) must carry exactly 1, 2, 3.
    const int w = n.image.width(), h = n.image.height();
    const auto region = [&](int x, int y) {
        const Rgb c = n.image.at(x, y);
        return c.r == 70 ? 0 : c.r == 150 ? 1 : 2;
    };
    bool exact = n.areas[0] > n.areas[1] && n.areas[1] > n.areas[2];
    int value[3] = {-1, -1, -1};
    for (int y = 1; y + 1 < h; ++y) {
        for (int x = 1; x + 1 < w; ++x) {
            const int g = region(x, y);
            if (region(x - 1, y) != g || region(x + 1, y) != g || region(x, y - 1) != g || region(x, y + 1) != g) continue;
            const int u = r.uncommon[2].at(x, y);
            if (value[g] < 0) value[g] = u;
            exact = exact && u == value[g];
        }
    }
    exact = exact && value[0] == 1 && value[1] == 2 && value[2] == 3;
    double dist = 1e9;
    if (!r.points.empty()) dist = std::hypot(r.points[0].x + 0.5 - n.small_cx, r.points[0].y + 0.5 - n.small_cy);
    const bool pass = exact && dist <= 10.0 && dt < 1.0;
    return {pass, fmt("uncommonness large/mid/small = %d/%d/%d, rank-1 %.2f px from small centroid, %.3f s", value[0],
                      value[1], value[2], dist, dt)};
}

// ---------------------------------------------------------------------------------------------

struct TwoPatchTrial {
    bool good = false;
    PipelineResult result;
};

TwoPatchTrial two_patch_trial(int t) {
    std::mt19937_64 rng(1000 + static_cast<std::uint64_t>(t));
    scenes::CliffParams cp;
    cp.seed = 77 + static_cast<std::uint64_t>(t);
    const auto probe = std::make_shared<SourceScene>(SourceScene{"probe", RgbImage(1, 1), cp.width_m});
    const VirtualCamera plan_cam(std::make_shared<SourceScene>(SourceScene{"probe", RgbImage(480, 300), cp.width_m}), 60.0);
    const MosaicSpec spec{4, 3, 48, 36};
    const auto plan = plan_mosaic(plan_cam, spec);
    const double mpp = plan.m_per_px_x;
    // Patches of 10-12 mosaic px radius, at least 15 px from the mosaic edge and well separated.
    std::uniform_real_distribution<double> ux(plan.origin.x + 15 * mpp, plan.origin.x + (spec.width() - 15) * mpp);
    std::uniform_real_distribution<double> uy(plan.origin.y + 15 * mpp, plan.origin.y + (spec.height() - 15) * mpp);
    std::uniform_real_distribution<double> ur(10 * mpp, 12 * mpp);
    ScenePoint a, b;
    double ra = 0, rb = 0;
    do {
        a = {ux(rng), uy(rng)};
        b = {ux(rng), uy(rng)};
        ra = ur(rng);
        rb = ur(rng);
    } while (std::hypot(a.x - b.x, a.y - b.y) < 22 * mpp + ra + rb);
    cp.features = {{a, ra}, {b, rb}};

    const auto scene = std::make_shared<SourceScene>(scenes::tan_cliff(cp));
    const VirtualCamera cam(scene, 60.0);
    PointingLog log;
    const auto acq = acquire_mosaic(cam, spec, 64, log);
    TwoPatchTrial out;
    out.result = run_pipeline(mosaic_of(acq, spec), {});
    const auto& pts = out.result.points;
    const auto inside = [&](const InterestPoint& p, ScenePoint c, double rad) {
        const auto s = acq.geometry.pixel_center(p.x, p.y);
        return std::hypot(s.x - c.x, s.y - c.y) <= rad;
    };
    out.good = pts.size() >= 2 && ((inside(pts[0], a, ra) && inside(pts[1], b, rb)) || (inside(pts[0], b, rb) && inside(pts[1], a, ra)));
    return out;
}

Outcome two_patch_check() {
    const auto t0 = Clock::now();
    int good = 0;
    for (int t = 0; t < 100; ++t) good += two_patch_trial(t).good;
    const double dt = seconds_since(t0);
    return {good >= 95 && dt < 60.0, fmt("ranks 1 and 2 inside the patches in %d/100 placements, %.1f s", good, dt)};
}

// ---------------------------------------------------------------------------------------------

Outcome cooccurrence_check() {
    int equal = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const auto p = oracle::random_plane(16, 16, 16, seed);
        const auto h = build_cooccurrence(p);
        const auto ref = oracle::cooccurrence(p, 16);
        bool same = true;
        for (int a = 0; a < 16; ++a)
            for (int b = 0; b < 16; ++b) same = same && h.at(a, b) == ref[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)];
        equal += same;
    }
    return {equal == 100, fmt("%d/100 random 16x16 planes match pair enumeration exactly", equal)};
}

// ---------------------------------------------------------------------------------------------

Outcome interest_identity_check() {
    std::mt19937_64 rng(31);
    bool sum_exact = true;
    for (int t = 0; t < 100; ++t) {
        UncommonMap m[3];
        for (auto& u : m) {
            u = {192, 108, std::vector<std::uint8_t>(192 * 108)};
            for (auto& v : u.values) v = static_cast<std::uint8_t>(rng() % 9);
        }
        const auto s = interest_sum(m[0], m[1], m[2]);
        for (std::size_t k = 0; k < s.values.size(); ++k) sum_exact = sum_exact && s.values[k] == static_cast<double>(m[0].values[k] + m[1].values[k] + m[2].values[k]);
    }

    double const_err = 0.0;
    for (double c : {0.0, 1.0, 3.0, 7.5, 24.0})
        for (int b : {1, 5, 10, 20}) {
            const auto out = blur_interest(InterestMap(192, 108, c), b);
            for (double v : out.values) const_err = std::max(const_err, std::abs(v - c));
        }

    double mass_err = 0.0;
    bool argmax_same = true;
    std::uniform_real_distribution<double> u(0, 24);
    for (int t = 0; t < 50; ++t) {
        InterestMap m(192, 108);
        for (auto& v : m.values) v = u(rng);
        const auto b = blur_interest(m);
        mass_err = std::max(mass_err, std::abs(b.total() - m.total()) / m.total());
        const auto p = top_interest_points(b, 1);
        for (double f : {0.25, 2.0, 1000.0}) {
            InterestMap g = m;
            for (auto& v : g.values) v *= f;
            const auto q = top_interest_points(blur_interest(g), 1);
            argmax_same = argmax_same && q[0].x == p[0].x && q[0].y == p[0].y;
        }
    }
    const bool pass = sum_exact && const_err <= 1e-9 && mass_err <= 1e-3 && argmax_same;
    return {pass, fmt("sum exact=%s, constant error %.2e, relative mass error %.2e, argmax scale-invariant=%s",
                      sum_exact ? "yes" : "no", const_err, mass_err, argmax_same ? "yes" : "no")};
}

// ---------------------------------------------------------------------------------------------

bool ranking_holds(const SegmentationMap& m) {
    for (std::size_t r = 1; r < m.rank.size(); ++r) {
        if (m.class_areas[static_cast<std::size_t>(m.rank[r - 1])] < m.class_areas[static_cast<std::size_t>(m.rank[r])]) return false;
    }
    std::size_t total = m.class_areas[0];
    for (int id : m.rank) total += m.class_areas[static_cast<std::size_t>(id)];
    std::size_t unsegmented = 0;
    for (auto l : m.labels) unsegmented += l == 0;
    return total == m.labels.size() && unsegmented == m.class_areas[0];
}

Outcome ranking_check() {
    int maps = 0, ok = 0;
    const auto check = [&](const SegmentationMap& m) {
        ++maps;
        ok += ranking_holds(m);
    };
    const auto check_all = [&](const PipelineResult& r) {
        for (const auto& s : r.seg) check(s);
    };
    check_all(run_pipeline(rgb_to_hsi(scenes::nested_regions().image, 64), {}));
    for (std::uint64_t s = 0; s < 50; ++s) check(segment_plane(oracle::random_plane(64, 48, 8 + static_cast<int>(s % 24), s)));
    for (int t = 0; t < 10; ++t) check_all(two_patch_trial(t).result);
    return {ok == maps, fmt("%d/%d segmentation maps ranked by area with full pixel accounting", ok, maps)};
}

// ---------------------------------------------------------------------------------------------

Outcome masking_check() {
    int fixed = 0, periphery_off = 0, in_stain = 0;
    const MosaicSpec spec{4, 3, 48, 36};
    for (int t = 0; t < 100; ++t) {
        std::mt19937_64 rng(5000 + static_cast<std::uint64_t>(t));
        std::uniform_real_distribution<double> u(0, 1);
        scenes::CliffParams cp;
        cp.seed = 900 + static_cast<std::uint64_t>(t);
        cp.px_per_m = 40;
        const ScenePoint c{20 + (u(rng) - 0.5) * 10, 12.5 + (u(rng) - 0.5) * 6};
        const double radius = 2.5 + u(rng);
        cp.features = {{c, radius, {90, 70, 52}, 0.4 * radius, {60, 46, 35}}};
        const auto scene = std::make_shared<SourceScene>(scenes::tan_cliff(cp));

        SessionConfig cfg;
        cfg.scene = "periphery.png";
        cfg.distances = {60.0, 10.0};
        cfg.mosaic = spec;
        cfg.mode = Mode::interactive;
        cfg.mask_memory = true;
        Session s(cfg, scene);
        s.run_until_blocked();
        if (s.status() != Status::awaiting_choice) continue;

        // The operator approaches a point just inside the stain's rim, so the fine mosaic is
        // centered on the periphery.
        const double ang = u(rng) * 2 * std::numbers::pi;
        const double inset = 0.6 + u(rng) * 0.6;
        const ScenePoint target{c.x + (radius - inset) * std::cos(ang), c.y + (radius - inset) * std::sin(ang)};
        const auto [px, py] = s.steps()[0]->geometry.to_pixel(target);
        Choice choice;
        choice.action = Choice::Action::approach;
        choice.point = std::pair{static_cast<int>(px), static_cast<int>(py)};
        s.choose(choice);
        const SessionStep& fine = s.run_step();
        if (!fine.result.mask) continue;
        const Plane& mask = *fine.result.mask;
        const auto off = run_pipeline(fine.mosaic, cfg.pipeline);

        const auto& on_pts = fine.result.points;
        if (!off.points.empty() && mask.at(off.points[0].x, off.points[0].y) < 1.0) ++periphery_off;
        if (!on_pts.empty() && mask.at(on_pts[0].x, on_pts[0].y) == 1.0) {
            ++fixed;
            const auto p = fine.geometry.pixel_center(on_pts[0].x, on_pts[0].y);
            in_stain += std::hypot(p.x - c.x, p.y - c.y) <= radius;
        }
    }
    return {fixed >= 90 && periphery_off >= 50,
            fmt("mask on: rank-1 in hot region %d/100 (inside the stain %d); mask off: rank-1 on periphery %d/100", fixed,
                in_stain, periphery_off)};
}

// ---------------------------------------------------------------------------------------------

std::map<std::string, std::vector<std::uint8_t>> tree_bytes(const fs::path& root) {
    std::map<std::string, std::vector<std::uint8_t>> out;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        if (e.is_regular_file()) out[fs::relative(e.path(), root).generic_string()] = io::read_bytes(e.path());
    }
    return out;
}

struct ReplayRun {
    Outcome outcome;
    std::vector<double> step_seconds;
};

ReplayRun replay_check() {
    TempDir dir;
    SessionConfig cfg;
    cfg.scene = dir.path / "demo.png";
    auto demo = scenes::tan_cliff(scenes::demo_cliff());
    demo.name = "demo_cliff";
    save_scene(demo, cfg.scene);
    cfg.mode = Mode::autonomous;

    ReplayRun run;
    Session first = Session::open(cfg, dir.path / "first");
    while (first.status() == Status::running) {
        const auto t0 = Clock::now();
        first.run_step();
        run.step_seconds.push_back(seconds_since(t0));
    }
    const auto choices = read_choice_log(dir.path / "first" / "choices.jsonl");
    bool replayed = true;
    try {
        replay(cfg, choices, dir.path / "second");
    } catch (const std::exception&) {
        replayed = false;
    }
    const auto a = tree_bytes(dir.path / "first");
    const auto b = replayed ? tree_bytes(dir.path / "second") : decltype(a){};
    std::size_t same = 0;
    for (const auto& [name, bytes] : a) {
        const auto it = b.find(name);
        same += it != b.end() && it->second == bytes;
    }
    const bool pass = first.steps().size() == 3 && replayed && a.size() == b.size() && same == a.size();
    run.outcome = {pass, fmt("%zu steps, %zu/%zu archived files identical after replay", first.steps().size(), same, a.size())};
    return run;
}

Outcome performance_check(const std::vector<double>& session_steps) {
    // Pipeline alone on a 192x108 mosaic, and complete session steps (acquisition, pipeline,
    // chips, archive) from the replay run.
    const auto n = scenes::nested_regions();
    const auto hsi = rgb_to_hsi(n.image, 64);
    double worst_pipeline = 0.0;
    for (int k = 0; k < 5; ++k) {
        const auto t0 = Clock::now();
        run_pipeline(hsi, {});
        worst_pipeline = std::max(worst_pipeline, seconds_since(t0));
    }
    double worst_step = 0.0;
    for (double s : session_steps) worst_step = std::max(worst_step, s);
    const bool pass = worst_pipeline < 5.0 && !session_steps.empty() && worst_step < 5.0;
    return {pass, fmt("slowest pipeline %.3f s, slowest full session step %.3f s", worst_pipeline, worst_step)};
}

}  // namespace

int main() {
    int failures = 0;
    const auto report = [&](const char* name, const Outcome& o) {
        std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
        std::fflush(stdout);
        failures += !o.pass;
    };
    const auto guarded = [&](const char* name, const std::function<Outcome()>& f) {
        try {
            report(name, f());
        } catch (const std::exception& e) {
            report(name, {false, std::string("threw: ") + e.what()});
        }
    };

    guarded("nested-regions uncommonness and rank-1 placement", nested_regions_check);
    guarded("two dark patches take ranks 1 and 2", two_patch_check);
    guarded("co-occurrence equals pair enumeration", cooccurrence_check);
    guarded("interest-map identities", interest_identity_check);
    guarded("segmentation ranking invariant", ranking_check);
    guarded("coarse-to-fine masking", masking_check);
    std::vector<double> step_seconds;
    guarded("replay determinism", [&] {
        auto r = replay_check();
        step_seconds = r.step_seconds;
        return r.outcome;
    });
    guarded("per-step performance", [&] { return performance_check(step_seconds); });
    return failures == 0 ? 0 : 1;
}
