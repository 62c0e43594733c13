#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include <json.hpp>

#include "outcrop/errors.hpp"
#include "outcrop/vcam.hpp"
#include "test_util.hpp"

using namespace outcrop;

namespace {

std::shared_ptr<SourceScene> gradient_scene(int w, int h, double width_m) {
    auto s = std::make_shared<SourceScene>();
    s->name = "gradient";
    s->physical_width = width_m;
    s->image = RgbImage(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            s->image.at(x, y) = Rgb{static_cast<std::uint8_t>(x % 256), static_cast<std::uint8_t>(y % 256),
                                    static_cast<std::uint8_t>((x * 7 + y * 3) % 256)};
    return s;
}

double fp_width(double d, double fov_deg) { return 2.0 * d * std::tan(fov_deg * std::numbers::pi / 360.0); }

}  // namespace

TEST_CASE("footprint follows distance and field of view") {
    const VirtualCamera cam(gradient_scene(400, 300, 40), 10.0);
    CHECK(cam.footprint_width() == doctest::Approx(fp_width(10, 8)).epsilon(1e-12));
    CHECK(cam.footprint_height() == doctest::Approx(cam.footprint_width() * 288 / 360).epsilon(1e-12));
    const auto z = set_zoom(cam, 2.0);
    CHECK(z.fov_deg() == doctest::Approx(4.0));
    CHECK(z.footprint_width() / cam.footprint_width() == doctest::Approx(0.5).epsilon(2e-3));
    CHECK_THROWS_AS(set_zoom(cam, 0.5), InvalidArgument);
    CHECK_THROWS_AS(set_zoom(cam, 26.0), InvalidArgument);
    CHECK_THROWS_AS(VirtualCamera(gradient_scene(4, 4, 1), 0.0), InvalidArgument);
}

TEST_CASE("a footprint exactly covering the scene reproduces it") {
    const double fw = fp_width(10, 8);
    const VirtualCamera cam(gradient_scene(360, 288, fw), 10.0);
    const auto a = acquire_subimage(cam);
    CHECK(a.off_scene_fraction == 0.0);
    REQUIRE(a.image.width() == 360);
    REQUIRE(a.image.height() == 288);
    int worst = 0;
    for (int y = 0; y < 288; ++y)
        for (int x = 0; x < 360; ++x) {
            const Rgb p = a.image.at(x, y), q = cam.scene().image.at(x, y);
            worst = std::max({worst, std::abs(p.r - q.r), std::abs(p.g - q.g), std::abs(p.b - q.b)});
        }
    CHECK(worst <= 1);
}

TEST_CASE("acquisition is deterministic") {
    const VirtualCamera cam(gradient_scene(400, 300, 40), 60.0);
    const auto aimed = cam.pointed({1.5, -2.0});
    CHECK(acquire_subimage(aimed).image == acquire_subimage(aimed).image);
}

TEST_CASE("pointing outside the scene") {
    const VirtualCamera cam(gradient_scene(400, 300, 40), 10.0);
    CHECK_THROWS_AS(acquire_subimage(cam.pointed_at({500.0, 15.0})), CameraError);
    // Centered on a corner, three quarters of the footprint are off the scene.
    const auto corner = acquire_subimage(cam.pointed_at({0.0, 0.0}));
    CHECK(corner.off_scene_fraction == doctest::Approx(0.75).epsilon(1e-6));
    CHECK(corner.image.at(0, 0) == Rgb{});
}

TEST_CASE("pose and target are inverse") {
    const VirtualCamera cam(gradient_scene(400, 300, 40), 25.0);
    for (double x : {-5.0, 3.0, 20.0, 38.0})
        for (double y : {0.0, 7.5, 29.0}) {
            const auto t = cam.target_of(cam.pose_for({x, y}));
            CHECK(t.x == doctest::Approx(x).epsilon(1e-12));
            CHECK(t.y == doctest::Approx(y).epsilon(1e-12));
        }
    const Pose up = cam.pose_for({20.0, 10.0});
    CHECK(up.tilt_deg > 0.0);  // above the station, y is down
    CHECK(cam.pose_for({25.0, 15.0}).pan_deg > 0.0);
}

TEST_CASE("mosaic grids of several shapes") {
    const VirtualCamera cam(gradient_scene(1000, 600, 200), 60.0);
    for (auto [cols, rows] : {std::pair{1, 1}, std::pair{3, 4}, std::pair{3, 9}, std::pair{11, 4}}) {
        PointingLog log;
        const MosaicSpec spec{cols, rows, 48, 36};
        const auto m = acquire_mosaic(cam, spec, 64, log);
        REQUIRE(m.h_tiles.size() == static_cast<std::size_t>(cols * rows));
        CHECK(butt_mosaic(m.h_tiles, spec).width() == cols * 48);
        CHECK(butt_mosaic(m.i_tiles, spec).height() == rows * 36);
        REQUIRE(log.entries().size() == static_cast<std::size_t>(cols * rows));
        for (std::size_t k = 0; k < log.entries().size(); ++k) {
            const auto& e = log.entries()[k];
            CHECK(e.index == static_cast<int>(k));
            CHECK(e.time_s == 10.0 * static_cast<double>(k));
            const int r = e.index / cols, c = e.index % cols;
            const Pose p = m.geometry.to_pose((c + 0.5) * 48, (r + 0.5) * 36);
            CHECK(e.pose.pan_deg == doctest::Approx(p.pan_deg).epsilon(1e-12));
            CHECK(e.pose.tilt_deg == doctest::Approx(p.tilt_deg).epsilon(1e-12));
            // The tile footprint is exactly its slot in the mosaic.
            const SceneRect t = m.geometry.tile_rect(r, c);
            CHECK(e.source.x == doctest::Approx(t.x).epsilon(1e-9));
            CHECK(e.source.y == doctest::Approx(t.y).epsilon(1e-9));
            CHECK(e.source.width == doctest::Approx(t.width).epsilon(1e-9));
        }
        CHECK(log.clock() == 10.0 * cols * rows);
    }
    CHECK_THROWS_AS(plan_mosaic(cam, MosaicSpec{0, 1, 48, 36}), InvalidArgument);
}

TEST_CASE("tiles partition the mosaic footprint") {
    const VirtualCamera cam(gradient_scene(400, 300, 40), 60.0);
    const MosaicSpec spec{4, 3, 48, 36};
    const auto g = plan_mosaic(cam, spec);
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 4; ++c) {
            const auto t = g.tile_rect(r, c);
            CHECK(t.width == doctest::Approx(cam.footprint_width()));
            CHECK(t.height == doctest::Approx(cam.footprint_height()));
            if (c + 1 < 4) CHECK(g.tile_rect(r, c + 1).x == doctest::Approx(t.x + t.width));
            if (r + 1 < 3) CHECK(g.tile_rect(r + 1, c).y == doctest::Approx(t.y + t.height));
        }
    const auto last = g.tile_rect(2, 3);
    const ScenePoint b = cam.boresight();
    CHECK((g.origin.x + last.x + last.width) / 2 == doctest::Approx(b.x));
    CHECK((g.origin.y + last.y + last.height) / 2 == doctest::Approx(b.y));
}

TEST_CASE("pixel, scene and pose coordinates round-trip") {
    const VirtualCamera cam(gradient_scene(400, 300, 40), 60.0);
    const auto g = plan_mosaic(cam.pointed({2.0, 1.0}), MosaicSpec{4, 3, 48, 36});
    for (double px : {0.0, 13.25, 96.0, 191.9})
        for (double py : {0.0, 50.5, 107.0}) {
            const auto [x, y] = g.to_pixel(g.from_pose(g.to_pose(px, py)));
            CHECK(std::abs(x - px) < 0.5);
            CHECK(std::abs(y - py) < 0.5);
            CHECK(x == doctest::Approx(px).epsilon(1e-9));
        }
}

TEST_CASE("chips point at their interest points") {
    const VirtualCamera cam(gradient_scene(400, 300, 40), 60.0);
    PointingLog log;
    const MosaicSpec spec{4, 3, 48, 36};
    const auto m = acquire_mosaic(cam, spec, 64, log);
    // Rank 2 sits at a tile center, rank 1 at the mosaic corner.
    const std::vector<InterestPoint> pts = {{72 - 1, 54 - 1, 2, 1.0}, {0, 0, 1, 2.0}};
    const auto chips = acquire_chips(cam, pts, m.geometry, log);
    REQUIRE(chips.size() == 2);
    CHECK(chips[0].rank == 1);
    CHECK(chips[1].rank == 2);
    for (const auto& c : chips) CHECK(c.source.contains(c.center));
    CHECK(chips[0].image.width() == 360);
    CHECK(log.entries().size() == 14);
    CHECK(log.entries()[12].kind == PointingEntry::Kind::chip);

    // The chip is aimed at its pixel center, which is within a pixel of the tile center.
    const auto exact = m.geometry.to_pose(71.5, 53.5);
    CHECK(chips[1].pose.pan_deg == doctest::Approx(exact.pan_deg).epsilon(1e-12));
    CHECK(chips[1].pose.tilt_deg == doctest::Approx(exact.tilt_deg).epsilon(1e-12));
    const auto tile_pose = log.entries()[1 * 4 + 1].pose;
    const auto one_px = m.geometry.to_pose(73.0, 54.0).pan_deg - m.geometry.to_pose(72.0, 54.0).pan_deg;
    CHECK(std::abs(chips[1].pose.pan_deg - tile_pose.pan_deg) <= one_px);
    CHECK(std::abs(chips[1].pose.tilt_deg - tile_pose.tilt_deg) <= one_px);

    CHECK_THROWS_AS(acquire_chips(cam, {{192, 0, 1, 1.0}}, m.geometry, log), InvalidArgument);
}

TEST_CASE("approach recenters the target") {
    const VirtualCamera cam(gradient_scene(400, 300, 40), 60.0);
    const MosaicSpec spec{4, 3, 48, 36};
    const auto coarse = plan_mosaic(cam, spec);
    const InterestPoint target{150, 20, 1, 5.0};
    const auto a = approach(cam, coarse, target, 10.0);
    CHECK(a.camera.distance() == 10.0);
    const auto fine = plan_mosaic(a.camera, spec);
    const auto [fx, fy] = fine.to_pixel(coarse.pixel_center(target.x, target.y));
    CHECK(std::abs(fx - spec.width() / 2.0) <= 10.0);
    CHECK(std::abs(fy - spec.height() / 2.0) <= 10.0);
    CHECK(std::abs(fx - spec.width() / 2.0) < 1e-9);

    CHECK_THROWS_AS(approach(cam, coarse, target, 60.0), InvalidArgument);
    CHECK_THROWS_AS(approach(cam, coarse, target, 80.0), InvalidArgument);
    CHECK_THROWS_AS(approach(cam, coarse, target, 0.0), InvalidArgument);
    CHECK_THROWS_AS(approach(cam, coarse, InterestPoint{500, 20, 1, 1.0}, 10.0), InvalidArgument);

    // The transform between mosaics agrees with going through the scene.
    const auto t = mosaic_transform(fine, coarse);
    for (double px : {0.0, 100.0, 191.0}) {
        const auto [cx, cy] = t.apply(px, 40.0);
        const auto [rx, ry] = coarse.to_pixel(fine.to_scene(px, 40.0));
        CHECK(cx == doctest::Approx(rx).epsilon(1e-12));
        CHECK(cy == doctest::Approx(ry).epsilon(1e-12));
    }
}

TEST_CASE("mask from memory") {
    const InterestMap uniform(20, 10, 4.0);
    const auto flat = mask_from_memory(uniform, PixelTransform::identity(), 20, 10);
    for (double v : flat.values()) CHECK(v == 1.0);

    InterestMap ramp(10, 10);
    for (int k = 0; k < 100; ++k) ramp.values[static_cast<std::size_t>(k)] = k + 1;
    CHECK(mask_threshold(ramp, {}) == 25.0);
    MaskParams zero;
    zero.threshold = 0.0;
    const auto none_low = mask_from_memory(ramp, PixelTransform::identity(), 10, 10, zero);
    for (double v : none_low.values()) CHECK(v == 1.0);

    const auto m = mask_from_memory(ramp, PixelTransform::identity(), 10, 10);
    for (int k = 0; k < 100; ++k) CHECK(m.values()[static_cast<std::size_t>(k)] == (k + 1 <= 25 ? 0.1 : 1.0));

    // Half of the fine mosaic lies beyond the coarse one and keeps full weight.
    PixelTransform shift{1.0, 5.0, 1.0, 0.0};
    const auto half = mask_from_memory(ramp, shift, 10, 10);
    CHECK(half.at(9, 0) == 1.0);  // no ancestor
    CHECK(half.at(0, 0) == 0.1);  // ancestor (5, 0) holds 6, under the threshold
    CHECK_THROWS_AS(mask_from_memory(ramp, PixelTransform{1.0, 50.0, 1.0, 0.0}, 10, 10), CameraError);
    MaskParams bad;
    bad.low_weight = 2.0;
    CHECK_THROWS_AS(mask_from_memory(ramp, PixelTransform::identity(), 10, 10, bad), InvalidArgument);
}

TEST_CASE("pointing log lines are JSON") {
    PointingLog log(100.0);
    log.append({PointingEntry::Kind::chip, 2, {1.5, -0.5}, 0.0, {1, 2, 3, 4}, 0.25});
    const auto j = nlohmann::json::parse(log.to_json_lines());
    CHECK(j["kind"] == "chip");
    CHECK(j["index"] == 2);
    CHECK(j["time_s"] == 100.0);
    CHECK(j["source_m"][3] == 4.0);
    CHECK(log.clock() == 110.0);
}

TEST_CASE("scenes save and load") {
    TempDir dir;
    const auto s = gradient_scene(30, 20, 3.0);
    save_scene(*s, dir.path / "g.png");
    const auto back = load_scene(dir.path / "g.png");
    CHECK(back->image == s->image);
    CHECK(back->physical_width == 3.0);
    CHECK(back->name == "gradient");
    CHECK(back->physical_height() == doctest::Approx(2.0));
    CHECK_THROWS_AS(load_scene(dir.path / "missing.png"), NotFound);
}
