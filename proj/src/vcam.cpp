#include "outcrop/vcam.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <json.hpp>

#include "outcrop/errors.hpp"
#include "outcrop/image_io.hpp"

namespace outcrop {

namespace {

using json = nlohmann::json;

constexpr double deg2rad(double d) { return d * std::numbers::pi / 180.0; }
constexpr double rad2deg(double r) { return r * 180.0 / std::numbers::pi; }

double overlap_1d(double a0, double a1, double b0, double b1) {
    return std::max(0.0, std::min(a1, b1) - std::max(a0, b0));
}

}  // namespace

std::shared_ptr<const SourceScene> load_scene(const std::filesystem::path& png_path) {
    if (!std::filesystem::exists(png_path)) throw NotFound("scene image not found: " + png_path.string());
    const auto desc_path = io::sidecar_path(png_path);
    if (!std::filesystem::exists(desc_path)) throw NotFound("scene descriptor not found: " + desc_path.string());
    const auto j = json::parse(io::read_text(desc_path));
    auto scene = std::make_shared<SourceScene>();
    scene->image = io::read_image(png_path);
    scene->physical_width = j.at("physical_width_m").get<double>();
    scene->name = j.value("name", png_path.stem().string());
    if (!(scene->physical_width > 0)) throw InvalidArgument("scene physical_width_m must be positive");
    return scene;
}

void save_scene(const SourceScene& scene, const std::filesystem::path& png_path) {
    io::write_png(scene.image, png_path);
    json j;
    j["name"] = scene.name;
    j["physical_width_m"] = scene.physical_width;
    io::write_text(io::sidecar_path(png_path), j.dump(2) + "\n");
}

VirtualCamera::VirtualCamera(std::shared_ptr<const SourceScene> scene, double distance, CameraParams params)
    : scene_(std::move(scene)), params_(params), distance_(distance) {
    if (!scene_) throw InvalidArgument("camera needs a scene");
    if (!(distance > 0)) throw InvalidArgument("camera distance must be positive");
    if (!(params_.base_fov_deg > 0 && params_.base_fov_deg < 180)) throw InvalidArgument("base fov must be in (0, 180)");
    if (params_.max_zoom < 1) throw InvalidArgument("max zoom must be >= 1");
    if (params_.sensor_width < 1 || params_.sensor_height < 1) throw InvalidArgument("sensor size must be >= 1");
    station_ = scene_->center();
}

double VirtualCamera::footprint_width() const { return 2.0 * distance_ * std::tan(deg2rad(fov_deg()) / 2.0); }

double VirtualCamera::footprint_height() const {
    return footprint_width() * params_.sensor_height / static_cast<double>(params_.sensor_width);
}

ScenePoint VirtualCamera::target_of(Pose p) const {
    return {station_.x + distance_ * std::tan(deg2rad(p.pan_deg)), station_.y - distance_ * std::tan(deg2rad(p.tilt_deg))};
}

Pose VirtualCamera::pose_for(ScenePoint t) const {
    return {rad2deg(std::atan((t.x - station_.x) / distance_)), rad2deg(std::atan((station_.y - t.y) / distance_))};
}

SceneRect VirtualCamera::footprint_at(ScenePoint c) const {
    const double w = footprint_width();
    const double h = footprint_height();
    return {c.x - w / 2.0, c.y - h / 2.0, w, h};
}

VirtualCamera VirtualCamera::pointed(Pose p) const {
    VirtualCamera c = *this;
    c.pose_ = p;
    return c;
}

VirtualCamera VirtualCamera::with_station(ScenePoint station, double distance) const {
    if (!(distance > 0)) throw InvalidArgument("camera distance must be positive");
    VirtualCamera c = *this;
    c.station_ = station;
    c.distance_ = distance;
    c.pose_ = {};
    return c;
}

VirtualCamera VirtualCamera::with_zoom(double zoom) const {
    VirtualCamera c = *this;
    c.zoom_ = zoom;
    return c;
}

const PointingEntry& PointingLog::append(PointingEntry e) {
    e.time_s = clock_s_;
    clock_s_ += kSecondsPerAcquisition;
    entries_.push_back(e);
    return entries_.back();
}

std::string to_json_line(const PointingEntry& e) {
    json j;
    j["kind"] = e.kind == PointingEntry::Kind::tile ? "tile" : "chip";
    j["index"] = e.index;
    j["pan_deg"] = e.pose.pan_deg;
    j["tilt_deg"] = e.pose.tilt_deg;
    j["time_s"] = e.time_s;
    j["source_m"] = {e.source.x, e.source.y, e.source.width, e.source.height};
    j["off_scene_fraction"] = e.off_scene_fraction;
    return j.dump();
}

std::string PointingLog::to_json_lines() const {
    std::string out;
    for (const auto& e : entries_) out += to_json_line(e) + "\n";
    return out;
}

Acquisition acquire_subimage(const VirtualCamera& cam) {
    const SourceScene& scene = cam.scene();
    const SceneRect r = cam.footprint_at(cam.boresight());
    const double inside = overlap_1d(r.x, r.x + r.width, 0.0, scene.physical_width) *
                          overlap_1d(r.y, r.y + r.height, 0.0, scene.physical_height());
    if (inside <= 0.0) throw CameraError("camera footprint lies entirely outside the scene");
    const double k = scene.px_per_m();
    Acquisition a;
    a.image = resample_area(scene.image, r.x * k, r.y * k, r.width * k, r.height * k, cam.params().sensor_width,
                            cam.params().sensor_height);
    a.source = r;
    const double off = 1.0 - inside / (r.width * r.height);
    a.off_scene_fraction = off < 1e-9 ? 0.0 : off;
    return a;
}

Pose MosaicGeometry::to_pose(double px, double py) const {
    const ScenePoint t = to_scene(px, py);
    return {rad2deg(std::atan((t.x - station.x) / distance)), rad2deg(std::atan((station.y - t.y) / distance))};
}

ScenePoint MosaicGeometry::from_pose(Pose p) const {
    return {station.x + distance * std::tan(deg2rad(p.pan_deg)), station.y - distance * std::tan(deg2rad(p.tilt_deg))};
}

SceneRect MosaicGeometry::tile_rect(int row, int col) const {
    const double w = spec.sub_width * m_per_px_x;
    const double h = spec.sub_height * m_per_px_y;
    return {origin.x + col * w, origin.y + row * h, w, h};
}

MosaicGeometry plan_mosaic(const VirtualCamera& cam, const MosaicSpec& spec) {
    spec.validate();
    const double fw = cam.footprint_width();
    const double fh = cam.footprint_height();
    const ScenePoint c = cam.boresight();
    MosaicGeometry g;
    g.spec = spec;
    g.origin = {c.x - spec.cols * fw / 2.0, c.y - spec.rows * fh / 2.0};
    g.m_per_px_x = fw / spec.sub_width;
    g.m_per_px_y = fh / spec.sub_height;
    g.station = cam.station();
    g.distance = cam.distance();
    return g;
}

MosaicAcquisition acquire_mosaic(const VirtualCamera& cam, const MosaicSpec& spec, int levels, PointingLog& log) {
    spec.validate();
    if (spec.sub_width > cam.params().sensor_width || spec.sub_height > cam.params().sensor_height) {
        throw InvalidArgument("mosaic tiles cannot be larger than the sensor");
    }
    MosaicAcquisition out;
    out.geometry = plan_mosaic(cam, spec);
    for (int r = 0; r < spec.rows; ++r) {
        for (int c = 0; c < spec.cols; ++c) {
            const SceneRect tile = out.geometry.tile_rect(r, c);
            const VirtualCamera aimed = cam.pointed_at({tile.x + tile.width / 2.0, tile.y + tile.height / 2.0});
            const Acquisition a = acquire_subimage(aimed);
            log.append({PointingEntry::Kind::tile, r * spec.cols + c, aimed.pose(), 0.0, a.source, a.off_scene_fraction});
            RgbImage small = downsample(a.image, spec.sub_width, spec.sub_height);
            HsiImage hsi = rgb_to_hsi(small, levels);
            out.rgb_tiles.push_back(std::move(small));
            out.h_tiles.push_back(std::move(hsi.h));
            out.s_tiles.push_back(std::move(hsi.s));
            out.i_tiles.push_back(std::move(hsi.i));
        }
    }
    return out;
}

std::vector<Chip> acquire_chips(const VirtualCamera& cam, const std::vector<InterestPoint>& points,
                                const MosaicGeometry& geometry, PointingLog& log) {
    std::vector<InterestPoint> ordered = points;
    std::stable_sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) { return a.rank < b.rank; });
    std::vector<Chip> chips;
    for (const auto& p : ordered) {
        if (p.x < 0 || p.y < 0 || p.x >= geometry.spec.width() || p.y >= geometry.spec.height()) {
            throw InvalidArgument("interest point outside the mosaic");
        }
        const ScenePoint center = geometry.pixel_center(p.x, p.y);
        const VirtualCamera aimed = cam.pointed(geometry.to_pose(p.x + 0.5, p.y + 0.5));
        const Acquisition a = acquire_subimage(aimed);
        log.append({PointingEntry::Kind::chip, p.rank, aimed.pose(), 0.0, a.source, a.off_scene_fraction});
        chips.push_back({p.rank, aimed.pose(), center, a.source, a.image});
    }
    return chips;
}

PixelTransform mosaic_transform(const MosaicGeometry& from, const MosaicGeometry& to) {
    PixelTransform t;
    t.sx = from.m_per_px_x / to.m_per_px_x;
    t.ox = (from.origin.x - to.origin.x) / to.m_per_px_x;
    t.sy = from.m_per_px_y / to.m_per_px_y;
    t.oy = (from.origin.y - to.origin.y) / to.m_per_px_y;
    return t;
}

ApproachResult approach(const VirtualCamera& cam, ScenePoint target, double new_distance) {
    if (!(new_distance > 0.0) || !(new_distance < cam.distance())) {
        throw InvalidArgument("approach distance must be positive and closer than the current " +
                              std::to_string(cam.distance()) + " m");
    }
    return {cam.with_station(target, new_distance), target};
}

ApproachResult approach(const VirtualCamera& cam, const MosaicGeometry& geometry, const InterestPoint& target,
                        double new_distance) {
    if (!geometry.contains_pixel(target.x, target.y)) throw InvalidArgument("approach target outside the mosaic");
    return approach(cam, geometry.pixel_center(target.x, target.y), new_distance);
}

VirtualCamera set_zoom(const VirtualCamera& cam, double zoom) {
    if (!(zoom >= 1.0) || zoom > cam.params().max_zoom) {
        throw InvalidArgument("zoom must be in [1, " + std::to_string(cam.params().max_zoom) + "]");
    }
    return cam.with_zoom(zoom);
}

double mask_threshold(const InterestMap& coarse, const MaskParams& params) {
    if (params.threshold) return *params.threshold;
    if (coarse.values.empty()) throw InvalidArgument("empty coarse interest map");
    if (params.percentile < 0 || params.percentile > 100) throw InvalidArgument("percentile must be in [0, 100]");
    std::vector<double> v = coarse.values;
    std::sort(v.begin(), v.end());
    // Nearest-rank percentile.
    const auto n = v.size();
    auto rank = static_cast<std::size_t>(std::ceil(params.percentile / 100.0 * static_cast<double>(n)));
    rank = std::clamp<std::size_t>(rank, 1, n);
    return v[rank - 1];
}

Plane mask_from_memory(const InterestMap& coarse, const PixelTransform& fine_to_coarse, int fine_width,
                       int fine_height, const MaskParams& params) {
    if (params.low_weight < 0 || params.low_weight > 1) throw InvalidArgument("low weight must be in [0, 1]");
    const double theta = mask_threshold(coarse, params);
    const double cmax = *std::max_element(coarse.values.begin(), coarse.values.end());
    const double eps = 1e-9 * std::max(1.0, std::abs(cmax));
    Plane mask(fine_width, fine_height, 1.0);
    bool overlap = false;
    for (int y = 0; y < fine_height; ++y) {
        for (int x = 0; x < fine_width; ++x) {
            const auto [cx, cy] = fine_to_coarse.apply(x + 0.5, y + 0.5);
            const int ix = static_cast<int>(std::floor(cx));
            const int iy = static_cast<int>(std::floor(cy));
            if (ix < 0 || iy < 0 || ix >= coarse.width || iy >= coarse.height) continue;
            overlap = true;
            const double v = coarse.at(ix, iy);
            if (v <= theta + eps && v < cmax - eps) mask.at(x, y) = params.low_weight;
        }
    }
    if (!overlap) throw CameraError("fine mosaic does not overlap the coarse mosaic");
    return mask;
}

}  // namespace outcrop
