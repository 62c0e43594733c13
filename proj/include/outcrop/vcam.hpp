#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "outcrop/imaging.hpp"
#include "outcrop/interest.hpp"

namespace outcrop {

/// Scene-plane coordinates in meters; origin at the scene image's top-left corner, y down.
struct ScenePoint {
    double x = 0.0;
    double y = 0.0;
};

struct SceneRect {
    double x = 0.0;
    double y = 0.0;
    double width = 0.0;
    double height = 0.0;

    bool contains(ScenePoint p) const { return p.x >= x && p.x <= x + width && p.y >= y && p.y <= y + height; }
};

/// Pan/tilt in degrees. Positive pan turns right (+x), positive tilt looks up (-y).
struct Pose {
    double pan_deg = 0.0;
    double tilt_deg = 0.0;
};

/// Large image standing in for the outcrop face.
struct SourceScene {
    std::string name;
    RgbImage image;
    double physical_width = 0.0;  // meters spanned by the image width

    double px_per_m() const { return image.width() / physical_width; }
    double physical_height() const { return image.height() / px_per_m(); }
    ScenePoint center() const { return {physical_width / 2.0, physical_height() / 2.0}; }
};

/// Loads `<stem>.png` plus the `<stem>.json` descriptor {physical_width_m, name}.
std::shared_ptr<const SourceScene> load_scene(const std::filesystem::path& png_path);
void save_scene(const SourceScene& scene, const std::filesystem::path& png_path);

struct CameraParams {
    double base_fov_deg = 8.0;
    double max_zoom = 25.0;
    int sensor_width = 360;
    int sensor_height = 288;
};

/// Flat-scene pinhole camera on a tripod. The tripod stands `distance` meters in front of the
/// scene point `station`; distance and zoom only act through the footprint scale.
class VirtualCamera {
public:
    VirtualCamera(std::shared_ptr<const SourceScene> scene, double distance, CameraParams params = {});

    const SourceScene& scene() const { return *scene_; }
    std::shared_ptr<const SourceScene> scene_ptr() const { return scene_; }
    const CameraParams& params() const { return params_; }

    ScenePoint station() const { return station_; }
    double distance() const { return distance_; }
    Pose pose() const { return pose_; }
    double zoom() const { return zoom_; }
    double fov_deg() const { return params_.base_fov_deg / zoom_; }

    double footprint_width() const;   // meters
    double footprint_height() const;  // meters

    ScenePoint boresight() const { return target_of(pose_); }
    ScenePoint target_of(Pose p) const;
    Pose pose_for(ScenePoint target) const;
    SceneRect footprint_at(ScenePoint center) const;

    VirtualCamera pointed(Pose p) const;
    VirtualCamera pointed_at(ScenePoint target) const { return pointed(pose_for(target)); }
    VirtualCamera with_station(ScenePoint station, double distance) const;
    VirtualCamera with_zoom(double zoom) const;

private:
    std::shared_ptr<const SourceScene> scene_;
    CameraParams params_;
    ScenePoint station_;
    double distance_;
    Pose pose_;
    double zoom_ = 1.0;
};

struct PointingEntry {
    enum class Kind { tile, chip };
    Kind kind = Kind::tile;
    int index = 0;  // tile: r * cols + c; chip: rank
    Pose pose;
    double time_s = 0.0;  // simulated acquisition clock
    SceneRect source;     // meters
    double off_scene_fraction = 0.0;
};

/// Single-line JSON object for one entry.
std::string to_json_line(const PointingEntry& e);

/// Append-only audit trail of acquisitions.
class PointingLog {
public:
    static constexpr double kSecondsPerAcquisition = 10.0;

    explicit PointingLog(double start_s = 0.0) : clock_s_(start_s) {}

    const PointingEntry& append(PointingEntry e);
    const std::vector<PointingEntry>& entries() const { return entries_; }
    double clock() const { return clock_s_; }

    std::string to_json_lines() const;

private:
    std::vector<PointingEntry> entries_;
    double clock_s_;
};

struct Acquisition {
    RgbImage image;
    SceneRect source;
    double off_scene_fraction = 0.0;
};

/// Crops the footprint at the current pose and resamples it to the sensor size.
/// Off-scene area reads black. Throws CameraError if the footprint misses the scene entirely.
Acquisition acquire_subimage(const VirtualCamera& cam);

/// Maps continuous mosaic pixel coordinates to scene meters and camera poses.
struct MosaicGeometry {
    MosaicSpec spec;
    ScenePoint origin;        // scene position of the mosaic's top-left corner
    double m_per_px_x = 1.0;  // meters per mosaic pixel
    double m_per_px_y = 1.0;
    ScenePoint station;
    double distance = 1.0;

    ScenePoint to_scene(double px, double py) const {
        return {origin.x + px * m_per_px_x, origin.y + py * m_per_px_y};
    }
    ScenePoint pixel_center(int x, int y) const { return to_scene(x + 0.5, y + 0.5); }
    std::pair<double, double> to_pixel(ScenePoint p) const {
        return {(p.x - origin.x) / m_per_px_x, (p.y - origin.y) / m_per_px_y};
    }
    Pose to_pose(double px, double py) const;
    ScenePoint from_pose(Pose p) const;
    SceneRect tile_rect(int row, int col) const;
    bool contains_pixel(double px, double py) const {
        return px >= 0 && py >= 0 && px <= spec.width() && py <= spec.height();
    }
};

/// Geometry of the mosaic the camera would acquire around its current boresight.
MosaicGeometry plan_mosaic(const VirtualCamera& cam, const MosaicSpec& spec);

struct MosaicAcquisition {
    MosaicGeometry geometry;
    std::vector<RgbImage> rgb_tiles;  // downsampled, row-major
    std::vector<Plane> h_tiles;
    std::vector<Plane> s_tiles;
    std::vector<Plane> i_tiles;
};

/// Acquires spec.rows x spec.cols sub-images left-to-right, top-to-bottom around the current
/// boresight so that their footprints butt exactly. Each sub-image is area-downsampled to
/// spec.sub_width x spec.sub_height and converted to HSI with `levels` quantization.
MosaicAcquisition acquire_mosaic(const VirtualCamera& cam, const MosaicSpec& spec, int levels, PointingLog& log);

struct Chip {
    int rank = 0;
    Pose pose;
    ScenePoint center;
    SceneRect source;
    RgbImage image;
};

/// Re-points at each interest point (in rank order) and acquires a full-resolution chip.
std::vector<Chip> acquire_chips(const VirtualCamera& cam, const std::vector<InterestPoint>& points,
                                const MosaicGeometry& geometry, PointingLog& log);

/// Linear map between continuous pixel coordinates of two mosaics.
struct PixelTransform {
    double sx = 1.0, ox = 0.0;
    double sy = 1.0, oy = 0.0;

    std::pair<double, double> apply(double x, double y) const { return {sx * x + ox, sy * y + oy}; }
    static PixelTransform identity() { return {}; }
};

/// Maps `from` mosaic pixel coordinates to `to` mosaic pixel coordinates via the scene plane.
PixelTransform mosaic_transform(const MosaicGeometry& from, const MosaicGeometry& to);

struct ApproachResult {
    VirtualCamera camera;
    ScenePoint target;
};

/// Moves the tripod to `new_distance` directly in front of the target and centers it.
ApproachResult approach(const VirtualCamera& cam, ScenePoint target, double new_distance);
ApproachResult approach(const VirtualCamera& cam, const MosaicGeometry& geometry, const InterestPoint& target,
                        double new_distance);

VirtualCamera set_zoom(const VirtualCamera& cam, double zoom);

struct MaskParams {
    double percentile = 25.0;  // threshold = this percentile of the coarse map
    double low_weight = 0.1;
    std::optional<double> threshold;  // explicit threshold overrides the percentile
};

/// Weight map over a fine mosaic from a coarse interest map. A fine pixel whose coarse ancestor
/// has interest <= threshold (and below the coarse maximum) gets `low_weight`; every other pixel,
/// including those with no coarse ancestor, gets 1.
Plane mask_from_memory(const InterestMap& coarse, const PixelTransform& fine_to_coarse, int fine_width,
                       int fine_height, const MaskParams& params = {});

/// Threshold that mask_from_memory would use.
double mask_threshold(const InterestMap& coarse, const MaskParams& params);

}  // namespace outcrop
