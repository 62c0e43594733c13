#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "outcrop/pipeline.hpp"
#include "outcrop/session.hpp"

namespace outcrop::archive {

namespace fs = std::filesystem;

/// Indexed colors for segmentation maps: label 0 black, then ranks 1..8.
extern const std::array<Rgb, kMaxClasses + 1> kSegPalette;

std::string sha256_hex(std::span<const std::uint8_t> bytes);
std::string sha256_file(const fs::path& path);

std::string step_dir_name(int index);  // "step007"
std::string media_type(const fs::path& name);

struct FileEntry {
    std::string name;  // relative to the step directory, '/'-separated
    std::string sha256;
    std::uintmax_t bytes = 0;
};

struct Manifest {
    int step = -1;  // -1 for single-image analyses
    nlohmann::json parameters;
    std::vector<FileEntry> files;  // sorted by name
    std::string aggregate_sha256;  // over "name sha256\n" lines

    nlohmann::json to_json() const;
    static Manifest from_json(const nlohmann::json& j);
};

/// points.json document. `geometry` and `chips` add scene/pose data when available.
nlohmann::json points_document(int step, const std::vector<InterestPoint>& points,
                               const MosaicGeometry* geometry = nullptr, const std::vector<Chip>* chips = nullptr);

/// Writes the maps shared by session steps and single-image analyses.
void write_analysis(const fs::path& dir, const RgbImage& mosaic_rgb, const HsiImage& mosaic,
                    const PipelineResult& result, const nlohmann::json& points_doc);

/// Hashes every file under `dir` except manifest.json and writes manifest.json.
Manifest write_manifest(const fs::path& dir, int step, const nlohmann::json& parameters);
Manifest read_manifest(const fs::path& dir);
/// Names of files whose content no longer matches the manifest (missing files included).
std::vector<std::string> verify_manifest(const fs::path& dir);

/// Writes root/stepNNN/ for a committed step.
Manifest archive_step(const SessionStep& step, const fs::path& root, const nlohmann::json& parameters);

struct LoadedStep {
    RgbImage mosaic_rgb;
    HsiImage mosaic;
    std::array<SegmentationMap, 3> seg;
    std::array<UncommonMap, 3> uncommon;
    InterestMap interest_raw;
    InterestMap interest_blur;
    std::optional<Plane> mask;
    std::vector<InterestPoint> points;
    std::vector<RgbImage> chips;  // rank order
};

LoadedStep load_step(const fs::path& dir);

}  // namespace outcrop::archive
