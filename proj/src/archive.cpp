#include "outcrop/archive.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cstdio>
#include <memory>

#include "outcrop/errors.hpp"
#include "outcrop/image_io.hpp"

namespace outcrop::archive {

using json = nlohmann::json;

const std::array<Rgb, kMaxClasses + 1> kSegPalette = {{
    {0, 0, 0},        // unsegmented
    {255, 0, 0},      // red
    {0, 0, 255},      // blue
    {128, 0, 128},    // purple
    {0, 255, 0},      // green
    {0, 255, 255},    // cyan
    {255, 255, 0},    // yellow
    {255, 255, 255},  // white
    {255, 165, 0},    // orange
}};

std::string sha256_hex(std::span<const std::uint8_t> bytes) {
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
        EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
        EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1) {
        throw IoError("sha256 failed");
    }
    std::string hex;
    hex.reserve(2 * len);
    char buf[3];
    for (unsigned int k = 0; k < len; ++k) {
        std::snprintf(buf, sizeof buf, "%02x", digest[k]);
        hex += buf;
    }
    return hex;
}

std::string sha256_file(const fs::path& path) { return sha256_hex(io::read_bytes(path)); }

std::string step_dir_name(int index) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "step%03d", index);
    return buf;
}

std::string media_type(const fs::path& name) {
    const auto ext = name.extension().string();
    if (ext == ".png") return "image/png";
    if (ext == ".json") return "application/json";
    if (ext == ".jsonl") return "application/x-ndjson";
    if (ext == ".csv") return "text/csv";
    return "application/octet-stream";
}

json Manifest::to_json() const {
    json j;
    j["step"] = step;
    j["parameters"] = parameters;
    j["files"] = json::array();
    for (const auto& f : files) j["files"].push_back({{"name", f.name}, {"sha256", f.sha256}, {"bytes", f.bytes}});
    j["aggregate_sha256"] = aggregate_sha256;
    return j;
}

Manifest Manifest::from_json(const json& j) {
    Manifest m;
    m.step = j.at("step").get<int>();
    m.parameters = j.value("parameters", json::object());
    for (const auto& f : j.at("files")) {
        m.files.push_back({f.at("name").get<std::string>(), f.at("sha256").get<std::string>(),
                           f.at("bytes").get<std::uintmax_t>()});
    }
    m.aggregate_sha256 = j.at("aggregate_sha256").get<std::string>();
    return m;
}

json points_document(int step, const std::vector<InterestPoint>& points, const MosaicGeometry* geometry,
                     const std::vector<Chip>* chips) {
    json doc;
    doc["step"] = step;
    doc["points"] = json::array();
    for (const auto& p : points) {
        json e{{"x", p.x}, {"y", p.y}, {"rank", p.rank}, {"score", p.score}, {"color", rank_color(p.rank)}};
        if (geometry) {
            const auto s = geometry->pixel_center(p.x, p.y);
            const auto pose = geometry->to_pose(p.x + 0.5, p.y + 0.5);
            e["scene_m"] = {s.x, s.y};
            e["pose"] = {{"pan_deg", pose.pan_deg}, {"tilt_deg", pose.tilt_deg}};
        }
        if (chips) {
            for (const auto& c : *chips) {
                if (c.rank != p.rank) continue;
                e["chip"] = "chips/chip" + std::to_string(c.rank) + ".png";
                e["chip_source_m"] = {c.source.x, c.source.y, c.source.width, c.source.height};
                if (geometry) {
                    // Chip footprint in mosaic pixels, for marker rectangles.
                    const auto [x0, y0] = geometry->to_pixel({c.source.x, c.source.y});
                    const auto [x1, y1] = geometry->to_pixel({c.source.x + c.source.width, c.source.y + c.source.height});
                    e["chip_rect_px"] = {x0, y0, x1 - x0, y1 - y0};
                }
            }
        }
        doc["points"].push_back(std::move(e));
    }
    return doc;
}

namespace {

void write_seg(const SegmentationMap& m, const fs::path& path) {
    io::write_indexed_png(m.width, m.height, m.labels, kSegPalette, path);
}

SegmentationMap read_seg(const fs::path& path) {
    const auto ix = io::read_indexed_png(path);
    SegmentationMap m;
    m.width = ix.width;
    m.height = ix.height;
    m.labels = ix.indices;
    m.refresh();
    return m;
}

UncommonMap uncommon_from_plane(const Plane& p) {
    UncommonMap u{p.width(), p.height(), std::vector<std::uint8_t>(p.size())};
    for (std::size_t k = 0; k < p.size(); ++k) u.values[k] = static_cast<std::uint8_t>(p.values()[k]);
    return u;
}

std::string relative_name(const fs::path& file, const fs::path& dir) {
    return fs::relative(file, dir).generic_string();
}

}  // namespace

void write_analysis(const fs::path& dir, const RgbImage& mosaic_rgb, const HsiImage& mosaic,
                    const PipelineResult& r, const json& points_doc) {
    fs::create_directories(dir);
    io::write_png(mosaic_rgb, dir / "mosaic_rgb.png");
    const Plane* planes[3] = {&mosaic.h, &mosaic.s, &mosaic.i};
    for (std::size_t c = 0; c < 3; ++c) {
        const std::string sfx = channel_suffix(kChannels[c]);
        io::write_plane(*planes[c], dir / ("mosaic_" + sfx + ".png"));
        write_seg(r.seg[c], dir / ("seg_" + sfx + ".png"));
        io::write_text(dir / ("hist_" + sfx + ".csv"), to_csv(build_cooccurrence(*planes[c])));
        io::write_plane(to_plane(r.uncommon[c]), dir / ("uncommon_" + sfx + ".png"),
                        std::pair{0.0, static_cast<double>(kMaxClasses)}, true);
    }
    io::write_plane(to_plane(r.interest_raw), dir / "interest_raw.png", std::pair{0.0, 3.0 * kMaxClasses}, true);
    io::write_plane(to_plane(r.interest_blur), dir / "interest_blur.png", std::nullopt, false, true);
    if (r.mask) io::write_plane(*r.mask, dir / "mask.png", std::pair{0.0, 1.0}, false, true);
    io::write_text(dir / "points.json", points_doc.dump(2) + "\n");
}

Manifest write_manifest(const fs::path& dir, int step, const json& parameters) {
    Manifest m;
    m.step = step;
    m.parameters = parameters;
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        if (!e.is_regular_file()) continue;
        const auto name = relative_name(e.path(), dir);
        if (name == "manifest.json") continue;
        m.files.push_back({name, sha256_file(e.path()), e.file_size()});
    }
    std::sort(m.files.begin(), m.files.end(), [](const auto& a, const auto& b) { return a.name < b.name; });
    std::string lines;
    for (const auto& f : m.files) lines += f.name + " " + f.sha256 + "\n";
    m.aggregate_sha256 = sha256_hex({reinterpret_cast<const std::uint8_t*>(lines.data()), lines.size()});
    io::write_text(dir / "manifest.json", m.to_json().dump(2) + "\n");
    return m;
}

Manifest read_manifest(const fs::path& dir) { return Manifest::from_json(json::parse(io::read_text(dir / "manifest.json"))); }

std::vector<std::string> verify_manifest(const fs::path& dir) {
    const auto m = read_manifest(dir);
    std::vector<std::string> bad;
    for (const auto& f : m.files) {
        const auto p = dir / f.name;
        if (!fs::exists(p) || sha256_file(p) != f.sha256) bad.push_back(f.name);
    }
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        if (!e.is_regular_file()) continue;
        const auto name = relative_name(e.path(), dir);
        if (name == "manifest.json") continue;
        const bool listed = std::any_of(m.files.begin(), m.files.end(), [&](const auto& f) { return f.name == name; });
        if (!listed) bad.push_back(name);
    }
    return bad;
}

Manifest archive_step(const SessionStep& step, const fs::path& root, const json& parameters) {
    const auto dir = root / step_dir_name(step.index);
    if (fs::exists(dir)) fs::remove_all(dir);
    write_analysis(dir, step.mosaic_rgb, step.mosaic, step.result,
                   points_document(step.index, step.result.points, &step.geometry, &step.chips));
    fs::create_directories(dir / "chips");
    for (const auto& c : step.chips) io::write_png(c.image, dir / "chips" / ("chip" + std::to_string(c.rank) + ".png"));

    const auto& g = step.geometry;
    json pose;
    pose["step"] = step.index;
    pose["distance_m"] = step.distance;
    pose["station_m"] = {step.station.x, step.station.y};
    pose["pan_deg"] = step.pose.pan_deg;
    pose["tilt_deg"] = step.pose.tilt_deg;
    pose["zoom"] = step.zoom;
    pose["fov_deg"] = step.fov_deg;
    pose["mosaic"] = {{"cols", g.spec.cols},
                      {"rows", g.spec.rows},
                      {"sub_width", g.spec.sub_width},
                      {"sub_height", g.spec.sub_height},
                      {"origin_m", {g.origin.x, g.origin.y}},
                      {"m_per_px", {g.m_per_px_x, g.m_per_px_y}}};
    pose["finished_at_s"] = step.finished_at_s;
    io::write_text(dir / "pose.json", pose.dump(2) + "\n");

    std::string lines;
    for (const auto& e : step.pointing) lines += to_json_line(e) + "\n";
    io::write_text(dir / "pointing.jsonl", lines);
    return write_manifest(dir, step.index, parameters);
}

LoadedStep load_step(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw NotFound("no archived step at " + dir.string());
    LoadedStep s;
    s.mosaic_rgb = io::read_png(dir / "mosaic_rgb.png");
    Plane* planes[3] = {&s.mosaic.h, &s.mosaic.s, &s.mosaic.i};
    for (std::size_t c = 0; c < 3; ++c) {
        const std::string sfx = channel_suffix(kChannels[c]);
        *planes[c] = io::read_plane(dir / ("mosaic_" + sfx + ".png"));
        s.seg[c] = read_seg(dir / ("seg_" + sfx + ".png"));
        s.uncommon[c] = uncommon_from_plane(io::read_plane(dir / ("uncommon_" + sfx + ".png")));
    }
    s.interest_raw = interest_from_plane(io::read_plane(dir / "interest_raw.png"));
    s.interest_blur = interest_from_plane(io::read_plane(dir / "interest_blur.png"));
    if (fs::exists(dir / "mask.png")) s.mask = io::read_plane(dir / "mask.png");
    const auto doc = json::parse(io::read_text(dir / "points.json"));
    for (const auto& p : doc.at("points")) {
        s.points.push_back({p.at("x").get<int>(), p.at("y").get<int>(), p.at("rank").get<int>(),
                            p.at("score").get<double>()});
        if (p.contains("chip")) s.chips.push_back(io::read_png(dir / p.at("chip").get<std::string>()));
    }
    return s;
}

}  // namespace outcrop::archive
