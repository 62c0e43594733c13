#include "outcrop/session.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "outcrop/archive.hpp"
#include "outcrop/errors.hpp"
#include "outcrop/image_io.hpp"

namespace outcrop {

using json = nlohmann::json;

const char* to_string(Mode m) { return m == Mode::autonomous ? "autonomous" : "interactive"; }

const char* to_string(Status s) {
    switch (s) {
        case Status::running: return "running";
        case Status::awaiting_choice: return "awaiting_choice";
        case Status::done: return "done";
    }
    return "unknown";
}

const char* to_string(Chooser c) { return c == Chooser::human ? "human" : "machine"; }

const char* to_string(Choice::Action a) {
    switch (a) {
        case Choice::Action::approach: return "approach";
        case Choice::Action::zoom: return "zoom";
        case Choice::Action::rescan: return "rescan";
        case Choice::Action::stop: return "stop";
    }
    return "unknown";
}

namespace {

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
    return j.contains(key) && !j.at(key).is_null() ? j.at(key).get<T>() : fallback;
}

void reject_unknown(const json& j, std::initializer_list<const char*> keys, const std::string& where) {
    if (!j.is_object()) throw InvalidArgument(where + " must be a JSON object");
    for (const auto& [k, v] : j.items()) {
        if (std::none_of(keys.begin(), keys.end(), [&](const char* x) { return k == x; })) {
            throw InvalidArgument("unknown " + where + " key: " + k);
        }
    }
}

}  // namespace

void SessionConfig::validate() const {
    if (distances.empty()) throw InvalidArgument("distance schedule is empty");
    for (std::size_t k = 0; k < distances.size(); ++k) {
        if (!(distances[k] > 0)) throw InvalidArgument("distances must be positive");
        if (k > 0 && !(distances[k] < distances[k - 1])) throw InvalidArgument("distances must be strictly decreasing");
    }
    mosaic.validate();
    pipeline.validate();
    if (max_steps < 1) throw InvalidArgument("max_steps must be >= 1");
    if (min_distance < 0) throw InvalidArgument("min_distance must be >= 0");
    if (mask.percentile < 0 || mask.percentile > 100) throw InvalidArgument("mask percentile must be in [0, 100]");
    if (mask.low_weight < 0 || mask.low_weight > 1) throw InvalidArgument("mask low_weight must be in [0, 1]");
    if (!(camera.base_fov_deg > 0 && camera.base_fov_deg < 180)) throw InvalidArgument("base fov must be in (0, 180)");
    if (camera.max_zoom < 1) throw InvalidArgument("max zoom must be >= 1");
    if (mosaic.sub_width > camera.sensor_width || mosaic.sub_height > camera.sensor_height) {
        throw InvalidArgument("mosaic tiles cannot be larger than the sensor");
    }
}

json SessionConfig::to_json() const {
    json j;
    j["scene"] = scene.generic_string();
    j["distances_m"] = distances;
    j["initial_station_m"] = initial_station ? json{initial_station->x, initial_station->y} : json(nullptr);
    j["mosaic"] = {{"cols", mosaic.cols}, {"rows", mosaic.rows}, {"sub_width", mosaic.sub_width},
                   {"sub_height", mosaic.sub_height}};
    j["levels"] = pipeline.levels;
    j["blur"] = pipeline.blur;
    j["top_k"] = pipeline.top_k;
    j["min_separation"] = pipeline.min_separation ? json(*pipeline.min_separation) : json(nullptr);
    j["segmentation"] = {{"smoothing_sigma", pipeline.seg.smoothing_sigma},
                         {"smoothing_radius", pipeline.seg.smoothing_radius},
                         {"peak_fraction", pipeline.seg.peak_fraction},
                         {"max_classes", pipeline.seg.max_classes}};
    j["hsi"] = "biconic";
    j["mode"] = to_string(mode);
    j["mask_memory"] = mask_memory;
    j["mask"] = {{"percentile", mask.percentile},
                 {"low_weight", mask.low_weight},
                 {"threshold", mask.threshold ? json(*mask.threshold) : json(nullptr)}};
    j["max_steps"] = max_steps;
    j["min_distance_m"] = min_distance;
    j["camera"] = {{"base_fov_deg", camera.base_fov_deg},
                   {"max_zoom", camera.max_zoom},
                   {"sensor_width", camera.sensor_width},
                   {"sensor_height", camera.sensor_height}};
    return j;
}

SessionConfig SessionConfig::from_json(const json& j) {
    reject_unknown(j,
                   {"scene", "distances_m", "initial_station_m", "mosaic", "levels", "blur", "top_k", "min_separation",
                    "segmentation", "hsi", "mode", "mask_memory", "mask", "max_steps", "min_distance_m", "camera"},
                   "config");
    SessionConfig c;
    try {
        c.scene = get_or<std::string>(j, "scene", "");
        c.distances = get_or<std::vector<double>>(j, "distances_m", c.distances);
        if (j.contains("initial_station_m") && !j.at("initial_station_m").is_null()) {
            const auto v = j.at("initial_station_m").get<std::vector<double>>();
            if (v.size() != 2) throw InvalidArgument("initial_station_m needs [x, y]");
            c.initial_station = ScenePoint{v[0], v[1]};
        }
        if (j.contains("mosaic")) {
            const auto& m = j.at("mosaic");
            reject_unknown(m, {"cols", "rows", "sub_width", "sub_height"}, "mosaic");
            c.mosaic.cols = get_or(m, "cols", c.mosaic.cols);
            c.mosaic.rows = get_or(m, "rows", c.mosaic.rows);
            c.mosaic.sub_width = get_or(m, "sub_width", c.mosaic.sub_width);
            c.mosaic.sub_height = get_or(m, "sub_height", c.mosaic.sub_height);
        }
        c.pipeline.levels = get_or(j, "levels", c.pipeline.levels);
        c.pipeline.blur = get_or(j, "blur", c.pipeline.blur);
        c.pipeline.top_k = get_or(j, "top_k", c.pipeline.top_k);
        if (j.contains("min_separation") && !j.at("min_separation").is_null()) {
            c.pipeline.min_separation = j.at("min_separation").get<double>();
        }
        if (j.contains("segmentation")) {
            const auto& s = j.at("segmentation");
            reject_unknown(s, {"smoothing_sigma", "smoothing_radius", "peak_fraction", "max_classes"}, "segmentation");
            c.pipeline.seg.smoothing_sigma = get_or(s, "smoothing_sigma", c.pipeline.seg.smoothing_sigma);
            c.pipeline.seg.smoothing_radius = get_or(s, "smoothing_radius", c.pipeline.seg.smoothing_radius);
            c.pipeline.seg.peak_fraction = get_or(s, "peak_fraction", c.pipeline.seg.peak_fraction);
            c.pipeline.seg.max_classes = get_or(s, "max_classes", c.pipeline.seg.max_classes);
        }
        if (get_or<std::string>(j, "hsi", "biconic") != "biconic") throw InvalidArgument("only the biconic HSI model is supported");
        const auto mode = get_or<std::string>(j, "mode", "autonomous");
        if (mode == "autonomous") {
            c.mode = Mode::autonomous;
        } else if (mode == "interactive") {
            c.mode = Mode::interactive;
        } else {
            throw InvalidArgument("mode must be autonomous or interactive");
        }
        c.mask_memory = get_or(j, "mask_memory", c.mask_memory);
        if (j.contains("mask")) {
            const auto& m = j.at("mask");
            reject_unknown(m, {"percentile", "low_weight", "threshold"}, "mask");
            c.mask.percentile = get_or(m, "percentile", c.mask.percentile);
            c.mask.low_weight = get_or(m, "low_weight", c.mask.low_weight);
            if (m.contains("threshold") && !m.at("threshold").is_null()) c.mask.threshold = m.at("threshold").get<double>();
        }
        c.max_steps = get_or(j, "max_steps", c.max_steps);
        c.min_distance = get_or(j, "min_distance_m", c.min_distance);
        if (j.contains("camera")) {
            const auto& m = j.at("camera");
            reject_unknown(m, {"base_fov_deg", "max_zoom", "sensor_width", "sensor_height"}, "camera");
            c.camera.base_fov_deg = get_or(m, "base_fov_deg", c.camera.base_fov_deg);
            c.camera.max_zoom = get_or(m, "max_zoom", c.camera.max_zoom);
            c.camera.sensor_width = get_or(m, "sensor_width", c.camera.sensor_width);
            c.camera.sensor_height = get_or(m, "sensor_height", c.camera.sensor_height);
        }
    } catch (const json::exception& e) {
        throw InvalidArgument(std::string("malformed config: ") + e.what());
    }
    c.validate();
    return c;
}

SessionConfig SessionConfig::merged(const json& overrides) const {
    if (!overrides.is_object()) throw InvalidArgument("config overrides must be a JSON object");
    json j = to_json();
    j.merge_patch(overrides);
    return from_json(j);
}

json Choice::to_json() const {
    json j;
    j["action"] = to_string(action);
    if (rank) j["rank"] = *rank;
    if (point) j["point"] = {point->first, point->second};
    if (action == Action::zoom) j["zoom"] = zoom;
    j["chooser"] = to_string(chooser);
    return j;
}

Choice Choice::from_json(const json& j) {
    reject_unknown(j, {"action", "rank", "point", "zoom", "chooser"}, "choice");
    Choice c;
    try {
        const auto a = j.at("action").get<std::string>();
        if (a == "approach") {
            c.action = Action::approach;
        } else if (a == "zoom") {
            c.action = Action::zoom;
        } else if (a == "rescan") {
            c.action = Action::rescan;
        } else if (a == "stop") {
            c.action = Action::stop;
        } else {
            throw InvalidArgument("unknown action: " + a);
        }
        if (j.contains("rank") && !j.at("rank").is_null()) c.rank = j.at("rank").get<int>();
        if (j.contains("point") && !j.at("point").is_null()) {
            const auto p = j.at("point").get<std::vector<int>>();
            if (p.size() != 2) throw InvalidArgument("point needs [x, y]");
            c.point = std::pair{p[0], p[1]};
        }
        c.zoom = get_or(j, "zoom", 1.0);
        const auto who = get_or<std::string>(j, "chooser", "human");
        if (who != "human" && who != "machine") throw InvalidArgument("chooser must be human or machine");
        c.chooser = who == "human" ? Chooser::human : Chooser::machine;
    } catch (const json::exception& e) {
        throw InvalidArgument(std::string("malformed choice: ") + e.what());
    }
    if (c.action == Action::approach && c.rank.has_value() == c.point.has_value()) {
        throw InvalidArgument("approach needs exactly one of rank or point");
    }
    if (c.action == Action::zoom && c.rank && c.point) throw InvalidArgument("zoom takes at most one of rank or point");
    return c;
}

json SessionEvent::to_json() const {
    return {{"step", step}, {"event", event}, {"payload", payload}, {"timestamp", timestamp_s}};
}

namespace {

VirtualCamera initial_camera(const SessionConfig& c, std::shared_ptr<const SourceScene> scene) {
    c.validate();
    VirtualCamera cam(std::move(scene), c.distances.front(), c.camera);
    if (c.initial_station) cam = cam.with_station(*c.initial_station, c.distances.front());
    return cam;
}

json point_summary(const std::vector<InterestPoint>& points) {
    json a = json::array();
    for (const auto& p : points) {
        a.push_back({{"x", p.x}, {"y", p.y}, {"rank", p.rank}, {"score", p.score}, {"color", rank_color(p.rank)}});
    }
    return a;
}

}  // namespace

Session::Session(SessionConfig config, std::shared_ptr<const SourceScene> scene,
                 std::optional<std::filesystem::path> archive_dir)
    : config_(std::move(config)),
      scene_(scene),
      archive_dir_(std::move(archive_dir)),
      camera_(initial_camera(config_, std::move(scene))) {
    if (archive_dir_) {
        std::filesystem::create_directories(*archive_dir_);
        io::write_text(*archive_dir_ / "config.json", config_.to_json().dump(2) + "\n");
        persist_session_files();
    }
}

Session Session::open(SessionConfig config, std::optional<std::filesystem::path> archive_dir) {
    config.validate();
    auto scene = load_scene(config.scene);
    return Session(std::move(config), std::move(scene), std::move(archive_dir));
}

void Session::emit(int step, std::string event, json payload) {
    events_.push_back({step, std::move(event), std::move(payload), log_.clock()});
    if (sink_) sink_(events_.back());
}

void Session::finish(const std::string& reason) {
    status_ = Status::done;
    stop_reason_ = reason;
    emit(steps_.empty() ? -1 : steps_.back()->index, "session_done",
         {{"reason", reason}, {"steps", steps_.size()}});
}

std::optional<double> Session::next_distance() const {
    for (double d : config_.distances) {
        if (d < camera_.distance()) return d >= config_.min_distance ? std::optional(d) : std::nullopt;
    }
    return std::nullopt;
}

const SessionStep& Session::run_step() {
    if (status_ != Status::running) throw StateError(std::string("cannot run a step while ") + to_string(status_));
    auto step = std::make_shared<SessionStep>();
    step->index = static_cast<int>(steps_.size());
    step->distance = camera_.distance();
    step->station = camera_.station();
    step->pose = camera_.pose();
    step->zoom = camera_.zoom();
    step->fov_deg = camera_.fov_deg();
    emit(step->index, "step_started",
         {{"distance_m", step->distance}, {"zoom", step->zoom}, {"fov_deg", step->fov_deg}});

    const auto first_entry = log_.entries().size();
    const auto acq = acquire_mosaic(camera_, config_.mosaic, config_.pipeline.levels, log_);
    step->geometry = acq.geometry;
    step->mosaic_rgb = butt_mosaic(acq.rgb_tiles, config_.mosaic);
    step->mosaic = {butt_mosaic(acq.h_tiles, config_.mosaic), butt_mosaic(acq.s_tiles, config_.mosaic),
                    butt_mosaic(acq.i_tiles, config_.mosaic)};

    std::optional<Plane> mask;
    if (config_.mask_memory && !steps_.empty()) {
        const auto& prev = *steps_.back();
        // Raw, not blurred: the blur's halo spreads coarse interest over nearly the whole fine view,
        // leaving the uninteresting periphery unmasked.
        mask = mask_from_memory(prev.result.interest_raw, mosaic_transform(step->geometry, prev.geometry),
                                config_.mosaic.width(), config_.mosaic.height(), config_.mask);
    }
    step->result = run_pipeline(step->mosaic, config_.pipeline, mask);
    step->chips = acquire_chips(camera_, step->result.points, step->geometry, log_);
    step->pointing.assign(log_.entries().begin() + static_cast<std::ptrdiff_t>(first_entry), log_.entries().end());
    step->finished_at_s = log_.clock();

    if (archive_dir_) {
        json params = config_.to_json();
        params["distance_m"] = step->distance;
        params["zoom"] = step->zoom;
        params["mask_applied"] = mask.has_value();
        archive::archive_step(*step, *archive_dir_, params);
    }
    steps_.push_back(step);
    emit(step->index, "step_committed",
         {{"distance_m", step->distance}, {"points", point_summary(step->result.points)}});

    if (step->result.points.empty()) {
        finish("no_interest_points");
    } else if (static_cast<int>(steps_.size()) >= config_.max_steps) {
        finish("max_steps");
    } else {
        status_ = Status::awaiting_choice;
        if (config_.mode == Mode::autonomous) {
            apply(policy_choice());
        } else {
            emit(step->index, "awaiting_choice", {{"points", point_summary(step->result.points)}});
        }
    }
    persist_session_files();
    return *step;
}

Choice Session::policy_choice() const {
    Choice c;
    c.chooser = Chooser::machine;
    if (next_distance()) {
        c.action = Choice::Action::approach;
        c.rank = 1;
    } else {
        c.action = Choice::Action::stop;
    }
    return c;
}

void Session::choose(const Choice& choice) {
    if (config_.mode == Mode::autonomous) throw StateError("autonomous sessions choose by policy");
    if (status_ != Status::awaiting_choice) {
        throw StateError(std::string("no choice pending; session is ") + to_string(status_));
    }
    apply(choice);
    persist_session_files();
}

void Session::apply(const Choice& choice) {
    const SessionStep& last = *steps_.back();
    const auto target_pixel = [&]() -> std::optional<std::pair<int, int>> {
        if (choice.rank) {
            const auto& pts = last.result.points;
            const auto it = std::find_if(pts.begin(), pts.end(), [&](const auto& p) { return p.rank == *choice.rank; });
            if (it == pts.end()) throw InvalidArgument("no interest point with rank " + std::to_string(*choice.rank));
            return std::pair{it->x, it->y};
        }
        if (choice.point) {
            const auto [x, y] = *choice.point;
            if (x < 0 || y < 0 || x >= last.geometry.spec.width() || y >= last.geometry.spec.height()) {
                throw InvalidArgument("chosen point lies outside the mosaic");
            }
            return choice.point;
        }
        return std::nullopt;
    };

    VirtualCamera next = camera_;
    switch (choice.action) {
        case Choice::Action::approach: {
            const auto px = target_pixel();
            if (!px) throw InvalidArgument("approach needs a rank or a point");
            const auto d = next_distance();
            if (!d) throw InvalidArgument("no closer distance left in the schedule");
            next = approach(camera_, last.geometry.pixel_center(px->first, px->second), *d).camera;
            break;
        }
        case Choice::Action::zoom: {
            if (const auto px = target_pixel()) next = next.pointed_at(last.geometry.pixel_center(px->first, px->second));
            next = set_zoom(next, choice.zoom);
            break;
        }
        case Choice::Action::rescan:
        case Choice::Action::stop:
            break;
    }

    camera_ = next;
    choices_.push_back({last.index, choice});
    json payload = choice.to_json();
    payload["distance_m"] = camera_.distance();
    payload["fov_deg"] = camera_.fov_deg();
    emit(last.index, "choice_recorded", payload);
    if (choice.action == Choice::Action::stop) {
        finish(choice.chooser == Chooser::machine ? "schedule_exhausted" : "stopped");
    } else {
        status_ = Status::running;
    }
}

void Session::run_until_blocked() {
    while (status_ == Status::running) run_step();
}

void Session::persist_session_files() const {
    if (!archive_dir_) return;
    io::write_text(*archive_dir_ / "choices.jsonl", choice_log_text(choices_));
    std::string ev;
    for (const auto& e : events_) ev += e.to_json().dump() + "\n";
    io::write_text(*archive_dir_ / "events.jsonl", ev);
    json s{{"status", to_string(status_)},
           {"stop_reason", stop_reason_},
           {"mode", to_string(config_.mode)},
           {"steps", steps_.size()},
           {"distance_m", camera_.distance()}};
    io::write_text(*archive_dir_ / "session.json", s.dump(2) + "\n");
}

std::string choice_log_text(const std::vector<ChoiceRecord>& choices) {
    std::string out;
    for (const auto& c : choices) {
        json j = c.choice.to_json();
        j["after_step"] = c.after_step;
        out += j.dump() + "\n";
    }
    return out;
}

std::vector<ChoiceRecord> read_choice_log(const std::filesystem::path& path) {
    std::istringstream in(io::read_text(path));
    std::vector<ChoiceRecord> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw InvalidArgument(std::string("malformed choice log line: ") + e.what());
        }
        const int after = j.at("after_step").get<int>();
        j.erase("after_step");
        out.push_back({after, Choice::from_json(j)});
    }
    return out;
}

Session replay(const SessionConfig& config, const std::vector<ChoiceRecord>& choices,
               std::optional<std::filesystem::path> archive_dir) {
    Session s = Session::open(config, std::move(archive_dir));
    std::size_t next = 0;
    while (s.status() != Status::done) {
        s.run_until_blocked();
        if (s.status() != Status::awaiting_choice) break;
        if (next >= choices.size()) break;  // interactive log ends here
        const auto& rec = choices[next++];
        if (rec.after_step != s.steps().back()->index) throw StateError("choice log does not match the replayed steps");
        s.choose(rec.choice);
    }
    if (config.mode == Mode::autonomous) {
        // Policy decisions must come out the same as recorded.
        if (s.choices().size() != choices.size()) throw StateError("replay diverged from the choice log");
        for (std::size_t k = 0; k < choices.size(); ++k) {
            if (s.choices()[k].choice.to_json() != choices[k].choice.to_json() ||
                s.choices()[k].after_step != choices[k].after_step) {
                throw StateError("replay diverged from the choice log");
            }
        }
    }
    return s;
}

}  // namespace outcrop
