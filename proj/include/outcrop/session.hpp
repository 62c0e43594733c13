#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "outcrop/pipeline.hpp"
#include "outcrop/vcam.hpp"

namespace outcrop {

enum class Mode { autonomous, interactive };
enum class Status { running, awaiting_choice, done };
enum class Chooser { human, machine };

const char* to_string(Mode m);
const char* to_string(Status s);
const char* to_string(Chooser c);

struct SessionConfig {
    std::filesystem::path scene;                 // PNG with a `<stem>.json` descriptor
    std::vector<double> distances{300.0, 60.0, 10.0};
    std::optional<ScenePoint> initial_station;   // defaults to the scene center
    MosaicSpec mosaic{4, 3, 48, 36};
    PipelineParams pipeline;
    Mode mode = Mode::autonomous;
    bool mask_memory = false;
    MaskParams mask;
    int max_steps = 10;
    double min_distance = 0.0;  // approaches closer than this end the session
    CameraParams camera;

    void validate() const;
    nlohmann::json to_json() const;
    static SessionConfig from_json(const nlohmann::json& j);
    /// Applies a partial JSON document on top of this config.
    SessionConfig merged(const nlohmann::json& overrides) const;
};

struct Choice {
    enum class Action { approach, zoom, rescan, stop };
    Action action = Action::approach;
    std::optional<int> rank;                  // approach/zoom target among the last step's points
    std::optional<std::pair<int, int>> point;  // approach target as mosaic pixel (x, y)
    double zoom = 1.0;
    Chooser chooser = Chooser::human;

    nlohmann::json to_json() const;
    static Choice from_json(const nlohmann::json& j);
};

const char* to_string(Choice::Action a);

struct ChoiceRecord {
    int after_step = 0;
    Choice choice;
};

/// One committed iteration of the exploration loop. Immutable once committed.
struct SessionStep {
    int index = 0;
    double distance = 0.0;
    ScenePoint station;
    Pose pose;
    double zoom = 1.0;
    double fov_deg = 0.0;
    MosaicGeometry geometry;
    RgbImage mosaic_rgb;
    HsiImage mosaic;
    PipelineResult result;
    std::vector<Chip> chips;
    std::vector<PointingEntry> pointing;
    double finished_at_s = 0.0;  // simulated clock
};

struct SessionEvent {
    int step = -1;
    std::string event;  // step_started, step_committed, awaiting_choice, choice_recorded, session_done
    nlohmann::json payload;
    double timestamp_s = 0.0;  // simulated clock

    nlohmann::json to_json() const;
};

/// Exploration state machine. Not thread-safe; one owner drives it.
class Session {
public:
    using EventSink = std::function<void(const SessionEvent&)>;

    Session(SessionConfig config, std::shared_ptr<const SourceScene> scene,
            std::optional<std::filesystem::path> archive_dir = std::nullopt);
    /// Loads the scene named in the config.
    static Session open(SessionConfig config, std::optional<std::filesystem::path> archive_dir = std::nullopt);

    void on_event(EventSink sink) { sink_ = std::move(sink); }

    const SessionConfig& config() const { return config_; }
    Status status() const { return status_; }
    const std::string& stop_reason() const { return stop_reason_; }
    const VirtualCamera& camera() const { return camera_; }
    const std::vector<std::shared_ptr<const SessionStep>>& steps() const { return steps_; }
    const std::vector<ChoiceRecord>& choices() const { return choices_; }
    const std::vector<SessionEvent>& events() const { return events_; }
    const std::optional<std::filesystem::path>& archive_dir() const { return archive_dir_; }

    /// Acquires and analyses one mosaic at the current pose and commits it.
    /// In autonomous mode the rank-1 policy choice is applied immediately.
    const SessionStep& run_step();

    /// Records a choice and repositions the camera. Requires awaiting_choice in interactive mode.
    void choose(const Choice& choice);

    /// Runs steps until done (autonomous) or until a human choice is needed (interactive).
    void run_until_blocked();

    /// Choice the autonomous policy makes after the latest step.
    Choice policy_choice() const;

private:
    void apply(const Choice& choice);
    void emit(int step, std::string event, nlohmann::json payload);
    void finish(const std::string& reason);
    std::optional<double> next_distance() const;
    void persist_session_files() const;

    SessionConfig config_;
    std::shared_ptr<const SourceScene> scene_;
    std::optional<std::filesystem::path> archive_dir_;
    VirtualCamera camera_;
    PointingLog log_;
    Status status_ = Status::running;
    std::string stop_reason_;
    std::vector<std::shared_ptr<const SessionStep>> steps_;
    std::vector<ChoiceRecord> choices_;
    std::vector<SessionEvent> events_;
    EventSink sink_;
};

/// Re-runs a session from its config and recorded choices.
Session replay(const SessionConfig& config, const std::vector<ChoiceRecord>& choices,
               std::optional<std::filesystem::path> archive_dir = std::nullopt);

std::vector<ChoiceRecord> read_choice_log(const std::filesystem::path& path);
std::string choice_log_text(const std::vector<ChoiceRecord>& choices);

}  // namespace outcrop
