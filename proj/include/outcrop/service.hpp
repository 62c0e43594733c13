#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>

#include <json.hpp>

#include "outcrop/session.hpp"

namespace outcrop::service {

namespace fs = std::filesystem;

/// Owns all live sessions. Each session is driven by its own worker thread; HTTP handlers
/// only read published snapshots or hand choices to the worker.
class SessionManager {
public:
    SessionManager(fs::path scene_dir, fs::path archive_root, nlohmann::json default_overrides = nlohmann::json::object());
    ~SessionManager();

    SessionManager(const SessionManager&) = delete;
    SessionManager& operator=(const SessionManager&) = delete;

    nlohmann::json list_scenes() const;

    /// Creates a session on scene `scene_id` (a file stem in the scene directory) and starts
    /// its first step. Throws NotFound for unknown scenes, InvalidArgument for bad overrides.
    nlohmann::json create(const std::string& scene_id, const nlohmann::json& overrides);

    nlohmann::json list_sessions() const;
    nlohmann::json describe(const std::string& id) const;
    nlohmann::json steps(const std::string& id) const;
    nlohmann::json step(const std::string& id, int index) const;

    /// Path of a committed artifact; NotFound unless the step manifest lists it.
    fs::path artifact(const std::string& id, int index, const std::string& name) const;

    /// Applies a human choice. StateError unless the session awaits one.
    nlohmann::json submit(const std::string& id, const nlohmann::json& choice);

    /// Events with sequence number > after; waits up to `wait` for the first one.
    nlohmann::json events(const std::string& id, std::uint64_t after,
                          std::chrono::milliseconds wait = std::chrono::milliseconds(0)) const;

    /// Blocks until the session is idle (awaiting a choice or done) or the timeout passes.
    bool wait_idle(const std::string& id, std::chrono::milliseconds timeout) const;

    /// Stops all workers after their current step; archives stay consistent.
    void shutdown();

private:
    struct Entry;
    std::shared_ptr<Entry> find(const std::string& id) const;
    static void worker(std::shared_ptr<Entry> e);

    fs::path scene_dir_;
    fs::path archive_root_;
    nlohmann::json defaults_;
    mutable std::mutex mu_;
    std::map<std::string, std::shared_ptr<Entry>> sessions_;
    std::uint64_t counter_ = 0;
};

/// HTTP adapter over a SessionManager.
class HttpService {
public:
    explicit HttpService(SessionManager& manager);
    ~HttpService();

    /// Binds host:port; port 0 picks a free port. Returns false if the port is taken.
    bool bind(const std::string& host, int port);
    int port() const { return port_; }
    /// Serves until stop() is called.
    void listen();
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    int port_ = -1;
};

}  // namespace outcrop::service
