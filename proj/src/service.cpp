#include "outcrop/service.hpp"

#include <httplib.h>

#include <algorithm>
#include <condition_variable>
#include <deque>
#include <random>
#include <thread>

#include "outcrop/archive.hpp"
#include "outcrop/errors.hpp"
#include "outcrop/image_io.hpp"

namespace outcrop::service {

using json = nlohmann::json;

struct SessionManager::Entry {
    std::string id;
    std::string scene_id;
    fs::path dir;

    // Guards everything below except `session`, which only the worker touches while running.
    mutable std::mutex mu;
    mutable std::condition_variable cv;
    std::unique_ptr<Session> session;
    std::mutex session_mu;

    Status status = Status::running;
    bool busy = true;  // worker is executing steps
    bool stopping = false;
    std::deque<Choice> pending;
    std::string stop_reason;
    double distance = 0.0;
    double zoom = 1.0;
    double fov = 0.0;
    std::vector<std::shared_ptr<const SessionStep>> steps;
    std::vector<json> events;  // each carries "seq"
    std::thread thread;

    void publish(const SessionEvent& ev) {
        std::lock_guard lk(mu);
        json j = ev.to_json();
        j["seq"] = events.size() + 1;
        events.push_back(std::move(j));
        cv.notify_all();
    }
};

namespace {

std::string new_token() {
    static std::mutex mu;
    static std::mt19937_64 rng{std::random_device{}()};
    std::lock_guard lk(mu);
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(rng()));
    return buf;
}

json points_json(const std::vector<InterestPoint>& pts) {
    json a = json::array();
    for (const auto& p : pts) {
        a.push_back({{"x", p.x}, {"y", p.y}, {"rank", p.rank}, {"score", p.score}, {"color", rank_color(p.rank)}});
    }
    return a;
}

bool valid_scene_id(const std::string& id) {
    return !id.empty() && std::all_of(id.begin(), id.end(), [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
    }) && id.find("..") == std::string::npos;
}

}  // namespace

SessionManager::SessionManager(fs::path scene_dir, fs::path archive_root, json default_overrides)
    : scene_dir_(std::move(scene_dir)), archive_root_(std::move(archive_root)), defaults_(std::move(default_overrides)) {
    fs::create_directories(archive_root_);
    SessionConfig base;
    base.mode = Mode::interactive;
    base.merged(defaults_);  // reject bad defaults early
}

SessionManager::~SessionManager() { shutdown(); }

json SessionManager::list_scenes() const {
    json out = json::array();
    if (!fs::is_directory(scene_dir_)) return out;
    std::vector<fs::path> pngs;
    for (const auto& e : fs::directory_iterator(scene_dir_)) {
        if (e.is_regular_file() && e.path().extension() == ".png" && fs::exists(io::sidecar_path(e.path()))) {
            pngs.push_back(e.path());
        }
    }
    std::sort(pngs.begin(), pngs.end());
    for (const auto& p : pngs) {
        try {
            const auto d = json::parse(io::read_text(io::sidecar_path(p)));
            out.push_back({{"id", p.stem().string()},
                           {"name", d.value("name", p.stem().string())},
                           {"physical_width_m", d.at("physical_width_m")}});
        } catch (const std::exception&) {
            // Unreadable descriptors are not scenes.
        }
    }
    return out;
}

json SessionManager::create(const std::string& scene_id, const json& overrides) {
    if (!valid_scene_id(scene_id)) throw NotFound("unknown scene: " + scene_id);
    const auto png = scene_dir_ / (scene_id + ".png");
    if (!fs::exists(png) || !fs::exists(io::sidecar_path(png))) throw NotFound("unknown scene: " + scene_id);
    if (!overrides.is_object()) throw InvalidArgument("overrides must be a JSON object");
    if (overrides.contains("scene")) throw InvalidArgument("the scene is chosen by id, not by override");

    SessionConfig base;
    base.mode = Mode::interactive;
    SessionConfig cfg = base.merged(defaults_).merged(overrides);
    cfg.scene = png;
    auto scene = load_scene(png);

    auto e = std::make_shared<Entry>();
    e->scene_id = scene_id;
    {
        std::lock_guard lk(mu_);
        e->id = "s" + std::to_string(++counter_) + "-" + new_token().substr(0, 8);
    }
    e->dir = archive_root_ / e->id;
    e->session = std::make_unique<Session>(cfg, scene, e->dir);
    e->distance = e->session->camera().distance();
    e->zoom = e->session->camera().zoom();
    e->fov = e->session->camera().fov_deg();
    Entry* raw = e.get();
    e->session->on_event([raw](const SessionEvent& ev) {
        {
            // Runs on whichever thread drives the session, under session_mu.
            std::lock_guard lk(raw->mu);
            if (ev.event == "step_committed") raw->steps.push_back(raw->session->steps().back());
            if (ev.event == "awaiting_choice" || ev.event == "session_done") {
                raw->status = raw->session->status();
                raw->stop_reason = raw->session->stop_reason();
                raw->distance = raw->session->camera().distance();
                raw->zoom = raw->session->camera().zoom();
                raw->fov = raw->session->camera().fov_deg();
                raw->busy = false;
            }
        }
        raw->publish(ev);
    });
    {
        std::lock_guard lk(mu_);
        sessions_[e->id] = e;
    }
    e->thread = std::thread(worker, e);
    return describe(e->id);
}

void SessionManager::worker(std::shared_ptr<Entry> e) {
    for (;;) {
        {
            std::lock_guard slk(e->session_mu);
            try {
                e->session->run_until_blocked();
            } catch (const std::exception& ex) {
                // Camera or I/O failure ends the session; the event tells the client why.
                std::lock_guard lk(e->mu);
                e->status = Status::done;
                e->stop_reason = std::string("error: ") + ex.what();
                json j{{"seq", e->events.size() + 1},
                       {"step", static_cast<int>(e->steps.size()) - 1},
                       {"event", "session_done"},
                       {"payload", {{"reason", "error"}, {"message", ex.what()}}},
                       {"timestamp", 0.0}};
                e->events.push_back(std::move(j));
                e->busy = false;
                e->cv.notify_all();
                return;
            }
            std::lock_guard lk(e->mu);
            const auto& s = *e->session;
            e->status = s.status();
            e->stop_reason = s.stop_reason();
            e->distance = s.camera().distance();
            e->zoom = s.camera().zoom();
            e->fov = s.camera().fov_deg();
            e->busy = false;
            e->cv.notify_all();
            if (s.status() == Status::done) return;
        }
        Choice next;
        {
            std::unique_lock lk(e->mu);
            e->cv.wait(lk, [&] { return e->stopping || !e->pending.empty(); });
            if (e->stopping) return;
            next = e->pending.front();
            e->pending.pop_front();
        }
        std::lock_guard slk(e->session_mu);
        std::lock_guard lk(e->mu);
        e->busy = true;
        e->status = e->session->status();
        e->distance = e->session->camera().distance();
        e->zoom = e->session->camera().zoom();
        e->fov = e->session->camera().fov_deg();
        if (e->status == Status::done) {
            e->stop_reason = e->session->stop_reason();
            e->busy = false;
            e->cv.notify_all();
            return;
        }
    }
}

std::shared_ptr<SessionManager::Entry> SessionManager::find(const std::string& id) const {
    std::lock_guard lk(mu_);
    const auto it = sessions_.find(id);
    if (it == sessions_.end()) throw NotFound("unknown session: " + id);
    return it->second;
}

json SessionManager::list_sessions() const {
    std::vector<std::string> ids;
    {
        std::lock_guard lk(mu_);
        for (const auto& [id, e] : sessions_) ids.push_back(id);
    }
    json out = json::array();
    for (const auto& id : ids) out.push_back(describe(id));
    return out;
}

json SessionManager::describe(const std::string& id) const {
    const auto e = find(id);
    std::lock_guard lk(e->mu);
    json j;
    j["id"] = e->id;
    j["scene"] = e->scene_id;
    j["status"] = e->busy && e->status != Status::done ? "running" : to_string(e->status);
    j["mode"] = to_string(e->session->config().mode);
    j["steps"] = e->steps.size();
    j["distance_m"] = e->distance;
    j["zoom"] = e->zoom;
    j["fov_deg"] = e->fov;
    j["stop_reason"] = e->stop_reason;
    j["last_seq"] = e->events.size();
    j["pending_points"] = json::array();
    if (!e->busy && e->status == Status::awaiting_choice && !e->steps.empty()) {
        j["pending_points"] = points_json(e->steps.back()->result.points);
    }
    return j;
}

json SessionManager::steps(const std::string& id) const {
    const auto e = find(id);
    std::vector<std::shared_ptr<const SessionStep>> snap;
    {
        std::lock_guard lk(e->mu);
        snap = e->steps;
    }
    json out = json::array();
    for (const auto& s : snap) {
        out.push_back({{"index", s->index},
                       {"distance_m", s->distance},
                       {"zoom", s->zoom},
                       {"fov_deg", s->fov_deg},
                       {"points", points_json(s->result.points)},
                       {"mask", s->result.mask.has_value()}});
    }
    return out;
}

json SessionManager::step(const std::string& id, int index) const {
    const auto e = find(id);
    {
        std::lock_guard lk(e->mu);
        if (index < 0 || index >= static_cast<int>(e->steps.size())) {
            throw NotFound("step " + std::to_string(index) + " is not committed");
        }
    }
    const auto dir = e->dir / archive::step_dir_name(index);
    json j;
    j["index"] = index;
    j["points"] = json::parse(io::read_text(dir / "points.json"));
    j["pose"] = json::parse(io::read_text(dir / "pose.json"));
    j["manifest"] = json::parse(io::read_text(dir / "manifest.json"));
    return j;
}

fs::path SessionManager::artifact(const std::string& id, int index, const std::string& name) const {
    const auto e = find(id);
    {
        std::lock_guard lk(e->mu);
        if (index < 0 || index >= static_cast<int>(e->steps.size())) {
            throw NotFound("step " + std::to_string(index) + " is not committed");
        }
    }
    const auto dir = e->dir / archive::step_dir_name(index);
    if (name == "manifest.json") return dir / name;
    const auto m = archive::read_manifest(dir);
    const bool listed = std::any_of(m.files.begin(), m.files.end(), [&](const auto& f) { return f.name == name; });
    if (!listed) throw NotFound("no artifact named " + name);
    return dir / name;
}

json SessionManager::submit(const std::string& id, const json& body) {
    const auto e = find(id);
    const Choice choice = Choice::from_json(body);
    {
        std::lock_guard lk(e->mu);
        if (e->busy || e->status != Status::awaiting_choice || !e->pending.empty()) {
            throw StateError("session is not awaiting a choice");
        }
        if (e->session->config().mode == Mode::autonomous) throw StateError("autonomous sessions choose by policy");
    }
    {
        // The worker is parked, so the session is ours to validate and apply against.
        std::lock_guard slk(e->session_mu);
        e->session->choose(choice);
    }
    {
        std::lock_guard lk(e->mu);
        e->pending.push_back(choice);
        e->busy = true;
        e->cv.notify_all();
    }
    return describe(id);
}

json SessionManager::events(const std::string& id, std::uint64_t after, std::chrono::milliseconds wait) const {
    const auto e = find(id);
    std::unique_lock lk(e->mu);
    e->cv.wait_for(lk, wait, [&] { return e->events.size() > after || e->stopping; });
    json out;
    out["events"] = json::array();
    for (std::size_t k = after; k < e->events.size(); ++k) out["events"].push_back(e->events[k]);
    out["last_seq"] = e->events.size();
    out["status"] = e->busy && e->status != Status::done ? "running" : to_string(e->status);
    return out;
}

bool SessionManager::wait_idle(const std::string& id, std::chrono::milliseconds timeout) const {
    const auto e = find(id);
    std::unique_lock lk(e->mu);
    return e->cv.wait_for(lk, timeout, [&] { return !e->busy; });
}

void SessionManager::shutdown() {
    std::vector<std::shared_ptr<Entry>> all;
    {
        std::lock_guard lk(mu_);
        for (const auto& [id, e] : sessions_) all.push_back(e);
    }
    for (const auto& e : all) {
        std::lock_guard lk(e->mu);
        e->stopping = true;
        e->cv.notify_all();
    }
    for (const auto& e : all) {
        if (e->thread.joinable()) e->thread.join();
    }
}

// ---------------------------------------------------------------------------------------------

struct HttpService::Impl {
    SessionManager& mgr;
    httplib::Server server;

    explicit Impl(SessionManager& m) : mgr(m) {}
};

namespace {

void send_json(httplib::Response& res, const json& j, int status = 200) {
    res.status = status;
    res.set_content(j.dump(2) + "\n", "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& msg) {
    send_json(res, {{"error", msg}, {"status", status}}, status);
}

template <typename F>
httplib::Server::Handler guarded(F f) {
    return [f](const httplib::Request& req, httplib::Response& res) {
        try {
            f(req, res);
        } catch (const NotFound& e) {
            send_error(res, 404, e.what());
        } catch (const InvalidArgument& e) {
            send_error(res, 400, e.what());
        } catch (const StateError& e) {
            send_error(res, 409, e.what());
        } catch (const json::exception& e) {
            send_error(res, 400, std::string("malformed JSON: ") + e.what());
        } catch (const std::exception& e) {
            send_error(res, 500, e.what());
        }
    };
}

json parse_body(const httplib::Request& req) {
    if (req.body.empty()) return json::object();
    return json::parse(req.body);
}

int parse_index(const std::string& s) {
    try {
        std::size_t used = 0;
        const int v = std::stoi(s, &used);
        if (used != s.size()) throw NotFound("bad step index");
        return v;
    } catch (const std::logic_error&) {
        throw NotFound("bad step index");
    }
}

}  // namespace

HttpService::HttpService(SessionManager& manager) : impl_(std::make_unique<Impl>(manager)) {
    auto& srv = impl_->server;
    auto& mgr = impl_->mgr;

    // The library default sets SO_REUSEPORT, which lets a second server share a busy port.
    srv.set_socket_options([](socket_t sock) {
        int yes = 1;
        setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof(yes));
    });

    srv.Get("/health", guarded([](const httplib::Request&, httplib::Response& res) { send_json(res, {{"status", "ok"}}); }));
    srv.Get("/scenes", guarded([&mgr](const httplib::Request&, httplib::Response& res) { send_json(res, {{"scenes", mgr.list_scenes()}}); }));
    srv.Get("/sessions", guarded([&mgr](const httplib::Request&, httplib::Response& res) { send_json(res, {{"sessions", mgr.list_sessions()}}); }));
    srv.Post("/sessions", guarded([&mgr](const httplib::Request& req, httplib::Response& res) {
                 const auto body = parse_body(req);
                 if (!body.is_object() || !body.contains("scene") || !body.at("scene").is_string()) {
                     throw InvalidArgument("body needs a scene id");
                 }
                 const json overrides = body.value("overrides", json::object());
                 send_json(res, mgr.create(body.at("scene").get<std::string>(), overrides), 201);
             }));
    srv.Get(R"(/sessions/([^/]+))",
            guarded([&mgr](const httplib::Request& req, httplib::Response& res) { send_json(res, mgr.describe(req.matches[1])); }));
    srv.Get(R"(/sessions/([^/]+)/steps)", guarded([&mgr](const httplib::Request& req, httplib::Response& res) {
                send_json(res, {{"steps", mgr.steps(req.matches[1])}});
            }));
    srv.Get(R"(/sessions/([^/]+)/steps/([^/]+))", guarded([&mgr](const httplib::Request& req, httplib::Response& res) {
                send_json(res, mgr.step(req.matches[1], parse_index(req.matches[2])));
            }));
    srv.Get(R"(/sessions/([^/]+)/steps/([^/]+)/artifacts/(.+))", guarded([&mgr](const httplib::Request& req, httplib::Response& res) {
                const auto path = mgr.artifact(req.matches[1], parse_index(req.matches[2]), req.matches[3]);
                const auto bytes = io::read_bytes(path);
                res.status = 200;
                res.set_content(std::string(bytes.begin(), bytes.end()), archive::media_type(path));
            }));
    srv.Post(R"(/sessions/([^/]+)/choices)", guarded([&mgr](const httplib::Request& req, httplib::Response& res) {
                 send_json(res, mgr.submit(req.matches[1], parse_body(req)));
             }));
    srv.Get(R"(/sessions/([^/]+)/events)", guarded([&mgr](const httplib::Request& req, httplib::Response& res) {
                std::uint64_t after = 0;
                long wait_ms = 0;
                try {
                    // stoull accepts "-1" and wraps it.
                    for (const char* key : {"after", "wait_ms"}) {
                        if (req.has_param(key) && req.get_param_value(key).find('-') != std::string::npos) {
                            throw InvalidArgument("after and wait_ms must be non-negative integers");
                        }
                    }
                    if (req.has_param("after")) after = std::stoull(req.get_param_value("after"));
                    if (req.has_param("wait_ms")) wait_ms = std::stol(req.get_param_value("wait_ms"));
                } catch (const std::logic_error&) {
                    throw InvalidArgument("after and wait_ms must be non-negative integers");
                }
                wait_ms = std::clamp(wait_ms, 0L, 30000L);
                send_json(res, mgr.events(req.matches[1], after, std::chrono::milliseconds(wait_ms)));
            }));
    srv.set_error_handler([](const httplib::Request&, httplib::Response& res) {
        if (res.body.empty()) send_error(res, res.status, res.status == 404 ? "no such route" : "request failed");
    });
}

HttpService::~HttpService() { stop(); }

bool HttpService::bind(const std::string& host, int port) {
    if (port == 0) {
        port_ = impl_->server.bind_to_any_port(host);
        return port_ > 0;
    }
    if (!impl_->server.bind_to_port(host, port)) return false;
    port_ = port;
    return true;
}

void HttpService::listen() { impl_->server.listen_after_bind(); }

void HttpService::stop() {
    if (impl_) impl_->server.stop();
}

}  // namespace outcrop::service
