#include <csignal>
#include <cstdio>
#include <iostream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "outcrop/archive.hpp"
#include "outcrop/errors.hpp"
#include "outcrop/image_io.hpp"
#include "outcrop/pipeline.hpp"
#include "outcrop/scenes.hpp"
#include "outcrop/service.hpp"
#include "outcrop/session.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace outcrop;

namespace {

constexpr int kUsage = 1;
constexpr int kRuntime = 2;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

int run_analyze(const fs::path& input, const PipelineParams& params, const fs::path& out) {
    const RgbImage rgb = io::read_image(input);
    const HsiImage hsi = rgb_to_hsi(rgb, params.levels);
    const PipelineResult r = run_pipeline(hsi, params);
    archive::write_analysis(out, rgb, hsi, r, archive::points_document(-1, r.points));
    json p{{"input", input.filename().string()},
           {"levels", params.levels},
           {"blur", params.blur},
           {"top_k", params.top_k},
           {"min_separation", params.separation()},
           {"hsi", "biconic"}};
    const auto m = archive::write_manifest(out, -1, p);

    json report;
    report["input"] = input.string();
    report["width"] = rgb.width();
    report["height"] = rgb.height();
    report["classes"] = {{"h", r.seg[0].class_count()}, {"s", r.seg[1].class_count()}, {"i", r.seg[2].class_count()}};
    report["points"] = archive::points_document(-1, r.points)["points"];
    report["out"] = out.string();
    report["aggregate_sha256"] = m.aggregate_sha256;
    std::cout << report.dump(2) << "\n";
    return 0;
}

SessionConfig load_config(const fs::path& path) {
    if (!fs::exists(path)) throw NotFound("config not found: " + path.string());
    json j;
    try {
        j = json::parse(io::read_text(path));
    } catch (const json::exception& e) {
        throw InvalidArgument("config " + path.string() + " is not valid JSON: " + e.what());
    }
    SessionConfig c = SessionConfig::from_json(j);
    // Relative scene paths are resolved against the config's directory.
    if (!c.scene.empty() && c.scene.is_relative()) c.scene = path.parent_path() / c.scene;
    return c;
}

void print_summary(const Session& s) {
    std::printf("%-5s %-10s %-6s %-8s %s\n", "step", "distance", "zoom", "points", "chosen");
    for (const auto& st : s.steps()) {
        std::string chosen = "-";
        for (const auto& c : s.choices()) {
            if (c.after_step != st->index) continue;
            chosen = to_string(c.choice.action);
            if (c.choice.rank) chosen += " rank " + std::to_string(*c.choice.rank);
            if (c.choice.rank && *c.choice.rank >= 1 &&
                static_cast<std::size_t>(*c.choice.rank) <= st->result.points.size()) {
                const auto& p = st->result.points[static_cast<std::size_t>(*c.choice.rank - 1)];
                chosen += " (" + std::to_string(p.x) + "," + std::to_string(p.y) + ")";
            }
            chosen += std::string(" by ") + to_string(c.choice.chooser);
        }
        std::printf("%-5d %-10.1f %-6.2f %-8zu %s\n", st->index, st->distance, st->zoom, st->result.points.size(),
                    chosen.c_str());
    }
    std::printf("status: %s (%s)\n", to_string(s.status()), s.stop_reason().c_str());
}

int run_session(const fs::path& config_path, const std::string& mode, const fs::path& out,
                const std::optional<fs::path>& replay_log) {
    SessionConfig cfg = load_config(config_path);
    if (!mode.empty()) cfg.mode = mode == "interactive" ? Mode::interactive : Mode::autonomous;
    if (cfg.mode == Mode::interactive && !replay_log) {
        throw UsageError("interactive sessions need a human in the loop; start `outcrop serve` and use the session API");
    }
    if (cfg.scene.empty()) throw InvalidArgument("config does not name a scene");
    if (!fs::exists(cfg.scene)) throw NotFound("scene image not found: " + cfg.scene.string());
    if (replay_log) {
        const auto s = replay(cfg, read_choice_log(*replay_log), out);
        print_summary(s);
        return 0;
    }
    Session s = Session::open(cfg, out);
    s.run_until_blocked();
    print_summary(s);
    std::printf("archive: %s\n", out.string().c_str());
    return 0;
}

int run_serve(const std::string& host, int port, const fs::path& scene_dir, const fs::path& archive_dir) {
    // Signals are collected by a dedicated thread so shutdown runs outside signal context.
    sigset_t sigs;
    sigemptyset(&sigs);
    sigaddset(&sigs, SIGINT);
    sigaddset(&sigs, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &sigs, nullptr);

    service::SessionManager mgr(scene_dir, archive_dir);
    service::HttpService http(mgr);
    if (!http.bind(host, port)) {
        std::fprintf(stderr, "error: cannot bind %s:%d (port in use?)\n", host.c_str(), port);
        return kRuntime;
    }
    std::printf("listening on http://%s:%d\n", host.c_str(), http.port());
    std::fflush(stdout);
    std::thread waiter([&] {
        int sig = 0;
        sigwait(&sigs, &sig);
        http.stop();
    });
    http.listen();
    mgr.shutdown();
    // listen() can also return on its own; wake the waiter so it can be joined.
    pthread_kill(waiter.native_handle(), SIGTERM);
    waiter.join();
    std::printf("stopped\n");
    return 0;
}

int run_scene_gen(const std::string& kind, const fs::path& out, std::uint64_t seed, double width_m) {
    if (out.extension() != ".png") throw UsageError("--out must name a .png file");
    if (!out.parent_path().empty()) fs::create_directories(out.parent_path());
    if (kind == "nested") {
        const auto n = scenes::nested_regions();
        save_scene({"nested_regions", n.image, width_m}, out);
    } else if (kind == "demo") {
        auto s = scenes::tan_cliff(scenes::demo_cliff(seed));
        s.name = "demo_cliff";
        save_scene(s, out);
    } else {
        throw UsageError("unknown scene kind: " + kind);
    }
    std::printf("wrote %s\n", out.string().c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"outcrop: uncommon-region exploration over a virtual pan-tilt-zoom camera"};
    app.require_subcommand(1);

    auto* analyze = app.add_subcommand("analyze", "Segment one image and report its interest points");
    fs::path a_input;
    fs::path a_out = "analysis";
    PipelineParams a_params;
    double a_sep = -1.0;
    analyze->add_option("input", a_input, "PNG or PPM image")->required();
    analyze->add_option("--levels", a_params.levels, "quantization levels G")->check(CLI::Range(2, 65536));
    analyze->add_option("--blur", a_params.blur, "interest blur width B in pixels")->check(CLI::Range(1, 1000));
    analyze->add_option("--top", a_params.top_k, "number of interest points")->check(CLI::Range(1, 1000));
    analyze->add_option("--min-separation", a_sep, "minimum point spacing in pixels (default 2B)");
    analyze->add_option("--out", a_out, "output directory");

    auto* session = app.add_subcommand("session", "Run a session headlessly and archive every step");
    fs::path s_config;
    std::string s_mode;
    fs::path s_out = "session_archive";
    std::optional<fs::path> s_replay;
    session->add_option("--config", s_config, "session config JSON")->required();
    session->add_option("--mode", s_mode, "autonomous or interactive")->check(CLI::IsMember({"autonomous", "interactive"}));
    session->add_option("--out", s_out, "archive directory");
    session->add_option("--replay", s_replay, "choice log (choices.jsonl) to replay");

    auto* serve = app.add_subcommand("serve", "Serve the session API");
    std::string v_host = "127.0.0.1";
    int v_port = 8080;
    fs::path v_scenes = "scenes";
    fs::path v_archive = "archive";
    serve->add_option("--host", v_host, "bind address");
    serve->add_option("--port", v_port, "TCP port (0 picks a free one)")->check(CLI::Range(0, 65535));
    serve->add_option("--scene-dir", v_scenes, "directory of scene PNG + JSON pairs");
    serve->add_option("--archive-dir", v_archive, "where session archives are written");

    auto* gen = app.add_subcommand("scene-gen", "Write a synthetic scene (PNG + descriptor)");
    std::string g_kind = "demo";
    fs::path g_out;
    std::uint64_t g_seed = 1;
    double g_width = 19.2;
    gen->add_option("--kind", g_kind, "demo or nested")->check(CLI::IsMember({"demo", "nested"}));
    gen->add_option("--out", g_out, "output PNG path")->required();
    gen->add_option("--seed", g_seed, "noise seed");
    gen->add_option("--width-m", g_width, "physical width for the nested scene")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kUsage;
    }

    try {
        if (*analyze) {
            if (a_sep >= 0) a_params.min_separation = a_sep;
            return run_analyze(a_input, a_params, a_out);
        }
        if (*session) return run_session(s_config, s_mode, s_out, s_replay);
        if (*serve) return run_serve(v_host, v_port, v_scenes, v_archive);
        if (*gen) return run_scene_gen(g_kind, g_out, g_seed, g_width);
    } catch (const UsageError& e) {
        std::fprintf(stderr, "usage error: %s\n", e.what());
        return kUsage;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kRuntime;
    }
    return kUsage;
}
