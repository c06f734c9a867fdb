#include "handfly/batch.hpp"
#include "handfly/config.hpp"
#include "handfly/emulator.hpp"
#include "handfly/net.hpp"
#include "handfly/nodes.hpp"
#include "handfly/pipeline.hpp"
#include "handfly/session_log.hpp"

#include <CLI11.hpp>

#include <poll.h>
#include <termios.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <thread>

namespace
{
using namespace handfly;
using namespace std::chrono_literals;

enum Exit
{
        kClean = 0,
        kConfigError = 1,
        kRuntimeError = 2,
        kVerifyMismatch = 3,
};

std::atomic<bool> g_interrupted{false};

extern "C" void on_signal(int)
{
        g_interrupted = true;
}

/// Sleeps until SIGINT/SIGTERM, `until` returns true, or the duration (if positive) passes.
template <typename Pred>
void wait_for_exit(double duration_s, Pred until)
{
        const auto deadline = std::chrono::steady_clock::now() + std::chrono::duration<double>(duration_s);
        while (!g_interrupted && !until())
        {
                if (duration_s > 0 && std::chrono::steady_clock::now() >= deadline)
                {
                        return;
                }
                std::this_thread::sleep_for(20ms);
        }
}

/// Puts a terminal stdin into unbuffered no-echo mode for single-key commands.
class RawTerminal
{
public:
        RawTerminal()
        {
                if (isatty(STDIN_FILENO) && tcgetattr(STDIN_FILENO, &saved_) == 0)
                {
                        termios raw = saved_;
                        raw.c_lflag &= static_cast<tcflag_t>(~(ICANON | ECHO));
                        raw.c_cc[VMIN] = 0;
                        raw.c_cc[VTIME] = 0;
                        active_ = tcsetattr(STDIN_FILENO, TCSANOW, &raw) == 0;
                }
        }
        ~RawTerminal()
        {
                if (active_)
                {
                        tcsetattr(STDIN_FILENO, TCSANOW, &saved_);
                }
        }
        RawTerminal(const RawTerminal&) = delete;
        RawTerminal& operator=(const RawTerminal&) = delete;

        [[nodiscard]] bool active() const { return active_; }

        /// Next key within `timeout`, if any.
        [[nodiscard]] std::optional<char> key(std::chrono::milliseconds timeout) const
        {
                pollfd p{STDIN_FILENO, POLLIN, 0};
                if (!active_ || poll(&p, 1, static_cast<int>(timeout.count())) <= 0)
                {
                        return std::nullopt;
                }
                char c = 0;
                if (read(STDIN_FILENO, &c, 1) != 1)
                {
                        return std::nullopt;
                }
                return c;
        }

private:
        termios saved_{};
        bool active_ = false;
};

std::string flag_name(const std::string& key)
{
        std::string s = key;
        std::replace(s.begin(), s.end(), '_', '-');
        return "--" + s;
}

int run_pipeline(const Config& config, const std::optional<std::string>& record, bool console, double duration)
{
        PipelineNode::Options options;
        if (record)
        {
                options.record = *record;
        }
        options.console = console;
        PipelineNode node(config, options);
        std::fprintf(stderr, "pipeline: glove udp %u, telemetry udp %u, commands to %s:%d", node.glove_port(),
                     node.telemetry_port(), config.uav_host.c_str(), config.uav_port);
        if (console)
        {
                std::fprintf(stderr, ", console ws://%s:%u/ws", config.console_host.c_str(), node.console_port());
        }
        std::fprintf(stderr, "\n");

        RawTerminal term;
        if (term.active())
        {
                std::fprintf(stderr, "keys: r reset pose, a arm, d disarm, x quit\n");
        }
        bool quit = false;
        const auto deadline = std::chrono::steady_clock::now() + std::chrono::duration<double>(duration);
        while (!g_interrupted && !quit && !node.fatal_error())
        {
                if (duration > 0 && std::chrono::steady_clock::now() >= deadline)
                {
                        break;
                }
                if (!term.active())
                {
                        std::this_thread::sleep_for(20ms);
                        continue;
                }
                switch (term.key(20ms).value_or('\0'))
                {
                case 'r':
                        node.request(Control::ResetPose);
                        break;
                case 'a':
                        node.request(Control::Arm);
                        break;
                case 'd':
                        node.request(Control::Disarm);
                        break;
                case 'x':
                        quit = true;
                        break;
                default:
                        break;
                }
        }
        node.stop();
        std::printf("%s watchdog=%llu\n", wire::to_string(node.report()).c_str(),
                    static_cast<unsigned long long>(node.watchdog_trips()));
        if (const auto err = node.fatal_error())
        {
                std::fprintf(stderr, "pipeline stopped: %s\n", err->c_str());
                return kRuntimeError;
        }
        return kClean;
}

int run_sim(const Config& config, double duration, const std::optional<std::string>& state_out)
{
        SimNode node(config);
        std::fprintf(stderr, "sim: commands udp %u, telemetry to %s:%d\n", node.command_port(),
                     config.telemetry_host.c_str(), config.telemetry_port);
        wait_for_exit(duration, [] { return false; });
        node.stop();
        const std::string state = sim::serialize_state(node.state());
        std::printf("%s\n", state.c_str());
        const auto distances = node.waypoint_distances();
        for (std::size_t i = 0; i < distances.size(); ++i)
        {
                std::fprintf(stderr, "waypoint %zu: closest %.3f m\n", i, distances[i]);
        }
        if (state_out)
        {
                std::ofstream out(*state_out);
                out << state << '\n';
                if (!out)
                {
                        std::fprintf(stderr, "cannot write %s\n", state_out->c_str());
                        return kRuntimeError;
                }
        }
        return kClean;
}

int run_emulator_script(const Config& config, const std::string& path)
{
        const emulator::Script script = emulator::load_script(path);
        EmulatorNode node(config);
        std::atomic<bool> done{false};
        std::thread watcher([&] {
                wait_for_exit(0, [&] { return done.load(); });
                node.stop();
        });
        const bool complete = node.play(script);
        done = true;
        watcher.join();
        std::fprintf(stderr, "emulator: sent %llu packets%s\n", static_cast<unsigned long long>(node.sent()),
                     complete ? "" : " (interrupted)");
        return kClean;
}

int run_emulator_interactive(const Config& config)
{
        EmulatorNode node(config);
        std::thread streamer([&] { node.run_interactive(); });
        RawTerminal term;
        constexpr double kStep = 5.0;      // degrees per key press
        constexpr double kFlexed = -70.0;  // degrees
        if (term.active())
        {
                std::fprintf(stderr, "keys: w/s pitch, a/d roll, q/e yaw, 1-5 toggle finger, space toggle all, "
                                     "c center, x quit\n");
        }
        emulator::Pose pose = node.target();
        const auto adjust = [](double& angle, double delta_deg) {
                angle = std::clamp(angle + deg2rad(delta_deg), -kPi / 2, kPi / 2);
        };
        while (!g_interrupted)
        {
                if (!term.active())
                {
                        std::this_thread::sleep_for(20ms);
                        continue;
                }
                const auto key = term.key(20ms);
                if (!key)
                {
                        continue;
                }
                pose = node.target();
                switch (*key)
                {
                case 'w':
                        adjust(pose.wrist.pitch, -kStep);
                        break;
                case 's':
                        adjust(pose.wrist.pitch, kStep);
                        break;
                case 'a':
                        adjust(pose.wrist.roll, -kStep);
                        break;
                case 'd':
                        adjust(pose.wrist.roll, kStep);
                        break;
                case 'q':
                        adjust(pose.wrist.yaw, kStep);
                        break;
                case 'e':
                        adjust(pose.wrist.yaw, -kStep);
                        break;
                case ' ':
                {
                        const bool any_open = std::any_of(pose.fingers.begin(), pose.fingers.end(),
                                                          [](double f) { return f > deg2rad(kFlexed / 2); });
                        std::fill(pose.fingers.begin(), pose.fingers.end(), any_open ? deg2rad(kFlexed) : 0.0);
                        break;
                }
                case 'c':
                        pose.wrist = {};
                        break;
                case 'x':
                        g_interrupted = true;
                        break;
                default:
                        if (*key >= '1' && *key <= '5')
                        {
                                const auto i = static_cast<std::size_t>(*key - '1');
                                if (i < pose.fingers.size())
                                {
                                        pose.fingers[i] = pose.fingers[i] < deg2rad(kFlexed / 2) ? 0.0 : deg2rad(kFlexed);
                                }
                        }
                        break;
                }
                node.set_target(pose);
                std::fprintf(stderr, "\rwrist r=%+5.0f p=%+5.0f y=%+5.0f  ", rad2deg(pose.wrist.roll),
                             rad2deg(pose.wrist.pitch), rad2deg(pose.wrist.yaw));
        }
        node.stop();
        streamer.join();
        std::fprintf(stderr, "\nemulator: sent %llu packets\n", static_cast<unsigned long long>(node.sent()));
        return kClean;
}

bool compare(const char* what, const std::vector<std::string>& recorded, const std::vector<std::string>& replayed)
{
        if (recorded == replayed)
        {
                std::printf("%s: %zu identical\n", what, recorded.size());
                return true;
        }
        const auto [a, b] = std::mismatch(recorded.begin(), recorded.end(), replayed.begin(), replayed.end());
        const auto at = static_cast<std::size_t>(a - recorded.begin());
        std::printf("%s: MISMATCH recorded=%zu replayed=%zu first difference at %zu\n", what, recorded.size(),
                    replayed.size(), at);
        std::printf("  recorded: %s\n  replayed: %s\n", a != recorded.end() ? a->c_str() : "<end>",
                    b != replayed.end() ? b->c_str() : "<end>");
        return false;
}

int run_replay(const Config& config, const std::string& path, double speed, bool verify, bool to_pipeline)
{
        const auto log = session::read_log(path);
        if (log.corrupt > 0)
        {
                std::fprintf(stderr, "replay: skipped %llu corrupt records\n", static_cast<unsigned long long>(log.corrupt));
        }
        if (verify)
        {
                const ReplayOutput recorded = recorded_outputs(log.records);
                const ReplayOutput replayed = replay_pipeline(log.records, config);
                bool ok = compare("commands", recorded.commands, replayed.commands);
                ok = compare("gesture events", recorded.gesture_events, replayed.gesture_events) && ok;
                ok = compare("haptic events", recorded.haptic_events, replayed.haptic_events) && ok;
                ok = compare("controls", recorded.controls, replayed.controls) && ok;
                std::printf("ingest: %s\n", wire::to_string(replayed.ingest).c_str());
                return ok ? kClean : kVerifyMismatch;
        }
        std::optional<net::UdpSocket> socket;
        std::optional<net::Endpoint> glove;
        if (to_pipeline)
        {
                socket.emplace();
                glove = net::Endpoint::resolve(config.pipeline_host, static_cast<std::uint16_t>(config.glove_port));
        }
        session::replay(log.records, speed, [&](const session::SessionRecord& r) {
                if (g_interrupted)
                {
                        return;
                }
                if (socket)
                {
                        if (r.stream == session::Stream::Glove)
                        {
                                socket->send_to(*glove, r.payload);
                        }
                        return;
                }
                std::printf("%s\n", session::format_record(r).c_str());
        });
        return kClean;
}

int run_export(const Config& config, const std::string& path, const std::optional<std::string>& out_path,
               const std::optional<std::string>& orientation_path)
{
        const auto log = session::read_log(path);
        std::FILE* out = stdout;
        if (out_path)
        {
                out = std::fopen(out_path->c_str(), "w");
                if (!out)
                {
                        std::fprintf(stderr, "cannot write %s\n", out_path->c_str());
                        return kRuntimeError;
                }
        }
        session::export_csv(log.records, out);
        if (out != stdout)
        {
                std::fclose(out);
        }
        if (!orientation_path)
        {
                return kClean;
        }
        const auto sessions = batch::split_sessions(log.records, {config.fingers, config.rate_hz});
        const auto tracks = batch::estimate_parallel(sessions, chain_params(config));
        std::FILE* o = std::fopen(orientation_path->c_str(), "w");
        if (!o)
        {
                std::fprintf(stderr, "cannot write %s\n", orientation_path->c_str());
                return kRuntimeError;
        }
        std::fprintf(o, "session,t,roll,pitch,yaw");
        for (int i = 0; i < wire::kMaxFingers; ++i)
        {
                std::fprintf(o, ",f%d_roll,f%d_pitch", i, i);
        }
        std::fprintf(o, "\n");
        for (std::size_t s = 0; s < tracks.size(); ++s)
        {
                const auto& t = tracks[s];
                for (std::size_t k = 0; k < t.t_device.size(); ++k)
                {
                        std::fprintf(o, "%zu,%llu,%.9g,%.9g,%.9g", s, static_cast<unsigned long long>(t.t_device[k]),
                                     t.wrist[k].roll, t.wrist[k].pitch, t.wrist[k].yaw);
                        for (std::size_t i = 0; i < static_cast<std::size_t>(wire::kMaxFingers); ++i)
                        {
                                if (i < t.finger_pitch.size())
                                {
                                        std::fprintf(o, ",%.9g,%.9g", t.finger_roll[i][k], t.finger_pitch[i][k]);
                                }
                                else
                                {
                                        std::fprintf(o, ",,");
                                }
                        }
                        std::fprintf(o, "\n");
                }
        }
        std::fclose(o);
        return kClean;
}
}

int main(int argc, char** argv)
{
        CLI::App app{"Glove-to-UAV teleoperation pipeline, simulator and glove emulator"};
        app.require_subcommand(0, 1);
        app.fallthrough();

        std::optional<std::string> config_path;
        bool dump_config = false;
        app.add_option("-c,--config", config_path, "Configuration file (key = value lines)");
        app.add_flag("--dump-config", dump_config, "Print the effective configuration and exit");
        std::map<std::string, std::string> overrides;
        const Config defaults;
        for (const std::string& key : defaults.keys())
        {
                app.add_option_function<std::string>(
                           flag_name(key), [&overrides, key](const std::string& v) { overrides[key] = v; },
                           "Override config key " + key)
                        ->group("Config overrides");
        }

        auto* pipeline = app.add_subcommand("pipeline", "Run the live glove-to-command pipeline");
        std::optional<std::string> record_path;
        bool no_console = false;
        double duration = 0;
        pipeline->add_option("--record", record_path, "Also write a session log");
        pipeline->add_flag("--no-console", no_console, "Do not serve the operator console socket");
        pipeline->add_option("--duration", duration, "Stop after this many seconds (0 = until interrupted)");

        auto* record = app.add_subcommand("record", "Run the pipeline and record the session");
        std::string record_out;
        record->add_option("out", record_out, "Session log path")->required();
        record->add_flag("--no-console", no_console, "Do not serve the operator console socket");
        record->add_option("--duration", duration, "Stop after this many seconds (0 = until interrupted)");

        auto* sim_cmd = app.add_subcommand("sim", "Run the UAV simulator");
        std::optional<std::string> state_out;
        sim_cmd->add_option("--duration", duration, "Stop after this many seconds (0 = until interrupted)");
        sim_cmd->add_option("--state-out", state_out, "Write the final state to this file");

        auto* emulate = app.add_subcommand("emulate", "Run the glove emulator");
        std::optional<std::string> script_path;
        emulate->add_option("--script", script_path, "Keyframe script; interactive keyboard mode when omitted");

        auto* replay_cmd = app.add_subcommand("replay", "Replay a recorded session");
        std::string log_path;
        double speed = 1.0;
        bool verify = false;
        bool to_pipeline = false;
        replay_cmd->add_option("log", log_path, "Session log")->required();
        replay_cmd->add_option("--speed", speed, "Playback speed multiplier; inf = batch")
                ->check(CLI::Validator(
                        [](const std::string& text) {
                                double v = 0;
                                return CLI::detail::lexical_cast(text, v) && v > 0 ? std::string() : "must be > 0 or inf";
                        },
                        "POSITIVE"));
        replay_cmd->add_flag("--verify", verify,
                             "Re-run the pipeline in batch mode and compare commands and events with the log");
        replay_cmd->add_flag("--to-pipeline", to_pipeline, "Send glove records to the pipeline's glove port");

        auto* export_cmd = app.add_subcommand("export-csv", "Export a session log as flat CSV");
        std::optional<std::string> csv_out;
        std::optional<std::string> orientation_out;
        export_cmd->add_option("log", log_path, "Session log")->required();
        export_cmd->add_option("-o,--out", csv_out, "CSV path (stdout when omitted)");
        export_cmd->add_option("--orientation", orientation_out,
                               "Also write offline orientation estimates for every glove IMU");

        try
        {
                app.parse(argc, argv);
        }
        catch (const CLI::ParseError& e)
        {
                return app.exit(e) == 0 ? kClean : kConfigError;
        }

        Config config;
        try
        {
                if (config_path)
                {
                        config = load_config(*config_path);
                }
                for (const auto& [key, value] : overrides)
                {
                        config.set(key, value);
                }
                config.validate();
                config.haptic_thresholds().validate();
        }
        catch (const std::exception& e)
        {
                std::fprintf(stderr, "config error: %s\n", e.what());
                return kConfigError;
        }
        if (dump_config)
        {
                std::printf("%s", config.to_text().c_str());
                return kClean;
        }
        if (app.get_subcommands().empty())
        {
                std::fprintf(stderr, "%s", app.help().c_str());
                return kConfigError;
        }

        std::signal(SIGINT, on_signal);
        std::signal(SIGTERM, on_signal);
        try
        {
                if (*pipeline)
                {
                        return run_pipeline(config, record_path, !no_console, duration);
                }
                if (*record)
                {
                        return run_pipeline(config, record_out, !no_console, duration);
                }
                if (*sim_cmd)
                {
                        return run_sim(config, duration, state_out);
                }
                if (*emulate)
                {
                        return script_path ? run_emulator_script(config, *script_path) : run_emulator_interactive(config);
                }
                if (*replay_cmd)
                {
                        return run_replay(config, log_path, speed, verify, to_pipeline);
                }
                if (*export_cmd)
                {
                        return run_export(config, log_path, csv_out, orientation_out);
                }
        }
        catch (const emulator::ScriptParseError& e)
        {
                std::fprintf(stderr, "script error: %s\n", e.what());
                return kConfigError;
        }
        catch (const std::exception& e)
        {
                std::fprintf(stderr, "error: %s\n", e.what());
                return kRuntimeError;
        }
        return kClean;
}
