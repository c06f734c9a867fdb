#pragma once

#include "handfly/channel.hpp"
#include "handfly/config.hpp"
#include "handfly/emulator.hpp"
#include "handfly/haptic.hpp"
#include "handfly/pipeline.hpp"
#include "handfly/uav_sim.hpp"
#include "handfly/wire.hpp"

#include <atomic>
#include <chrono>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace handfly
{
using SteadyTime = std::chrono::steady_clock::time_point;

class ConsoleServer;

namespace net
{
class UdpSocket;
}

/// Hooks for tests and tools; called on the node's worker threads.
struct PipelineObserver
{
        std::function<void(SteadyTime, const wire::GlovePacket&, const StepOutput&, const FrameState&)> on_step;
        std::function<void(SteadyTime, const sim::TelemetryPacket&)> on_telemetry;
        std::function<void(SteadyTime, const haptic::HapticEvent&)> on_haptic;
};

/// The live pipeline: glove ingestion, the processing core, command output with a stream-loss
/// watchdog, the telemetry listener with the haptic monitor, and the console bridge.
class PipelineNode
{
public:
        struct Options
        {
                std::optional<std::filesystem::path> record; // session log
                bool console = true;
                PipelineObserver observer;
        };

        PipelineNode(Config config, Options options);
        ~PipelineNode();
        PipelineNode(const PipelineNode&) = delete;
        PipelineNode& operator=(const PipelineNode&) = delete;

        void stop();

        /// Thread-safe; applied at the next packet boundary.
        void request(Control c);

        /// Handles a console text message (controls and emulator pose updates).
        void handle_console_message(const std::string& text);

        [[nodiscard]] std::uint16_t glove_port() const { return glove_port_; }
        [[nodiscard]] std::uint16_t telemetry_port() const { return telemetry_port_; }
        [[nodiscard]] std::uint16_t console_port() const;
        [[nodiscard]] wire::IngestReport report() const;
        [[nodiscard]] std::uint64_t watchdog_trips() const { return watchdog_trips_; }
        [[nodiscard]] std::uint64_t channel_overflow() const { return channel_.overflow(); }
        /// Set when the loop stopped on a fatal error (finger count mismatch).
        [[nodiscard]] std::optional<std::string> fatal_error() const;

private:
        struct Item
        {
                std::optional<wire::SessionHeader> header;
                std::optional<wire::GlovePacket> packet;
                SteadyTime received;
        };

        void ingest_loop();
        void process_loop();
        void telemetry_loop();
        void fail(const std::string& what);

        Config config_;
        Options options_;
        std::unique_ptr<session::SessionLog> log_;
        std::unique_ptr<net::UdpSocket> glove_socket_;
        std::unique_ptr<net::UdpSocket> telemetry_socket_;
        std::unique_ptr<net::UdpSocket> out_socket_;
        std::unique_ptr<ConsoleServer> console_;
        std::uint16_t glove_port_ = 0;
        std::uint16_t telemetry_port_ = 0;
        BoundedChannel<Item> channel_;
        mutable std::mutex report_mutex_;
        wire::IngestReport report_;
        std::mutex control_mutex_;
        std::vector<Control> controls_;
        std::atomic<bool> running_{true};
        std::atomic<std::uint64_t> watchdog_trips_{0};
        mutable std::mutex error_mutex_;
        std::optional<std::string> fatal_;
        std::vector<std::thread> threads_;
};

/// Fixed-rate simulator loop with a UDP command mailbox and a telemetry publisher.
class SimNode
{
public:
        using StateObserver = std::function<void(SteadyTime, const sim::UavState&)>;

        SimNode(Config config, StateObserver observer = {});
        ~SimNode();
        SimNode(const SimNode&) = delete;
        SimNode& operator=(const SimNode&) = delete;

        void stop();

        [[nodiscard]] std::uint16_t command_port() const { return command_port_; }
        [[nodiscard]] sim::UavState state() const;
        /// Closest approach to each configured waypoint so far.
        [[nodiscard]] std::vector<double> waypoint_distances() const;
        [[nodiscard]] std::uint64_t commands_received() const { return commands_; }

private:
        void receive_loop();
        void step_loop();

        Config config_;
        sim::SimParams params_;
        StateObserver observer_;
        std::unique_ptr<net::UdpSocket> command_socket_;
        std::unique_ptr<net::UdpSocket> telemetry_socket_;
        std::uint16_t command_port_ = 0;
        Mailbox<command::ControlCommand> mailbox_;
        mutable std::mutex state_mutex_;
        sim::UavState state_;
        std::vector<Vec3> waypoints_;
        std::vector<double> closest_;
        std::atomic<bool> running_{true};
        std::atomic<std::uint64_t> commands_{0};
        std::vector<std::thread> threads_;
};

/// Glove emulator: plays a script, or follows interactive pose targets, and transmits packets
/// on the glove port at the configured rate.
class EmulatorNode
{
public:
        using SendObserver = std::function<void(SteadyTime, const wire::GlovePacket&, const emulator::Pose&)>;

        EmulatorNode(Config config, SendObserver observer = {});
        ~EmulatorNode();

        /// Plays the whole script; blocks. Returns false if stopped early.
        bool play(const emulator::Script& script);

        /// Streams the current interactive target until stop(); blocks. Pose updates arrive via
        /// set_target or as `{"emu":{"wrist":[r,p,y],"fingers":[...]}}` (degrees) on the emulator port.
        void run_interactive();

        void set_target(const emulator::Pose& pose);
        [[nodiscard]] emulator::Pose target() const;
        void stop() { running_ = false; }

        [[nodiscard]] std::uint64_t sent() const { return sent_; }

private:
        void send_header(const wire::SessionHeader& h);

        Config config_;
        SendObserver observer_;
        std::unique_ptr<net::UdpSocket> socket_;
        std::atomic<bool> running_{true};
        std::atomic<std::uint64_t> sent_{0};
        mutable std::mutex target_mutex_;
        emulator::Pose target_;
};

/// `{"emu":{"wrist":[r,p,y],"fingers":[...]}}` in degrees.
std::optional<emulator::Pose> parse_emulator_message(std::string_view text, int fingers);
}
