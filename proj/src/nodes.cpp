#include "handfly/nodes.hpp"

#include "handfly/console_server.hpp"
#include "handfly/net.hpp"
#include "handfly/session_log.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>

namespace handfly
{
namespace
{
using namespace std::chrono_literals;
using Clock = std::chrono::steady_clock;

std::uint16_t port_of(int p)
{
        return static_cast<std::uint16_t>(p);
}

Clock::duration seconds(double s)
{
        return std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(s));
}
}

std::optional<emulator::Pose> parse_emulator_message(std::string_view text, int fingers)
{
        const auto j = nlohmann::json::parse(text.begin(), text.end(), nullptr, false);
        if (!j.is_object() || !j.contains("emu") || !j["emu"].is_object())
        {
                return std::nullopt;
        }
        const auto& e = j["emu"];
        if (!e.contains("wrist") || !e.contains("fingers") || !e["wrist"].is_array() || e["wrist"].size() != 3
            || !e["fingers"].is_array() || static_cast<int>(e["fingers"].size()) != fingers)
        {
                return std::nullopt;
        }
        const auto angle = [](const nlohmann::json& v) -> std::optional<double> {
                if (!v.is_number())
                {
                        return std::nullopt;
                }
                const double d = v.get<double>();
                if (!std::isfinite(d))
                {
                        return std::nullopt;
                }
                return deg2rad(d);
        };
        emulator::Pose pose;
        const auto r = angle(e["wrist"][0]);
        const auto p = angle(e["wrist"][1]);
        const auto y = angle(e["wrist"][2]);
        if (!r || !p || !y)
        {
                return std::nullopt;
        }
        pose.wrist = {*r, *p, *y};
        for (const auto& f : e["fingers"])
        {
                const auto a = angle(f);
                if (!a)
                {
                        return std::nullopt;
                }
                pose.fingers.push_back(*a);
        }
        return pose;
}

// ---------------------------------------------------------------------------------------------
// PipelineNode

PipelineNode::PipelineNode(Config config, Options options)
        : config_(std::move(config)), options_(std::move(options)),
          channel_(static_cast<std::size_t>(config_.channel_capacity))
{
        config_.validate();
        if (options_.record)
        {
                log_ = std::make_unique<session::SessionLog>(*options_.record);
        }
        glove_socket_ = std::make_unique<net::UdpSocket>(
                net::UdpSocket::bind(config_.listen_host, port_of(config_.glove_port)));
        telemetry_socket_ = std::make_unique<net::UdpSocket>(
                net::UdpSocket::bind(config_.listen_host, port_of(config_.telemetry_port)));
        out_socket_ = std::make_unique<net::UdpSocket>();
        glove_port_ = glove_socket_->local_port();
        telemetry_port_ = telemetry_socket_->local_port();
        if (options_.console)
        {
                console_ = std::make_unique<ConsoleServer>(config_.console_host, port_of(config_.http_port),
                                                           [this](const std::string& m) { handle_console_message(m); });
        }
        threads_.emplace_back([this] { ingest_loop(); });
        threads_.emplace_back([this] { process_loop(); });
        threads_.emplace_back([this] { telemetry_loop(); });
}

PipelineNode::~PipelineNode()
{
        stop();
}

void PipelineNode::stop()
{
        running_ = false;
        channel_.close();
        for (auto& t : threads_)
        {
                if (t.joinable())
                {
                        t.join();
                }
        }
        threads_.clear();
        console_.reset();
}

void PipelineNode::request(Control c)
{
        std::lock_guard lock(control_mutex_);
        controls_.push_back(c);
}

void PipelineNode::handle_console_message(const std::string& text)
{
        if (const auto c = parse_control_message(text))
        {
                request(*c);
                return;
        }
        if (parse_emulator_message(text, config_.fingers))
        {
                out_socket_->send_to(net::Endpoint::resolve(config_.emulator_host, port_of(config_.emulator_port)),
                                     text);
        }
}

std::uint16_t PipelineNode::console_port() const
{
        return console_ ? console_->port() : 0;
}

wire::IngestReport PipelineNode::report() const
{
        std::lock_guard lock(report_mutex_);
        return report_;
}

std::optional<std::string> PipelineNode::fatal_error() const
{
        std::lock_guard lock(error_mutex_);
        return fatal_;
}

void PipelineNode::fail(const std::string& what)
{
        {
                std::lock_guard lock(error_mutex_);
                fatal_ = what;
        }
        running_ = false;
        channel_.close();
}

void PipelineNode::ingest_loop()
{
        wire::Ingestor ingestor({config_.fingers, config_.rate_hz});
        while (running_)
        {
                const auto rx = glove_socket_->receive(50ms);
                if (!rx)
                {
                        continue;
                }
                const auto received = Clock::now();
                wire::Ingestor::Outcome outcome;
                try
                {
                        outcome = ingestor.push(rx->data, session::wall_clock_ns());
                }
                catch (const wire::FingerCountMismatch& e)
                {
                        fail(e.what());
                        return;
                }
                {
                        std::lock_guard lock(report_mutex_);
                        report_ = ingestor.state().report;
                }
                if (outcome.canonical && log_)
                {
                        log_->append_now(session::Stream::Glove, std::move(*outcome.canonical));
                }
                if (outcome.header || outcome.accepted)
                {
                        channel_.push({outcome.header, std::move(outcome.accepted), received});
                }
        }
}

void PipelineNode::process_loop()
{
        PipelineCore core(config_);
        const auto uav = net::Endpoint::resolve(config_.uav_host, port_of(config_.uav_port));
        const auto watchdog = seconds(config_.watchdog_s);
        const auto frame_period = 40ms;
        auto last_packet = Clock::now();
        auto last_frame = Clock::time_point{};
        auto last_hover = Clock::time_point{};
        bool streaming = false;
        bool lost = false;

        while (running_)
        {
                auto item = channel_.pop(20ms);
                const auto now = Clock::now();
                if (!item)
                {
                        if (streaming && now - last_packet >= watchdog)
                        {
                                if (!lost)
                                {
                                        lost = true;
                                        ++watchdog_trips_;
                                }
                                // Hover is repeated while the stream stays down since UDP may drop it.
                                if (now - last_hover >= watchdog)
                                {
                                        out_socket_->send_to(uav, command::serialize_command(command::hover(core.last_command())));
                                        last_hover = now;
                                }
                        }
                        continue;
                }
                if (item->header)
                {
                        core.begin_session(*item->header);
                }
                if (!item->packet)
                {
                        continue;
                }
                {
                        std::lock_guard lock(control_mutex_);
                        for (const Control c : controls_)
                        {
                                core.request(c);
                        }
                        controls_.clear();
                }
                const StepOutput step = core.process(*item->packet);
                streaming = true;
                lost = false;
                last_packet = now;

                const std::string cmd_text = command::serialize_command(step.command);
                out_socket_->send_to(uav, cmd_text);
                if (log_)
                {
                        for (const auto& c : step.controls)
                        {
                                log_->append_now(session::Stream::Event, serialize_control(c.control, c.seq));
                        }
                        for (const auto& e : step.events)
                        {
                                log_->append_now(session::Stream::Event, gesture::serialize_event(e));
                        }
                        log_->append_now(session::Stream::Command, cmd_text);
                }
                if (options_.observer.on_step)
                {
                        options_.observer.on_step(item->received, *item->packet, step, core.frame());
                }
                if (console_)
                {
                        for (const auto& e : step.events)
                        {
                                console_->broadcast(gesture::serialize_event(e));
                        }
                        if (now - last_frame >= frame_period)
                        {
                                console_->broadcast(serialize_frame(core.frame(), report()));
                                console_->broadcast(cmd_text);
                                last_frame = now;
                        }
                }
        }
}

void PipelineNode::telemetry_loop()
{
        haptic::HapticMonitor monitor(config_.haptic_thresholds());
        const auto glove = net::Endpoint::resolve(config_.glove_host, port_of(config_.vib_port));
        while (running_)
        {
                const auto rx = telemetry_socket_->receive(50ms);
                if (!rx)
                {
                        continue;
                }
                const auto received = Clock::now();
                const auto tel = sim::parse_telemetry(rx->data);
                if (!tel)
                {
                        continue;
                }
                if (log_)
                {
                        log_->append_now(session::Stream::Telemetry, rx->data);
                }
                if (console_)
                {
                        console_->broadcast(rx->data);
                }
                if (options_.observer.on_telemetry)
                {
                        options_.observer.on_telemetry(received, *tel);
                }
                for (const auto& e : monitor.step(*tel))
                {
                        out_socket_->send_to(glove, haptic::serialize_actuator(e));
                        const std::string text = haptic::serialize_event(e);
                        if (log_)
                        {
                                log_->append_now(session::Stream::Event, text);
                        }
                        if (console_)
                        {
                                console_->broadcast(text);
                        }
                        if (options_.observer.on_haptic)
                        {
                                options_.observer.on_haptic(Clock::now(), e);
                        }
                }
        }
}

// ---------------------------------------------------------------------------------------------
// SimNode

SimNode::SimNode(Config config, StateObserver observer)
        : config_(std::move(config)), params_(config_.sim_params()), observer_(std::move(observer))
{
        config_.validate();
        command_socket_ = std::make_unique<net::UdpSocket>(
                net::UdpSocket::bind(config_.listen_host, port_of(config_.uav_port)));
        telemetry_socket_ = std::make_unique<net::UdpSocket>();
        command_port_ = command_socket_->local_port();
        state_.position = {config_.spawn_x, config_.spawn_y, config_.spawn_z};
        waypoints_ = config_.waypoint_list();
        closest_.assign(waypoints_.size(), std::numeric_limits<double>::infinity());
        threads_.emplace_back([this] { receive_loop(); });
        threads_.emplace_back([this] { step_loop(); });
}

SimNode::~SimNode()
{
        stop();
}

void SimNode::stop()
{
        running_ = false;
        for (auto& t : threads_)
        {
                if (t.joinable())
                {
                        t.join();
                }
        }
        threads_.clear();
}

sim::UavState SimNode::state() const
{
        std::lock_guard lock(state_mutex_);
        return state_;
}

std::vector<double> SimNode::waypoint_distances() const
{
        std::lock_guard lock(state_mutex_);
        return closest_;
}

void SimNode::receive_loop()
{
        while (running_)
        {
                const auto rx = command_socket_->receive(50ms);
                if (!rx)
                {
                        continue;
                }
                if (auto cmd = command::parse_command(rx->data))
                {
                        mailbox_.put(*cmd);
                        ++commands_;
                }
        }
}

void SimNode::step_loop()
{
        const double dt = config_.sim_dt;
        const auto period = seconds(dt / config_.time_scale);
        const auto every = std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::lround(1.0 / (config_.telemetry_hz * dt))));
        const auto telemetry = net::Endpoint::resolve(config_.telemetry_host, port_of(config_.telemetry_port));
        command::ControlCommand idle;
        idle.altitude_target = config_.spawn_z;
        std::uint64_t seq = 0;
        auto next = Clock::now();
        while (running_)
        {
                const auto cmd = mailbox_.latest().value_or(idle);
                sim::UavState s;
                {
                        std::lock_guard lock(state_mutex_);
                        state_ = sim::sim_step(state_, cmd, dt, params_);
                        for (std::size_t i = 0; i < waypoints_.size(); ++i)
                        {
                                closest_[i] = std::min(closest_[i], norm(state_.position - waypoints_[i]));
                        }
                        s = state_;
                }
                if (s.steps % every == 0)
                {
                        telemetry_socket_->send_to(telemetry, sim::serialize_telemetry(sim::emit_telemetry(s, seq++)));
                }
                if (observer_)
                {
                        observer_(Clock::now(), s);
                }
                next += period;
                std::this_thread::sleep_until(next);
        }
}

// ---------------------------------------------------------------------------------------------
// EmulatorNode

EmulatorNode::EmulatorNode(Config config, SendObserver observer)
        : config_(std::move(config)), observer_(std::move(observer)), socket_(std::make_unique<net::UdpSocket>())
{
        config_.validate();
        target_.fingers.assign(static_cast<std::size_t>(config_.fingers), 0.0);
}

EmulatorNode::~EmulatorNode() = default;

void EmulatorNode::send_header(const wire::SessionHeader& h)
{
        socket_->send_to(net::Endpoint::resolve(config_.pipeline_host, port_of(config_.glove_port)),
                         wire::serialize_header(h));
}

bool EmulatorNode::play(const emulator::Script& script)
{
        const emulator::Noise noise{config_.emu_gyro_sigma, config_.emu_accel_sigma,
                                    static_cast<std::uint64_t>(config_.emu_seed)};
        emulator::GloveSynth synth(script.fingers, script.rate_hz, noise);
        const auto to = net::Endpoint::resolve(config_.pipeline_host, port_of(config_.glove_port));
        send_header(synth.header());
        const auto count = static_cast<std::uint32_t>(script.duration() * script.rate_hz) + 1;
        const auto start = Clock::now();
        for (std::uint32_t k = 0; k < count; ++k)
        {
                if (!running_)
                {
                        return false;
                }
                std::this_thread::sleep_until(start + seconds(synth.time_of(k) / config_.time_scale));
                const auto pose = script.at(synth.time_of(k));
                const auto p = synth.next(pose);
                socket_->send_to(to, wire::serialize_packet(p));
                ++sent_;
                if (observer_)
                {
                        observer_(Clock::now(), p, pose);
                }
        }
        return true;
}

void EmulatorNode::set_target(const emulator::Pose& pose)
{
        std::lock_guard lock(target_mutex_);
        target_ = pose;
        target_.fingers.resize(static_cast<std::size_t>(config_.fingers), 0.0);
}

emulator::Pose EmulatorNode::target() const
{
        std::lock_guard lock(target_mutex_);
        return target_;
}

void EmulatorNode::run_interactive()
{
        constexpr double kSlew = deg2rad(180.0); // rad/s, keeps synthesized rates bounded
        const emulator::Noise noise{config_.emu_gyro_sigma, config_.emu_accel_sigma,
                                    static_cast<std::uint64_t>(config_.emu_seed)};
        emulator::GloveSynth synth(config_.fingers, config_.rate_hz, noise);
        const auto listener = net::UdpSocket::bind(config_.listen_host, port_of(config_.emulator_port));
        const auto to = net::Endpoint::resolve(config_.pipeline_host, port_of(config_.glove_port));
        send_header(synth.header());
        const double dt = 1.0 / config_.rate_hz;
        const double max_step = kSlew * dt;
        const auto slew = [max_step](double cur, double goal) {
                return cur + std::clamp(goal - cur, -max_step, max_step);
        };
        emulator::Pose current = target();
        const auto start = Clock::now();
        while (running_)
        {
                while (const auto rx = listener.receive(0ms))
                {
                        if (const auto pose = parse_emulator_message(rx->data, config_.fingers))
                        {
                                set_target(*pose);
                        }
                }
                const emulator::Pose goal = target();
                current.wrist = {slew(current.wrist.roll, goal.wrist.roll), slew(current.wrist.pitch, goal.wrist.pitch),
                                 slew(current.wrist.yaw, goal.wrist.yaw)};
                for (std::size_t i = 0; i < current.fingers.size(); ++i)
                {
                        current.fingers[i] = slew(current.fingers[i], goal.fingers[i]);
                }
                std::this_thread::sleep_until(start + seconds(synth.time_of(synth.samples()) / config_.time_scale));
                const auto p = synth.next(current);
                socket_->send_to(to, wire::serialize_packet(p));
                ++sent_;
                if (observer_)
                {
                        observer_(Clock::now(), p, current);
                }
        }
}
}
