#include "handfly/config.hpp"
#include "handfly/emulator.hpp"
#include "handfly/filters.hpp"
#include "handfly/haptic.hpp"
#include "handfly/net.hpp"
#include "handfly/nodes.hpp"
#include "handfly/pipeline.hpp"
#include "handfly/session_log.hpp"
#include "handfly/uav_sim.hpp"
#include "handfly/wire.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <deque>
#include <filesystem>
#include <functional>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

using namespace handfly;
using namespace std::chrono_literals;
using emulator::Script;
using Clock = std::chrono::steady_clock;

namespace
{
struct Outcome
{
        bool pass = false;
        std::string detail;
};

std::string fmt(const char* f, auto... args)
{
        char buf[512];
        std::snprintf(buf, sizeof buf, f, args...);
        return buf;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::uint16_t free_udp_port() { return net::UdpSocket::bind("127.0.0.1", 0).local_port(); }

Config loopback_config()
{
        Config c;
        c.listen_host = "127.0.0.1";
        c.glove_port = free_udp_port();
        c.telemetry_port = free_udp_port();
        c.uav_port = free_udp_port();
        c.vib_port = free_udp_port();
        c.emulator_port = free_udp_port();
        c.http_port = 0;
        return c;
}

emulator::Noise noise_of(const Config& c)
{
        return {c.emu_gyro_sigma, c.emu_accel_sigma, static_cast<std::uint64_t>(c.emu_seed)};
}

constexpr std::uint32_t kResetSeq = 200; // operator reset 2 s in, after calibration and warm-up

// ---------------------------------------------------------------------------------------------
// 1. Median

Outcome median_oracle()
{
        const auto t0 = Clock::now();
        std::mt19937_64 rng(1);
        std::uniform_real_distribution<double> u(-1e3, 1e3);
        std::uniform_int_distribution<int> small(-4, 4);
        std::uint64_t checked = 0;
        for (int n : {1, 2, 4})
        {
                filters::MedianWindow w(n);
                std::deque<double> window;
                const std::size_t size = 2 * static_cast<std::size_t>(n) + 1;
                for (int k = 0; k < 100000; ++k)
                {
                        const double x = k % 4 == 0 ? small(rng) : u(rng);
                        window.push_back(x);
                        if (window.size() > size)
                        {
                                window.pop_front();
                        }
                        double expected = x;
                        if (window.size() == size)
                        {
                                std::vector<double> v(window.begin(), window.end());
                                std::sort(v.begin(), v.end());
                                expected = v[size / 2];
                        }
                        if (w.push(x) != expected)
                        {
                                return {false, fmt("mismatch n=%d k=%d", n, k)};
                        }
                        ++checked;
                }
        }
        const double elapsed = seconds_since(t0);
        return {elapsed < 5.0, fmt("%llu samples exact, %.2f s (limit 5 s)", static_cast<unsigned long long>(checked), elapsed)};
}

// ---------------------------------------------------------------------------------------------
// 2. Complementary

Outcome complementary_convergence()
{
        const double tilt = deg2rad(10);
        const Vec3 a{0, kGravity * std::sin(tilt), kGravity * std::cos(tilt)};
        filters::ComplementaryState s;
        s.alpha = 0.98;
        double worst = 0;
        double ratio = 1;
        for (int k = 1; k <= 1000; ++k)
        {
                s = filters::complementary_update(s, {{0, 0, 0}, a}, 0.01);
                ratio *= 0.98;
                worst = std::max(worst, std::abs((tilt - s.roll) - ratio * tilt));
        }
        filters::ComplementaryState one;
        one.alpha = 1;
        one.roll = 0.3;
        one = filters::complementary_update(one, {{0.5, 0, 0}, a}, 0.01);
        filters::ComplementaryState zero;
        zero.alpha = 0;
        zero.roll = -1;
        zero = filters::complementary_update(zero, {{0.5, 0, 0}, a}, 0.01);
        const bool endpoints = one.roll == 0.3 + 0.5 * 0.01 && zero.roll == std::atan2(a[1], a[2]);
        return {worst < 1e-12 && endpoints,
                fmt("max |err_k - a^k err_0| = %.2e rad over k<=1000, endpoints %s", worst, endpoints ? "exact" : "WRONG")};
}

// ---------------------------------------------------------------------------------------------
// 3. Madgwick

double quat_gap(const Quaternion& a, const Quaternion& b)
{
        const double plus = std::sqrt((a.w - b.w) * (a.w - b.w) + (a.x - b.x) * (a.x - b.x) + (a.y - b.y) * (a.y - b.y)
                                      + (a.z - b.z) * (a.z - b.z));
        const double minus = std::sqrt((a.w + b.w) * (a.w + b.w) + (a.x + b.x) * (a.x + b.x) + (a.y + b.y) * (a.y + b.y)
                                       + (a.z + b.z) * (a.z + b.z));
        return std::min(plus, minus);
}

Outcome madgwick_properties()
{
        const filters::ImuReading rest{{0, 0, 0}, {0, 0, kGravity}};
        filters::QuaternionState s;
        double drift = 0;
        for (int i = 0; i < 10000; ++i)
        {
                s = filters::madgwick_update(s, rest, 0.01);
                drift = std::max(drift, quat_gap(s.q, Quaternion::identity()));
        }
        const bool a = drift < 1e-9;

        std::mt19937_64 rng(3);
        std::uniform_real_distribution<double> u(-1, 1);
        filters::QuaternionState g;
        g.beta = 0;
        double prop = 0;
        for (int i = 0; i < 10000; ++i)
        {
                Vec3 w{u(rng), u(rng), u(rng)};
                w = (0.5 / std::max(1.0, norm(w))) * w;
                const Quaternion expected = g.q * axis_angle(w, norm(w) * 0.01);
                g = filters::madgwick_update(g, {w, {u(rng) * 10, u(rng) * 10, u(rng) * 10}}, 0.01);
                prop = std::max(prop, quat_gap(g.q, expected));
                g.q = expected;
        }
        const bool b = prop < 1e-8;

        filters::QuaternionState t;
        t.q = axis_angle({1, 0, 0}, deg2rad(20));
        double prev = deg2rad(20);
        int converged = -1;
        bool monotone = true;
        const double band = 2 * t.beta * 0.01; // limit cycle of the fixed-size gradient step
        for (int i = 1; i <= 600; ++i)
        {
                t = filters::madgwick_update(t, rest, 0.01);
                const double err = std::abs(filters::quat_to_euler(t.q).roll);
                if (prev > band ? err > prev + 1e-12 : err > band + 1e-9)
                {
                        monotone = false;
                }
                prev = err;
                if (converged < 0 && rad2deg(err) < 2)
                {
                        converged = i;
                }
        }
        const bool c = converged > 0 && monotone;
        return {a && b && c, fmt("(a) identity drift %.1e (b) beta=0 gap %.1e (c) <2 deg at update %d, monotone %s",
                                 drift, prop, converged, monotone ? "yes" : "NO")};
}

// ---------------------------------------------------------------------------------------------
// 4. Wire

wire::GlovePacket random_packet(std::mt19937_64& rng)
{
        std::uniform_int_distribution<int> nf(wire::kMinFingers, wire::kMaxFingers);
        std::uniform_real_distribution<double> val(-50.0, 50.0);
        std::uniform_int_distribution<int> exp10(-12, 12);
        const auto component = [&] { return val(rng) * std::pow(10.0, exp10(rng) / 3); };
        const auto imu = [&] {
                return wire::ImuReading{{component(), component(), component()}, {component(), component(), component()}};
        };
        wire::GlovePacket p;
        p.seq = static_cast<std::uint32_t>(rng());
        p.t_device = rng() >> 1;
        p.palm = imu();
        const int f = nf(rng);
        for (int i = 0; i < f; ++i)
        {
                p.fingers.push_back(imu());
        }
        return p;
}

Outcome wire_properties()
{
        std::mt19937_64 rng(4);
        std::vector<std::string> corpus;
        for (int i = 0; i < 10000; ++i)
        {
                const auto p = random_packet(rng);
                const std::string text = wire::serialize_packet(p);
                const auto back = wire::parse_packet(text);
                if (!std::holds_alternative<wire::GlovePacket>(back) || !std::get<wire::GlovePacket>(back).same_wire(p)
                    || wire::serialize_packet(std::get<wire::GlovePacket>(back)) != text)
                {
                        return {false, "round trip failed: " + text};
                }
                if (i < 64)
                {
                        corpus.push_back(text);
                }
        }
        corpus.push_back(wire::serialize_header({3, 100}));

        std::uniform_int_distribution<int> byte(0, 255);
        std::uint64_t parsed = 0;
        std::uint64_t rejected = 0;
        for (int i = 0; i < 1000000; ++i)
        {
                std::string s = corpus[rng() % corpus.size()];
                switch (i % 4)
                {
                case 0: // byte flips
                        for (int e = 0; e < 1 + i % 7; ++e)
                        {
                                s[rng() % s.size()] = static_cast<char>(byte(rng));
                        }
                        break;
                case 1: // truncation
                        s.resize(rng() % s.size());
                        break;
                case 2: // splice of two packets
                {
                        const std::string& o = corpus[rng() % corpus.size()];
                        s = s.substr(0, rng() % s.size()) + o.substr(rng() % o.size());
                        break;
                }
                default: // random bytes
                        s.resize(rng() % 96);
                        for (auto& ch : s)
                        {
                                ch = static_cast<char>(byte(rng));
                        }
                }
                const auto r = wire::parse_datagram(s);
                std::holds_alternative<wire::ParseError>(r) ? ++rejected : ++parsed;
        }
        return {true, fmt("10000 round trips identical; 1000000 fuzz inputs survived (%llu rejected, %llu parsed)",
                          static_cast<unsigned long long>(rejected), static_cast<unsigned long long>(parsed))};
}

// ---------------------------------------------------------------------------------------------
// Offline chain model: the deterministic core driving the plant once per packet.

struct ModelRun
{
        std::vector<StepOutput> steps;
        std::vector<bool> locked;
        sim::UavState final;
};

ModelRun run_model(const Script& s, const Config& c)
{
        PipelineCore core(c);
        const auto params = c.sim_params();
        ModelRun r;
        r.final.position = {c.spawn_x, c.spawn_y, c.spawn_z};
        for (const auto& p : emulator::synthesize(s, noise_of(c)))
        {
                if (p.seq == kResetSeq)
                {
                        core.request(Control::ResetPose);
                }
                r.steps.push_back(core.process(p));
                r.locked.push_back(core.frame().lock.locked);
                r.final = sim::sim_step(r.final, r.steps.back().command, 1.0 / s.rate_hz, params);
        }
        return r;
}

// ---------------------------------------------------------------------------------------------
// 5. Gesture / lock soundness on a 60 s trace

namespace blocks
{
const std::vector<double> kOpen{0, 0};
const std::vector<double> kFist{-70, -70};
const std::vector<double> kFlexAlt{0, -70};
const std::vector<double> kFlexPrimary{-70, 0};

void grip(Script& s) // GripClose + GripOpen
{
        s.then(0.2, {}, kFist).hold(0.8).then(0.2, {}, kOpen).hold(0.8);
}
void locked_grip(Script& s) // none: fist made and released under a backward tilt
{
        s.then(0.4, {0, 15, 0}, kOpen).hold(0.4).then(0.2, {0, 15, 0}, kFist).hold(0.5);
        s.then(0.2, {0, 15, 0}, kOpen).hold(0.4).then(0.4, {}, kOpen).hold(1.0);
}
void alt_up(Script& s) // AltitudeStepUp
{
        s.then(0.1, {}, kFlexAlt).hold(0.1).then(0.1, {}, kOpen).hold(0.9);
}
void alt_down(Script& s) // AltitudeStepDown (yaw modifier)
{
        s.then(0.4, {0, 0, -25}, kOpen).hold(0.3);
        s.then(0.1, {0, 0, -25}, kFlexAlt).hold(0.1).then(0.1, {0, 0, -25}, kOpen).hold(0.3);
        s.then(0.4, {}, kOpen).hold(1.0);
}
void locked_flex(Script& s) // none: quick flex under roll
{
        s.then(0.4, {20, 0, 0}, kOpen).hold(0.3);
        s.then(0.1, {20, 0, 0}, kFlexAlt).hold(0.1).then(0.1, {20, 0, 0}, kOpen).hold(0.3);
        s.then(0.4, {}, kOpen).hold(1.0);
}
void closed_through_unlock(Script& s) // none: fist made while locked is not replayed after unlock
{
        s.then(0.4, {20, 0, 0}, kOpen).hold(0.3).then(0.2, {20, 0, 0}, kFist).hold(0.3);
        s.then(0.4, {}, kFist).hold(1.0).then(0.2, {}, kOpen).hold(1.0);
}
void single_finger(Script& s) // none: only the primary finger closes
{
        s.then(0.2, {}, kFlexPrimary).hold(0.8).then(0.2, {}, kOpen).hold(0.8);
}
void slow_flex(Script& s) // none: flex-release takes about 1 s
{
        s.then(0.2, {}, kFlexAlt).hold(0.8).then(0.2, {}, kOpen).hold(0.8);
}
void pitch_forward(Script& s) // none
{
        s.then(0.4, {0, -20, 0}, kOpen).hold(1.0).then(0.4, {}, kOpen).hold(1.0);
}
}

Script gesture_trace()
{
        using namespace blocks;
        Script s;
        s.then(0, {}, kOpen).hold(3.0);
        const std::vector<std::function<void(Script&)>> plan{
                grip,      locked_grip, alt_up,        alt_down,    locked_flex, closed_through_unlock, single_finger,
                slow_flex, pitch_forward, grip,        alt_up,      alt_up,      locked_grip,           alt_down,
                grip,      closed_through_unlock, locked_flex, grip, single_finger, pitch_forward};
        for (const auto& b : plan)
        {
                b(s);
        }
        s.hold(60.0 - s.duration());
        return s;
}

Outcome gesture_soundness()
{
        // Hand count over the plan above: grip x4, alt_up x3, alt_down x2, everything else silent.
        constexpr int kGripClose = 4;
        constexpr int kGripOpen = 4;
        constexpr int kUp = 3;
        constexpr int kDown = 2;

        const Script s = gesture_trace();
        const Config c;
        const ModelRun r = run_model(s, c);

        // Locked intervals from the script itself: roll or pitch beyond the deadzone now or
        // within the release time.
        const double dz = c.deadzone_deg;
        std::vector<bool> script_locked(r.steps.size());
        double last_deflected = -1e9;
        for (std::size_t k = 0; k < r.steps.size(); ++k)
        {
                const double t = static_cast<double>(k) / s.rate_hz;
                const auto pose = s.at(t);
                if (std::abs(rad2deg(pose.wrist.roll)) > dz || std::abs(rad2deg(pose.wrist.pitch)) > dz)
                {
                        last_deflected = t;
                }
                script_locked[k] = t - last_deflected <= c.lock_release_s;
        }

        int counts[4] = {0, 0, 0, 0};
        int in_script_lock = 0;
        int in_pipeline_lock = 0;
        for (std::size_t k = 0; k < r.steps.size(); ++k)
        {
                for (const auto& e : r.steps[k].events)
                {
                        counts[static_cast<int>(e.kind)]++;
                        in_script_lock += script_locked[k];
                        in_pipeline_lock += r.locked[k];
                }
        }
        const int gc = counts[static_cast<int>(gesture::GestureKind::GripClose)];
        const int go = counts[static_cast<int>(gesture::GestureKind::GripOpen)];
        const int up = counts[static_cast<int>(gesture::GestureKind::AltitudeStepUp)];
        const int down = counts[static_cast<int>(gesture::GestureKind::AltitudeStepDown)];
        const bool ok = in_script_lock == 0 && in_pipeline_lock == 0 && gc == kGripClose && go == kGripOpen
                        && up == kUp && down == kDown;
        return {ok, fmt("%.0f s trace: events in locked intervals %d/%d; close %d/%d open %d/%d up %d/%d down %d/%d",
                        s.duration(), in_script_lock, in_pipeline_lock, gc, kGripClose, go, kGripOpen, up, kUp, down,
                        kDown)};
}

// ---------------------------------------------------------------------------------------------
// Mission planning on the offline model

enum class Axis
{
        X,
        Y
};

constexpr double kDeflect = 35; // deg, past full scale so cruise speed is v_max

void leg(Script& s, Axis axis, bool positive, double hold, const std::vector<double>& fingers)
{
        Euler w{};
        if (axis == Axis::X)
        {
                w.pitch = positive ? -kDeflect : kDeflect; // forward is nose down
        }
        else
        {
                w.roll = positive ? -kDeflect : kDeflect; // +y is left, right roll flies -y
        }
        s.then(0.3, w, fingers).hold(hold).then(0.3, {}, fingers).hold(2.0);
}

/// Appends a leg whose hold time brings the modelled position to `target` along `axis`.
void plan_leg(Script& s, const Config& c, Axis axis, double target, const std::vector<double>& fingers = {0, 0})
{
        const std::size_t i = axis == Axis::X ? 0 : 1;
        const double start = run_model(s, c).final.position[i];
        const bool positive = target > start;
        const auto reach = [&](double hold) {
                Script trial = s;
                leg(trial, axis, positive, hold, fingers);
                return run_model(trial, c).final.position[i];
        };
        double h0 = 0.5;
        double h1 = 1.5;
        double p0 = reach(h0);
        double p1 = reach(h1);
        for (int it = 0; it < 3 && std::abs(p1 - target) > 1e-3; ++it)
        {
                const double h2 = std::max(0.0, h1 + (target - p1) * (h1 - h0) / (p1 - p0));
                h0 = h1;
                p0 = p1;
                h1 = h2;
                p1 = reach(h1);
        }
        leg(s, axis, positive, h1, fingers);
}

struct Series
{
        std::vector<double> t;
        std::vector<double> v;

        /// Zero-order hold sample at time x.
        [[nodiscard]] double at(double x) const
        {
                const auto it = std::upper_bound(t.begin(), t.end(), x);
                return it == t.begin() ? v.front() : v[static_cast<std::size_t>(it - t.begin()) - 1];
        }
};

/// Lag (s) of the peak normalized cross-correlation of b against a, and the peak value.
std::pair<double, double> xcorr_peak(const Series& a, const Series& b, double step, double max_lag)
{
        const double t0 = std::max(a.t.front(), b.t.front());
        const double t1 = std::min(a.t.back(), b.t.back());
        const auto n = static_cast<std::size_t>((t1 - t0) / step);
        std::vector<double> x(n);
        std::vector<double> y(n);
        for (std::size_t i = 0; i < n; ++i)
        {
                x[i] = a.at(t0 + static_cast<double>(i) * step);
                y[i] = b.at(t0 + static_cast<double>(i) * step);
        }
        const auto center = [](std::vector<double>& v) {
                double m = 0;
                for (double e : v)
                {
                        m += e;
                }
                m /= static_cast<double>(v.size());
                double ss = 0;
                for (double& e : v)
                {
                        e -= m;
                        ss += e * e;
                }
                return std::sqrt(ss);
        };
        const double nx = center(x);
        const double ny = center(y);
        const auto lags = static_cast<long>(max_lag / step);
        double best = -2;
        long best_lag = 0;
        for (long l = -lags; l <= lags; ++l)
        {
                double acc = 0;
                for (long i = std::max(0L, -l); i < static_cast<long>(n) && i + l < static_cast<long>(n); ++i)
                {
                        acc += x[static_cast<std::size_t>(i)] * y[static_cast<std::size_t>(i + l)];
                }
                const double r = acc / (nx * ny);
                if (r > best)
                {
                        best = r;
                        best_lag = l;
                }
        }
        return {static_cast<double>(best_lag) * step, best};
}

struct LiveRun
{
        Series glove_pitch; // -scripted pitch, deg (positive = forward)
        Series forward_velocity;
        std::vector<std::pair<double, sim::UavState>> states;
        std::vector<std::pair<double, emulator::Pose>> poses;
        std::vector<double> waypoint_distances;
        wire::IngestReport report;
        std::uint64_t sent = 0;
        double wall = 0;
};

LiveRun fly(const Script& s, const Config& c, const std::optional<std::filesystem::path>& record = std::nullopt,
            const std::function<void(PipelineNode&, std::uint32_t)>& on_sent = {})
{
        LiveRun run;
        std::mutex m;
        const auto t0 = Clock::now();
        const auto rel = [&](SteadyTime t) { return std::chrono::duration<double>(t - t0).count(); };
        PipelineNode pipeline(c, {record, false, {}});
        SimNode sim(c, [&](SteadyTime t, const sim::UavState& st) {
                std::lock_guard lock(m);
                run.states.emplace_back(rel(t), st);
                run.forward_velocity.t.push_back(rel(t));
                run.forward_velocity.v.push_back(st.velocity[0] * std::cos(st.yaw) + st.velocity[1] * std::sin(st.yaw));
        });
        EmulatorNode emu(c, [&](SteadyTime t, const wire::GlovePacket& p, const emulator::Pose& pose) {
                {
                        std::lock_guard lock(m);
                        run.poses.emplace_back(rel(t), pose);
                        run.glove_pitch.t.push_back(rel(t));
                        run.glove_pitch.v.push_back(-rad2deg(pose.wrist.pitch));
                }
                if (p.seq + 1 == kResetSeq)
                {
                        pipeline.request(Control::ResetPose); // lands on packet kResetSeq
                }
                if (on_sent)
                {
                        on_sent(pipeline, p.seq);
                }
        });
        emu.play(s);
        std::this_thread::sleep_for(300ms);
        pipeline.stop();
        sim.stop();
        run.waypoint_distances = sim.waypoint_distances();
        run.report = pipeline.report();
        run.sent = emu.sent();
        run.wall = seconds_since(t0);
        return run;
}

// ---------------------------------------------------------------------------------------------
// 6. Waypoint mission

Outcome waypoint_mission()
{
        Config c = loopback_config();
        const std::vector<Vec3> waypoints{{3, 0, 1}, {3, 3, 1.5}, {0, 3, 1.5}, {0, 0, 1.5}};
        const std::vector<Vec3> obstacles{{3, 1.5, 1.5}, {0, 1.5, 1.5}}; // pillars between waypoint pairs
        constexpr double kObstacleRadius = 0.5;
        c.waypoints = "3,0,1; 3,3,1.5; 0,3,1.5; 0,0,1.5";

        Script s;
        s.then(0, {}, {}).hold(3.0);
        plan_leg(s, c, Axis::X, 3); // W1
        blocks::alt_up(s);
        blocks::alt_up(s);
        s.hold(2.0);
        plan_leg(s, c, Axis::X, 4); // detour around the first pillar
        plan_leg(s, c, Axis::Y, 3);
        plan_leg(s, c, Axis::X, 3); // W2
        plan_leg(s, c, Axis::X, 0); // W3
        plan_leg(s, c, Axis::X, -1); // detour around the second pillar
        plan_leg(s, c, Axis::Y, 0);
        plan_leg(s, c, Axis::X, 0); // W4
        s.hold(1.0);

        const LiveRun run = fly(s, c);
        bool reached = run.waypoint_distances.size() == waypoints.size();
        std::string dist;
        for (double d : run.waypoint_distances)
        {
                reached = reached && d <= c.waypoint_tolerance;
                dist += fmt("%.3f ", d);
        }
        double clearance = 1e9;
        for (const auto& [t, st] : run.states)
        {
                for (const auto& o : obstacles)
                {
                        clearance = std::min(clearance, std::hypot(st.position[0] - o[0], st.position[1] - o[1]));
                }
        }
        const auto [lag, peak] = xcorr_peak(run.glove_pitch, run.forward_velocity, 0.01, 3.0);
        const bool coherent = std::abs(lag) <= 0.5 && peak >= 0.7;
        const bool ok = reached && clearance > kObstacleRadius && coherent && run.wall < 120;
        return {ok, fmt("closest approach [ %s] m (tol %.1f); pillar clearance %.2f m; pitch->v_fwd lag %.2f s r=%.2f; "
                        "%.1f s wall",
                        dist.c_str(), c.waypoint_tolerance, clearance, lag, peak, run.wall)};
}

// ---------------------------------------------------------------------------------------------
// 7. Grasp

Outcome grasp_mission()
{
        Config c = loopback_config();
        c.grasp_zone = true;
        c.grasp_x = 2;
        c.grasp_y = 0;
        c.grasp_z = 1;
        c.grasp_radius = 0.3;

        Script s;
        s.then(0, {}, {}).hold(3.0);
        plan_leg(s, c, Axis::X, 2); // approach
        s.then(0.2, {}, blocks::kFist).hold(1.0);
        plan_leg(s, c, Axis::X, 0, blocks::kFist); // depart carrying the object
        s.hold(0.5);

        const LiveRun run = fly(s, c);
        // Scripted close: first sent pose with every finger past the close threshold.
        double t_close = -1;
        for (const auto& [t, pose] : run.poses)
        {
                if (std::all_of(pose.fingers.begin(), pose.fingers.end(),
                                [&](double f) { return rad2deg(f) <= c.close_deg; }))
                {
                        t_close = t;
                        break;
                }
        }
        double t_closed = -1;
        bool grasped_at_close = false;
        for (const auto& [t, st] : run.states)
        {
                if (st.gripper.phase == sim::GripperPhase::Closed)
                {
                        t_closed = t;
                        grasped_at_close = st.object_grasped;
                        break;
                }
        }
        const auto& last = run.states.back().second;
        const double latency = t_closed - t_close;
        const bool ok = t_close > 0 && t_closed > 0 && latency <= 0.6 && grasped_at_close && last.object_grasped
                        && last.position[0] < 0.5;
        return {ok, fmt("gripper closed %.3f s after scripted finger close (limit 0.6 s); grasped %s; carried to x=%.2f m",
                        latency, grasped_at_close && last.object_grasped ? "yes" : "NO", last.position[0])};
}

// ---------------------------------------------------------------------------------------------
// 8. Haptics

sim::TelemetryPacket tel(double speed, double t, std::uint64_t seq)
{
        sim::TelemetryPacket p;
        p.speed = speed;
        p.velocity = {speed, 0, 0};
        p.t_sim = t;
        p.seq = seq;
        return p;
}

Outcome haptic_properties()
{
        // Offline: WarnOn on the first packet above the threshold.
        haptic::HapticMonitor m;
        int first_above = -1;
        int warn_on = -1;
        for (int k = 0; k < 60; ++k)
        {
                const double v = 0.5 + 0.01 * k;
                if (first_above < 0 && v > 0.7)
                {
                        first_above = k;
                }
                for (const auto& e : m.step(tel(v, 0.02 * k, static_cast<std::uint64_t>(k))))
                {
                        if (e.level == 1 && e.on && warn_on < 0)
                        {
                                warn_on = k;
                        }
                }
        }
        const double packet_latency = 0.02 * (warn_on - first_above);

        // Live: telemetry datagram at 50 Hz in, actuator datagram out.
        Config c = loopback_config();
        const auto vib = net::UdpSocket::bind("127.0.0.1", static_cast<std::uint16_t>(c.vib_port));
        double wall_latency = 1e9;
        {
                PipelineNode node(c, {std::nullopt, false, {}});
                net::UdpSocket out;
                const auto to = net::Endpoint::resolve("127.0.0.1", node.telemetry_port());
                for (int k = 0; k < 30; ++k)
                {
                        const double v = 0.55 + 0.01 * k;
                        const auto sent = Clock::now();
                        out.send_to(to, sim::serialize_telemetry(tel(v, 0.02 * k, static_cast<std::uint64_t>(k))));
                        if (v > 0.7)
                        {
                                if (const auto rx = vib.receive(100ms))
                                {
                                        if (rx->data == R"({"vib":{"level":1,"on":true}})")
                                        {
                                                wall_latency = seconds_since(sent);
                                        }
                                }
                                break;
                        }
                        std::this_thread::sleep_until(sent + 20ms);
                }
                node.stop();
        }

        // Chatter: full-band cycles produce one pair each, in-band wiggles nothing.
        std::vector<double> trace;
        const auto ramp = [&](double from, double to, int n) {
                for (int i = 1; i <= n; ++i)
                {
                        trace.push_back(from + (to - from) * i / n);
                }
        };
        const auto full = [&](double peak) { ramp(0.5, peak, 15); ramp(peak, 0.5, 15); };
        const auto wiggle_below = [&] {
                for (int i = 0; i < 10; ++i)
                {
                        ramp(0.5, 0.69, 3);
                        ramp(0.69, 0.62, 3);
                }
                ramp(0.62, 0.5, 3);
        };
        const auto wiggle_inside = [&] {
                ramp(0.5, 0.75, 5);
                for (int i = 0; i < 10; ++i)
                {
                        ramp(0.75, 0.62, 3);
                        ramp(0.62, 0.75, 3);
                }
                ramp(0.75, 0.5, 5);
        };
        for (int i = 0; i < 5; ++i)
        {
                full(0.8);
                wiggle_below();
                wiggle_inside();
        }
        for (int i = 0; i < 3; ++i)
        {
                full(1.0);
        }
        constexpr int kWarnPairs = 5 + 5 + 3; // full(0.8), wiggle_inside, full(1.0)
        constexpr int kCriticalPairs = 3;

        struct Schmitt
        {
                double on;
                double off;
                bool high = false;
                int pairs = 0;
                void feed(double v)
                {
                        if (!high && v > on)
                        {
                                high = true;
                        }
                        else if (high && v < off)
                        {
                                high = false;
                                ++pairs;
                        }
                }
        };
        Schmitt o1{0.7, 0.6};
        Schmitt o2{0.9, 0.8};
        haptic::HapticMonitor h;
        int on[2] = {0, 0};
        int off[2] = {0, 0};
        for (std::size_t k = 0; k < trace.size(); ++k)
        {
                o1.feed(trace[k]);
                o2.feed(trace[k]);
                for (const auto& e : h.step(tel(trace[k], 0.02 * static_cast<double>(k), k)))
                {
                        (e.on ? on : off)[e.level - 1]++;
                }
        }
        const bool chatter = on[0] == kWarnPairs && off[0] == kWarnPairs && on[1] == kCriticalPairs
                             && off[1] == kCriticalPairs && o1.pairs == kWarnPairs && o2.pairs == kCriticalPairs;
        const bool ok = warn_on == first_above && packet_latency <= 0.02 && wall_latency <= 0.02 && chatter;
        return {ok, fmt("WarnOn on first packet above threshold (%d packets late), live %.1f ms; warn pairs %d/%d, "
                        "critical pairs %d/%d (oracle %d/%d)",
                        warn_on - first_above, wall_latency * 1e3, on[0], kWarnPairs, on[1], kCriticalPairs, o1.pairs,
                        o2.pairs)};
}

// ---------------------------------------------------------------------------------------------
// 9. Replay determinism

Outcome replay_determinism()
{
        Config c = loopback_config();
        const auto path = std::filesystem::temp_directory_path() / ("handfly_acceptance_" + std::to_string(::getpid()) + ".jsonl");
        std::filesystem::remove(path);

        Script s;
        s.then(0, {}, {}).hold(3.0);
        blocks::grip(s);
        blocks::alt_up(s);
        leg(s, Axis::X, true, 1.5, {0, 0}); // fast enough for both haptic levels
        blocks::locked_grip(s);
        leg(s, Axis::Y, false, 0.5, {0, 0});
        s.hold(0.5);

        const LiveRun run = fly(s, c, path, [](PipelineNode& node, std::uint32_t seq) {
                if (seq == 700)
                {
                        node.request(Control::Disarm);
                }
                if (seq == 760)
                {
                        node.request(Control::Arm);
                }
        });
        const auto log = session::read_log(path);
        const ReplayOutput recorded = recorded_outputs(log.records);
        const ReplayOutput replayed = replay_pipeline(log.records, c);
        std::filesystem::remove(path);

        const bool same = recorded.commands == replayed.commands && recorded.gesture_events == replayed.gesture_events
                          && recorded.haptic_events == replayed.haptic_events && recorded.controls == replayed.controls;
        const bool substantial = recorded.commands.size() == run.sent && !recorded.gesture_events.empty()
                                 && recorded.haptic_events.size() >= 4 && recorded.controls.size() == 3;
        return {same && substantial && log.corrupt == 0,
                fmt("%zu commands, %zu gesture events, %zu haptic events, %zu controls; byte-identical %s",
                    recorded.commands.size(), recorded.gesture_events.size(), recorded.haptic_events.size(),
                    recorded.controls.size(), same ? "yes" : "NO")};
}
}

int main(int argc, char** argv)
{
        const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
                {"median filter equals sort oracle", median_oracle},
                {"complementary geometric convergence", complementary_convergence},
                {"quaternion filter identity, gyro propagation, tilt convergence", madgwick_properties},
                {"wire round trip and fuzz", wire_properties},
                {"gesture and lock soundness", gesture_soundness},
                {"loopback waypoint mission", waypoint_mission},
                {"grasp mission", grasp_mission},
                {"haptic latency and chatter", haptic_properties},
                {"record and batch replay determinism", replay_determinism},
        };
        int only = argc > 1 ? std::atoi(argv[1]) : 0;
        int failed = 0;
        for (std::size_t i = 0; i < criteria.size(); ++i)
        {
                if (only != 0 && static_cast<int>(i) + 1 != only)
                {
                        continue;
                }
                Outcome o;
                try
                {
                        o = criteria[i].second();
                }
                catch (const std::exception& e)
                {
                        o = {false, std::string("exception: ") + e.what()};
                }
                std::printf("[%s] %zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str());
                std::fflush(stdout);
                failed += !o.pass;
        }
        return failed == 0 ? 0 : 1;
}
