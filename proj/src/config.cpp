#include "handfly/config.hpp"

#include "handfly/wire.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <variant>

namespace handfly
{
namespace
{
using Field = std::variant<int Config::*, double Config::*, bool Config::*, std::string Config::*>;

const std::map<std::string, Field, std::less<>>& fields()
{
        static const std::map<std::string, Field, std::less<>> table{
                {"glove_host", &Config::glove_host},
                {"uav_host", &Config::uav_host},
                {"telemetry_host", &Config::telemetry_host},
                {"emulator_host", &Config::emulator_host},
                {"pipeline_host", &Config::pipeline_host},
                {"listen_host", &Config::listen_host},
                {"console_host", &Config::console_host},
                {"glove_port", &Config::glove_port},
                {"telemetry_port", &Config::telemetry_port},
                {"uav_port", &Config::uav_port},
                {"vib_port", &Config::vib_port},
                {"emulator_port", &Config::emulator_port},
                {"http_port", &Config::http_port},
                {"channel_capacity", &Config::channel_capacity},
                {"fingers", &Config::fingers},
                {"rate_hz", &Config::rate_hz},
                {"median_half_width", &Config::median_half_width},
                {"calib_samples", &Config::calib_samples},
                {"calib_motion_limit", &Config::calib_motion_limit},
                {"alpha", &Config::alpha},
                {"beta", &Config::beta},
                {"accel_guard", &Config::accel_guard},
                {"warm_seconds", &Config::warm_seconds},
                {"zero_back_band_deg", &Config::zero_back_band_deg},
                {"zero_back_rate", &Config::zero_back_rate},
                {"zero_back_still", &Config::zero_back_still},
                {"lock_release_s", &Config::lock_release_s},
                {"auto_reference", &Config::auto_reference},
                {"close_deg", &Config::close_deg},
                {"open_deg", &Config::open_deg},
                {"flex_window_s", &Config::flex_window_s},
                {"down_modifier_deg", &Config::down_modifier_deg},
                {"deadzone_deg", &Config::deadzone_deg},
                {"full_scale_deg", &Config::full_scale_deg},
                {"v_max", &Config::v_max},
                {"yaw_rate_max", &Config::yaw_rate_max},
                {"accel_max", &Config::accel_max},
                {"yaw_accel_max", &Config::yaw_accel_max},
                {"altitude_step", &Config::altitude_step},
                {"altitude_initial", &Config::altitude_initial},
                {"watchdog_s", &Config::watchdog_s},
                {"armed", &Config::armed},
                {"tau", &Config::tau},
                {"tau_z", &Config::tau_z},
                {"vz_max", &Config::vz_max},
                {"gripper_travel_s", &Config::gripper_travel_s},
                {"sim_dt", &Config::sim_dt},
                {"telemetry_hz", &Config::telemetry_hz},
                {"spawn_x", &Config::spawn_x},
                {"spawn_y", &Config::spawn_y},
                {"spawn_z", &Config::spawn_z},
                {"grasp_zone", &Config::grasp_zone},
                {"grasp_x", &Config::grasp_x},
                {"grasp_y", &Config::grasp_y},
                {"grasp_z", &Config::grasp_z},
                {"grasp_radius", &Config::grasp_radius},
                {"waypoints", &Config::waypoints},
                {"waypoint_tolerance", &Config::waypoint_tolerance},
                {"warn_speed", &Config::warn_speed},
                {"critical_speed", &Config::critical_speed},
                {"warn_hysteresis", &Config::warn_hysteresis},
                {"emu_gyro_sigma", &Config::emu_gyro_sigma},
                {"emu_accel_sigma", &Config::emu_accel_sigma},
                {"emu_seed", &Config::emu_seed},
                {"time_scale", &Config::time_scale},
        };
        return table;
}

std::string_view trim(std::string_view s)
{
        const auto b = s.find_first_not_of(" \t\r");
        if (b == std::string_view::npos)
        {
                return {};
        }
        const auto e = s.find_last_not_of(" \t\r");
        return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value)
{
        throw ConfigInvalid("bad value for " + std::string(key) + ": " + std::string(value));
}

std::string format_double(double v)
{
        char buf[32];
        const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
        std::string s(buf, ptr);
        if (s.find_first_of(".eEn") == std::string::npos)
        {
                s += ".0";
        }
        return s;
}

void require(bool ok, const std::string& what)
{
        if (!ok)
        {
                throw ConfigInvalid(what);
        }
}
}

void Config::set(std::string_view key, std::string_view value)
{
        const auto it = fields().find(key);
        if (it == fields().end())
        {
                throw ConfigInvalid("unknown config key: " + std::string(key));
        }
        value = trim(value);
        std::visit(
                [&](auto member) {
                        using T = std::remove_cvref_t<decltype(this->*member)>;
                        if constexpr (std::is_same_v<T, std::string>)
                        {
                                if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
                                {
                                        value = value.substr(1, value.size() - 2);
                                }
                                this->*member = std::string(value);
                        }
                        else if constexpr (std::is_same_v<T, bool>)
                        {
                                if (value == "true")
                                {
                                        this->*member = true;
                                }
                                else if (value == "false")
                                {
                                        this->*member = false;
                                }
                                else
                                {
                                        bad_value(key, value);
                                }
                        }
                        else
                        {
                                T parsed{};
                                const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), parsed);
                                if (ec != std::errc{} || ptr != value.data() + value.size())
                                {
                                        bad_value(key, value);
                                }
                                this->*member = parsed;
                        }
                },
                it->second);
}

std::vector<std::string> Config::keys() const
{
        std::vector<std::string> out;
        for (const auto& [k, _] : fields())
        {
                out.push_back(k);
        }
        return out;
}

std::string Config::to_text() const
{
        std::ostringstream os;
        os << "# handfly configuration\n";
        for (const auto& [key, field] : fields())
        {
                os << key << " = ";
                std::visit(
                        [&](auto member) {
                                using T = std::remove_cvref_t<decltype(this->*member)>;
                                if constexpr (std::is_same_v<T, std::string>)
                                {
                                        os << '"' << this->*member << '"';
                                }
                                else if constexpr (std::is_same_v<T, bool>)
                                {
                                        os << (this->*member ? "true" : "false");
                                }
                                else if constexpr (std::is_same_v<T, double>)
                                {
                                        os << format_double(this->*member);
                                }
                                else
                                {
                                        os << this->*member;
                                }
                        },
                        field);
                os << '\n';
        }
        return os.str();
}

void Config::validate() const
{
        const auto port_ok = [](int p) { return p >= 0 && p <= 65535; };
        for (int p : {glove_port, telemetry_port, uav_port, vib_port, emulator_port, http_port})
        {
                require(port_ok(p), "port out of range: " + std::to_string(p));
        }
        require(channel_capacity >= 1, "channel_capacity must be >= 1");
        require(fingers >= wire::kMinFingers && fingers <= wire::kMaxFingers, "fingers must be in 1..5");
        require(rate_hz >= 1, "rate_hz must be >= 1");
        require(median_half_width >= 1, "median_half_width must be >= 1");
        require(calib_samples >= 1, "calib_samples must be >= 1");
        require(calib_motion_limit > 0, "calib_motion_limit must be > 0");
        require(alpha >= 0 && alpha <= 1, "alpha must lie in [0, 1]");
        require(beta >= 0, "beta must be >= 0");
        require(accel_guard >= 0, "accel_guard must be >= 0");
        require(warm_seconds >= 0, "warm_seconds must be >= 0");
        require(zero_back_band_deg > 0 && zero_back_rate >= 0 && zero_back_still > 0, "zero-back parameters");
        require(lock_release_s >= 0, "lock_release_s must be >= 0");
        require(close_deg < open_deg, "close_deg must be below open_deg");
        require(flex_window_s > 0, "flex_window_s must be > 0");
        require(deadzone_deg >= 0 && full_scale_deg > deadzone_deg, "need 0 <= deadzone_deg < full_scale_deg");
        require(v_max > 0 && yaw_rate_max > 0, "v_max and yaw_rate_max must be > 0");
        require(accel_max > 0 && yaw_accel_max > 0, "rate limits must be > 0");
        require(altitude_step > 0, "altitude_step must be > 0");
        require(altitude_initial >= 0, "altitude_initial must be >= 0");
        require(watchdog_s > 0, "watchdog_s must be > 0");
        require(tau > 0 && tau_z > 0 && vz_max > 0 && gripper_travel_s > 0, "simulator time constants must be > 0");
        require(sim_dt > 0 && sim_dt <= 0.1, "sim_dt must lie in (0, 0.1]");
        require(telemetry_hz > 0 && telemetry_hz <= 1.0 / sim_dt, "telemetry_hz must lie in (0, 1/sim_dt]");
        require(spawn_z >= 0, "spawn_z must be >= 0");
        require(grasp_radius > 0, "grasp_radius must be > 0");
        require(waypoint_tolerance > 0, "waypoint_tolerance must be > 0");
        try
        {
                haptic_thresholds().validate();
        }
        catch (const haptic::BadThresholds& e)
        {
                throw ConfigInvalid(e.what());
        }
        require(emu_gyro_sigma >= 0 && emu_accel_sigma >= 0, "emulator noise must be >= 0");
        require(time_scale > 0, "time_scale must be > 0");
        (void)waypoint_list();
}

pose::ZeroBackParams Config::zero_back() const
{
        return {deg2rad(zero_back_band_deg), zero_back_rate, zero_back_still};
}

pose::LockParams Config::lock() const
{
        return {deg2rad(deadzone_deg), lock_release_s};
}

gesture::GestureParams Config::gestures() const
{
        return {deg2rad(close_deg), deg2rad(open_deg), flex_window_s, deg2rad(down_modifier_deg), 1};
}

command::AttitudeMap Config::attitude_map() const
{
        return {deg2rad(deadzone_deg), deg2rad(full_scale_deg), v_max, yaw_rate_max};
}

command::RateLimits Config::rate_limits() const
{
        return {accel_max, yaw_accel_max};
}

sim::SimParams Config::sim_params() const
{
        sim::SimParams p{tau, tau_z, vz_max, gripper_travel_s, v_max, std::nullopt};
        if (grasp_zone)
        {
                p.grasp_zone = sim::GraspZone{{grasp_x, grasp_y, grasp_z}, grasp_radius};
        }
        return p;
}

haptic::Thresholds Config::haptic_thresholds() const
{
        return {warn_speed, critical_speed, warn_hysteresis};
}

std::vector<Vec3> Config::waypoint_list() const
{
        std::vector<Vec3> out;
        std::string_view rest = waypoints;
        while (!trim(rest).empty())
        {
                const auto semi = rest.find(';');
                const std::string_view item = trim(rest.substr(0, semi));
                rest = semi == std::string_view::npos ? std::string_view{} : rest.substr(semi + 1);
                if (item.empty())
                {
                        continue;
                }
                Vec3 p{};
                std::string_view coords = item;
                for (int i = 0; i < 3; ++i)
                {
                        const auto comma = coords.find(',');
                        if ((i < 2) == (comma == std::string_view::npos))
                        {
                                throw ConfigInvalid("waypoint needs x,y,z: " + std::string(item));
                        }
                        const std::string_view num = trim(coords.substr(0, comma));
                        const auto [ptr, ec] = std::from_chars(num.data(), num.data() + num.size(), p[i]);
                        if (ec != std::errc{} || ptr != num.data() + num.size())
                        {
                                throw ConfigInvalid("bad waypoint coordinate: " + std::string(num));
                        }
                        coords = i < 2 ? coords.substr(comma + 1) : std::string_view{};
                }
                out.push_back(p);
        }
        return out;
}

Config parse_config(std::string_view text, Config base)
{
        std::size_t line_no = 0;
        while (!text.empty())
        {
                ++line_no;
                const auto nl = text.find('\n');
                std::string_view line = text.substr(0, nl);
                text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);

                // Strip comments outside of quoted strings.
                bool quoted = false;
                for (std::size_t i = 0; i < line.size(); ++i)
                {
                        if (line[i] == '"')
                        {
                                quoted = !quoted;
                        }
                        else if (line[i] == '#' && !quoted)
                        {
                                line = line.substr(0, i);
                                break;
                        }
                }
                line = trim(line);
                if (line.empty() || line.front() == '[')
                {
                        continue;
                }
                const auto eq = line.find('=');
                if (eq == std::string_view::npos)
                {
                        throw ConfigInvalid("line " + std::to_string(line_no) + ": expected key = value");
                }
                base.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
        }
        base.validate();
        return base;
}

Config load_config(const std::filesystem::path& path, Config base)
{
        std::ifstream in(path);
        if (!in)
        {
                throw ConfigInvalid("cannot read config " + path.string());
        }
        std::stringstream ss;
        ss << in.rdbuf();
        return parse_config(ss.str(), std::move(base));
}

void save_config(const Config& config, const std::filesystem::path& path)
{
        std::ofstream out(path);
        out << config.to_text();
        if (!out)
        {
                throw ConfigInvalid("cannot write config " + path.string());
        }
}
}
