#pragma once

#include "handfly/command.hpp"
#include "handfly/gesture.hpp"
#include "handfly/haptic.hpp"
#include "handfly/reference_pose.hpp"
#include "handfly/uav_sim.hpp"

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace handfly
{
class ConfigInvalid : public std::runtime_error
{
public:
        using std::runtime_error::runtime_error;
};

/// Every tunable of the system. Angles are in degrees here and converted at the module boundary.
struct Config
{
        // network
        std::string glove_host = "127.0.0.1"; // where actuator messages go
        std::string uav_host = "127.0.0.1";
        std::string telemetry_host = "127.0.0.1"; // where the simulator publishes
        std::string emulator_host = "127.0.0.1";
        std::string pipeline_host = "127.0.0.1"; // where the emulator sends glove packets
        std::string listen_host = "0.0.0.0";     // UDP bind address for pipeline and simulator
        std::string console_host = "127.0.0.1";  // WebSocket bind address
        int glove_port = 47800;
        int telemetry_port = 47801;
        int uav_port = 47802;
        int vib_port = 47803;
        int emulator_port = 47804; // interactive pose updates forwarded from the console
        int http_port = 8080;
        int channel_capacity = 256;

        // session
        int fingers = 2;
        int rate_hz = 100;

        // preprocessing and estimation
        int median_half_width = 2;
        int calib_samples = 100;
        double calib_motion_limit = 0.1; // rad/s
        double alpha = 0.98;
        double beta = 0.1;
        double accel_guard = 0.5; // m/s^2
        double warm_seconds = 1.0;

        // reference pose
        double zero_back_band_deg = 5.0;
        double zero_back_rate = 0.02;   // 1/s
        double zero_back_still = 0.05;  // rad/s
        double lock_release_s = 0.3;
        bool auto_reference = false; // take the zero pose automatically once warm

        // gestures
        double close_deg = -50.0;
        double open_deg = -30.0;
        double flex_window_s = 0.5;
        double down_modifier_deg = -15.0;

        // command mapping
        double deadzone_deg = 5.0;
        double full_scale_deg = 30.0;
        double v_max = 1.0;
        double yaw_rate_max = 0.8;
        double accel_max = 2.0;
        double yaw_accel_max = 4.0;
        double altitude_step = 0.25;
        double altitude_initial = 1.0;
        double watchdog_s = 0.2;
        bool armed = true;

        // simulator
        double tau = 0.3;
        double tau_z = 1.0;
        double vz_max = 0.5;
        double gripper_travel_s = 0.5;
        double sim_dt = 0.01;
        double telemetry_hz = 50;
        double spawn_x = 0;
        double spawn_y = 0;
        double spawn_z = 1.0;
        bool grasp_zone = false;
        double grasp_x = 0;
        double grasp_y = 0;
        double grasp_z = 1.0;
        double grasp_radius = 0.3;
        std::string waypoints; // "x,y,z; x,y,z"
        double waypoint_tolerance = 0.3;

        // haptics
        double warn_speed = 0.7;
        double critical_speed = 0.9;
        double warn_hysteresis = 0.1;

        // emulator
        double emu_gyro_sigma = 0.005;
        double emu_accel_sigma = 0.05;
        int emu_seed = 1;
        double time_scale = 1.0; // wall-clock speed-up of emulator and simulator loops

        /// Throws ConfigInvalid on out-of-domain values.
        void validate() const;

        /// Sets one key from its text form. Throws ConfigInvalid on unknown keys or bad values.
        void set(std::string_view key, std::string_view value);

        [[nodiscard]] std::vector<std::string> keys() const;

        /// Flat `key = value` text, one key per line, strings quoted.
        [[nodiscard]] std::string to_text() const;

        friend bool operator==(const Config&, const Config&) = default;

        // Derived module parameters.
        [[nodiscard]] pose::ZeroBackParams zero_back() const;
        [[nodiscard]] pose::LockParams lock() const;
        [[nodiscard]] gesture::GestureParams gestures() const;
        [[nodiscard]] command::AttitudeMap attitude_map() const;
        [[nodiscard]] command::RateLimits rate_limits() const;
        [[nodiscard]] sim::SimParams sim_params() const;
        [[nodiscard]] haptic::Thresholds haptic_thresholds() const;
        [[nodiscard]] std::vector<Vec3> waypoint_list() const;
};

/// Parses `key = value` lines; `#` starts a comment; `[section]` lines are ignored.
Config parse_config(std::string_view text, Config base = {});
Config load_config(const std::filesystem::path& path, Config base = {});
void save_config(const Config& config, const std::filesystem::path& path);
}
