#pragma once

#include "handfly/gesture.hpp"
#include "handfly/vec.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace handfly::command
{
enum class Gripper
{
        Open,
        Closed,
};

std::string_view to_string(Gripper g);

struct ControlCommand
{
        double v_forward = 0;       // m/s, +forward
        double v_lateral = 0;       // m/s, +right
        double altitude_target = 0; // m, absolute
        double yaw_rate = 0;        // rad/s, +counterclockwise
        Gripper gripper = Gripper::Open;
        std::uint64_t t_device = 0; // us

        friend bool operator==(const ControlCommand&, const ControlCommand&) = default;
};

/// Same command with all velocity channels zeroed.
ControlCommand hover(ControlCommand cmd);

/// `{"cmd":{"vf":0.0,"vl":0.0,"alt":1.0,"yr":0.0,"grip":"open"},"t":0}`
std::string serialize_command(const ControlCommand& c);
std::optional<ControlCommand> parse_command(std::string_view text);

struct AttitudeMap
{
        double deadzone = deg2rad(5.0);
        double full_scale = deg2rad(30.0);
        double v_max = 1.0;        // m/s
        double yaw_rate_max = 0.8; // rad/s
};

/// Deadzone, then linear to full scale, then saturation. Odd in the input angle.
double shape_axis(double angle, double deadzone, double full_scale, double out_max);

struct AttitudeSetpoint
{
        double v_forward = 0;
        double v_lateral = 0;
        double yaw_rate = 0;
};

/// Hand tipped down (pitch < 0) flies forward, roll right (> 0) flies right, yaw left turns left.
AttitudeSetpoint map_attitude(const Euler& wrist, const AttitudeMap& map = {});

/// Applies gripper and altitude-step events in order. Altitude is clamped at 0.
ControlCommand apply_events(ControlCommand cmd, std::span<const gesture::GestureEvent> events,
                            double altitude_step = 0.25);

struct RateLimits
{
        double accel = 2.0;     // m/s^2 on both velocity channels
        double yaw_accel = 4.0; // rad/s^2
};

/// Slew-limits the continuous channels; discrete fields pass through from `next`.
ControlCommand rate_limit(const ControlCommand& prev, const ControlCommand& next, double dt,
                          const RateLimits& limits = {});
}
