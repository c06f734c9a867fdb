#pragma once

#include "handfly/command.hpp"
#include "handfly/vec.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace handfly::sim
{
enum class GripperPhase
{
        Open,
        Closed,
        Moving,
};

struct GripperState
{
        GripperPhase phase = GripperPhase::Open;
        command::Gripper target = command::Gripper::Open;
        double progress = 0; // fraction of travel completed toward `target` while Moving

        friend bool operator==(const GripperState&, const GripperState&) = default;
};

/// Static region where closing the gripper picks up the object.
struct GraspZone
{
        Vec3 center{};
        double radius = 0.3;
};

struct SimParams
{
        double tau = 0.3;            // s, horizontal velocity time constant
        double tau_z = 1.0;          // s, altitude loop time constant
        double vz_max = 0.5;         // m/s
        double gripper_travel = 0.5; // s
        double v_max = 1.0;          // m/s, speed bound is 1.5 * v_max
        std::optional<GraspZone> grasp_zone;
};

struct UavState
{
        Vec3 position{}; // world, z up
        Vec3 velocity{};
        double yaw = 0;
        GripperState gripper;
        bool object_grasped = false;
        double t_sim = 0;
        std::uint64_t steps = 0;

        friend bool operator==(const UavState&, const UavState&) = default;
};

class InvalidDt : public std::invalid_argument
{
public:
        InvalidDt() : std::invalid_argument("simulation step must lie in (0, 0.1] s") {}
};

/// One fixed step of the kinematic plant. Horizontal velocity follows the body-frame setpoint
/// through a first-order lag (exact zero-order-hold discretization), altitude through a
/// saturated proportional loop, yaw integrates the commanded rate.
UavState sim_step(const UavState& state, const command::ControlCommand& cmd, double dt, const SimParams& params = {});

struct TelemetryPacket
{
        Vec3 position{};
        Vec3 velocity{};
        double yaw = 0;
        GripperPhase gripper = GripperPhase::Open;
        double speed = 0;
        std::uint64_t seq = 0;
        double t_sim = 0;

        friend bool operator==(const TelemetryPacket&, const TelemetryPacket&) = default;
};

std::string_view to_string(GripperPhase g);

TelemetryPacket emit_telemetry(const UavState& state, std::uint64_t seq);

/// `{"tel":{"p":[x,y,z],"v":[vx,vy,vz],"yaw":0.0,"grip":"open","speed":0.0},"seq":0,"t":0.0}`
std::string serialize_telemetry(const TelemetryPacket& t);
std::optional<TelemetryPacket> parse_telemetry(std::string_view text);

/// JSON dump of the full simulator state (shutdown record).
std::string serialize_state(const UavState& s);
}
