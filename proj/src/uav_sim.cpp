#include "handfly/uav_sim.hpp"

#include <json.hpp>

#include <algorithm>

namespace handfly::sim
{
namespace
{
GripperState step_gripper(GripperState g, command::Gripper commanded, double dt, double travel)
{
        if (commanded != g.target)
        {
                // Reversal mid-travel keeps the physical jaw position.
                g.progress = g.phase == GripperPhase::Moving ? 1 - g.progress : 0;
                g.target = commanded;
                g.phase = GripperPhase::Moving;
        }
        if (g.phase != GripperPhase::Moving)
        {
                return g;
        }
        g.progress += dt / travel;
        if (g.progress >= 1 - 1e-9)
        {
                g.progress = 0;
                g.phase = g.target == command::Gripper::Closed ? GripperPhase::Closed : GripperPhase::Open;
        }
        return g;
}
}

UavState sim_step(const UavState& state, const command::ControlCommand& cmd, double dt, const SimParams& params)
{
        if (!(dt > 0) || dt > 0.1)
        {
                throw InvalidDt();
        }
        UavState s = state;

        const double c = std::cos(s.yaw);
        const double sn = std::sin(s.yaw);
        // Body forward is +x rotated by yaw; body right is -y rotated by yaw.
        const double vx_cmd = cmd.v_forward * c + cmd.v_lateral * sn;
        const double vy_cmd = cmd.v_forward * sn - cmd.v_lateral * c;

        const double blend = -std::expm1(-dt / params.tau);
        s.velocity[0] += (vx_cmd - s.velocity[0]) * blend;
        s.velocity[1] += (vy_cmd - s.velocity[1]) * blend;
        s.velocity[2] = std::clamp((cmd.altitude_target - s.position[2]) / params.tau_z, -params.vz_max, params.vz_max);

        const double speed_bound = 1.5 * params.v_max;
        const double speed = norm(s.velocity);
        if (speed > speed_bound)
        {
                s.velocity = (speed_bound / speed) * s.velocity;
        }

        s.position = s.position + dt * s.velocity;
        if (s.position[2] <= 0)
        {
                s.position[2] = 0;
                if (s.velocity[2] < 0)
                {
                        s.velocity = {0, 0, 0};
                }
        }

        s.yaw = wrap_angle(s.yaw + cmd.yaw_rate * dt);

        const GripperPhase before = s.gripper.phase;
        s.gripper = step_gripper(s.gripper, cmd.gripper, dt, params.gripper_travel);
        if (params.grasp_zone && before != GripperPhase::Closed && s.gripper.phase == GripperPhase::Closed
            && norm(s.position - params.grasp_zone->center) <= params.grasp_zone->radius)
        {
                s.object_grasped = true;
        }
        if (s.gripper.phase == GripperPhase::Open)
        {
                s.object_grasped = false;
        }

        ++s.steps;
        s.t_sim = static_cast<double>(s.steps) * dt;
        return s;
}

std::string_view to_string(GripperPhase g)
{
        switch (g)
        {
        case GripperPhase::Open:
                return "open";
        case GripperPhase::Closed:
                return "closed";
        case GripperPhase::Moving:
                return "moving";
        }
        return "moving";
}

TelemetryPacket emit_telemetry(const UavState& state, std::uint64_t seq)
{
        return {state.position, state.velocity, state.yaw, state.gripper.phase, norm(state.velocity), seq, state.t_sim};
}

std::string serialize_telemetry(const TelemetryPacket& t)
{
        nlohmann::ordered_json body;
        body["p"] = t.position;
        body["v"] = t.velocity;
        body["yaw"] = t.yaw;
        body["grip"] = to_string(t.gripper);
        body["speed"] = t.speed;
        nlohmann::ordered_json j;
        j["tel"] = std::move(body);
        j["seq"] = t.seq;
        j["t"] = t.t_sim;
        return j.dump();
}

std::optional<TelemetryPacket> parse_telemetry(std::string_view text)
{
        const auto j = nlohmann::json::parse(text.begin(), text.end(), nullptr, false);
        if (j.is_discarded() || !j.is_object() || !j.contains("tel") || !j["tel"].is_object())
        {
                return std::nullopt;
        }
        const auto& b = j["tel"];
        try
        {
                TelemetryPacket t;
                t.position = b.at("p").get<Vec3>();
                t.velocity = b.at("v").get<Vec3>();
                t.yaw = b.at("yaw").get<double>();
                const auto grip = b.at("grip").get<std::string>();
                if (grip == "open")
                {
                        t.gripper = GripperPhase::Open;
                }
                else if (grip == "closed")
                {
                        t.gripper = GripperPhase::Closed;
                }
                else if (grip == "moving")
                {
                        t.gripper = GripperPhase::Moving;
                }
                else
                {
                        return std::nullopt;
                }
                t.speed = b.at("speed").get<double>();
                t.seq = j.at("seq").get<std::uint64_t>();
                t.t_sim = j.at("t").get<double>();
                return t;
        }
        catch (const nlohmann::json::exception&)
        {
                return std::nullopt;
        }
}

std::string serialize_state(const UavState& s)
{
        nlohmann::ordered_json j;
        j["p"] = s.position;
        j["v"] = s.velocity;
        j["yaw"] = s.yaw;
        j["grip"] = to_string(s.gripper.phase);
        j["grasped"] = s.object_grasped;
        j["t"] = s.t_sim;
        j["steps"] = s.steps;
        return nlohmann::ordered_json{{"uav_state", j}}.dump();
}
}
