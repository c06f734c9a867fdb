#include "handfly/command.hpp"

#include "handfly/filters.hpp"

#include <json.hpp>

#include <algorithm>

namespace handfly::command
{
std::string_view to_string(Gripper g)
{
        return g == Gripper::Open ? "open" : "closed";
}

ControlCommand hover(ControlCommand cmd)
{
        cmd.v_forward = 0;
        cmd.v_lateral = 0;
        cmd.yaw_rate = 0;
        return cmd;
}

std::string serialize_command(const ControlCommand& c)
{
        nlohmann::ordered_json body;
        body["vf"] = c.v_forward;
        body["vl"] = c.v_lateral;
        body["alt"] = c.altitude_target;
        body["yr"] = c.yaw_rate;
        body["grip"] = to_string(c.gripper);
        nlohmann::ordered_json j;
        j["cmd"] = std::move(body);
        j["t"] = c.t_device;
        return j.dump();
}

std::optional<ControlCommand> parse_command(std::string_view text)
{
        const auto j = nlohmann::json::parse(text.begin(), text.end(), nullptr, false);
        if (j.is_discarded() || !j.is_object() || !j.contains("cmd") || !j["cmd"].is_object())
        {
                return std::nullopt;
        }
        const auto& b = j["cmd"];
        const auto number = [&](const char* key) -> std::optional<double> {
                if (!b.contains(key) || !b[key].is_number())
                {
                        return std::nullopt;
                }
                const double v = b[key].get<double>();
                return std::isfinite(v) ? std::optional(v) : std::nullopt;
        };
        const auto vf = number("vf");
        const auto vl = number("vl");
        const auto alt = number("alt");
        const auto yr = number("yr");
        if (!vf || !vl || !alt || !yr || !b.contains("grip") || !b["grip"].is_string())
        {
                return std::nullopt;
        }
        const auto grip = b["grip"].get<std::string>();
        if (grip != "open" && grip != "closed")
        {
                return std::nullopt;
        }
        ControlCommand c{*vf, *vl, *alt, *yr, grip == "open" ? Gripper::Open : Gripper::Closed, 0};
        if (j.contains("t") && j["t"].is_number_unsigned())
        {
                c.t_device = j["t"].get<std::uint64_t>();
        }
        return c;
}

double shape_axis(double angle, double deadzone, double full_scale, double out_max)
{
        const double magnitude = std::clamp((std::abs(angle) - deadzone) / (full_scale - deadzone), 0.0, 1.0);
        if (magnitude == 0)
        {
                return 0;
        }
        return std::copysign(out_max * magnitude, angle);
}

AttitudeSetpoint map_attitude(const Euler& wrist, const AttitudeMap& map)
{
        return {shape_axis(-wrist.pitch, map.deadzone, map.full_scale, map.v_max),
                shape_axis(wrist.roll, map.deadzone, map.full_scale, map.v_max),
                shape_axis(wrist.yaw, map.deadzone, map.full_scale, map.yaw_rate_max)};
}

ControlCommand apply_events(ControlCommand cmd, std::span<const gesture::GestureEvent> events, double altitude_step)
{
        using gesture::GestureKind;
        for (const auto& e : events)
        {
                switch (e.kind)
                {
                case GestureKind::GripClose:
                        cmd.gripper = Gripper::Closed;
                        break;
                case GestureKind::GripOpen:
                        cmd.gripper = Gripper::Open;
                        break;
                case GestureKind::AltitudeStepUp:
                        cmd.altitude_target += altitude_step;
                        break;
                case GestureKind::AltitudeStepDown:
                        cmd.altitude_target = std::max(0.0, cmd.altitude_target - altitude_step);
                        break;
                }
        }
        return cmd;
}

namespace
{
double slew(double from, double to, double max_step)
{
        const double delta = to - from;
        // Relative slack so that k equal steps land exactly on the target.
        if (std::abs(delta) <= max_step * (1 + 1e-9))
        {
                return to;
        }
        return from + std::copysign(max_step, delta);
}
}

ControlCommand rate_limit(const ControlCommand& prev, const ControlCommand& next, double dt, const RateLimits& limits)
{
        if (!(dt > 0))
        {
                throw filters::NonPositiveDt();
        }
        ControlCommand out = next;
        out.v_forward = slew(prev.v_forward, next.v_forward, limits.accel * dt);
        out.v_lateral = slew(prev.v_lateral, next.v_lateral, limits.accel * dt);
        out.yaw_rate = slew(prev.yaw_rate, next.yaw_rate, limits.yaw_accel * dt);
        return out;
}
}
