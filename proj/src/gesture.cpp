#include "handfly/gesture.hpp"

#include <json.hpp>

#include <algorithm>
#include <stdexcept>

namespace handfly::gesture
{
std::string_view to_string(PoseLabel label)
{
        switch (label)
        {
        case PoseLabel::Open:
                return "open";
        case PoseLabel::Closed:
                return "closed";
        case PoseLabel::Indeterminate:
                return "indeterminate";
        }
        return "indeterminate";
}

std::string_view to_string(GestureKind kind)
{
        switch (kind)
        {
        case GestureKind::GripClose:
                return "grip_close";
        case GestureKind::GripOpen:
                return "grip_open";
        case GestureKind::AltitudeStepUp:
                return "alt_up";
        case GestureKind::AltitudeStepDown:
                return "alt_down";
        }
        return "unknown";
}

std::string serialize_event(const GestureEvent& e)
{
        nlohmann::ordered_json j;
        j["evt"] = to_string(e.kind);
        j["t"] = e.t_device;
        return j.dump();
}

PoseLabel classify_finger(double pitch, PoseLabel prev, const GestureParams& params)
{
        if (pitch < params.close_below)
        {
                return PoseLabel::Closed;
        }
        if (pitch > params.open_above)
        {
                return PoseLabel::Open;
        }
        return prev;
}

std::vector<GestureEvent> gesture_step(GestureEngineState& state, const GestureInput& in, const GestureParams& params)
{
        const std::size_t count = in.finger_pitch.size();
        if (count == 0)
        {
                throw std::invalid_argument("gesture_step needs at least one finger");
        }
        if (state.labels.size() != count)
        {
                state.labels.assign(count, PoseLabel::Indeterminate);
        }

        std::vector<PoseLabel> labels(count);
        for (std::size_t i = 0; i < count; ++i)
        {
                labels[i] = classify_finger(in.finger_pitch[i], state.labels[i], params);
        }
        const auto is = [&](PoseLabel l) { return [l](PoseLabel x) { return x == l; }; };
        const bool all_closed = std::all_of(labels.begin(), labels.end(), is(PoseLabel::Closed));
        const bool all_open = std::all_of(labels.begin(), labels.end(), is(PoseLabel::Open));

        std::vector<GestureEvent> events;
        if (in.locked)
        {
                state.flex_start.reset();
        }
        else
        {
                if (all_closed && !state.all_closed && !state.grip_closed)
                {
                        events.push_back({GestureKind::GripClose, in.t_device});
                        state.grip_closed = true;
                }
                if (all_open && !state.all_open && state.grip_closed)
                {
                        events.push_back({GestureKind::GripOpen, in.t_device});
                        state.grip_closed = false;
                }

                const std::size_t alt = params.altitude_finger;
                if (count >= 2 && alt < count)
                {
                        bool primaries_open = true;
                        for (std::size_t i = 0; i < count; ++i)
                        {
                                if (i != alt && labels[i] != PoseLabel::Open)
                                {
                                        primaries_open = false;
                                }
                        }
                        const PoseLabel before = state.labels[alt];
                        const PoseLabel now = labels[alt];
                        if (!primaries_open)
                        {
                                state.flex_start.reset();
                        }
                        else if (before == PoseLabel::Open && now == PoseLabel::Closed)
                        {
                                state.flex_start = in.t_device;
                        }
                        else if (before == PoseLabel::Closed && now == PoseLabel::Open && state.flex_start)
                        {
                                const double held = static_cast<double>(in.t_device - *state.flex_start) * 1e-6;
                                if (held <= params.flex_window)
                                {
                                        events.push_back({in.wrist_yaw < params.down_modifier
                                                                  ? GestureKind::AltitudeStepDown
                                                                  : GestureKind::AltitudeStepUp,
                                                          in.t_device});
                                }
                                state.flex_start.reset();
                        }
                        if (state.flex_start
                            && static_cast<double>(in.t_device - *state.flex_start) * 1e-6 > params.flex_window)
                        {
                                state.flex_start.reset();
                        }
                }
        }

        state.labels = std::move(labels);
        state.all_closed = all_closed;
        state.all_open = all_open;
        return events;
}
}
