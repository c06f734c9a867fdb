#pragma once

#include "handfly/vec.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace handfly::gesture
{
enum class PoseLabel
{
        Open,
        Closed,
        Indeterminate,
};

std::string_view to_string(PoseLabel label);

enum class GestureKind
{
        GripClose,
        GripOpen,
        AltitudeStepUp,
        AltitudeStepDown,
};

/// Wire name: grip_close, grip_open, alt_up, alt_down.
std::string_view to_string(GestureKind kind);

struct GestureEvent
{
        GestureKind kind;
        std::uint64_t t_device = 0;

        friend bool operator==(const GestureEvent&, const GestureEvent&) = default;
};

/// `{"evt":"grip_close","t":123}`
std::string serialize_event(const GestureEvent& e);

struct GestureParams
{
        double close_below = deg2rad(-50.0); // flexion is negative pitch
        double open_above = deg2rad(-30.0);
        double flex_window = 0.5;             // s, flex-and-release limit for an altitude step
        double down_modifier = deg2rad(-15.0); // wrist yaw below this turns a step into a step down
        std::size_t altitude_finger = 1;
};

PoseLabel classify_finger(double pitch, PoseLabel prev, const GestureParams& params = {});

struct GestureInput
{
        std::span<const double> finger_pitch; // relative to finger_ref, radians
        bool locked = false;
        double wrist_yaw = 0; // relative, radians
        std::uint64_t t_device = 0;
};

struct GestureEngineState
{
        std::vector<PoseLabel> labels;
        bool grip_closed = false;
        bool all_closed = false;
        bool all_open = false;
        std::optional<std::uint64_t> flex_start;
};

/// Advances the finger state machine by one sample. While locked, labels keep tracking the
/// fingers but no events fire, no grip state is latched, and pending flexes are discarded.
std::vector<GestureEvent> gesture_step(GestureEngineState& state, const GestureInput& in,
                                       const GestureParams& params = {});
}
