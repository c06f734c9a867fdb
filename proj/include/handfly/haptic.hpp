#pragma once

#include "handfly/uav_sim.hpp"

#include <stdexcept>
#include <string>
#include <vector>

namespace handfly::haptic
{
struct HapticEvent
{
        int level = 1; // 1 or 2
        bool on = true;
        double speed_at_trigger = 0;
        double t_sim = 0;

        friend bool operator==(const HapticEvent&, const HapticEvent&) = default;
};

class BadThresholds : public std::invalid_argument
{
public:
        using std::invalid_argument::invalid_argument;
};

struct Thresholds
{
        double warn = 0.7;       // m/s, level 1
        double critical = 0.9;   // m/s, level 2
        double hysteresis = 0.1; // m/s

        /// Throws BadThresholds unless 0 < warn < critical, hysteresis > 0 and warn - hysteresis > 0.
        void validate() const;
};

/// Two-level Schmitt trigger on telemetry speed.
class HapticMonitor
{
public:
        explicit HapticMonitor(Thresholds thresholds = {});

        /// Level-1 events precede level-2 on the way up, level-2 precede level-1 on the way down.
        std::vector<HapticEvent> step(const sim::TelemetryPacket& tel);

        [[nodiscard]] bool active(int level) const { return active_[level - 1]; }
        [[nodiscard]] const Thresholds& thresholds() const { return thresholds_; }

private:
        Thresholds thresholds_;
        bool active_[2] = {false, false};
};

/// Actuator message for the glove: `{"vib":{"level":1,"on":true}}`
std::string serialize_actuator(const HapticEvent& e);

/// Session/console record: actuator message plus trigger speed and sim time.
std::string serialize_event(const HapticEvent& e);
}
