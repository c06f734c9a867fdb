#include "handfly/haptic.hpp"

#include <json.hpp>

namespace handfly::haptic
{
void Thresholds::validate() const
{
        if (!(warn > 0 && warn < critical && hysteresis > 0 && warn - hysteresis > 0))
        {
                throw BadThresholds("haptic thresholds need 0 < warn - hysteresis, warn < critical, hysteresis > 0");
        }
}

HapticMonitor::HapticMonitor(Thresholds thresholds) : thresholds_(thresholds)
{
        thresholds_.validate();
}

std::vector<HapticEvent> HapticMonitor::step(const sim::TelemetryPacket& tel)
{
        const double on_at[2] = {thresholds_.warn, thresholds_.critical};
        std::vector<HapticEvent> events;
        for (int i = 0; i < 2; ++i)
        {
                if (!active_[i] && tel.speed > on_at[i])
                {
                        active_[i] = true;
                        events.push_back({i + 1, true, tel.speed, tel.t_sim});
                }
        }
        for (int i = 1; i >= 0; --i)
        {
                if (active_[i] && tel.speed < on_at[i] - thresholds_.hysteresis)
                {
                        active_[i] = false;
                        events.push_back({i + 1, false, tel.speed, tel.t_sim});
                }
        }
        return events;
}

std::string serialize_actuator(const HapticEvent& e)
{
        nlohmann::ordered_json vib;
        vib["level"] = e.level;
        vib["on"] = e.on;
        return nlohmann::ordered_json{{"vib", vib}}.dump();
}

std::string serialize_event(const HapticEvent& e)
{
        nlohmann::ordered_json vib;
        vib["level"] = e.level;
        vib["on"] = e.on;
        nlohmann::ordered_json j;
        j["vib"] = std::move(vib);
        j["speed"] = e.speed_at_trigger;
        j["t"] = e.t_sim;
        return j.dump();
}
}
