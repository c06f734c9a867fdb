#include "handfly/pipeline.hpp"

#include "handfly/haptic.hpp"
#include "handfly/uav_sim.hpp"

#include <json.hpp>

#include <map>

namespace handfly
{
std::string_view to_string(Control c)
{
        switch (c)
        {
        case Control::ResetPose:
                return "reset_pose";
        case Control::Arm:
                return "arm";
        case Control::Disarm:
                return "disarm";
        }
        return "reset_pose";
}

std::optional<Control> control_from_string(std::string_view s)
{
        for (Control c : {Control::ResetPose, Control::Arm, Control::Disarm})
        {
                if (to_string(c) == s)
                {
                        return c;
                }
        }
        return std::nullopt;
}

std::optional<Control> parse_control_message(std::string_view text)
{
        const auto j = nlohmann::json::parse(text.begin(), text.end(), nullptr, false);
        if (j.is_discarded() || !j.is_object() || !j.contains("cmd") || !j["cmd"].is_string())
        {
                return std::nullopt;
        }
        return control_from_string(j["cmd"].get<std::string>());
}

std::string serialize_control(Control c, std::uint32_t seq)
{
        nlohmann::ordered_json j;
        j["ctl"] = to_string(c);
        j["seq"] = seq;
        return j.dump();
}

std::string serialize_frame(const FrameState& f, const wire::IngestReport& ingest)
{
        nlohmann::ordered_json s;
        s["wrist"] = {f.wrist.roll, f.wrist.pitch, f.wrist.yaw};
        s["fingers"] = f.finger_pitch;
        nlohmann::ordered_json labels = nlohmann::ordered_json::array();
        for (auto l : f.finger_labels)
        {
                labels.push_back(gesture::to_string(l));
        }
        s["labels"] = std::move(labels);
        s["lock"] = f.lock.locked;
        s["armed"] = f.armed;
        s["calibrated"] = f.calibrated;
        s["established"] = f.established;
        s["ingest"] = {{"received", ingest.received},
                       {"dropped", ingest.dropped},
                       {"reordered", ingest.reordered},
                       {"malformed", ingest.malformed}};
        nlohmann::ordered_json j;
        j["state"] = std::move(s);
        j["t"] = f.t_device;
        return j.dump();
}

ChainParams chain_params(const Config& c)
{
        return {c.median_half_width,
                static_cast<std::size_t>(c.calib_samples),
                c.calib_motion_limit,
                c.accel_guard,
                c.alpha,
                c.beta};
}

PipelineCore::PipelineCore(const Config& config)
        : config_(config),
          chain_params_(chain_params(config)),
          fingers_(config.fingers),
          wrist_(chain_params_),
          armed_(config.armed)
{
        config_.validate();
        begin_session({config.fingers, config.rate_hz});
}

void PipelineCore::begin_session(const wire::SessionHeader& header)
{
        fingers_ = header.fingers;
        wrist_ = WristChain(chain_params_);
        finger_chains_.assign(static_cast<std::size_t>(fingers_), FingerChain(chain_params_));
        ref_ = {};
        lock_ = {};
        gestures_ = {};
        target_ = {};
        target_.altitude_target = config_.altitude_initial;
        last_cmd_ = target_;
        last_t_device_.reset();
        calibrated_at_.reset();
        frame_ = {};
        frame_.armed = armed_;
}

bool PipelineCore::warm() const
{
        return calibrated_at_ && last_t_device_
               && static_cast<double>(*last_t_device_ - *calibrated_at_) * 1e-6 >= config_.warm_seconds;
}

void PipelineCore::apply_controls(std::uint32_t seq, StepOutput& out)
{
        while (!pending_.empty())
        {
                const Control c = pending_.front();
                pending_.pop_front();
                AppliedControl applied{c, seq, true};
                switch (c)
                {
                case Control::ResetPose: {
                        if (!warm())
                        {
                                applied.accepted = false;
                                break;
                        }
                        std::vector<double> pitches;
                        for (const auto& f : finger_chains_)
                        {
                                pitches.push_back(f.pitch());
                        }
                        ref_ = pose::reset_pose(wrist_.orientation(), pitches);
                        break;
                }
                case Control::Arm:
                        armed_ = true;
                        break;
                case Control::Disarm:
                        armed_ = false;
                        break;
                }
                out.controls.push_back(applied);
        }
}

StepOutput PipelineCore::process(const wire::GlovePacket& p)
{
        if (static_cast<int>(p.fingers.size()) != fingers_)
        {
                throw wire::FingerCountMismatch(fingers_, static_cast<int>(p.fingers.size()));
        }
        StepOutput out;

        wrist_.push(p.palm, p.t_device);
        for (std::size_t i = 0; i < finger_chains_.size(); ++i)
        {
                finger_chains_[i].push(p.fingers[i], p.t_device);
        }
        const double dt = last_t_device_ ? static_cast<double>(p.t_device - *last_t_device_) * 1e-6 : 0.0;
        last_t_device_ = p.t_device;

        if (!calibrated_at_ && wrist_.calibrated()
            && std::all_of(finger_chains_.begin(), finger_chains_.end(), [](const auto& f) { return f.calibrated(); }))
        {
                calibrated_at_ = p.t_device;
        }

        apply_controls(p.seq, out);

        if (config_.auto_reference && !ref_.established && warm())
        {
                std::vector<double> pitches;
                for (const auto& f : finger_chains_)
                {
                        pitches.push_back(f.pitch());
                }
                ref_ = pose::reset_pose(wrist_.orientation(), pitches);
        }

        command::ControlCommand next = command::hover(target_);
        if (ref_.established && dt > 0)
        {
                const Quaternion& q = wrist_.orientation();
                ref_ = pose::zero_back_update(ref_, q, norm(wrist_.last().gyro), dt, config_.zero_back());
                const Euler rel = pose::relative_orientation(ref_, q);
                lock_ = pose::finger_lock_update(lock_, rel, dt, config_.lock());

                std::vector<double> pitches(finger_chains_.size());
                for (std::size_t i = 0; i < pitches.size(); ++i)
                {
                        pitches[i] = finger_chains_[i].pitch() - ref_.finger_ref[i];
                }
                out.events = gesture::gesture_step(gestures_, {pitches, lock_.locked, rel.yaw, p.t_device},
                                                   config_.gestures());
                target_ = command::apply_events(target_, out.events, config_.altitude_step);

                const auto sp = command::map_attitude(rel, config_.attitude_map());
                next = target_;
                next.v_forward = sp.v_forward;
                next.v_lateral = sp.v_lateral;
                next.yaw_rate = sp.yaw_rate;

                frame_.wrist = rel;
                frame_.finger_pitch = pitches;
                frame_.finger_labels = gestures_.labels;
        }
        next.t_device = p.t_device;

        command::ControlCommand cmd = dt > 0 ? command::rate_limit(last_cmd_, next, dt, config_.rate_limits()) : next;
        if (!armed_)
        {
                cmd = command::hover(cmd);
        }
        last_cmd_ = cmd;
        out.command = cmd;

        frame_.calibrated = calibrated_at_.has_value();
        frame_.established = ref_.established;
        frame_.armed = armed_;
        frame_.lock = lock_;
        frame_.t_device = p.t_device;
        return out;
}

ReplayOutput recorded_outputs(const std::vector<session::SessionRecord>& records)
{
        ReplayOutput out;
        for (const auto& r : records)
        {
                if (r.stream == session::Stream::Command)
                {
                        out.commands.push_back(r.payload);
                }
                else if (r.stream == session::Stream::Event)
                {
                        const auto j = nlohmann::json::parse(r.payload, nullptr, false);
                        if (j.is_object() && j.contains("evt"))
                        {
                                out.gesture_events.push_back(r.payload);
                        }
                        else if (j.is_object() && j.contains("vib"))
                        {
                                out.haptic_events.push_back(r.payload);
                        }
                        else if (j.is_object() && j.contains("ctl"))
                        {
                                out.controls.push_back(r.payload);
                        }
                }
        }
        return out;
}

ReplayOutput replay_pipeline(const std::vector<session::SessionRecord>& records, const Config& config)
{
        // Controls are re-applied at the packet they were originally applied to.
        std::multimap<std::uint32_t, Control> controls;
        for (const auto& r : records)
        {
                if (r.stream != session::Stream::Event)
                {
                        continue;
                }
                const auto j = nlohmann::json::parse(r.payload, nullptr, false);
                if (j.is_object() && j.contains("ctl") && j["ctl"].is_string() && j.contains("seq"))
                {
                        if (const auto c = control_from_string(j["ctl"].get<std::string>()))
                        {
                                controls.emplace(j["seq"].get<std::uint32_t>(), *c);
                        }
                }
        }

        ReplayOutput out;
        PipelineCore core(config);
        wire::Ingestor ingestor({config.fingers, config.rate_hz});
        haptic::HapticMonitor monitor(config.haptic_thresholds());
        for (const auto& r : records)
        {
                if (r.stream == session::Stream::Glove)
                {
                        auto outcome = ingestor.push(r.payload, r.t_host);
                        if (outcome.header)
                        {
                                core.begin_session(*outcome.header);
                        }
                        if (!outcome.accepted)
                        {
                                continue;
                        }
                        const auto [first, last] = controls.equal_range(outcome.accepted->seq);
                        for (auto it = first; it != last; ++it)
                        {
                                core.request(it->second);
                        }
                        const StepOutput step = core.process(*outcome.accepted);
                        for (const auto& c : step.controls)
                        {
                                out.controls.push_back(serialize_control(c.control, c.seq));
                        }
                        for (const auto& e : step.events)
                        {
                                out.gesture_events.push_back(gesture::serialize_event(e));
                        }
                        out.commands.push_back(command::serialize_command(step.command));
                }
                else if (r.stream == session::Stream::Telemetry)
                {
                        if (const auto tel = sim::parse_telemetry(r.payload))
                        {
                                for (const auto& e : monitor.step(*tel))
                                {
                                        out.haptic_events.push_back(haptic::serialize_event(e));
                                }
                        }
                }
        }
        out.ingest = ingestor.state().report;
        return out;
}
}
