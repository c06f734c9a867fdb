#pragma once

#include "handfly/command.hpp"
#include "handfly/config.hpp"
#include "handfly/gesture.hpp"
#include "handfly/imu_chain.hpp"
#include "handfly/reference_pose.hpp"
#include "handfly/session_log.hpp"
#include "handfly/wire.hpp"

#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace handfly
{
enum class Control
{
        ResetPose,
        Arm,
        Disarm,
};

std::string_view to_string(Control c);
std::optional<Control> control_from_string(std::string_view s);

/// Console/socket message `{"cmd":"reset_pose"}` etc.
std::optional<Control> parse_control_message(std::string_view text);

/// Session record for a control applied at packet `seq`: `{"ctl":"reset_pose","seq":12}`
std::string serialize_control(Control c, std::uint32_t seq);

struct AppliedControl
{
        Control control;
        std::uint32_t seq = 0;
        bool accepted = true; // reset before the estimators are warm is rejected
};

ChainParams chain_params(const Config& c);

/// Snapshot for the operator console.
struct FrameState
{
        bool calibrated = false;
        bool established = false;
        bool armed = true;
        Euler wrist; // relative, radians
        std::vector<double> finger_pitch; // relative, radians
        std::vector<gesture::PoseLabel> finger_labels;
        pose::LockState lock;
        std::uint64_t t_device = 0;
};

std::string serialize_frame(const FrameState& f, const wire::IngestReport& ingest);

struct StepOutput
{
        command::ControlCommand command;
        std::vector<gesture::GestureEvent> events;
        std::vector<AppliedControl> controls;
};

/// The deterministic glove-to-command path: filters, reference pose, lock, gestures,
/// mapping and rate limiting. One command per accepted packet; output depends only on the
/// packet sequence and the controls requested between packets.
class PipelineCore
{
public:
        explicit PipelineCore(const Config& config);

        /// Queues a control; it takes effect at the next processed packet.
        void request(Control c) { pending_.push_back(c); }

        /// Starts a new session: estimators and reference are rebuilt for the header's finger count.
        void begin_session(const wire::SessionHeader& header);

        StepOutput process(const wire::GlovePacket& p);

        [[nodiscard]] const FrameState& frame() const { return frame_; }
        [[nodiscard]] const pose::ReferencePose& reference() const { return ref_; }
        [[nodiscard]] const command::ControlCommand& last_command() const { return last_cmd_; }
        [[nodiscard]] bool warm() const;

private:
        void apply_controls(std::uint32_t seq, StepOutput& out);

        Config config_;
        ChainParams chain_params_;
        int fingers_;
        WristChain wrist_;
        std::vector<FingerChain> finger_chains_;
        pose::ReferencePose ref_;
        pose::LockState lock_;
        gesture::GestureEngineState gestures_;
        command::ControlCommand target_; // persistent discrete state: altitude and gripper
        command::ControlCommand last_cmd_;
        std::optional<std::uint64_t> last_t_device_;
        std::optional<std::uint64_t> calibrated_at_;
        bool armed_;
        std::deque<Control> pending_;
        FrameState frame_;
};

/// Outputs of re-running a recorded session through a fresh core and haptic monitor.
struct ReplayOutput
{
        std::vector<std::string> commands;
        std::vector<std::string> gesture_events;
        std::vector<std::string> haptic_events;
        std::vector<std::string> controls;
        wire::IngestReport ingest;
};

/// Splits recorded command/event payloads into the same buckets as ReplayOutput.
ReplayOutput recorded_outputs(const std::vector<session::SessionRecord>& records);

/// Feeds glove records through Ingestor and PipelineCore (controls re-applied at their logged
/// packet seq) and telemetry records through a HapticMonitor.
ReplayOutput replay_pipeline(const std::vector<session::SessionRecord>& records, const Config& config);
}
