#include "handfly/reference_pose.hpp"

#include "handfly/filters.hpp"

namespace handfly::pose
{
ReferencePose reset_pose(const Quaternion& current_wrist, std::span<const double> current_fingers,
                         bool estimator_warm)
{
        if (!estimator_warm)
        {
                throw EstimatorCold();
        }
        return {current_wrist.normalized(), {current_fingers.begin(), current_fingers.end()}, true};
}

ReferencePose zero_back_update(const ReferencePose& ref, const Quaternion& current, double gyro_mag, double dt,
                               const ZeroBackParams& params)
{
        if (!ref.established)
        {
                throw EstimatorCold();
        }
        if (gyro_mag >= params.stillness)
        {
                return ref;
        }
        const double deviation = angular_distance(ref.q_ref, current);
        if (deviation >= params.capture_band || deviation == 0)
        {
                return ref;
        }
        ReferencePose out = ref;
        out.q_ref = slerp(ref.q_ref, current, std::min(1.0, params.rate * dt));
        return out;
}

Euler relative_orientation(const ReferencePose& ref, const Quaternion& current)
{
        if (!ref.established)
        {
                throw EstimatorCold();
        }
        return filters::quat_to_euler(ref.q_ref.conjugate() * current);
}

LockState finger_lock_update(const LockState& lock, const Euler& wrist_relative, double dt, const LockParams& params)
{
        if (std::abs(wrist_relative.roll) > params.deadzone || std::abs(wrist_relative.pitch) > params.deadzone)
        {
                return {true, params.release};
        }
        if (!lock.locked)
        {
                return {false, 0};
        }
        const double remaining = lock.unlock_timer - dt;
        // Tolerance absorbs accumulated rounding of repeated fixed-step decrements.
        if (remaining <= 1e-9)
        {
                return {false, 0};
        }
        return {true, remaining};
}
}
