#pragma once

#include "handfly/vec.hpp"

#include <span>
#include <stdexcept>
#include <vector>

namespace handfly::pose
{
class EstimatorCold : public std::logic_error
{
public:
        EstimatorCold() : std::logic_error("orientation estimator not warm / reference not established") {}
};

struct ReferencePose
{
        Quaternion q_ref = Quaternion::identity();
        std::vector<double> finger_ref; // per-finger pitch offsets, radians
        bool established = false;

        friend bool operator==(const ReferencePose&, const ReferencePose&) = default;
};

/// Captures the current wrist orientation and finger pitches as the zero pose.
/// Throws EstimatorCold if `estimator_warm` is false.
ReferencePose reset_pose(const Quaternion& current_wrist, std::span<const double> current_fingers,
                         bool estimator_warm = true);

struct ZeroBackParams
{
        double capture_band = deg2rad(5.0); // rad
        double rate = 0.02;                 // fraction of remaining deviation per second
        double stillness = 0.05;            // rad/s
};

/// Slews q_ref toward `current` while the hand is still and close to neutral.
/// Outside the gate the reference is returned unchanged.
ReferencePose zero_back_update(const ReferencePose& ref, const Quaternion& current, double gyro_mag, double dt,
                               const ZeroBackParams& params = {});

/// q_ref^-1 (x) current as Z-Y-X Euler angles.
Euler relative_orientation(const ReferencePose& ref, const Quaternion& current);

struct LockState
{
        bool locked = false;
        double unlock_timer = 0; // seconds remaining

        friend bool operator==(const LockState&, const LockState&) = default;
};

struct LockParams
{
        double deadzone = deg2rad(5.0);
        double release = 0.3; // s
};

LockState finger_lock_update(const LockState& lock, const Euler& wrist_relative, double dt,
                             const LockParams& params = {});
}
