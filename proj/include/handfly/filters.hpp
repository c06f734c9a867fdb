#pragma once

#include "handfly/vec.hpp"
#include "handfly/wire.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace handfly::filters
{
using wire::ImuReading;

/// Accelerometer magnitude at or below which tilt is undefined (free fall / sensor dropout).
inline constexpr double kAccelGuard = 0.5;

class NonPositiveDt : public std::invalid_argument
{
public:
        NonPositiveDt() : std::invalid_argument("time step must be positive") {}
};

/// Streaming centered median over 2n+1 samples, realized causally as an n-sample delay.
/// Until the window is full the input passes through unchanged.
class MedianWindow
{
public:
        explicit MedianWindow(int half_width = 2);

        double push(double x);

        [[nodiscard]] int half_width() const { return half_width_; }
        [[nodiscard]] std::size_t size() const { return 2 * static_cast<std::size_t>(half_width_) + 1; }
        [[nodiscard]] std::size_t fill() const { return fill_; }
        [[nodiscard]] bool warm() const { return fill_ >= size(); }

private:
        int half_width_;
        std::vector<double> ring_;   // arrival order
        std::vector<double> sorted_; // same samples, ascending
        std::size_t head_ = 0;
        std::size_t fill_ = 0;
};

/// Six median windows, one per gyro/accel axis.
class ImuMedian
{
public:
        explicit ImuMedian(int half_width = 2);

        ImuReading push(const ImuReading& r);

private:
        std::array<MedianWindow, 6> channels_;
};

struct ZeroOffset
{
        Vec3 gyro_bias{};
        std::size_t samples = 0;

        [[nodiscard]] ImuReading apply(const ImuReading& r) const
        {
                return {r.gyro - gyro_bias, r.accel};
        }
};

class CalibrationError : public std::runtime_error
{
public:
        enum class Kind
        {
                InsufficientSamples,
                MotionDuringCalibration,
        };

        CalibrationError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

        [[nodiscard]] Kind kind() const { return kind_; }

private:
        Kind kind_;
};

inline constexpr std::size_t kMinCalibrationSamples = 100;
inline constexpr double kCalibrationMotionLimit = 0.1;

/// Gyro bias as the per-axis mean of samples captured at rest. The accelerometer is not
/// calibrated because gravity is present at rest.
ZeroOffset zero_offset_calibrate(std::span<const ImuReading> samples,
                                 std::size_t min_samples = kMinCalibrationSamples,
                                 double motion_limit = kCalibrationMotionLimit);

/// Streaming form of zero_offset_calibrate: collects samples until `min_samples` are
/// gathered. Motion restarts the window.
class ZeroOffsetCalibrator
{
public:
        explicit ZeroOffsetCalibrator(std::size_t min_samples = kMinCalibrationSamples,
                                      double motion_limit = kCalibrationMotionLimit);

        /// Returns true once calibration has completed (then the bias is frozen).
        bool feed(const ImuReading& r);

        [[nodiscard]] bool done() const { return done_; }
        [[nodiscard]] const ZeroOffset& offset() const { return offset_; }
        [[nodiscard]] std::size_t restarts() const { return restarts_; }

private:
        std::size_t min_samples_;
        double motion_limit_;
        Vec3 sum_{};
        std::size_t count_ = 0;
        std::size_t restarts_ = 0;
        bool done_ = false;
        ZeroOffset offset_;
};

struct Tilt
{
        double roll = 0;
        double pitch = 0;
        double yaw = 0; // always zero
};

/// Roll and pitch from the gravity direction. nullopt when |a| <= guard.
std::optional<Tilt> accel_tilt(const Vec3& a, double guard = kAccelGuard);

struct ComplementaryState
{
        double roll = 0;
        double pitch = 0;
        double alpha = 0.98;
        std::optional<std::uint64_t> last_t_device;
};

/// theta_gyro = theta_prev + omega * dt, fused = alpha * theta_gyro + (1 - alpha) * theta_accel,
/// per axis (roll with omega_x, pitch with omega_y). Degenerate accel falls back to the gyro term.
ComplementaryState complementary_update(const ComplementaryState& s, const ImuReading& r, double dt,
                                        double guard = kAccelGuard);

struct QuaternionState
{
        Quaternion q = Quaternion::identity();
        double beta = 0.1;
        std::optional<std::uint64_t> last_t_device;
};

/// Gyro + accelerometer gradient-descent orientation filter (IMU variant, no magnetometer).
QuaternionState madgwick_update(const QuaternionState& s, const ImuReading& r, double dt,
                                double guard = kAccelGuard);

/// Z-Y-X intrinsic Euler angles. Near pitch = +-90 deg roll is set to 0 and yaw carries the free angle.
Euler quat_to_euler(const Quaternion& q);

Quaternion euler_to_quat(const Euler& e);
}
