#include "handfly/filters.hpp"

#include <algorithm>
#include <cassert>

namespace handfly
{
Quaternion slerp(const Quaternion& from, Quaternion to, double fraction)
{
        double c = dot(from, to);
        if (c < 0)
        {
                to = -1.0 * to;
                c = -c;
        }
        if (c > 1 - 1e-12)
        {
                return (from + fraction * (to + -1.0 * from)).normalized();
        }
        const double omega = std::acos(std::min(1.0, c));
        const double s = std::sin(omega);
        const double a = std::sin((1 - fraction) * omega) / s;
        const double b = std::sin(fraction * omega) / s;
        return (a * from + b * to).normalized();
}

double wrap_angle(double a)
{
        a = std::remainder(a, 2 * kPi);
        if (a <= -kPi)
        {
                a += 2 * kPi;
        }
        return a;
}
}

namespace handfly::filters
{
MedianWindow::MedianWindow(int half_width) : half_width_(half_width)
{
        if (half_width < 1)
        {
                throw std::invalid_argument("median half width must be positive");
        }
        ring_.resize(size());
        sorted_.reserve(size());
}

double MedianWindow::push(double x)
{
        const std::size_t n = size();
        if (fill_ == n)
        {
                const double oldest = ring_[head_];
                sorted_.erase(std::lower_bound(sorted_.begin(), sorted_.end(), oldest));
        }
        else
        {
                ++fill_;
        }
        ring_[head_] = x;
        head_ = (head_ + 1) % n;
        sorted_.insert(std::upper_bound(sorted_.begin(), sorted_.end(), x), x);

        if (fill_ < n)
        {
                return x;
        }
        return sorted_[static_cast<std::size_t>(half_width_)];
}

ImuMedian::ImuMedian(int half_width)
        : channels_{MedianWindow(half_width), MedianWindow(half_width), MedianWindow(half_width),
                    MedianWindow(half_width), MedianWindow(half_width), MedianWindow(half_width)}
{
}

ImuReading ImuMedian::push(const ImuReading& r)
{
        ImuReading out;
        for (std::size_t i = 0; i < 3; ++i)
        {
                out.gyro[i] = channels_[i].push(r.gyro[i]);
                out.accel[i] = channels_[3 + i].push(r.accel[i]);
        }
        return out;
}

ZeroOffset zero_offset_calibrate(std::span<const ImuReading> samples, std::size_t min_samples, double motion_limit)
{
        if (samples.size() < min_samples)
        {
                throw CalibrationError(CalibrationError::Kind::InsufficientSamples,
                                       "need at least " + std::to_string(min_samples) + " samples at rest");
        }
        Vec3 sum{};
        std::size_t count = 0;
        for (const ImuReading& r : samples)
        {
                if (count > 0)
                {
                        const Vec3 mean = (1.0 / static_cast<double>(count)) * sum;
                        for (std::size_t i = 0; i < 3; ++i)
                        {
                                if (std::abs(r.gyro[i] - mean[i]) > motion_limit)
                                {
                                        throw CalibrationError(CalibrationError::Kind::MotionDuringCalibration,
                                                               "gyro moved during calibration");
                                }
                        }
                }
                sum = sum + r.gyro;
                ++count;
        }
        return {(1.0 / static_cast<double>(count)) * sum, count};
}

ZeroOffsetCalibrator::ZeroOffsetCalibrator(std::size_t min_samples, double motion_limit)
        : min_samples_(min_samples), motion_limit_(motion_limit)
{
}

bool ZeroOffsetCalibrator::feed(const ImuReading& r)
{
        if (done_)
        {
                return true;
        }
        if (count_ > 0)
        {
                const Vec3 mean = (1.0 / static_cast<double>(count_)) * sum_;
                for (std::size_t i = 0; i < 3; ++i)
                {
                        if (std::abs(r.gyro[i] - mean[i]) > motion_limit_)
                        {
                                sum_ = {};
                                count_ = 0;
                                ++restarts_;
                                break;
                        }
                }
        }
        sum_ = sum_ + r.gyro;
        ++count_;
        if (count_ >= min_samples_)
        {
                offset_ = {(1.0 / static_cast<double>(count_)) * sum_, count_};
                done_ = true;
        }
        return done_;
}

std::optional<Tilt> accel_tilt(const Vec3& a, double guard)
{
        if (norm(a) <= guard)
        {
                return std::nullopt;
        }
        return Tilt{std::atan2(a[1], a[2]), std::atan2(-a[0], std::sqrt(a[1] * a[1] + a[2] * a[2])), 0.0};
}

ComplementaryState complementary_update(const ComplementaryState& s, const ImuReading& r, double dt, double guard)
{
        if (!(dt > 0))
        {
                throw NonPositiveDt();
        }
        ComplementaryState out = s;
        const double roll_gyro = s.roll + r.gyro[0] * dt;
        const double pitch_gyro = s.pitch + r.gyro[1] * dt;
        if (const auto tilt = accel_tilt(r.accel, guard))
        {
                out.roll = s.alpha * roll_gyro + (1 - s.alpha) * tilt->roll;
                out.pitch = s.alpha * pitch_gyro + (1 - s.alpha) * tilt->pitch;
        }
        else
        {
                out.roll = roll_gyro;
                out.pitch = pitch_gyro;
        }
        return out;
}

QuaternionState madgwick_update(const QuaternionState& s, const ImuReading& r, double dt, double guard)
{
        if (!(dt > 0))
        {
                throw NonPositiveDt();
        }
        const Quaternion& q = s.q;
        const auto& w = r.gyro;

        // q_dot = 1/2 q (x) (0, w)
        Quaternion q_dot = 0.5 * (q * Quaternion{0, w[0], w[1], w[2]});

        const double a_norm = norm(r.accel);
        if (a_norm > guard)
        {
                const double ax = r.accel[0] / a_norm;
                const double ay = r.accel[1] / a_norm;
                const double az = r.accel[2] / a_norm;

                // Residual between world gravity rotated into the body frame and the measurement.
                const double f1 = 2 * (q.x * q.z - q.w * q.y) - ax;
                const double f2 = 2 * (q.w * q.x + q.y * q.z) - ay;
                const double f3 = 2 * (0.5 - q.x * q.x - q.y * q.y) - az;

                // J^T f
                const Quaternion grad{-2 * q.y * f1 + 2 * q.x * f2,
                                      2 * q.z * f1 + 2 * q.w * f2 - 4 * q.x * f3,
                                      -2 * q.w * f1 + 2 * q.z * f2 - 4 * q.y * f3,
                                      2 * q.x * f1 + 2 * q.y * f2};
                const double g_norm = grad.norm();
                if (g_norm > 0)
                {
                        q_dot = q_dot + (-s.beta / g_norm) * grad;
                }
        }

        QuaternionState out = s;
        out.q = (q + dt * q_dot).normalized();
        return out;
}

Euler quat_to_euler(const Quaternion& q)
{
        const double sin_pitch = 2 * (q.w * q.y - q.z * q.x);
        if (std::abs(sin_pitch) > 1 - 1e-6)
        {
                const double pitch = std::copysign(kPi / 2, sin_pitch);
                const double yaw = sin_pitch > 0 ? -2 * std::atan2(q.x, q.w) : 2 * std::atan2(q.x, q.w);
                return {0.0, pitch, wrap_angle(yaw)};
        }
        return {std::atan2(2 * (q.w * q.x + q.y * q.z), 1 - 2 * (q.x * q.x + q.y * q.y)),
                std::asin(sin_pitch),
                std::atan2(2 * (q.w * q.z + q.x * q.y), 1 - 2 * (q.y * q.y + q.z * q.z))};
}

Quaternion euler_to_quat(const Euler& e)
{
        return axis_angle({0, 0, 1}, e.yaw) * axis_angle({0, 1, 0}, e.pitch) * axis_angle({1, 0, 0}, e.roll);
}
}
