#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

namespace handfly
{
using Vec3 = std::array<double, 3>;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kGravity = 9.81;

constexpr double deg2rad(double deg) { return deg * kPi / 180.0; }
constexpr double rad2deg(double rad) { return rad * 180.0 / kPi; }

inline double norm(const Vec3& v) { return std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]); }

inline bool all_finite(const Vec3& v)
{
        return std::isfinite(v[0]) && std::isfinite(v[1]) && std::isfinite(v[2]);
}

inline Vec3 operator+(const Vec3& a, const Vec3& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
inline Vec3 operator-(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
inline Vec3 operator*(double s, const Vec3& v) { return {s * v[0], s * v[1], s * v[2]}; }

/// Roll, pitch, yaw in radians (Z-Y-X intrinsic: yaw about z, then pitch about y, then roll about x).
struct Euler
{
        double roll = 0;
        double pitch = 0;
        double yaw = 0;

        friend bool operator==(const Euler&, const Euler&) = default;
};

/// Hamilton quaternion (w, x, y, z). Unit quaternions rotate body vectors into the world frame.
struct Quaternion
{
        double w = 1;
        double x = 0;
        double y = 0;
        double z = 0;

        static constexpr Quaternion identity() { return {1, 0, 0, 0}; }

        [[nodiscard]] double norm() const { return std::sqrt(w * w + x * x + y * y + z * z); }

        [[nodiscard]] Quaternion normalized() const
        {
                const double n = norm();
                return {w / n, x / n, y / n, z / n};
        }

        [[nodiscard]] Quaternion conjugate() const { return {w, -x, -y, -z}; }

        friend bool operator==(const Quaternion&, const Quaternion&) = default;
};

inline Quaternion operator*(const Quaternion& a, const Quaternion& b)
{
        return {a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
                a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
                a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
                a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w};
}

inline Quaternion operator+(const Quaternion& a, const Quaternion& b)
{
        return {a.w + b.w, a.x + b.x, a.y + b.y, a.z + b.z};
}

inline Quaternion operator*(double s, const Quaternion& q) { return {s * q.w, s * q.x, s * q.y, s * q.z}; }

inline double dot(const Quaternion& a, const Quaternion& b)
{
        return a.w * b.w + a.x * b.x + a.y * b.y + a.z * b.z;
}

/// Rotation of `angle` radians about the unit vector `axis`.
inline Quaternion axis_angle(const Vec3& axis, double angle)
{
        const double n = norm(axis);
        const double s = n > 0 ? std::sin(angle / 2) / n : 0.0;
        return {std::cos(angle / 2), s * axis[0], s * axis[1], s * axis[2]};
}

/// Rotation vector (axis * angle) of a unit quaternion, shortest arc.
inline Vec3 rotation_vector(Quaternion q)
{
        if (q.w < 0)
        {
                q = -1.0 * q;
        }
        const double s = std::sqrt(q.x * q.x + q.y * q.y + q.z * q.z);
        if (s < 1e-15)
        {
                return {2 * q.x, 2 * q.y, 2 * q.z};
        }
        const double angle = 2 * std::atan2(s, q.w);
        return {q.x / s * angle, q.y / s * angle, q.z / s * angle};
}

/// Angle in radians between two orientations.
inline double angular_distance(const Quaternion& a, const Quaternion& b)
{
        const double c = std::min(1.0, std::abs(dot(a, b)));
        return 2 * std::acos(c);
}

/// World vector v expressed in the body frame of q.
inline Vec3 rotate_into_body(const Quaternion& q, const Vec3& v)
{
        const Quaternion r = q.conjugate() * Quaternion{0, v[0], v[1], v[2]} * q;
        return {r.x, r.y, r.z};
}

/// Spherical interpolation along the shortest arc, fraction in [0, 1].
Quaternion slerp(const Quaternion& from, Quaternion to, double fraction);

double wrap_angle(double a);
}
