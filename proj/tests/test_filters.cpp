#include "handfly/filters.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <deque>
#include <random>

using namespace handfly;
using namespace handfly::filters;

namespace
{
double sorted_median(std::deque<double> window)
{
        std::vector<double> v(window.begin(), window.end());
        std::sort(v.begin(), v.end());
        return v[v.size() / 2];
}

// Exact body-rate propagation over one step: q (x) exp(omega * dt / 2).
Quaternion exp_step(const Quaternion& q, const Vec3& omega, double dt)
{
        const double angle = norm(omega) * dt;
        if (angle == 0)
        {
                return q;
        }
        return q * axis_angle((1.0 / norm(omega)) * omega, angle);
}

double quat_gap(const Quaternion& a, const Quaternion& b)
{
        const double plus = std::hypot(std::hypot(a.w - b.w, a.x - b.x), std::hypot(a.y - b.y, a.z - b.z));
        const double minus = std::hypot(std::hypot(a.w + b.w, a.x + b.x), std::hypot(a.y + b.y, a.z + b.z));
        return std::min(plus, minus);
}

ImuReading still(const Vec3& accel = {0, 0, kGravity})
{
        return {{0, 0, 0}, accel};
}
}

TEST(Median, ConstantStream)
{
        MedianWindow w(1);
        for (int i = 0; i < 3; ++i)
        {
                EXPECT_EQ(w.push(5), 5);
        }
}

TEST(Median, OrderStatistic)
{
        MedianWindow w(1);
        w.push(5);
        w.push(100);
        EXPECT_EQ(w.push(6), 6);
}

TEST(Median, WarmupPassesThrough)
{
        MedianWindow w(2);
        EXPECT_EQ(w.push(1), 1);
        EXPECT_EQ(w.push(9), 9);
        EXPECT_EQ(w.push(-3), -3);
        EXPECT_EQ(w.push(4), 4);
        EXPECT_FALSE(w.warm());
        EXPECT_EQ(w.push(2), 2);
        EXPECT_TRUE(w.warm());
}

TEST(Median, MatchesSortOracle)
{
        std::mt19937_64 rng(42);
        std::uniform_real_distribution<double> u(-100, 100);
        std::uniform_int_distribution<int> small(-3, 3);
        for (int n : {1, 2, 4})
        {
                MedianWindow w(n);
                std::deque<double> window;
                const std::size_t size = 2 * static_cast<std::size_t>(n) + 1;
                for (int k = 0; k < 20000; ++k)
                {
                        // Integer-valued samples force duplicates into the window.
                        const double x = k % 3 == 0 ? small(rng) : u(rng);
                        window.push_back(x);
                        if (window.size() > size)
                        {
                                window.pop_front();
                        }
                        const double y = w.push(x);
                        const double expected = window.size() < size ? x : sorted_median(window);
                        ASSERT_EQ(y, expected) << "n=" << n << " k=" << k;
                }
        }
}

TEST(AccelTilt, Examples)
{
        const auto flat = accel_tilt({0, 0, 9.81});
        ASSERT_TRUE(flat);
        EXPECT_EQ(flat->roll, 0);
        EXPECT_EQ(flat->pitch, 0);
        const auto side = accel_tilt({0, 9.81, 0});
        EXPECT_DOUBLE_EQ(side->roll, kPi / 2);
        EXPECT_EQ(side->pitch, 0);
        const auto nose = accel_tilt({-9.81, 0, 0});
        EXPECT_EQ(nose->roll, 0);
        EXPECT_DOUBLE_EQ(nose->pitch, kPi / 2);
        EXPECT_EQ(nose->yaw, 0);
}

TEST(AccelTilt, DegenerateGuard)
{
        EXPECT_FALSE(accel_tilt({0, 0, 0}));
        EXPECT_FALSE(accel_tilt({0.3, 0.3, 0.2}));
        EXPECT_TRUE(accel_tilt({0, 0, 0.51}));
}

TEST(AccelTilt, ScaleInvariant)
{
        std::mt19937_64 rng(5);
        std::uniform_real_distribution<double> u(-10, 10);
        std::uniform_real_distribution<double> scale(0.1, 10);
        for (int i = 0; i < 1000; ++i)
        {
                const Vec3 a{u(rng), u(rng), u(rng)};
                const double s = scale(rng);
                const auto t1 = accel_tilt(a, 0);
                const auto t2 = accel_tilt(s * a, 0);
                ASSERT_TRUE(t1 && t2);
                EXPECT_NEAR(t1->roll, t2->roll, 1e-12);
                EXPECT_NEAR(t1->pitch, t2->pitch, 1e-12);
        }
}

TEST(Complementary, AlphaOneIgnoresAccel)
{
        ComplementaryState s;
        s.alpha = 1.0;
        const auto out = complementary_update(s, {{0.1, 0, 0}, {0, 5, 1}}, 0.01);
        EXPECT_DOUBLE_EQ(out.roll, 0.001);
        EXPECT_EQ(out.pitch, 0);
}

TEST(Complementary, AlphaZeroIsAccelTilt)
{
        ComplementaryState s;
        s.alpha = 0.0;
        s.roll = 1.2;
        s.pitch = -0.4;
        const auto out = complementary_update(s, {{3, -2, 1}, {0, 0, 9.81}}, 0.01);
        EXPECT_EQ(out.roll, 0);
        EXPECT_EQ(out.pitch, 0);
}

TEST(Complementary, GeometricConvergence)
{
        const double tilt = deg2rad(10);
        const Vec3 a{0, kGravity * std::sin(tilt), kGravity * std::cos(tilt)};
        ComplementaryState s;
        s.alpha = 0.98;
        for (int k = 1; k <= 1000; ++k)
        {
                s = complementary_update(s, {{0, 0, 0}, a}, 0.01);
                const double err = tilt - s.roll;
                ASSERT_NEAR(err, std::pow(0.98, k) * tilt, 1e-12) << k;
        }
        EXPECT_NEAR(rad2deg(tilt - [&] {
                            ComplementaryState t;
                            for (int k = 0; k < 300; ++k)
                            {
                                    t = complementary_update(t, {{0, 0, 0}, a}, 0.01);
                            }
                            return t.roll;
                    }()),
                    0.023, 0.001);
}

TEST(Complementary, DegenerateAccelIntegratesGyro)
{
        ComplementaryState s;
        s.roll = 0.2;
        const auto out = complementary_update(s, {{1, -1, 0}, {0, 0, 0.1}}, 0.01);
        EXPECT_DOUBLE_EQ(out.roll, 0.21);
        EXPECT_DOUBLE_EQ(out.pitch, -0.01);
}

TEST(Complementary, RejectsNonPositiveDt)
{
        EXPECT_THROW(complementary_update({}, still(), 0), NonPositiveDt);
        EXPECT_THROW(madgwick_update({}, still(), -1), NonPositiveDt);
}

TEST(Madgwick, StaticGravityKeepsIdentity)
{
        QuaternionState s;
        for (int i = 0; i < 10000; ++i)
        {
                s = madgwick_update(s, still(), 0.01);
                ASSERT_LT(quat_gap(s.q, Quaternion::identity()), 1e-9);
        }
}

TEST(Madgwick, YawIntegration)
{
        QuaternionState s;
        for (int i = 0; i < 157; ++i)
        {
                s = madgwick_update(s, {{0, 0, 1}, {0, 0, 0}}, 0.01);
        }
        EXPECT_NEAR(quat_to_euler(s.q).yaw, kPi / 2, 0.01);
}

TEST(Madgwick, BetaZeroMatchesExponentialPropagation)
{
        std::mt19937_64 rng(9);
        std::uniform_real_distribution<double> u(-1, 1);
        QuaternionState s;
        s.beta = 0;
        for (int i = 0; i < 10000; ++i)
        {
                Vec3 w{u(rng), u(rng), u(rng)};
                w = (0.5 / std::max(1.0, norm(w))) * w;
                const Vec3 a{u(rng) * 10, u(rng) * 10, u(rng) * 10};
                const Quaternion expected = exp_step(s.q, w, 0.01);
                s = madgwick_update(s, {w, a}, 0.01);
                ASSERT_LT(quat_gap(s.q, expected), 1e-8) << i;
                s.q = expected;
        }
}

TEST(Madgwick, NormPreserved)
{
        std::mt19937_64 rng(10);
        std::uniform_real_distribution<double> u(-5, 5);
        QuaternionState s;
        for (int i = 0; i < 10000; ++i)
        {
                s = madgwick_update(s, {{u(rng), u(rng), u(rng)}, {u(rng), u(rng), u(rng)}}, 0.01);
                ASSERT_NEAR(s.q.norm(), 1.0, 1e-9);
        }
}

TEST(Madgwick, TiltConvergesMonotonically)
{
        QuaternionState s;
        s.q = axis_angle({1, 0, 0}, deg2rad(20));
        double prev = std::abs(quat_to_euler(s.q).roll);
        int converged_at = -1;
        for (int i = 1; i <= 600; ++i)
        {
                s = madgwick_update(s, still(), 0.01);
                const double err = std::abs(quat_to_euler(s.q).roll);
                // The normalized gradient step has fixed size, so the error settles into a
                // limit cycle of amplitude 2*beta*dt instead of decaying to zero.
                if (prev > 2 * 0.1 * 0.01)
                {
                        ASSERT_LE(err, prev + 1e-12) << i;
                }
                else
                {
                        ASSERT_LE(err, 2 * 0.1 * 0.01 + 1e-9) << i;
                }
                prev = err;
                if (converged_at < 0 && rad2deg(err) < 2)
                {
                        converged_at = i;
                }
        }
        EXPECT_GT(converged_at, 0);
}

TEST(Euler, Examples)
{
        const Euler zero = quat_to_euler(Quaternion::identity());
        EXPECT_EQ(zero.roll, 0);
        EXPECT_EQ(zero.pitch, 0);
        EXPECT_EQ(zero.yaw, 0);
        const Euler yaw = quat_to_euler(axis_angle({0, 0, 1}, kPi / 2));
        EXPECT_NEAR(yaw.roll, 0, 1e-15);
        EXPECT_NEAR(yaw.pitch, 0, 1e-15);
        EXPECT_NEAR(yaw.yaw, kPi / 2, 1e-15);
}

TEST(Euler, RoundTrip)
{
        std::mt19937_64 rng(1);
        std::normal_distribution<double> n(0, 1);
        int checked = 0;
        while (checked < 10000)
        {
                const Quaternion q = Quaternion{n(rng), n(rng), n(rng), n(rng)}.normalized();
                const double sinp = 2 * (q.w * q.y - q.z * q.x);
                if (std::abs(sinp) > 1 - 1e-6)
                {
                        continue;
                }
                const Euler e = quat_to_euler(q);
                ASSERT_LT(quat_gap(euler_to_quat(e), q), 1e-9);
                const Euler back = quat_to_euler(euler_to_quat(e));
                ASSERT_NEAR(wrap_angle(back.roll - e.roll), 0, 1e-9);
                ASSERT_NEAR(wrap_angle(back.pitch - e.pitch), 0, 1e-9);
                ASSERT_NEAR(wrap_angle(back.yaw - e.yaw), 0, 1e-9);
                ++checked;
        }
}

TEST(Euler, GimbalLock)
{
        const Quaternion q = euler_to_quat({0.3, kPi / 2, 0.1});
        const Euler e = quat_to_euler(q);
        EXPECT_EQ(e.roll, 0);
        EXPECT_NEAR(e.pitch, kPi / 2, 1e-6);
        // The free angle moves into yaw: same rotation.
        EXPECT_LT(quat_gap(euler_to_quat(e), q), 1e-6);
}

TEST(ZeroOffset, ConstantBias)
{
        std::vector<ImuReading> s(100, ImuReading{{0.01, -0.02, 0}, {0, 0, 9.81}});
        const ZeroOffset z = zero_offset_calibrate(s);
        EXPECT_NEAR(z.gyro_bias[0], 0.01, 1e-15);
        EXPECT_NEAR(z.gyro_bias[1], -0.02, 1e-15);
        EXPECT_EQ(z.gyro_bias[2], 0);
        EXPECT_EQ(z.samples, 100u);
        const auto fixed = z.apply(s[0]);
        EXPECT_NEAR(norm(fixed.gyro), 0, 1e-15);
        EXPECT_EQ(fixed.accel, s[0].accel);
}

TEST(ZeroOffset, InsufficientSamples)
{
        std::vector<ImuReading> s(99, still());
        try
        {
                zero_offset_calibrate(s);
                FAIL();
        }
        catch (const CalibrationError& e)
        {
                EXPECT_EQ(e.kind(), CalibrationError::Kind::InsufficientSamples);
        }
}

TEST(ZeroOffset, MotionRejected)
{
        std::vector<ImuReading> s(200, still());
        s[150].gyro = {0.5, 0, 0};
        try
        {
                zero_offset_calibrate(s);
                FAIL();
        }
        catch (const CalibrationError& e)
        {
                EXPECT_EQ(e.kind(), CalibrationError::Kind::MotionDuringCalibration);
        }
}

TEST(ZeroOffset, NoiseMeanWithinStandardError)
{
        const double sigma = 0.01;
        const double bound = 3 * sigma / std::sqrt(1000.0);
        int inside = 0;
        for (std::uint64_t seed = 0; seed < 50; ++seed)
        {
                std::mt19937_64 rng(seed);
                std::normal_distribution<double> n(0, sigma);
                std::vector<ImuReading> s;
                for (int i = 0; i < 1000; ++i)
                {
                        s.push_back({{n(rng), n(rng), n(rng)}, {0, 0, 9.81}});
                }
                const ZeroOffset z = zero_offset_calibrate(s);
                inside += std::abs(z.gyro_bias[0]) <= bound ? 1 : 0;
        }
        // Each seed lands inside with probability 0.9973.
        EXPECT_GE(inside, 48);
}

TEST(ZeroOffset, StreamingRestartsOnMotion)
{
        ZeroOffsetCalibrator c(100, 0.1);
        for (int i = 0; i < 60; ++i)
        {
                EXPECT_FALSE(c.feed({{0.02, 0, 0}, {}}));
        }
        EXPECT_FALSE(c.feed({{1.0, 0, 0}, {}}));
        EXPECT_EQ(c.restarts(), 1u);
        bool done = false;
        for (int i = 0; i < 100; ++i)
        {
                done = c.feed({{0.03, 0, 0}, {}});
        }
        EXPECT_TRUE(done);
        EXPECT_NEAR(c.offset().gyro_bias[0], 0.03, 1e-12);
}
